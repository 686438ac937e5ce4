"""Tests for seed derivation and blinding-value derivation"""

import pytest
from Crypto.Util.number import GCD

from bsid_cli.core.crypto_core import EPHID_LEN, KEY_LEN, make_randfunc, sha256
from bsid_cli.core.ephid_gen import (
    BASELINE_EPHID_LEN, MainDaySeed, derive_baseline_ephids, derive_blinding, derive_blinding_seeds,
    derive_blinding_set, derive_ephids, derive_rhats, derive_secondary_seeds, new_main_seed,
    next_baseline_seed,
)
from bsid_cli.core.errors import InvalidArgument

from tests.helpers import TEST_DAY


@pytest.fixture
def main_seed():
    return new_main_seed(TEST_DAY, make_randfunc(21))


class TestSeeds:
    def test_main_seed_lengths(self, main_seed):
        assert len(main_seed.sk_t) == KEY_LEN
        assert len(main_seed.b_t) == KEY_LEN
        assert main_seed.sk_t != main_seed.b_t

    def test_main_seed_rejects_short_values(self):
        with pytest.raises(InvalidArgument):
            MainDaySeed(sk_t=b"x", b_t=bytes(KEY_LEN), day_index=0)

    def test_secondary_seeds_are_distinct_and_reproducible(self, main_seed):
        seeds = derive_secondary_seeds(main_seed, 10)
        assert seeds.m == 10
        assert len(set(seeds.seeds)) == 10
        assert derive_secondary_seeds(main_seed, 10) == seeds
        assert seeds.seed(1) == seeds.seeds[0]

    def test_secondary_seeds_extend_as_prefix(self, main_seed):
        assert derive_secondary_seeds(main_seed, 20).seeds[:5] == derive_secondary_seeds(main_seed, 5).seeds

    def test_blinding_seeds_independent_of_secondary_seeds(self, main_seed):
        assert set(derive_blinding_seeds(main_seed, 5)).isdisjoint(derive_secondary_seeds(main_seed, 5).seeds)

    def test_zero_sets_rejected(self, main_seed):
        with pytest.raises(InvalidArgument):
            derive_secondary_seeds(main_seed, 0)


class TestEphIDs:
    def test_lengths_and_count(self, main_seed):
        ephids = derive_ephids(derive_secondary_seeds(main_seed, 2).seed(1), 1)
        assert len(ephids) == 288
        assert all(len(e) == EPHID_LEN for e in ephids.ephids)

    def test_set_index_separates_streams(self):
        seed = bytes(range(32))
        assert derive_ephids(seed, 1, 4).ephids != derive_ephids(seed, 2, 4).ephids

    def test_reveal_reproduces_set(self, main_seed):
        secondary = derive_secondary_seeds(main_seed, 3)
        first = derive_ephids(secondary.seed(2), 2, 8)
        assert derive_ephids(secondary.seed(2), 2, 8) == first

    def test_baseline_identifiers(self):
        sk = bytes(range(32))
        ids = derive_baseline_ephids(sk, 5)
        assert [len(i) for i in ids] == [BASELINE_EPHID_LEN] * 5
        assert next_baseline_seed(sk) == sha256(sk)
        assert derive_baseline_ephids(next_baseline_seed(sk), 5) != ids


class TestBlinding:
    def test_factors_are_units(self, main_seed, day_keys):
        rhats = derive_rhats(derive_blinding_seeds(main_seed, 1)[0], 1, 20, day_keys)
        assert all(1 < r < day_keys.n and GCD(r, day_keys.n) == 1 for r in rhats)

    def test_factors_resampled_in_toy_group(self, toy_keys):
        rhats = derive_rhats(bytes(32), 1, 50, toy_keys)
        assert all(1 < r < toy_keys.n and GCD(r, toy_keys.n) == 1 for r in rhats)

    def test_multipliers_are_exponentiated_factors(self, main_seed, day_keys):
        values = derive_blinding(main_seed, 2, 3, day_keys).values(2)
        assert values.multipliers == tuple(pow(r, day_keys.e, day_keys.n) for r in values.rhats)

    def test_audit_rederivation_matches(self, main_seed, day_keys):
        blinding = derive_blinding(main_seed, 3, 4, day_keys)
        for set_index in (1, 2, 3):
            again = derive_blinding_set(blinding.seed(set_index), set_index, 4, day_keys)
            assert again == blinding.values(set_index)


class TestDistinctness:
    def test_one_user_day(self, main_seed):
        secondary = derive_secondary_seeds(main_seed, 100)
        ephids = [e for j in range(1, 101) for e in derive_ephids(secondary.seed(j), j).ephids]
        assert len(ephids) == 28800
        assert len(set(ephids)) == 28800

    @pytest.mark.slow
    def test_hundred_user_days(self):
        for seed in range(100):
            secondary = derive_secondary_seeds(new_main_seed(TEST_DAY, make_randfunc(seed)), 100)
            ephids = {e for j in range(1, 101) for e in derive_ephids(secondary.seed(j), j).ephids}
            assert len(ephids) == 28800, f"collision for seed {seed}"


class TestFixedVectors:
    def test_secondary_seeds(self):
        main = MainDaySeed(sk_t=bytes(range(32)), b_t=bytes(KEY_LEN), day_index=0)
        seeds = derive_secondary_seeds(main, 100)
        assert seeds.seed(1).hex() == "f12121714736b6715a10e373cc1beabd0343b694e216e9765a8c6eb64f8e8d28"
        assert seeds.seed(2).hex() == "88ae54b710543afecdd0edee7bd67fe4c03ceb59f55d74f8b88220843502a3bc"
        assert seeds.seed(100).hex() == "8243a090b723a2df2c40979ac5ff30b1456d291c336e5552e5f4ead6e46d531f"
