"""Per-day seed hierarchy: secondary seeds, EphID sets and blinding values"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from Crypto.Util.number import GCD, bytes_to_long

from .crypto_core import EPHID_LEN, KEY_LEN, DayKeyPair, RandFunc, make_randfunc, prf, prg, sha256
from .errors import InvalidArgument

logger = logging.getLogger(__name__)

DEFAULT_SET_COUNT = 100  # M
DEFAULT_EPHIDS_PER_DAY = 288  # n, one EphID per 5-minute interval
BASELINE_EPHID_LEN = 16

SECONDARY_SEEDS_LABEL = "secondary-seeds"
BLINDING_SEEDS_LABEL = "blinding-seeds"
BASELINE_LABEL = "broadcast key"


def broadcast_label(set_index: int) -> str:
    return f"broadcast key {set_index}"


def blinding_label(set_index: int) -> str:
    return f"blinding {set_index}"


@dataclass(frozen=True)
class MainDaySeed:
    """sk_t and b_t for one day; independently random, never chained across days"""

    sk_t: bytes
    b_t: bytes
    day_index: int

    def __post_init__(self):
        if len(self.sk_t) != KEY_LEN or len(self.b_t) != KEY_LEN:
            raise InvalidArgument(f"main seed 값은 {KEY_LEN}바이트여야 합니다")


@dataclass(frozen=True)
class SecondarySeedSet:
    seeds: Tuple[bytes, ...]

    @property
    def m(self) -> int:
        return len(self.seeds)

    def seed(self, set_index: int) -> bytes:
        """1-based access, matching set numbering on the wire"""
        return self.seeds[set_index - 1]


@dataclass(frozen=True)
class EphIDSet:
    set_index: int
    ephids: Tuple[bytes, ...]

    def __len__(self) -> int:
        return len(self.ephids)


@dataclass(frozen=True)
class BlindingValues:
    """r̂ and r = r̂^e for one set"""

    set_index: int
    rhats: Tuple[int, ...]
    multipliers: Tuple[int, ...]


@dataclass(frozen=True)
class BlindingSet:
    seeds: Tuple[bytes, ...]
    sets: Tuple[BlindingValues, ...]

    def seed(self, set_index: int) -> bytes:
        return self.seeds[set_index - 1]

    def values(self, set_index: int) -> BlindingValues:
        return self.sets[set_index - 1]


def new_main_seed(day_index: int, randfunc: Optional[RandFunc] = None) -> MainDaySeed:
    randfunc = randfunc or make_randfunc()
    return MainDaySeed(sk_t=randfunc(KEY_LEN), b_t=randfunc(KEY_LEN), day_index=day_index)


def _slices(stream: bytes, width: int, count: int) -> Tuple[bytes, ...]:
    return tuple(stream[i * width:(i + 1) * width] for i in range(count))


def _check_count(value: int, name: str) -> None:
    if value < 1:
        raise InvalidArgument(f"{name}은(는) 1 이상이어야 합니다 (입력: {value})")


def derive_secondary_seeds(main: MainDaySeed, m: int = DEFAULT_SET_COUNT) -> SecondarySeedSet:
    """SK_{t_1} || ... || SK_{t_M} = PRG(PRF(sk_t))"""
    _check_count(m, "M")
    stream = prg(prf(main.sk_t, SECONDARY_SEEDS_LABEL), KEY_LEN * m)
    return SecondarySeedSet(seeds=_slices(stream, KEY_LEN, m))


def derive_ephids(seed: bytes, set_index: int, n: int = DEFAULT_EPHIDS_PER_DAY) -> EphIDSet:
    """n EphIDs of set ``set_index`` from its secondary seed"""
    _check_count(n, "n")
    stream = prg(prf(seed, broadcast_label(set_index)), EPHID_LEN * n)
    return EphIDSet(set_index=set_index, ephids=_slices(stream, EPHID_LEN, n))


def derive_baseline_ephids(sk_t: bytes, n: int = DEFAULT_EPHIDS_PER_DAY) -> List[bytes]:
    """Unsigned 16-byte identifiers from a chained day seed, used only by baseline scenarios"""
    _check_count(n, "n")
    stream = prg(prf(sk_t, BASELINE_LABEL), BASELINE_EPHID_LEN * n)
    return list(_slices(stream, BASELINE_EPHID_LEN, n))


def next_baseline_seed(sk_t: bytes) -> bytes:
    """SK_{t+1} = H(SK_t)"""
    return sha256(sk_t)


def derive_blinding_seeds(main: MainDaySeed, m: int = DEFAULT_SET_COUNT) -> Tuple[bytes, ...]:
    _check_count(m, "M")
    stream = prg(prf(main.b_t, BLINDING_SEEDS_LABEL), KEY_LEN * m)
    return _slices(stream, KEY_LEN, m)


def _usable(value: int, modulus: int) -> bool:
    return 1 < value < modulus and GCD(value, modulus) == 1


def derive_rhats(b_ti: bytes, set_index: int, n: int, keys: DayKeyPair) -> Tuple[int, ...]:
    """Modulus-width slices of PRG(PRF(b_{t_i})), masked to the modulus bit length.

    A slice outside (1, N) or sharing a factor with N is replaced by a
    counter-salted re-expansion until it is usable.
    """
    _check_count(n, "n")
    width = keys.width
    mask = (1 << keys.modulus_bits) - 1
    base = prf(b_ti, blinding_label(set_index))
    stream = prg(base, width * n)

    rhats = []
    for j in range(n):
        value = bytes_to_long(stream[j * width:(j + 1) * width]) & mask
        counter = 0
        while not _usable(value, keys.n):
            counter += 1
            salt = prf(base, b"resample" + j.to_bytes(4, "big") + counter.to_bytes(4, "big"))
            value = bytes_to_long(prg(salt, width)) & mask
        if counter:
            logger.debug("set %d value %d resampled %d time(s)", set_index, j, counter)
        rhats.append(value)
    return tuple(rhats)


def derive_blinding_set(b_ti: bytes, set_index: int, n: int, keys: DayKeyPair) -> BlindingValues:
    """r̂ and r values of one set; what the signer re-derives during the audit"""
    rhats = derive_rhats(b_ti, set_index, n, keys)
    multipliers = tuple(pow(rhat, keys.e, keys.n) for rhat in rhats)
    return BlindingValues(set_index=set_index, rhats=rhats, multipliers=multipliers)


def derive_blinding(main: MainDaySeed, m: int, n: int, keys: DayKeyPair) -> BlindingSet:
    seeds = derive_blinding_seeds(main, m)
    sets = tuple(derive_blinding_set(seed, i, n, keys) for i, seed in enumerate(seeds, start=1))
    return BlindingSet(seeds=seeds, sets=sets)
