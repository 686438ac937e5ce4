"""Shared fixtures: toy and small RSA groups, seeded chains and a manual clock"""

import pytest

from bsid_cli.core.crypto_core import DayKeyPair, generate_day_keys, make_randfunc
from bsid_cli.core.registration import Signer
from bsid_cli.core.tesla_service import ManualClock, day_chain, day_start

from tests.helpers import TEST_DAY, issue


@pytest.fixture
def toy_keys():
    """N = 61 * 53 = 3233, e = 17"""
    return DayKeyPair.from_primes(61, 53, 17)


@pytest.fixture(scope='session')
def day_keys():
    return generate_day_keys(TEST_DAY, 512, make_randfunc(1))


@pytest.fixture(scope='session')
def next_day_keys():
    return generate_day_keys(TEST_DAY + 1, 512, make_randfunc(4))


@pytest.fixture(scope='session')
def finaltrial_keys():
    return generate_day_keys(TEST_DAY, 512, make_randfunc(2))


@pytest.fixture(scope='session')
def full_keys():
    return generate_day_keys(TEST_DAY, 2048, make_randfunc(3))


@pytest.fixture
def clock():
    return ManualClock(day_start(TEST_DAY))


@pytest.fixture(scope='session')
def chain():
    return day_chain(bytes(range(32)), TEST_DAY)


@pytest.fixture
def signer(day_keys):
    return Signer([day_keys], rng_seed=7)


@pytest.fixture(scope='session')
def issued(day_keys):
    """Four signed EphIDs for one device"""
    return issue(Signer([day_keys], rng_seed=3), day_keys, 'alice@example.com', m=3, n=4, seed=11)
