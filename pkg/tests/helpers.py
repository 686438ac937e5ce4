"""Test helpers shared across modules"""

from bsid_cli.core.crypto_core import DayKeyPair, make_randfunc
from bsid_cli.core.ephid_gen import new_main_seed
from bsid_cli.core.registration import IssuedCredentials, Signer, client_begin, run_registration

TEST_DAY = 19000


def issue(signer: Signer, keys: DayKeyPair, identity: str, m: int = 3, n: int = 4, seed: int = 0,
          now: float = 0.0) -> IssuedCredentials:
    """Run a full in-process issuance and return the unblinded credentials"""
    main = new_main_seed(keys.day_index, make_randfunc(seed))
    request, state = client_begin(main, m, n, keys.public(), identity)
    return run_registration(state, request, signer, now)
