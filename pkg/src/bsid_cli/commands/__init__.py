"""Command modules for BlindSignedID CLI"""

from . import (
    keygen_cmd, register_cmd, signer_serve_cmd, authenticate_cmd, tesla_serve_cmd, receive_cmd,
    report_positive_cmd, check_exposure_cmd, tally_cmd, simulate_cmd, dos_calc_cmd,
)

__all__ = [
    'keygen_cmd', 'register_cmd', 'signer_serve_cmd', 'authenticate_cmd', 'tesla_serve_cmd', 'receive_cmd',
    'report_positive_cmd', 'check_exposure_cmd', 'tally_cmd', 'simulate_cmd', 'dos_calc_cmd',
]
