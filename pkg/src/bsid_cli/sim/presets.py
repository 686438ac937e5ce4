"""Named scenarios with reception rates fitted to measured stored counts.

The rates are fitted parameters, not radio measurements:

* single-attacker: about 30,000 of 90,000 transmitted IDs stored in 30 minutes
* multi-attacker-2 / -4: about 1,227,000 / 1,891,000 stored over 8 hours
* crowd-*: 12,122 / 6,526 / 2,098 received in a 90 second crowded-room run
"""

from typing import Dict

from ..core.errors import InvalidArgument
from .models import SimConfig

EIGHT_HOURS = 8 * 3600

PRESETS: Dict[str, dict] = {
    'single-attacker': dict(duration=1800, attacker_count=1, reception_rate=1 / 3, honest_count=1),
    'multi-attacker-2': dict(duration=EIGHT_HOURS, attacker_count=2, reception_rate=0.4260, honest_count=2),
    'multi-attacker-4': dict(duration=EIGHT_HOURS, attacker_count=4, reception_rate=0.3283, honest_count=2),
    'crowd-0.5m': dict(duration=90, attacker_count=6, reception_rate=0.449, honest_count=14),
    'crowd-1.0m': dict(duration=90, attacker_count=6, reception_rate=0.2417, honest_count=14),
    'crowd-1.5m': dict(duration=90, attacker_count=6, reception_rate=0.0777, honest_count=14),
}

# Stored counts the presets were fitted to, per receiver.
PRESET_TARGETS: Dict[str, int] = {
    'single-attacker': 30_000,
    'multi-attacker-2': 1_227_000,
    'multi-attacker-4': 1_891_000,
    'crowd-0.5m': 12_122,
    'crowd-1.0m': 6_526,
    'crowd-1.5m': 2_098,
}


# dos_magnitude parameters that land 1 and 2 Mbps on the published per-hour band edges:
# 450 / 900 MB for 16-byte raw identifiers, 1 / 2 GB for 36-byte records.
DOS_CALIBRATIONS: Dict[str, dict] = {
    'raw-id': dict(record_bytes=16, frame_bytes=16, efficiency=1.0),
    'full-record': dict(record_bytes=36, frame_bytes=16, efficiency=80 / 81),
}


def dos_calibration(name: str) -> dict:
    try:
        return dict(DOS_CALIBRATIONS[name])
    except KeyError:
        raise InvalidArgument(f"알 수 없는 보정값: {name} (사용 가능: {', '.join(DOS_CALIBRATIONS)})")


def preset_config(name: str, **overrides) -> SimConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise InvalidArgument(f"알 수 없는 프리셋: {name} (사용 가능: {', '.join(PRESETS)})")
    return SimConfig.parse({**base, **overrides})
