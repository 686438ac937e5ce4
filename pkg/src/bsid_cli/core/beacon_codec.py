"""31-byte BLE beacon codec: flags(3) | version(1) | ephid(13) | auth(13) | reserved(1)"""

import struct
from dataclasses import dataclass

from .crypto_core import AUTH_TAG_LEN, EPHID_LEN
from .errors import InvalidBeacon, MalformedBeacon, UnsupportedVersion

BEACON_LEN = 31
PAYLOAD_LEN = 28
FLAGS_LEN = 3
DEFAULT_FLAGS = b"\x02\x01\x06"
BEACON_VERSION = 1

_LAYOUT = struct.Struct(f">{FLAGS_LEN}sB{EPHID_LEN}s{AUTH_TAG_LEN}sB")

# 오프셋 (wire contract)
EPHID_OFFSET = 4
AUTH_OFFSET = EPHID_OFFSET + EPHID_LEN
RESERVED_OFFSET = AUTH_OFFSET + AUTH_TAG_LEN


@dataclass(frozen=True)
class Beacon:
    ephid: bytes
    auth: bytes
    flags: bytes = DEFAULT_FLAGS
    version: int = BEACON_VERSION
    reserved: int = 0


def encode(beacon: Beacon) -> bytes:
    if beacon.reserved != 0:
        raise InvalidBeacon("reserved 바이트는 0이어야 합니다")
    if (len(beacon.flags) != FLAGS_LEN or len(beacon.ephid) != EPHID_LEN
            or len(beacon.auth) != AUTH_TAG_LEN or not 0 <= beacon.version <= 0xFF):
        raise InvalidBeacon("비콘 필드 길이가 올바르지 않습니다")
    return _LAYOUT.pack(beacon.flags, beacon.version, beacon.ephid, beacon.auth, beacon.reserved)


def decode(wire: bytes) -> Beacon:
    if len(wire) != BEACON_LEN:
        raise MalformedBeacon(f"비콘 길이는 {BEACON_LEN}바이트여야 합니다 (입력: {len(wire)}바이트)")
    flags, version, ephid, auth, reserved = _LAYOUT.unpack(wire)
    if version != BEACON_VERSION:
        raise UnsupportedVersion(f"지원하지 않는 비콘 버전: {version:#04x}")
    if reserved != 0:
        raise MalformedBeacon("reserved 바이트가 0이 아닙니다")
    return Beacon(ephid=ephid, auth=auth, flags=flags, version=version, reserved=reserved)
