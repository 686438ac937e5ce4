"""Tests for the 31-byte advertising payload"""

import random

import pytest

from bsid_cli.core.beacon_codec import (
    AUTH_OFFSET, BEACON_LEN, DEFAULT_FLAGS, EPHID_OFFSET, RESERVED_OFFSET, Beacon, decode, encode,
)
from bsid_cli.core.errors import InvalidBeacon, MalformedBeacon, UnsupportedVersion


def _beacon(rng: random.Random) -> Beacon:
    return Beacon(ephid=rng.randbytes(13), auth=rng.randbytes(13))


class TestBeaconCodec:
    def test_roundtrip_random_beacons(self):
        rng = random.Random(0)
        for _ in range(10_000):
            beacon = _beacon(rng)
            wire = encode(beacon)
            assert len(wire) == BEACON_LEN
            assert decode(wire) == beacon

    def test_layout(self):
        beacon = Beacon(ephid=b"E" * 13, auth=b"A" * 13)
        wire = encode(beacon)
        assert wire[:3] == DEFAULT_FLAGS
        assert wire[3] == 1
        assert wire[EPHID_OFFSET:AUTH_OFFSET] == b"E" * 13
        assert wire[AUTH_OFFSET:RESERVED_OFFSET] == b"A" * 13
        assert wire[RESERVED_OFFSET] == 0

    @pytest.mark.parametrize('length', [0, 30, 32])
    def test_wrong_length(self, length):
        with pytest.raises(MalformedBeacon):
            decode(bytes(length))

    def test_unknown_version(self):
        wire = bytearray(encode(Beacon(bytes(13), bytes(13))))
        wire[3] = 2
        with pytest.raises(UnsupportedVersion):
            decode(bytes(wire))

    def test_nonzero_reserved(self):
        wire = bytearray(encode(Beacon(bytes(13), bytes(13))))
        wire[-1] = 1
        with pytest.raises(MalformedBeacon):
            decode(bytes(wire))

    @pytest.mark.parametrize('fields', [
        dict(ephid=bytes(12), auth=bytes(13)),
        dict(ephid=bytes(13), auth=bytes(14)),
        dict(ephid=bytes(13), auth=bytes(13), flags=b"\x02\x01"),
        dict(ephid=bytes(13), auth=bytes(13), reserved=1),
    ])
    def test_encode_rejects_bad_fields(self, fields):
        with pytest.raises(InvalidBeacon):
            encode(Beacon(**fields))
