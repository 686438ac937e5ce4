"""Receiver pipeline: buffer beacons per interval, verify in place on key release, keep 38-byte records"""

import hmac
import logging
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .beacon_codec import Beacon
from .crypto_core import auth_tag, sha256
from .errors import InvalidKey, StoreFormatError
from .tesla_service import SECONDS_PER_DAY, ChainAnchor, day_of, verify_released_key

logger = logging.getLogger(__name__)

RETENTION_DAYS = 14
PENDING_INTERVALS = 2
RECORD_LEN = 38
STORE_MAGIC = b"BSID"

_RECORD = struct.Struct(">13s13sIIhH")
_HEADER = struct.Struct(">4sI")


class BeaconStatus(str, Enum):
    BUFFERED = "buffered"
    UPDATED = "updated"
    UNSAFE = "unsafe"


@dataclass(slots=True)
class PendingRecord:
    ephid: bytes
    auth: bytes
    first_receipt: float
    duration: float
    rssi: int
    interval_index: int
    day_index: int


@dataclass(frozen=True, slots=True)
class VerifiedRecord:
    ephid: bytes
    auth: bytes
    first_receipt: int
    duration: int
    rssi: int
    day_index: int

    def pack(self) -> bytes:
        rssi = max(-32768, min(32767, self.rssi))
        return _RECORD.pack(self.ephid, self.auth, self.first_receipt, self.duration, rssi, self.day_index)

    @classmethod
    def unpack(cls, data: bytes) -> "VerifiedRecord":
        if len(data) != RECORD_LEN:
            raise StoreFormatError(f"레코드 길이는 {RECORD_LEN}바이트여야 합니다 (입력: {len(data)})")
        return cls(*_RECORD.unpack(data))

    @classmethod
    def from_pending(cls, record: PendingRecord) -> "VerifiedRecord":
        return cls(record.ephid, record.auth, int(record.first_receipt), int(record.duration),
                   record.rssi, record.day_index)


@dataclass
class ReceiverCounters:
    """Cumulative counters.

    ``received`` counts distinct (ephid, auth, interval) receptions; repeated
    sightings only extend the duration. Every received record ends up pending,
    verified, rejected (auth mismatch), expired or unsafe.
    """

    sightings: int = 0
    received: int = 0
    verified: int = 0
    rejected: int = 0
    expired: int = 0
    unsafe: int = 0


@dataclass
class _ChainState:
    anchor: ChainAnchor
    last_verified: Tuple[int, bytes]


@dataclass
class PruneResult:
    verified_dropped: int = 0
    pending_dropped: int = 0


def anchor_day(anchor: ChainAnchor) -> int:
    return day_of(anchor.interval_start(1))


class ReceiverStore:
    """One device's contact store.

    Pending records are bucketed by (day, interval). A released key is checked
    against the last verified key of its day's chain before any record changes.
    """

    def __init__(self, anchors: Iterable[ChainAnchor] = (), path: Optional[Union[str, Path]] = None,
                 retention_days: int = RETENTION_DAYS):
        self.path = Path(path) if path else None
        self.retention_seconds = retention_days * SECONDS_PER_DAY
        self.counters = ReceiverCounters()
        self._chains: Dict[int, _ChainState] = {}
        self._pending: Dict[Tuple[int, int], Dict[Tuple[bytes, bytes], PendingRecord]] = {}
        self._verified: List[VerifiedRecord] = []
        self._by_day: Dict[int, List[VerifiedRecord]] = {}
        for anchor in anchors:
            self.add_anchor(anchor)
        if self.path and self.path.exists():
            for record in load_records(self.path):
                self._index(record)

    def add_anchor(self, anchor: ChainAnchor) -> int:
        day = anchor_day(anchor)
        self._chains[day] = _ChainState(anchor=anchor, last_verified=(0, anchor.anchor))
        return day

    def last_verified(self, day_index: int) -> Tuple[int, bytes]:
        return self._chains[day_index].last_verified

    def _index(self, record: VerifiedRecord) -> None:
        self._verified.append(record)
        self._by_day.setdefault(record.day_index, []).append(record)

    # -- beacons ----------------------------------------------------------

    def on_beacon(self, beacon: Beacon, now: float, rssi: int = 0) -> BeaconStatus:
        counters = self.counters
        counters.sightings += 1
        day = int(now // SECONDS_PER_DAY)
        state = self._chains.get(day)
        index = state.anchor.interval_at(now) if state else None

        bucket = self._pending.get((day, index)) if index is not None else None
        if bucket is not None:
            record = bucket.get((beacon.ephid, beacon.auth))
            if record is not None:
                record.duration = now - record.first_receipt
                return BeaconStatus.UPDATED

        counters.received += 1
        if index is None or not state.anchor.is_safe(index, now) or index <= state.last_verified[0]:
            counters.unsafe += 1
            return BeaconStatus.UNSAFE
        if bucket is None:
            bucket = self._pending[(day, index)] = {}
        bucket[(beacon.ephid, beacon.auth)] = PendingRecord(
            beacon.ephid, beacon.auth, now, 0.0, rssi, index, day)
        return BeaconStatus.BUFFERED

    # -- keys ---------------------------------------------------------------

    def on_key_release(self, key: bytes, index: int, day_index: Optional[int] = None) -> Tuple[int, int]:
        """Verify ``k_index`` and check buckets ``index`` and ``index - 1``.

        Returns (accepted, rejected). A key that does not hash down to the last
        verified key raises InvalidKey and changes nothing.
        """
        if day_index is None:
            if not self._chains:
                raise InvalidKey("체인 앵커가 등록되지 않았습니다")
            day_index = max(self._chains)
        state = self._chains.get(day_index)
        if state is None:
            raise InvalidKey(f"day {day_index}의 체인 앵커가 없습니다")

        last_index, last_key = state.last_verified
        if index <= last_index:
            expected = last_key
            for _ in range(last_index - index):
                expected = sha256(expected)
            if index < 1 or not hmac.compare_digest(expected, key):
                raise InvalidKey(f"k_{index}가 검증된 체인과 일치하지 않습니다")
            return 0, 0
        if index > state.anchor.length or not verify_released_key(key, index, state.last_verified):
            logger.warning("day %d: bogus key for interval %d discarded", day_index, index)
            raise InvalidKey(f"k_{index}가 k_{last_index}로 검증되지 않습니다")

        accepted = rejected = 0
        bucket_key = key
        for bucket_index in (index, index - 1):
            bucket = self._pending.pop((day_index, bucket_index), None)
            if bucket:
                ok, bad = self._verify_bucket(bucket, bucket_key)
                accepted += ok
                rejected += bad
            bucket_key = sha256(bucket_key)

        for pending_key in [k for k in self._pending if k[0] == day_index and k[1] < index - 1]:
            self.counters.expired += len(self._pending.pop(pending_key))

        state.last_verified = (index, key)
        logger.debug("day %d interval %d: %d verified, %d rejected", day_index, index, accepted, rejected)
        return accepted, rejected

    def _verify_bucket(self, bucket: Dict[Tuple[bytes, bytes], PendingRecord], key: bytes) -> Tuple[int, int]:
        promoted = []
        rejected = 0
        for record in bucket.values():
            if hmac.compare_digest(auth_tag(key, record.ephid), record.auth):
                promoted.append(VerifiedRecord.from_pending(record))
            else:
                rejected += 1
        for record in promoted:
            self._index(record)
        if promoted and self.path:
            append_records(self.path, promoted)
        self.counters.verified += len(promoted)
        self.counters.rejected += rejected
        return len(promoted), rejected

    # -- retention ----------------------------------------------------------

    def prune(self, now: float) -> PruneResult:
        result = PruneResult()
        cutoff = now - self.retention_seconds
        if any(r.first_receipt < cutoff for r in self._verified):
            kept = [r for r in self._verified if r.first_receipt >= cutoff]
            result.verified_dropped = len(self._verified) - len(kept)
            self._verified = []
            self._by_day = {}
            for record in kept:
                self._index(record)
            if self.path:
                save_records(self.path, self._verified)

        for bucket_key in list(self._pending):
            bucket = self._pending[bucket_key]
            state = self._chains.get(bucket_key[0])
            horizon = now - PENDING_INTERVALS * (state.anchor.period if state else 0)
            stale = [k for k, record in bucket.items() if record.first_receipt < horizon]
            for k in stale:
                del bucket[k]
            result.pending_dropped += len(stale)
            if not bucket:
                del self._pending[bucket_key]
        self.counters.expired += result.pending_dropped
        return result

    # -- metrics / queries ---------------------------------------------------

    @property
    def pending_count(self) -> int:
        return sum(len(bucket) for bucket in self._pending.values())

    @property
    def verified_count(self) -> int:
        return len(self._verified)

    def pending_records(self) -> List[PendingRecord]:
        return [record for bucket in self._pending.values() for record in bucket.values()]

    def verified_records(self) -> List[VerifiedRecord]:
        return list(self._verified)

    def verified_for_day(self, day_index: int) -> List[VerifiedRecord]:
        return list(self._by_day.get(day_index, ()))

    def storage_bytes(self) -> Tuple[int, int]:
        """(pending_bytes, verified_bytes), both at 38 bytes per record"""
        return self.pending_count * RECORD_LEN, self.verified_count * RECORD_LEN

    def save(self, path: Optional[Union[str, Path]] = None) -> None:
        target = Path(path) if path else self.path
        if target is None:
            raise StoreFormatError("저장 경로가 지정되지 않았습니다")
        save_records(target, self._verified)


# ---------------------------------------------------------------------------
# Long-term store file: "BSID" + u32 count + packed records
# ---------------------------------------------------------------------------

def save_records(path: Union[str, Path], records: List[VerifiedRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(_HEADER.pack(STORE_MAGIC, len(records)) + b"".join(r.pack() for r in records))
    tmp.replace(path)


def append_records(path: Union[str, Path], records: List[VerifiedRecord]) -> None:
    path = Path(path)
    if not path.exists():
        save_records(path, records)
        return
    with open(path, "r+b") as f:
        magic, count = _HEADER.unpack(f.read(_HEADER.size))
        if magic != STORE_MAGIC:
            raise StoreFormatError(f"저장소 파일 형식이 아닙니다: {path}")
        f.seek(_HEADER.size + count * RECORD_LEN)
        f.write(b"".join(r.pack() for r in records))
        f.truncate()
        f.seek(0)
        f.write(_HEADER.pack(STORE_MAGIC, count + len(records)))


def load_records(path: Union[str, Path]) -> List[VerifiedRecord]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise StoreFormatError(f"저장소 파일이 너무 짧습니다: {path}")
    magic, count = _HEADER.unpack_from(data)
    if magic != STORE_MAGIC:
        raise StoreFormatError(f"저장소 파일 형식이 아닙니다: {path}")
    if len(data) != _HEADER.size + count * RECORD_LEN:
        raise StoreFormatError(f"레코드 수({count})와 파일 길이가 일치하지 않습니다: {path}")
    return [VerifiedRecord.unpack(data[_HEADER.size + i * RECORD_LEN:_HEADER.size + (i + 1) * RECORD_LEN])
            for i in range(count)]
