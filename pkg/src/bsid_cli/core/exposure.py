"""Positive-case publication, exposure matching and FinalTrial match posts"""

import logging
import struct
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from Crypto.Util.number import GCD, bytes_to_long

from .crypto_core import (
    HASH_LEN, KEY_LEN, DayKeyPair, MerkleProof, MerkleTree, RandFunc, blind_int, bytes_to_int,
    int_to_bytes, make_randfunc, merkle_verify, sign_blinded, unblind, verify_int,
)
from .ephid_gen import DEFAULT_EPHIDS_PER_DAY, derive_ephids
from .errors import InvalidArgument, NoCodeAvailable, SignerMisbehavior, StoreFormatError
from .receiver_store import ReceiverStore

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1000
DEFAULT_MAX_CASES = 4096
INFECTIOUS_DAYS_BEFORE_SYMPTOMS = 2
CODE_NONCE_LEN = 16

ENTRY_REPORT = 0x01
ENTRY_MATCH = 0x02

_ENTRY_HEADER = struct.Struct(">BI")
_REPORT_HEADER = struct.Struct(">IIH")
_REPORT_DAY = struct.Struct(f">I{KEY_LEN}sHH")
_MATCH_HEADER = struct.Struct(f">II{CODE_NONCE_LEN}sIH")


@dataclass(frozen=True)
class ReportedDay:
    day_index: int
    secondary_seed: bytes
    selected: int
    n: int = DEFAULT_EPHIDS_PER_DAY


@dataclass(frozen=True)
class PositiveReport:
    publication_day: int
    case_number: int
    days: Tuple[ReportedDay, ...]

    def pack(self) -> bytes:
        return _REPORT_HEADER.pack(self.publication_day, self.case_number, len(self.days)) + b"".join(
            _REPORT_DAY.pack(d.day_index, d.secondary_seed, d.selected, d.n) for d in self.days)

    @classmethod
    def unpack(cls, payload: bytes) -> "PositiveReport":
        publication_day, case_number, count = _REPORT_HEADER.unpack_from(payload)
        if len(payload) != _REPORT_HEADER.size + count * _REPORT_DAY.size:
            raise StoreFormatError("양성 보고 항목 길이가 올바르지 않습니다")
        days = tuple(ReportedDay(*_REPORT_DAY.unpack_from(payload, _REPORT_HEADER.size + k * _REPORT_DAY.size))
                     for k in range(count))
        return cls(publication_day, case_number, days)


@dataclass(frozen=True)
class MatchPost:
    """(n_i, SP, Merkle path) for case i of a publication day"""

    publication_day: int
    case_number: int
    nonce: bytes
    sp: bytes
    proof: MerkleProof
    finaltrial_day: int

    def pack(self) -> bytes:
        return (_MATCH_HEADER.pack(self.publication_day, self.case_number, self.nonce,
                                   self.finaltrial_day, len(self.sp))
                + self.sp + self.proof.pack())

    @classmethod
    def unpack(cls, payload: bytes) -> "MatchPost":
        publication_day, case_number, nonce, finaltrial_day, sp_len = _MATCH_HEADER.unpack_from(payload)
        offset = _MATCH_HEADER.size
        sp = payload[offset:offset + sp_len]
        proof, end = MerkleProof.unpack(payload, offset + sp_len)
        if end != len(payload):
            raise StoreFormatError("매치 게시 항목 길이가 올바르지 않습니다")
        return cls(publication_day, case_number, nonce, sp, proof, finaltrial_day)


class BulletinBoard:
    """Append-only, totally ordered board backed by a binary journal.

    Journal entries are ``u8 type | u32 length | payload``; the journal is
    replayed when the board is opened.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._entries: List[Union[PositiveReport, MatchPost]] = []
        self._packed_matches: Dict[bytes, MatchPost] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._replay()

    def _replay(self) -> None:
        data = self.path.read_bytes()
        offset = 0
        while offset < len(data):
            if offset + _ENTRY_HEADER.size > len(data):
                raise StoreFormatError(f"게시판 저널이 잘렸습니다: {self.path}")
            entry_type, length = _ENTRY_HEADER.unpack_from(data, offset)
            offset += _ENTRY_HEADER.size
            payload = data[offset:offset + length]
            if len(payload) != length:
                raise StoreFormatError(f"게시판 저널이 잘렸습니다: {self.path}")
            offset += length
            if entry_type == ENTRY_REPORT:
                self._entries.append(PositiveReport.unpack(payload))
            elif entry_type == ENTRY_MATCH:
                post = MatchPost.unpack(payload)
                self._entries.append(post)
                self._packed_matches[payload] = post
            else:
                raise StoreFormatError(f"알 수 없는 저널 항목 타입: {entry_type:#04x}")
        logger.info("bulletin board replayed: %d entries", len(self._entries))

    def _write(self, entry_type: int, payload: bytes) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "ab") as f:
            f.write(_ENTRY_HEADER.pack(entry_type, len(payload)) + payload)

    def append_report(self, publication_day: int, days: Sequence[ReportedDay]) -> PositiveReport:
        with self._lock:
            case_number = 1 + sum(1 for r in self.reports() if r.publication_day == publication_day)
            report = PositiveReport(publication_day, case_number, tuple(days))
            self._write(ENTRY_REPORT, report.pack())
            self._entries.append(report)
        return report

    def append_match(self, post: MatchPost) -> MatchPost:
        """Identical re-posts are idempotent and return the existing entry"""
        payload = post.pack()
        with self._lock:
            existing = self._packed_matches.get(payload)
            if existing is not None:
                return existing
            self._write(ENTRY_MATCH, payload)
            self._entries.append(post)
            self._packed_matches[payload] = post
        return post

    def entries(self) -> List[Union[PositiveReport, MatchPost]]:
        with self._lock:
            return list(self._entries)

    def reports(self) -> List[PositiveReport]:
        return [e for e in list(self._entries) if isinstance(e, PositiveReport)]

    def match_posts(self, publication_day: Optional[int] = None,
                    case_number: Optional[int] = None) -> List[MatchPost]:
        return [e for e in self.entries() if isinstance(e, MatchPost)
                and (publication_day is None or e.publication_day == publication_day)
                and (case_number is None or e.case_number == case_number)]

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# Reports and matching
# ---------------------------------------------------------------------------

def infectious_window(symptom_day: int, report_day: int,
                      days_before: int = INFECTIOUS_DAYS_BEFORE_SYMPTOMS) -> range:
    """Days whose seeds are published: symptom onset minus ``days_before`` through the report day"""
    if report_day < symptom_day:
        raise InvalidArgument("보고일은 증상 발현일 이후여야 합니다")
    return range(symptom_day - days_before, report_day + 1)


def publish_positive(days: Sequence[ReportedDay], board: BulletinBoard, publication_day: int) -> int:
    if not days:
        raise InvalidArgument("감염 기간에 해당하는 날짜가 없습니다")
    for day in days:
        if len(day.secondary_seed) != KEY_LEN or day.selected < 1 or day.n < 1:
            raise InvalidArgument(f"day {day.day_index}의 보고 값이 올바르지 않습니다")
    report = board.append_report(publication_day, days)
    logger.info("positive report published: day %d case %d (%d days)",
                publication_day, report.case_number, len(days))
    return report.case_number


@dataclass(frozen=True)
class ExposureMatch:
    publication_day: int
    case_number: int
    day_index: int
    ephids: Tuple[bytes, ...]


def check_exposure(store: ReceiverStore, board: BulletinBoard) -> List[ExposureMatch]:
    """Re-derive each reported day's selected EphID set and intersect with verified records"""
    matches = []
    for report in board.reports():
        for day in report.days:
            records = store.verified_for_day(day.day_index)
            if not records:
                continue
            derived = set(derive_ephids(day.secondary_seed, day.selected, day.n).ephids)
            hits = tuple(dict.fromkeys(r.ephid for r in records if r.ephid in derived))
            if hits:
                matches.append(ExposureMatch(report.publication_day, report.case_number,
                                             day.day_index, hits))
    return matches


# ---------------------------------------------------------------------------
# FinalTrial
# ---------------------------------------------------------------------------

def code_bytes(case_number: int, nonce: bytes) -> bytes:
    return struct.pack(">I", case_number) + nonce


@dataclass
class FinalTrialCodeSet:
    day_index: int
    keys: DayKeyPair
    nonces: Tuple[bytes, ...]
    sp: int
    tree: MerkleTree

    @property
    def root(self) -> bytes:
        return self.tree.root

    @property
    def max_cases(self) -> int:
        return len(self.nonces)

    def code(self, case_number: int) -> bytes:
        return code_bytes(case_number, self.nonces[case_number - 1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "day_index": self.day_index,
            "keys": self.keys.public().to_dict(),
            "nonces": [nonce.hex() for nonce in self.nonces],
            "sp": format(self.sp, "x"),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FinalTrialCodeSet":
        try:
            nonces = tuple(bytes.fromhex(n) for n in data["nonces"])
            tree = MerkleTree([code_bytes(i, nonce) for i, nonce in enumerate(nonces, start=1)])
            return cls(day_index=int(data["day_index"]), keys=DayKeyPair.from_dict(data["keys"]),
                       nonces=nonces, sp=int(data["sp"], 16), tree=tree)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgument(f"잘못된 FinalTrial 코드 형식: {e}")


def _random_factor(keys: DayKeyPair, randfunc: RandFunc) -> int:
    while True:
        value = bytes_to_long(randfunc(keys.width)) % keys.n
        if value > 1 and GCD(value, keys.n) == 1:
            return value


def finaltrial_generate(max_cases: int, keys: DayKeyPair,
                        sign: Optional[Callable[[int], int]] = None,
                        randfunc: Optional[RandFunc] = None) -> FinalTrialCodeSet:
    """Generate codes ``i || n_i``, build their Merkle tree and obtain SP = R^d blindly.

    ``sign`` sends the blinded root to the signer; with private ``keys`` and no
    ``sign`` the root is signed locally.
    """
    if max_cases < 1:
        raise InvalidArgument("max_cases는 1 이상이어야 합니다")
    if keys.modulus_bits <= HASH_LEN * 8 + 1:
        raise InvalidArgument("FinalTrial 키의 모듈러스는 257비트보다 커야 합니다")
    randfunc = randfunc or make_randfunc()
    if sign is None:
        if not keys.is_private:
            raise InvalidArgument("서명 함수 또는 개인 키가 필요합니다")
        def sign(blinded: int) -> int:
            return sign_blinded(blinded, keys)
    public = keys.public()

    nonces = tuple(randfunc(CODE_NONCE_LEN) for _ in range(max_cases))
    tree = MerkleTree([code_bytes(i, nonce) for i, nonce in enumerate(nonces, start=1)])
    root_value = bytes_to_int(tree.root)

    rhat = _random_factor(public, randfunc)
    signed = sign(blind_int(root_value, rhat, public))
    sp = unblind(signed, rhat, public)
    if not verify_int(root_value, sp, public):
        raise SignerMisbehavior("FinalTrial 루트 서명이 검증되지 않습니다")
    logger.info("FinalTrial codes generated: %d cases for day %d", max_cases, public.day_index)
    return FinalTrialCodeSet(day_index=public.day_index, keys=public, nonces=nonces, sp=sp, tree=tree)


def finaltrial_post_match(codes: FinalTrialCodeSet, case_number: int, board: BulletinBoard,
                          publication_day: int) -> MatchPost:
    if not 1 <= case_number <= codes.max_cases:
        raise NoCodeAvailable(f"case {case_number}에 대한 코드가 없습니다 (최대 {codes.max_cases})")
    post = MatchPost(
        publication_day=publication_day,
        case_number=case_number,
        nonce=codes.nonces[case_number - 1],
        sp=int_to_bytes(codes.sp, codes.keys),
        proof=codes.tree.prove(case_number - 1),
        finaltrial_day=codes.day_index,
    )
    return board.append_match(post)


def verify_match_post(post: MatchPost, keys: DayKeyPair) -> bool:
    """Observer check: Merkle path to R and SP^e' mod N' = R"""
    if keys.day_index != post.finaltrial_day or post.proof.leaf_index != post.case_number - 1:
        return False
    if not merkle_verify(post.proof, code_bytes(post.case_number, post.nonce)):
        return False
    return verify_int(bytes_to_int(post.proof.root), bytes_to_int(post.sp), keys)


class TallyStatus(str, Enum):
    NORMAL = "normal"
    SUSPICIOUS = "suspicious"


@dataclass(frozen=True)
class TallyResult:
    case_number: int
    count: int
    invalid: int
    status: TallyStatus


def finaltrial_tally(board: BulletinBoard, publication_day: int, case_number: int,
                     finaltrial_keys: Mapping[int, DayKeyPair],
                     threshold: int = DEFAULT_THRESHOLD) -> TallyResult:
    """Count distinct publicly verifiable posts for one case"""
    distinct = set()
    invalid = 0
    for post in board.match_posts(publication_day, case_number):
        keys = finaltrial_keys.get(post.finaltrial_day)
        if keys is None or not verify_match_post(post, keys):
            invalid += 1
            continue
        distinct.add((post.nonce, post.sp, post.proof.root))
    status = TallyStatus.SUSPICIOUS if len(distinct) > threshold else TallyStatus.NORMAL
    if status is TallyStatus.SUSPICIOUS:
        logger.warning("case %d on day %d has %d matches (threshold %d)",
                       case_number, publication_day, len(distinct), threshold)
    return TallyResult(case_number=case_number, count=len(distinct), invalid=invalid, status=status)
