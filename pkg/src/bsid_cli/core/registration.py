"""Cut-and-choose issuance of blind-signed EphIDs (registration on day t-2)"""

import logging
import random
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from .crypto_core import (
    KEY_LEN, DayKeyPair, blind_with_multiplier, bytes_to_int, encode_message, int_to_bytes,
    sign_blinded, unblind, verify_signature,
)
from .ephid_gen import (
    BlindingSet, EphIDSet, MainDaySeed, SecondarySeedSet, derive_blinding, derive_blinding_set,
    derive_ephids, derive_secondary_seeds,
)
from .errors import (
    AlreadyRegistered, AuditFailed, Blocked, BsidError, IdentityRejected, InvalidArgument,
    MalformedRequest, MalformedReveal, SignerMisbehavior, error_from_wire,
)

logger = logging.getLogger(__name__)

DEFAULT_BLOCKLIST_DAYS = 90
SECONDS_PER_DAY = 86400
MAX_IDENTITY_BYTES = 0xFFFF

MSG_REQUEST = 0x10
MSG_CHALLENGE = 0x11
MSG_REVEAL = 0x12
MSG_RESPONSE = 0x13
MSG_ERROR = 0x1F


# ---------------------------------------------------------------------------
# Messages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegistrationRequest:
    identity: str
    day_index: int
    blinded: Tuple[Tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.blinded)

    @property
    def n(self) -> int:
        return len(self.blinded[0]) if self.blinded else 0


@dataclass(frozen=True)
class Challenge:
    selected: int
    m: int

    @property
    def demanded(self) -> List[int]:
        return [i for i in range(1, self.m + 1) if i != self.selected]


@dataclass(frozen=True)
class RevealedSet:
    set_index: int
    secondary_seed: bytes = field(repr=False)
    blinding_seed: bytes = field(repr=False)


@dataclass(frozen=True)
class RevealPackage:
    sets: Tuple[RevealedSet, ...]

    @property
    def revealed_set_indices(self) -> List[int]:
        return [revealed.set_index for revealed in self.sets]


@dataclass(frozen=True)
class Credential:
    ephid: bytes
    sd: int


@dataclass(frozen=True)
class IssuedCredentials:
    day_index: int
    selected: int
    credentials: Tuple[Credential, ...]
    secondary_seed: bytes = field(default=b"", repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "day_index": self.day_index,
            "selected": self.selected,
            "secondary_seed": self.secondary_seed.hex(),
            "credentials": [{"ephid": c.ephid.hex(), "sd": format(c.sd, "x")} for c in self.credentials],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IssuedCredentials":
        try:
            return cls(
                day_index=int(data["day_index"]),
                selected=int(data["selected"]),
                secondary_seed=bytes.fromhex(data.get("secondary_seed", "")),
                credentials=tuple(Credential(bytes.fromhex(c["ephid"]), int(c["sd"], 16))
                                  for c in data["credentials"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgument(f"잘못된 자격 증명 형식: {e}")


# ---------------------------------------------------------------------------
# Client
# ---------------------------------------------------------------------------

@dataclass
class ClientState:
    """Session-local client secrets; never leaves the device"""

    main: MainDaySeed
    keys: DayKeyPair
    identity: str
    secondary: SecondarySeedSet
    blinding: BlindingSet
    ephid_sets: Tuple[EphIDSet, ...]
    challenge: Optional[Challenge] = None


def client_begin(main: MainDaySeed, m: int, n: int, keys: DayKeyPair, identity: str,
                 show_progress: bool = False) -> Tuple[RegistrationRequest, ClientState]:
    keys = keys.public()
    secondary = derive_secondary_seeds(main, m)
    blinding = derive_blinding(main, m, n, keys)

    ephid_sets = []
    blinded = []
    for set_index in tqdm(range(1, m + 1), desc="블라인딩", disable=not show_progress):
        ephids = derive_ephids(secondary.seed(set_index), set_index, n)
        multipliers = blinding.values(set_index).multipliers
        blinded.append(tuple(
            blind_with_multiplier(encode_message(ephid, keys), r, keys)
            for ephid, r in zip(ephids.ephids, multipliers)
        ))
        ephid_sets.append(ephids)

    request = RegistrationRequest(identity=identity, day_index=keys.day_index, blinded=tuple(blinded))
    state = ClientState(main=main, keys=keys, identity=identity, secondary=secondary,
                        blinding=blinding, ephid_sets=tuple(ephid_sets))
    return request, state


def client_reveal(state: ClientState, challenge: Challenge) -> RevealPackage:
    if not 1 <= challenge.selected <= state.secondary.m or challenge.m != state.secondary.m:
        raise SignerMisbehavior(f"잘못된 challenge: s={challenge.selected}, M={challenge.m}")
    state.challenge = challenge
    return RevealPackage(sets=tuple(
        RevealedSet(i, state.secondary.seed(i), state.blinding.seed(i)) for i in challenge.demanded
    ))


def client_unblind(state: ClientState, signed: Sequence[int]) -> IssuedCredentials:
    if state.challenge is None:
        raise InvalidArgument("challenge를 받기 전에는 unblind할 수 없습니다")
    selected = state.challenge.selected
    ephids = state.ephid_sets[selected - 1].ephids
    rhats = state.blinding.values(selected).rhats
    if len(signed) != len(ephids):
        raise SignerMisbehavior(f"서명 개수 불일치: {len(signed)} != {len(ephids)}")

    credentials = []
    for ephid, rhat, value in zip(ephids, rhats, signed):
        if not 0 < value < state.keys.n:
            raise SignerMisbehavior("서명 값이 범위를 벗어났습니다")
        sd = unblind(value, rhat, state.keys)
        if not verify_signature(ephid, sd, state.keys):
            raise SignerMisbehavior("서명자가 유효하지 않은 서명을 반환했습니다")
        credentials.append(Credential(ephid=ephid, sd=sd))
    return IssuedCredentials(day_index=state.keys.day_index, selected=selected,
                             credentials=tuple(credentials),
                             secondary_seed=state.secondary.seed(selected))


# ---------------------------------------------------------------------------
# Signer-side state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlocklistEntry:
    identity: str
    blocked_from: int
    expires_at: int

    def __post_init__(self):
        if self.expires_at <= self.blocked_from:
            raise InvalidArgument("expires_at은 blocked_from보다 커야 합니다")


def _check_identity(identity: str) -> None:
    if not identity or any(ch in identity for ch in "\t\r\n"):
        raise MalformedRequest("identity는 비어 있지 않고 탭/개행을 포함하지 않아야 합니다")
    if len(identity.encode("utf-8")) > MAX_IDENTITY_BYTES:
        raise MalformedRequest("identity가 너무 깁니다")


class Blocklist:
    """Blocked identities; persisted one tab-separated line per entry"""

    def __init__(self, path: Optional[Union[str, Path]] = None, expiry_days: int = DEFAULT_BLOCKLIST_DAYS):
        if expiry_days <= 0:
            raise InvalidArgument("차단 기간은 0보다 커야 합니다")
        self.path = Path(path) if path else None
        self.expiry_seconds = expiry_days * SECONDS_PER_DAY
        self._entries: Dict[str, BlocklistEntry] = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        for line_no, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                identity, blocked_from, expires_at = line.split("\t")
                entry = BlocklistEntry(identity, int(blocked_from), int(expires_at))
            except ValueError as e:
                raise InvalidArgument(f"blocklist {self.path}:{line_no} 형식 오류: {e}")
            current = self._entries.get(identity)
            if current is None or entry.expires_at > current.expires_at:
                self._entries[identity] = entry

    def is_blocked(self, identity: str, now: float) -> bool:
        entry = self._entries.get(identity)
        return entry is not None and now < entry.expires_at

    def add(self, identity: str, now: float) -> BlocklistEntry:
        entry = BlocklistEntry(identity, int(now), int(now) + self.expiry_seconds)
        self._entries[identity] = entry
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(f"{entry.identity}\t{entry.blocked_from}\t{entry.expires_at}\n")
        logger.warning("identity blocked until %d", entry.expires_at)
        return entry

    def entries(self) -> List[BlocklistEntry]:
        return list(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)


class ServedLog:
    """(day, identity) pairs already served; append-only file, pruned on rollover"""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._served: Dict[int, set] = {}
        if self.path and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    day, identity = line.split("\t", 1)
                    self._served.setdefault(int(day), set()).add(identity)

    def has(self, identity: str, day_index: int) -> bool:
        return identity in self._served.get(day_index, ())

    def mark(self, identity: str, day_index: int) -> None:
        self._served.setdefault(day_index, set()).add(identity)
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(f"{day_index}\t{identity}\n")

    def prune(self, before_day: int) -> int:
        """Forget days earlier than ``before_day``; returns dropped record count"""
        stale = [day for day in self._served if day < before_day]
        dropped = sum(len(self._served.pop(day)) for day in stale)
        if dropped and self.path:
            lines = [f"{day}\t{identity}\n" for day in sorted(self._served)
                     for identity in sorted(self._served[day])]
            self.path.write_text("".join(lines), encoding="utf-8")
        return dropped


class IdentityVerifier:
    """Stub identity provider: accepts every well-formed token except scripted rejections"""

    def __init__(self, rejected: Iterable[str] = ()):
        self._rejected = set(rejected)

    def reject(self, identity: str) -> None:
        self._rejected.add(identity)

    def verify(self, identity: str) -> None:
        _check_identity(identity)
        if identity in self._rejected:
            raise IdentityRejected("신원 확인에 실패했습니다")


@dataclass
class SignerSession:
    """Signer transcript: identity, blinded values, challenge, reveal, signed values"""

    identity: str
    day_index: int
    request: RegistrationRequest
    challenge: Challenge
    received_at: float = 0.0
    reveal: Optional[RevealPackage] = None
    signed: Optional[Tuple[int, ...]] = None
    closed: bool = False


class Signer:
    """Registration signer holding one key pair per day.

    Challenge selection uses a seeded RNG so protocol runs are reproducible.
    """

    def __init__(self, keys: Iterable[DayKeyPair] = (), rng_seed: Optional[int] = None,
                 blocklist: Optional[Blocklist] = None, served: Optional[ServedLog] = None,
                 verifier: Optional[IdentityVerifier] = None,
                 finaltrial_keys: Iterable[DayKeyPair] = ()):
        self._keys: Dict[int, DayKeyPair] = {}
        self._finaltrial_keys: Dict[int, DayKeyPair] = {k.day_index: k for k in finaltrial_keys}
        for day_keys in keys:
            self.add_day_keys(day_keys)
        self._rng = random.Random(rng_seed)
        self.blocklist = blocklist or Blocklist()
        self.served = served or ServedLog()
        self.verifier = verifier or IdentityVerifier()
        self.transcripts: List[SignerSession] = []
        self._lock = threading.Lock()

    def add_day_keys(self, keys: DayKeyPair, finaltrial: Optional[DayKeyPair] = None) -> None:
        if not keys.is_private:
            raise InvalidArgument("서명자는 개인 키가 필요합니다")
        self._keys[keys.day_index] = keys
        if finaltrial is not None:
            self.add_finaltrial_keys(finaltrial)

    def add_finaltrial_keys(self, keys: DayKeyPair) -> None:
        if not keys.is_private:
            raise InvalidArgument("FinalTrial 서명에는 개인 키가 필요합니다")
        self._finaltrial_keys[keys.day_index] = keys

    @property
    def days(self) -> List[int]:
        return sorted(self._keys)

    def public_keys(self, day_index: int) -> DayKeyPair:
        return self._day_keys(day_index).public()

    def _day_keys(self, day_index: int) -> DayKeyPair:
        try:
            return self._keys[day_index]
        except KeyError:
            raise MalformedRequest(f"day {day_index}의 서명 키가 없습니다")

    def signer_receive(self, request: RegistrationRequest, now: float) -> SignerSession:
        keys = self._day_keys(request.day_index)
        if request.m < 1 or request.n < 1 or any(len(row) != request.n for row in request.blinded):
            raise MalformedRequest(f"블라인드 값 배열이 M×n 형태가 아닙니다 (M={request.m})")
        if any(not 0 < value < keys.n for row in request.blinded for value in row):
            raise MalformedRequest("블라인드 값이 (0, N) 범위를 벗어났습니다")
        self.verifier.verify(request.identity)

        with self._lock:
            if self.blocklist.is_blocked(request.identity, now):
                logger.warning("blocked identity attempted registration for day %d", request.day_index)
                raise Blocked("차단된 사용자입니다")
            if self.served.has(request.identity, request.day_index):
                raise AlreadyRegistered(f"day {request.day_index}에 이미 등록된 사용자입니다")
            self.served.mark(request.identity, request.day_index)
            challenge = Challenge(selected=self._rng.randint(1, request.m), m=request.m)
        logger.info("day %d: challenge issued (M=%d, n=%d)", request.day_index, request.m, request.n)
        return SignerSession(identity=request.identity, day_index=request.day_index,
                             request=request, challenge=challenge, received_at=now)

    def signer_audit_and_sign(self, session: SignerSession, reveal: RevealPackage,
                              now: Optional[float] = None) -> List[int]:
        with self._lock:
            if session.closed:
                raise MalformedReveal("이미 종료된 세션입니다")
            session.closed = True
        keys = self._day_keys(session.day_index)
        demanded = session.challenge.demanded
        indices = reveal.revealed_set_indices
        if sorted(indices) != demanded:
            raise MalformedReveal(f"공개된 세트 {sorted(indices)}가 요구된 세트와 다릅니다")
        if any(len(r.secondary_seed) != KEY_LEN or len(r.blinding_seed) != KEY_LEN for r in reveal.sets):
            raise MalformedReveal("공개된 시드 길이가 올바르지 않습니다")

        n = session.request.n
        for revealed in reveal.sets:
            ephids = derive_ephids(revealed.secondary_seed, revealed.set_index, n).ephids
            multipliers = derive_blinding_set(revealed.blinding_seed, revealed.set_index, n, keys).multipliers
            expected = tuple(blind_with_multiplier(encode_message(ephid, keys), r, keys)
                             for ephid, r in zip(ephids, multipliers))
            if expected != session.request.blinded[revealed.set_index - 1]:
                self.blocklist.add(session.identity, now if now is not None else session.received_at)
                raise AuditFailed(f"세트 {revealed.set_index}의 재계산 값이 요청과 다릅니다")

        selected = session.request.blinded[session.challenge.selected - 1]
        session.reveal = reveal
        session.signed = tuple(sign_blinded(value, keys) for value in selected)
        self.transcripts.append(session)
        logger.info("day %d: %d values signed", session.day_index, len(session.signed))
        return list(session.signed)

    def finaltrial_public_keys(self, day_index: int) -> DayKeyPair:
        try:
            return self._finaltrial_keys[day_index].public()
        except KeyError:
            raise InvalidArgument(f"day {day_index}의 FinalTrial 키가 없습니다")

    def sign_finaltrial_root(self, blinded_root: int, day_index: int) -> int:
        """Blind-sign a FinalTrial Merkle root with the separate FinalTrial day key"""
        try:
            keys = self._finaltrial_keys[day_index]
        except KeyError:
            raise InvalidArgument(f"day {day_index}의 FinalTrial 키가 없습니다")
        return sign_blinded(blinded_root, keys)

    def rollover(self, current_day: int) -> int:
        return self.served.prune(current_day)


def run_registration(state: ClientState, request: RegistrationRequest, signer, now: float) -> IssuedCredentials:
    """Drive one issuance against an in-process ``Signer`` or a ``RemoteSigner``"""
    session = signer.signer_receive(request, now)
    reveal = client_reveal(state, session.challenge)
    signed = signer.signer_audit_and_sign(session, reveal)
    return client_unblind(state, signed)


# ---------------------------------------------------------------------------
# Wire codecs
# ---------------------------------------------------------------------------

def _raise_if_error(data: bytes) -> None:
    if not data:
        raise MalformedRequest("빈 메시지")
    if data[0] == MSG_ERROR:
        code = data[1] if len(data) > 1 else 0xFF
        raise error_from_wire(code, "서명자 오류 응답")


def encode_error(error: BsidError) -> bytes:
    return bytes([MSG_ERROR, error.wire_code])


def encode_request(request: RegistrationRequest, width: int) -> bytes:
    identity = request.identity.encode("utf-8")
    header = struct.pack(">BIHHH", MSG_REQUEST, request.day_index, request.m, request.n, len(identity))
    body = b"".join(value.to_bytes(width, "big") for row in request.blinded for value in row)
    return header + identity + body


def decode_request(data: bytes, width_for_day: Callable[[int], int]) -> RegistrationRequest:
    _raise_if_error(data)
    try:
        msg_type, day_index, m, n, id_len = struct.unpack_from(">BIHHH", data, 0)
    except struct.error:
        raise MalformedRequest("요청 헤더가 잘렸습니다")
    if msg_type != MSG_REQUEST:
        raise MalformedRequest(f"요청 메시지 타입이 아닙니다: {msg_type:#04x}")
    offset = struct.calcsize(">BIHHH")
    try:
        identity = data[offset:offset + id_len].decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedRequest("identity가 UTF-8이 아닙니다")
    offset += id_len
    width = width_for_day(day_index)
    if len(data) != offset + m * n * width:
        raise MalformedRequest(f"요청 길이 불일치 (M={m}, n={n})")
    blinded = tuple(
        tuple(bytes_to_int(data[offset + (i * n + j) * width: offset + (i * n + j + 1) * width])
              for j in range(n))
        for i in range(m)
    )
    return RegistrationRequest(identity=identity, day_index=day_index, blinded=blinded)


def encode_challenge(challenge: Challenge) -> bytes:
    return struct.pack(">BH", MSG_CHALLENGE, challenge.selected)


def decode_challenge(data: bytes, m: int) -> Challenge:
    _raise_if_error(data)
    if len(data) != 3 or data[0] != MSG_CHALLENGE:
        raise MalformedRequest("잘못된 challenge 메시지")
    (selected,) = struct.unpack_from(">H", data, 1)
    return Challenge(selected=selected, m=m)


_REVEAL_ITEM = struct.Struct(f">H{KEY_LEN}s{KEY_LEN}s")


def encode_reveal(reveal: RevealPackage) -> bytes:
    return bytes([MSG_REVEAL]) + b"".join(
        _REVEAL_ITEM.pack(r.set_index, r.secondary_seed, r.blinding_seed) for r in reveal.sets
    )


def decode_reveal(data: bytes) -> RevealPackage:
    _raise_if_error(data)
    if data[0] != MSG_REVEAL or (len(data) - 1) % _REVEAL_ITEM.size:
        raise MalformedReveal("잘못된 reveal 메시지")
    return RevealPackage(sets=tuple(
        RevealedSet(*_REVEAL_ITEM.unpack_from(data, 1 + k * _REVEAL_ITEM.size))
        for k in range((len(data) - 1) // _REVEAL_ITEM.size)
    ))


def encode_response(signed: Sequence[int], keys: DayKeyPair) -> bytes:
    return bytes([MSG_RESPONSE]) + b"".join(int_to_bytes(value, keys) for value in signed)


def decode_response(data: bytes, n: int, width: int) -> List[int]:
    _raise_if_error(data)
    if data[0] != MSG_RESPONSE or len(data) != 1 + n * width:
        raise SignerMisbehavior("잘못된 서명 응답 메시지")
    return [bytes_to_int(data[1 + j * width: 1 + (j + 1) * width]) for j in range(n)]
