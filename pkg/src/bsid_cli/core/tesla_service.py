"""TESLA key schedule, authenticator issuance through the MIX, and key release.

Day ``t`` has one chain of ``L = 86400 / T`` keys. Interval ``i`` covers
``[t_i - T, t_i)`` and its key ``k_i`` is disclosed at ``t_i``, where
``t_i = t_1 + (i - 1) * T`` and ``t_1 = day_start + T``. Keys are generated
from ``k_L`` backward so that ``H(k_i) = k_{i-1}`` and ``k_0`` is the public
anchor.
"""

import bisect
import hmac
import logging
import random
import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Tuple, Union

from Crypto.Cipher import AES
from Crypto.Util.number import bytes_to_long, long_to_bytes

from .crypto_core import (
    AUTH_TAG_LEN, EPHID_LEN, KEY_LEN, DayKeyPair, RandFunc, auth_tag, make_randfunc,
    prf, sha256, verify_signature,
)
from .errors import (
    AlreadyIssued, BsidError, InvalidArgument, InvalidCredential, InvalidInterval,
    NotYetReleased,
)

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400
DEFAULT_PERIOD = 300  # T
DEFAULT_SYNC_ERROR = 10  # Δ
INTERVALS_PER_DAY = SECONDS_PER_DAY // DEFAULT_PERIOD
CHAIN_LABEL = "tesla-chain"
NONCE_LEN = 16
GCM_NONCE_LEN = 12
GCM_TAG_LEN = 16

MSG_KEY_REQUEST = 0x01
MSG_KEY_RESPONSE = 0x02
MSG_NOT_YET = 0x03


# ---------------------------------------------------------------------------
# Clocks
# ---------------------------------------------------------------------------

class Clock(Protocol):
    def now(self) -> float:
        ...


class SystemClock:
    def now(self) -> float:
        return time.time()


class ManualClock:
    """Test/simulation clock advanced explicitly"""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def set(self, value: float) -> None:
        self._now = float(value)

    def advance(self, seconds: float) -> float:
        self._now += seconds
        return self._now


def day_of(timestamp: float) -> int:
    return int(timestamp // SECONDS_PER_DAY)


def day_start(day_index: int) -> int:
    return day_index * SECONDS_PER_DAY


# ---------------------------------------------------------------------------
# Chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainAnchor:
    """Public commitment to a key chain: k_0 plus its release schedule"""

    anchor: bytes
    t_1: float
    period: int = DEFAULT_PERIOD
    sync_error: int = DEFAULT_SYNC_ERROR
    length: int = INTERVALS_PER_DAY

    def key_time(self, index: int) -> float:
        """t_i, the release time of k_i"""
        return self.t_1 + (index - 1) * self.period

    def interval_start(self, index: int) -> float:
        return self.key_time(index) - self.period

    def interval_at(self, timestamp: float) -> Optional[int]:
        """Interval covering ``timestamp``, or None outside the chain"""
        index = int((timestamp - self.interval_start(1)) // self.period) + 1
        if 1 <= index <= self.length:
            return index
        return None

    def is_safe(self, index: int, received_at: float) -> bool:
        """TESLA safety: received while k_index is still undisclosed, allowing for Δ"""
        return received_at < self.key_time(index) - self.sync_error

    def to_dict(self) -> Dict[str, Union[str, float, int]]:
        return {
            "anchor": self.anchor.hex(),
            "t_1": self.t_1,
            "period": self.period,
            "sync_error": self.sync_error,
            "length": self.length,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ChainAnchor":
        try:
            return cls(anchor=bytes.fromhex(data["anchor"]), t_1=float(data["t_1"]),
                       period=int(data["period"]), sync_error=int(data["sync_error"]),
                       length=int(data["length"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgument(f"잘못된 체인 앵커 형식: {e}")


@dataclass(frozen=True)
class TeslaChain:
    keys: Tuple[bytes, ...] = field(repr=False)  # keys[0] is the anchor k_0
    t_1: float
    period: int = DEFAULT_PERIOD
    sync_error: int = DEFAULT_SYNC_ERROR

    @property
    def length(self) -> int:
        return len(self.keys) - 1

    @property
    def anchor(self) -> bytes:
        return self.keys[0]

    def key(self, index: int) -> bytes:
        if not 1 <= index <= self.length:
            raise InvalidInterval(f"구간 {index}는 체인 범위(1..{self.length})를 벗어났습니다")
        return self.keys[index]

    def chain_anchor(self) -> ChainAnchor:
        return ChainAnchor(anchor=self.anchor, t_1=self.t_1, period=self.period,
                           sync_error=self.sync_error, length=self.length)

    def key_time(self, index: int) -> float:
        return self.t_1 + (index - 1) * self.period


def chain_generate(seed: bytes, length: int, t_1: float, period: int = DEFAULT_PERIOD,
                   sync_error: int = DEFAULT_SYNC_ERROR) -> TeslaChain:
    if length < 1:
        raise InvalidArgument("체인 길이 L은 1 이상이어야 합니다")
    if period <= 0:
        raise InvalidArgument("구간 길이 T는 0보다 커야 합니다")
    keys = [b""] * (length + 1)
    keys[length] = prf(seed, CHAIN_LABEL)
    for index in range(length, 0, -1):
        keys[index - 1] = sha256(keys[index])
    return TeslaChain(keys=tuple(keys), t_1=t_1, period=period, sync_error=sync_error)


def day_chain(master_seed: bytes, day_index: int, period: int = DEFAULT_PERIOD,
              sync_error: int = DEFAULT_SYNC_ERROR) -> TeslaChain:
    """The chain for one day, derived from a long-lived service seed"""
    seed = prf(master_seed, f"tesla day {day_index}")
    return chain_generate(seed, SECONDS_PER_DAY // period, day_start(day_index) + period,
                          period, sync_error)


def release_key(chain: TeslaChain, index: int, now: float) -> bytes:
    key = chain.key(index)
    if now < chain.key_time(index):
        raise NotYetReleased(f"k_{index}는 {chain.key_time(index):.0f} 이전에 공개되지 않습니다")
    return key


def verify_released_key(candidate: bytes, index: int, last_verified: Tuple[int, bytes]) -> bool:
    """True iff hashing ``candidate`` (index - j) times yields k_j"""
    last_index, last_key = last_verified
    if index <= last_index or len(candidate) != KEY_LEN:
        return False
    value = candidate
    for _ in range(index - last_index):
        value = sha256(value)
    return hmac.compare_digest(value, last_key)


# ---------------------------------------------------------------------------
# Authenticator issuance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuthRequest:
    nonce: bytes
    key: bytes = field(repr=False)
    ephid: bytes
    sd: int
    interval_index: int


@dataclass(frozen=True)
class PublishedAuth:
    nonce: bytes
    ciphertext: bytes

    def pack(self) -> bytes:
        return self.nonce + struct.pack(">H", len(self.ciphertext)) + self.ciphertext


def encrypt_auth(key: bytes, request_nonce: bytes, auth: bytes, randfunc: RandFunc) -> bytes:
    """AES-GCM under the requester's key; the request nonce is bound as associated data"""
    iv = randfunc(GCM_NONCE_LEN)
    cipher = AES.new(key, AES.MODE_GCM, nonce=iv, mac_len=GCM_TAG_LEN)
    cipher.update(request_nonce)
    ciphertext, tag = cipher.encrypt_and_digest(auth)
    return iv + ciphertext + tag


def decrypt_auth(key: bytes, entry: PublishedAuth) -> bytes:
    data = entry.ciphertext
    if len(data) != GCM_NONCE_LEN + AUTH_TAG_LEN + GCM_TAG_LEN:
        raise InvalidArgument("암호문 길이가 올바르지 않습니다")
    iv, body, tag = data[:GCM_NONCE_LEN], data[GCM_NONCE_LEN:-GCM_TAG_LEN], data[-GCM_TAG_LEN:]
    cipher = AES.new(key, AES.MODE_GCM, nonce=iv, mac_len=GCM_TAG_LEN)
    cipher.update(entry.nonce)
    try:
        return cipher.decrypt_and_verify(body, tag)
    except ValueError:
        raise InvalidArgument("인증자 복호화 실패: 키가 일치하지 않습니다")


def _parse_prefix(prefix_bits: str) -> Tuple[int, int]:
    if any(bit not in "01" for bit in prefix_bits) or len(prefix_bits) > NONCE_LEN * 8:
        raise InvalidArgument(f"잘못된 nonce prefix 비트열: {prefix_bits!r}")
    return (int(prefix_bits, 2) if prefix_bits else 0), len(prefix_bits)


class TeslaService:
    """Signer-side authenticator service for one day.

    Requests reach it through the MIX, so nothing here identifies the sender.
    The published list is append-only and kept sorted by nonce.
    """

    def __init__(self, keys: DayKeyPair, chain: TeslaChain, clock: Optional[Clock] = None,
                 randfunc: Optional[RandFunc] = None):
        self.keys = keys.public()
        self.chain = chain
        self.clock = clock or SystemClock()
        self._randfunc = randfunc or make_randfunc()
        self._issued = set()
        self._nonces: List[bytes] = []
        self._entries: List[PublishedAuth] = []
        self._lock = threading.Lock()

    @property
    def anchor(self) -> ChainAnchor:
        return self.chain.chain_anchor()

    def issue_authenticator(self, request: AuthRequest) -> PublishedAuth:
        if not 1 <= request.interval_index <= self.chain.length:
            raise InvalidInterval(f"구간 {request.interval_index}는 범위(1..{self.chain.length})를 벗어났습니다")
        if len(request.nonce) != NONCE_LEN or len(request.key) != KEY_LEN:
            raise InvalidArgument("nonce는 16바이트, 응답 키는 32바이트여야 합니다")
        if not verify_signature(request.ephid, request.sd, self.keys):
            raise InvalidCredential("EphID 서명 검증 실패")

        auth = auth_tag(self.chain.key(request.interval_index), request.ephid)
        with self._lock:
            if request.ephid in self._issued:
                raise AlreadyIssued("이미 인증자가 발급된 EphID입니다")
            position = bisect.bisect_left(self._nonces, request.nonce)
            if position < len(self._nonces) and self._nonces[position] == request.nonce:
                raise InvalidArgument("이미 사용된 nonce입니다")
            self._issued.add(request.ephid)
            entry = PublishedAuth(nonce=request.nonce,
                                  ciphertext=encrypt_auth(request.key, request.nonce, auth, self._randfunc))
            self._nonces.insert(position, request.nonce)
            self._entries.insert(position, entry)
        logger.debug("authenticator issued for interval %d", request.interval_index)
        return entry

    def release_key(self, index: int) -> bytes:
        return release_key(self.chain, index, self.clock.now())

    def retrieve_full(self) -> List[PublishedAuth]:
        with self._lock:
            return list(self._entries)

    def retrieve_partial(self, prefix_bits: str) -> List[PublishedAuth]:
        """Entries whose nonce starts with the bit string ``prefix_bits``"""
        value, width = _parse_prefix(prefix_bits)
        shift = NONCE_LEN * 8 - width
        low = long_to_bytes(value << shift, NONCE_LEN)
        with self._lock:
            start = bisect.bisect_left(self._nonces, low)
            if (value + 1) << shift >= 1 << (NONCE_LEN * 8):
                end = len(self._nonces)
            else:
                end = bisect.bisect_left(self._nonces, long_to_bytes((value + 1) << shift, NONCE_LEN))
            return self._entries[start:end]

    def retrieve_individual(self, nonce: bytes) -> Optional[PublishedAuth]:
        with self._lock:
            position = bisect.bisect_left(self._nonces, nonce)
            if position < len(self._nonces) and self._nonces[position] == nonce:
                return self._entries[position]
        return None

    def save_published(self, path: Union[str, Path]) -> None:
        """Write the published list and, next to it, the set of served EphIDs"""
        with self._lock:
            entries = list(self._entries)
            served = sorted(self._issued)
        save_published(entries, path)
        issued_path(path).write_bytes(b"".join(served))

    def load_published(self, path: Union[str, Path]) -> int:
        """Restore a published list and its served-EphID set saved earlier"""
        entries = load_published(path)
        served = load_issued(issued_path(path))
        with self._lock:
            self._issued.update(served)
            for entry in entries:
                position = bisect.bisect_left(self._nonces, entry.nonce)
                if position < len(self._nonces) and self._nonces[position] == entry.nonce:
                    continue
                self._nonces.insert(position, entry.nonce)
                self._entries.insert(position, entry)
        return len(entries)


def save_published(entries: Iterable[PublishedAuth], path: Union[str, Path]) -> None:
    Path(path).write_bytes(b"".join(entry.pack() for entry in entries))


def load_published(path: Union[str, Path]) -> List[PublishedAuth]:
    data = Path(path).read_bytes()
    entries = []
    offset = 0
    while offset < len(data):
        if offset + NONCE_LEN + 2 > len(data):
            raise InvalidArgument(f"게시 목록 파일이 잘렸습니다: {path}")
        nonce = data[offset:offset + NONCE_LEN]
        (length,) = struct.unpack_from(">H", data, offset + NONCE_LEN)
        offset += NONCE_LEN + 2
        if offset + length > len(data):
            raise InvalidArgument(f"게시 목록 파일이 잘렸습니다: {path}")
        entries.append(PublishedAuth(nonce=nonce, ciphertext=data[offset:offset + length]))
        offset += length
    return entries


def issued_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".issued")


def load_issued(path: Union[str, Path]) -> List[bytes]:
    """Served EphIDs as fixed 13-byte records; a missing file means none served"""
    path = Path(path)
    if not path.exists():
        return []
    data = path.read_bytes()
    if len(data) % EPHID_LEN:
        raise InvalidArgument(f"발급 기록 파일이 손상되었습니다: {path}")
    return [data[i:i + EPHID_LEN] for i in range(0, len(data), EPHID_LEN)]


# ---------------------------------------------------------------------------
# MIX and client
# ---------------------------------------------------------------------------

@dataclass
class MixReport:
    issued: int = 0
    rejected: int = 0
    errors: Dict[str, int] = field(default_factory=dict)


class Mix:
    """Unlinkable channel: batches requests and forwards them in shuffled order"""

    def __init__(self, service: TeslaService, rng_seed: Optional[int] = None):
        self.service = service
        self._rng = random.Random(rng_seed)
        self._batch: List[AuthRequest] = []

    def submit(self, request: AuthRequest) -> None:
        self._batch.append(request)

    def submit_all(self, requests: Iterable[AuthRequest]) -> None:
        self._batch.extend(requests)

    def flush(self) -> MixReport:
        batch, self._batch = self._batch, []
        self._rng.shuffle(batch)
        report = MixReport()
        for request in batch:
            try:
                self.service.issue_authenticator(request)
                report.issued += 1
            except BsidError as e:
                report.rejected += 1
                report.errors[e.code] = report.errors.get(e.code, 0) + 1
                logger.warning("authenticator request rejected: %s", e.code)
        return report


@dataclass(frozen=True)
class ObtainedAuth:
    ephid: bytes
    interval_index: int
    auth: bytes


class AuthClient:
    """Device side of the exchange: builds requests and decrypts downloads.

    Nonces share the first ``prefix_bits`` bits so the partial download only
    needs that prefix.
    """

    def __init__(self, randfunc: Optional[RandFunc] = None, prefix_bits: str = ""):
        self._randfunc = randfunc or make_randfunc()
        self._prefix, self._prefix_width = _parse_prefix(prefix_bits)
        self.prefix_bits = prefix_bits
        self._pending: Dict[bytes, AuthRequest] = {}

    def _nonce(self) -> bytes:
        value = bytes_to_long(self._randfunc(NONCE_LEN))
        shift = NONCE_LEN * 8 - self._prefix_width
        value = (self._prefix << shift) | (value & ((1 << shift) - 1))
        return long_to_bytes(value, NONCE_LEN)

    def make_request(self, ephid: bytes, sd: int, interval_index: int) -> AuthRequest:
        if len(ephid) != EPHID_LEN:
            raise InvalidArgument("EphID는 13바이트여야 합니다")
        request = AuthRequest(nonce=self._nonce(), key=self._randfunc(KEY_LEN), ephid=ephid,
                              sd=sd, interval_index=interval_index)
        self._pending[request.nonce] = request
        return request

    @property
    def pending(self) -> List[AuthRequest]:
        return list(self._pending.values())

    def collect(self, entries: Iterable[PublishedAuth]) -> List[ObtainedAuth]:
        """Decrypt the entries addressed to this client; others are skipped"""
        obtained = []
        for entry in entries:
            request = self._pending.get(entry.nonce)
            if request is None:
                continue
            auth = decrypt_auth(request.key, entry)
            obtained.append(ObtainedAuth(request.ephid, request.interval_index, auth))
        return obtained

    def download(self, service: TeslaService, method: str = "full") -> List[ObtainedAuth]:
        if method == "full":
            return self.collect(service.retrieve_full())
        if method == "partial":
            return self.collect(service.retrieve_partial(self.prefix_bits))
        if method == "individual":
            entries = [service.retrieve_individual(nonce) for nonce in self._pending]
            return self.collect(entry for entry in entries if entry is not None)
        raise InvalidArgument(f"지원하지 않는 다운로드 방식: {method}")


# ---------------------------------------------------------------------------
# Datagram key release
# ---------------------------------------------------------------------------

def encode_key_request(index: int) -> bytes:
    return struct.pack(">BI", MSG_KEY_REQUEST, index)


def decode_key_response(data: bytes, index: int) -> bytes:
    if data[:1] == bytes([MSG_NOT_YET]):
        raise NotYetReleased(f"k_{index}는 아직 공개되지 않았습니다")
    if len(data) != 5 + KEY_LEN or data[0] != MSG_KEY_RESPONSE:
        raise InvalidArgument("잘못된 키 공개 응답")
    (echoed,) = struct.unpack_from(">I", data, 1)
    if echoed != index:
        raise InvalidArgument(f"요청 구간 {index}와 응답 구간 {echoed}가 다릅니다")
    return data[5:]


class _KeyReleaseHandler(socketserver.BaseRequestHandler):
    def handle(self):
        data, sock = self.request
        response = self.server.respond(data)
        if response is not None:
            sock.sendto(response, self.client_address)


class KeyReleaseServer(socketserver.UDPServer):
    """Serves released keys of one chain; requests are handled sequentially"""

    allow_reuse_address = True

    def __init__(self, address: Tuple[str, int], chain: TeslaChain, clock: Optional[Clock] = None):
        self.chain = chain
        self.clock = clock or SystemClock()
        super().__init__(address, _KeyReleaseHandler)

    def respond(self, data: bytes) -> Optional[bytes]:
        if len(data) != 5 or data[0] != MSG_KEY_REQUEST:
            logger.warning("malformed key request (%d bytes) dropped", len(data))
            return None
        (index,) = struct.unpack_from(">I", data, 1)
        try:
            key = release_key(self.chain, index, self.clock.now())
        except (NotYetReleased, InvalidInterval):
            return bytes([MSG_NOT_YET])
        return struct.pack(">BI", MSG_KEY_RESPONSE, index) + key


def fetch_released_key(host: str, port: int, index: int, timeout: float = 2.0) -> bytes:
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.settimeout(timeout)
        sock.sendto(encode_key_request(index), (host, port))
        data, _ = sock.recvfrom(64)
    return decode_key_response(data, index)
