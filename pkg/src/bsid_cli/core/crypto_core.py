"""Deterministic cryptographic primitives shared by every protocol module.

PRF/PRG, raw-RSA blind-signature arithmetic over ``Prefix_t || EphID``,
truncated MAC authenticators and Merkle trees with leaf/node domain separation.

Note: raw RSA over a public fixed prefix is multiplicatively malleable
(``sig(a) * sig(b)`` signs ``a * b`` when both products keep the prefix).
The protocol signs exactly what is described for BlindSignedID; PSS-style
padding is intentionally not used.
"""

import hashlib
import hmac
import logging
import random
import struct
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from Crypto.Random import get_random_bytes
from Crypto.Util.number import GCD, bytes_to_long, getPrime, inverse, long_to_bytes

from .errors import InvalidArgument, InvalidBlindingFactor

logger = logging.getLogger(__name__)

EPHID_LEN = 13
EPHID_BITS = EPHID_LEN * 8
AUTH_TAG_LEN = 13
KEY_LEN = 32
HASH_LEN = 32
DEFAULT_MODULUS_BITS = 2048
DEFAULT_PUBLIC_EXPONENT = 65537

_LEAF_PREFIX = b"\x00"
_NODE_PREFIX = b"\x01"

RandFunc = Callable[[int], bytes]
Label = Union[str, bytes]


def make_randfunc(seed: Optional[int] = None) -> RandFunc:
    """Byte source for key generation and nonces: seeded for reproducible runs, OS randomness otherwise"""
    if seed is None:
        return get_random_bytes
    return random.Random(seed).randbytes


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def prf(key: bytes, label: Label) -> bytes:
    """HMAC-SHA256 keyed pseudo-random function"""
    if len(key) != KEY_LEN:
        raise InvalidArgument(f"PRF 키는 {KEY_LEN}바이트여야 합니다 (입력: {len(key)}바이트)")
    if isinstance(label, str):
        label = label.encode("utf-8")
    return hmac.digest(key, label, "sha256")


def prg(seed: bytes, out_len: int) -> bytes:
    """Counter-mode SHA-256 expansion; prg(s, a) is a prefix of prg(s, b) for a <= b"""
    if len(seed) != KEY_LEN:
        raise InvalidArgument(f"PRG 시드는 {KEY_LEN}바이트여야 합니다 (입력: {len(seed)}바이트)")
    if out_len < 1:
        raise InvalidArgument("PRG 출력 길이는 1 이상이어야 합니다")
    blocks = -(-out_len // HASH_LEN)
    stream = b"".join(
        hashlib.sha256(seed + counter.to_bytes(4, "big")).digest() for counter in range(blocks)
    )
    return stream[:out_len]


# ---------------------------------------------------------------------------
# Day keys
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DayKeyPair:
    """Signer key material for one day: (e_t, d_t, N, Prefix_t)"""

    day_index: int
    e: int
    n: int
    prefix: int
    prefix_bits: int
    d: Optional[int] = field(default=None, repr=False)

    @property
    def modulus_bits(self) -> int:
        return self.n.bit_length()

    @property
    def width(self) -> int:
        """Serialized byte width of group elements"""
        return (self.modulus_bits + 7) // 8

    @property
    def is_private(self) -> bool:
        return self.d is not None

    def public(self) -> "DayKeyPair":
        return replace(self, d=None)

    def to_dict(self, include_private: bool = False) -> Dict[str, Any]:
        data = {
            "day_index": self.day_index,
            "modulus_bits": self.modulus_bits,
            "e": self.e,
            "n": format(self.n, "x"),
            "prefix": format(self.prefix, "x"),
            "prefix_bits": self.prefix_bits,
        }
        if include_private and self.d is not None:
            data["d"] = format(self.d, "x")
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DayKeyPair":
        try:
            return cls(
                day_index=int(data["day_index"]),
                e=int(data["e"]),
                n=int(data["n"], 16),
                prefix=int(data["prefix"], 16),
                prefix_bits=int(data["prefix_bits"]),
                d=int(data["d"], 16) if data.get("d") else None,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgument(f"잘못된 day key 형식: {e}")

    @classmethod
    def from_primes(cls, p: int, q: int, e: int, day_index: int = 0,
                    prefix: int = 0, prefix_bits: int = 0) -> "DayKeyPair":
        """Build keys from known factors (toy groups such as N = 61 * 53 in tests)"""
        lam = (p - 1) * (q - 1) // GCD(p - 1, q - 1)
        if GCD(e, lam) != 1:
            raise InvalidArgument(f"공개 지수 {e}가 λ(N)과 서로소가 아닙니다")
        keys = cls(day_index=day_index, e=e, n=p * q, prefix=prefix,
                   prefix_bits=prefix_bits, d=inverse(e, lam))
        _probe(keys)
        return keys


def _pick_exponent(lam: int, modulus_bits: int) -> Optional[int]:
    if modulus_bits >= 64:
        return DEFAULT_PUBLIC_EXPONENT
    # toy groups: smallest usable odd exponent
    for candidate in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if candidate < lam and GCD(candidate, lam) == 1:
            return candidate
    return None


def _probe(keys: DayKeyPair) -> None:
    probe = 2 if keys.n > 3 else 1
    if pow(pow(probe, keys.d, keys.n), keys.e, keys.n) != probe:
        raise InvalidArgument("키 검증 실패: e·d ≢ 1 (mod λ(N))")


def generate_day_keys(day_index: int, modulus_bits: int = DEFAULT_MODULUS_BITS,
                      randfunc: Optional[RandFunc] = None) -> DayKeyPair:
    """Generate a fresh per-day RSA key pair and public prefix.

    Prefix_t has ``modulus_bits - 104`` bits with its top bit cleared so the
    padded message stays below N. Seeded ``randfunc`` makes generation
    reproducible.
    """
    if modulus_bits < 16:
        raise InvalidArgument("모듈러스는 16비트 이상이어야 합니다")
    randfunc = randfunc or get_random_bytes

    while True:
        p = getPrime(modulus_bits // 2, randfunc=randfunc)
        q = getPrime(modulus_bits - modulus_bits // 2, randfunc=randfunc)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != modulus_bits:
            continue
        lam = (p - 1) * (q - 1) // GCD(p - 1, q - 1)
        e = _pick_exponent(lam, modulus_bits)
        if e is None or GCD(e, lam) != 1:
            continue
        break

    prefix_bits = max(0, modulus_bits - EPHID_BITS)
    prefix = 0
    if prefix_bits > 1:
        raw = bytes_to_long(randfunc((prefix_bits + 7) // 8))
        prefix = raw & ((1 << (prefix_bits - 1)) - 1)

    keys = DayKeyPair(day_index=day_index, e=e, n=n, prefix=prefix,
                      prefix_bits=prefix_bits, d=inverse(e, lam))
    _probe(keys)
    logger.info("day %d: %d-bit signing key generated", day_index, modulus_bits)
    return keys


# ---------------------------------------------------------------------------
# Blind signatures
# ---------------------------------------------------------------------------

def int_to_bytes(value: int, keys: DayKeyPair) -> bytes:
    """Fixed-width big-endian encoding at the modulus width"""
    return long_to_bytes(value, keys.width)


def bytes_to_int(data: bytes) -> int:
    return bytes_to_long(data)


def encode_message(ephid: bytes, keys: DayKeyPair) -> int:
    """Integer value of Prefix_t || EphID"""
    if len(ephid) != EPHID_LEN:
        raise InvalidArgument(f"EphID는 {EPHID_LEN}바이트여야 합니다 (입력: {len(ephid)}바이트)")
    message = (keys.prefix << EPHID_BITS) | bytes_to_long(ephid)
    if message >= keys.n:
        raise InvalidArgument("Prefix || EphID 값이 모듈러스보다 큽니다")
    return message


def _check_factor(rhat: int, keys: DayKeyPair) -> None:
    if not 0 < rhat < keys.n or GCD(rhat, keys.n) != 1:
        raise InvalidBlindingFactor("블라인딩 값이 N과 서로소가 아니거나 범위를 벗어났습니다")


def blind_int(message: int, rhat: int, keys: DayKeyPair) -> int:
    """message * rhat^e mod N"""
    _check_factor(rhat, keys)
    return (message * pow(rhat, keys.e, keys.n)) % keys.n


def blind_with_multiplier(message: int, multiplier: int, keys: DayKeyPair) -> int:
    """Blind with an already exponentiated multiplier r = rhat^e"""
    return (message * multiplier) % keys.n


def blind(ephid: bytes, rhat: int, keys: DayKeyPair) -> int:
    return blind_int(encode_message(ephid, keys), rhat, keys)


def sign_blinded(blinded: int, keys: DayKeyPair) -> int:
    if keys.d is None:
        raise InvalidArgument("서명 지수가 없는 공개 키로는 서명할 수 없습니다")
    if not 0 < blinded < keys.n:
        raise InvalidArgument("서명할 값이 (0, N) 범위를 벗어났습니다")
    return pow(blinded, keys.d, keys.n)


def unblind(sd_blinded: int, rhat: int, keys: DayKeyPair) -> int:
    _check_factor(rhat, keys)
    return (sd_blinded * inverse(rhat, keys.n)) % keys.n


def verify_int(message: int, signature: int, keys: DayKeyPair) -> bool:
    if not 0 <= signature < keys.n:
        return False
    return pow(signature, keys.e, keys.n) == message


def verify_signature(ephid: bytes, sd: int, keys: DayKeyPair) -> bool:
    try:
        message = encode_message(ephid, keys)
    except InvalidArgument:
        return False
    return verify_int(message, sd, keys)


def alternative_blinding_factor(message_1: int, message_2: int, rhat_1: int,
                                keys: DayKeyPair) -> int:
    """Multiplier r' with message_2 * r' == message_1 * rhat_1^e (mod N).

    The signer cannot tell which message a blinded value hides: every message
    has a matching factor for every blinded request.
    """
    return (message_1 * inverse(message_2, keys.n) * pow(rhat_1, keys.e, keys.n)) % keys.n


# ---------------------------------------------------------------------------
# Authenticators
# ---------------------------------------------------------------------------

def auth_tag(key: bytes, ephid: bytes) -> bytes:
    """First 13 bytes of HMAC-SHA256(k_i, EphID)"""
    return hmac.digest(key, ephid, "sha256")[:AUTH_TAG_LEN]


# ---------------------------------------------------------------------------
# Merkle trees
# ---------------------------------------------------------------------------

def leaf_hash(leaf: bytes) -> bytes:
    return sha256(_LEAF_PREFIX + leaf)


def node_hash(left: bytes, right: bytes) -> bytes:
    return sha256(_NODE_PREFIX + left + right)


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    siblings: Tuple[bytes, ...]
    root: bytes

    def pack(self) -> bytes:
        return (struct.pack(">IH", self.leaf_index, len(self.siblings))
                + b"".join(self.siblings) + self.root)

    @classmethod
    def unpack(cls, data: bytes, offset: int = 0) -> Tuple["MerkleProof", int]:
        """Decode from ``data`` at ``offset``; returns (proof, next offset)"""
        try:
            leaf_index, count = struct.unpack_from(">IH", data, offset)
        except struct.error as e:
            raise InvalidArgument(f"잘못된 Merkle 증명 형식: {e}")
        offset += 6
        end = offset + (count + 1) * HASH_LEN
        if end > len(data):
            raise InvalidArgument("Merkle 증명 데이터가 잘렸습니다")
        siblings = tuple(data[offset + i * HASH_LEN: offset + (i + 1) * HASH_LEN] for i in range(count))
        root = data[end - HASH_LEN:end]
        return cls(leaf_index=leaf_index, siblings=siblings, root=root), end


class MerkleTree:
    """Binary hash tree; odd-width layers duplicate their last node"""

    def __init__(self, leaves: Sequence[bytes]):
        if not leaves:
            raise InvalidArgument("Merkle 트리에는 최소 1개의 리프가 필요합니다")
        level = [leaf_hash(leaf) for leaf in leaves]
        self.levels: List[List[bytes]] = [level]
        while len(level) > 1:
            upper = []
            for i in range(0, len(level), 2):
                left = level[i]
                right = level[i + 1] if i + 1 < len(level) else left
                upper.append(node_hash(left, right))
            self.levels.append(upper)
            level = upper

    def __len__(self) -> int:
        return len(self.levels[0])

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    def prove(self, index: int) -> MerkleProof:
        if not 0 <= index < len(self):
            raise InvalidArgument(f"리프 인덱스 {index}가 범위를 벗어났습니다 (리프 {len(self)}개)")
        siblings = []
        position = index
        for level in self.levels[:-1]:
            sibling = position ^ 1
            siblings.append(level[sibling] if sibling < len(level) else level[position])
            position //= 2
        return MerkleProof(leaf_index=index, siblings=tuple(siblings), root=self.root)


def merkle_build(leaves: Sequence[bytes]) -> Tuple[bytes, MerkleTree]:
    tree = MerkleTree(leaves)
    return tree.root, tree


def merkle_prove(tree: MerkleTree, index: int) -> MerkleProof:
    return tree.prove(index)


def merkle_verify(proof: MerkleProof, leaf: bytes) -> bool:
    if proof.leaf_index < 0 or len(proof.root) != HASH_LEN:
        return False
    node = leaf_hash(leaf)
    position = proof.leaf_index
    for sibling in proof.siblings:
        if len(sibling) != HASH_LEN:
            return False
        node = node_hash(node, sibling) if position % 2 == 0 else node_hash(sibling, node)
        position //= 2
    return position == 0 and hmac.compare_digest(node, proof.root)
