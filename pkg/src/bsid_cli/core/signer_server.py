"""TCP transport for the registration signer (u32 length-prefixed frames)"""

import logging
import socket
import socketserver
import struct
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .crypto_core import DayKeyPair
from .errors import BsidError, MalformedRequest
from .registration import (
    Challenge, RegistrationRequest, RevealPackage, Signer, decode_challenge, decode_request,
    decode_response, decode_reveal, encode_challenge, encode_error, encode_request,
    encode_response, encode_reveal,
)
from .tesla_service import Clock, SystemClock

logger = logging.getLogger(__name__)

MAX_FRAME = 64 * 1024 * 1024
_FRAME_HEADER = struct.Struct(">I")


def _recv_exact(sock: socket.socket, size: int) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        chunk = sock.recv(min(remaining, 1 << 16))
        if not chunk:
            raise ConnectionError("연결이 종료되었습니다")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(_FRAME_HEADER.pack(len(payload)) + payload)


def recv_frame(sock: socket.socket) -> bytes:
    (length,) = _FRAME_HEADER.unpack(_recv_exact(sock, _FRAME_HEADER.size))
    if length > MAX_FRAME:
        raise MalformedRequest(f"프레임이 너무 큽니다: {length}바이트")
    return _recv_exact(sock, length)


class _RegistrationHandler(socketserver.BaseRequestHandler):
    """One registration session per connection: request, challenge, reveal, response"""

    def handle(self):
        signer: Signer = self.server.signer
        clock: Clock = self.server.clock
        try:
            request = decode_request(recv_frame(self.request), lambda day: signer.public_keys(day).width)
            session = signer.signer_receive(request, clock.now())
            send_frame(self.request, encode_challenge(session.challenge))
            reveal = decode_reveal(recv_frame(self.request))
            signed = signer.signer_audit_and_sign(session, reveal, clock.now())
            send_frame(self.request, encode_response(signed, signer.public_keys(request.day_index)))
        except BsidError as e:
            logger.warning("registration from %s refused: %s", self.client_address[0], e.code)
            send_frame(self.request, encode_error(e))
        except (ConnectionError, socket.timeout) as e:
            logger.warning("registration connection from %s dropped: %s", self.client_address[0], e)


class SignerServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: Tuple[str, int], signer: Signer, clock: Optional[Clock] = None):
        self.signer = signer
        self.clock = clock or SystemClock()
        super().__init__(address, _RegistrationHandler)


@dataclass
class RemoteSession:
    request: RegistrationRequest
    challenge: Challenge
    sock: socket.socket


class RemoteSigner:
    """Client stub with the same two-step interface as ``Signer``"""

    def __init__(self, host: str, port: int, keys: DayKeyPair, timeout: float = 60.0):
        self.address = (host, port)
        self.keys = keys.public()
        self.timeout = timeout

    def signer_receive(self, request: RegistrationRequest, now: float) -> RemoteSession:
        sock = socket.create_connection(self.address, timeout=self.timeout)
        try:
            send_frame(sock, encode_request(request, self.keys.width))
            challenge = decode_challenge(recv_frame(sock), request.m)
        except Exception:
            sock.close()
            raise
        return RemoteSession(request=request, challenge=challenge, sock=sock)

    def signer_audit_and_sign(self, session: RemoteSession, reveal: RevealPackage) -> List[int]:
        try:
            send_frame(session.sock, encode_reveal(reveal))
            return decode_response(recv_frame(session.sock), session.request.n, self.keys.width)
        finally:
            session.sock.close()
