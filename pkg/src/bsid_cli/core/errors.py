"""Exception hierarchy for the BlindSignedID protocol modules"""


class BsidError(Exception):
    """Base error. `code` is the stable error kind used on the wire and in logs."""

    code = "error"
    wire_code = 0xFF

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class InvalidArgument(BsidError, ValueError):
    code = "invalid-argument"
    wire_code = 0x01


class InvalidBlindingFactor(BsidError):
    code = "invalid-blinding-factor"
    wire_code = 0x02


class AlreadyRegistered(BsidError):
    code = "already-registered"
    wire_code = 0x10


class Blocked(BsidError):
    code = "blocked"
    wire_code = 0x11


class MalformedRequest(BsidError):
    code = "malformed-request"
    wire_code = 0x12


class MalformedReveal(BsidError):
    code = "malformed-reveal"
    wire_code = 0x13


class AuditFailed(BsidError):
    code = "audit-failed"
    wire_code = 0x14


class IdentityRejected(BsidError):
    code = "identity-rejected"
    wire_code = 0x15


class SignerMisbehavior(BsidError):
    code = "signer-misbehavior"
    wire_code = 0x16


class NotYetReleased(BsidError):
    code = "not-yet"
    wire_code = 0x03


class InvalidCredential(BsidError):
    code = "invalid-credential"
    wire_code = 0x20


class AlreadyIssued(BsidError):
    code = "already-issued"
    wire_code = 0x21


class InvalidInterval(BsidError):
    code = "invalid-interval"
    wire_code = 0x22


class InvalidBeacon(BsidError):
    code = "invalid-beacon"
    wire_code = 0x30


class MalformedBeacon(BsidError):
    code = "malformed"
    wire_code = 0x31


class UnsupportedVersion(BsidError):
    code = "unsupported-version"
    wire_code = 0x32


class InvalidKey(BsidError):
    code = "invalid-key"
    wire_code = 0x40


class StoreFormatError(BsidError):
    code = "store-format"
    wire_code = 0x41


class NoCodeAvailable(BsidError):
    code = "no-code-available"
    wire_code = 0x50


_BY_WIRE_CODE = {
    cls.wire_code: cls
    for cls in (
        InvalidArgument, InvalidBlindingFactor, AlreadyRegistered, Blocked,
        MalformedRequest, MalformedReveal, AuditFailed, IdentityRejected,
        SignerMisbehavior, NotYetReleased, InvalidCredential, AlreadyIssued,
        InvalidInterval, InvalidBeacon, MalformedBeacon, UnsupportedVersion,
        InvalidKey, StoreFormatError, NoCodeAvailable,
    )
}


def error_from_wire(wire_code: int, message: str = "") -> BsidError:
    """Rebuild an exception from a u8 error code received over the wire"""
    cls = _BY_WIRE_CODE.get(wire_code, BsidError)
    return cls(message)
