"""Wire format: framed, versioned, length-prefixed binary messages.

Every request and reply crossing a service boundary — in-process or TCP —
is one frame:

    4-byte big-endian length | version (1 byte) | kind (1 byte) | body

The length covers version, kind and body.  Bodies are canonical binary
built with the same Writer/Reader used for at-rest serialization, so a
payload stored and a payload transmitted are byte-identical.

Error replies carry a stable numeric code that maps back onto the
library's exception taxonomy, so a client raises the same exception type
the server-side operation would have raised locally.
"""

from dataclasses import dataclass

from . import errors
from .encoding import Reader, Writer
from .errors import ProtocolError

VERSION = 1

# Longest legal frame; anything bigger is a protocol violation, not data.
MAX_FRAME = 1 << 26

# request kinds
GET_PUBLIC_KEY = 0x01
ISSUE_KEYS = 0x02
STORE_CT = 0x03
FETCH_CT = 0x04
REQUEST_DEC = 0x05
REVOKE = 0x06
REGISTER_KEY = 0x07

# reply kinds
REPLY_OK = 0x40
REPLY_ERR = 0x41

KINDS = frozenset(
    [
        GET_PUBLIC_KEY,
        ISSUE_KEYS,
        STORE_CT,
        FETCH_CT,
        REQUEST_DEC,
        REVOKE,
        REGISTER_KEY,
        REPLY_OK,
        REPLY_ERR,
    ]
)

# stable error codes for the wire; unlisted errors travel as code 1
ERROR_CODES: dict[int, type] = {
    1: errors.VfacError,
    2: errors.ProtocolError,
    3: errors.NotFound,
    4: errors.NotSatisfied,
    5: errors.UnknownUser,
    6: errors.VerificationFailed,
    7: errors.WrongAuthority,
    8: errors.IssuanceAborted,
    9: errors.DuplicateAttribute,
    10: errors.InvalidInput,
    11: errors.InvalidKey,
    12: errors.PoolEmpty,
    13: errors.UnknownAuthority,
    14: errors.MissingAttributeKey,
    15: errors.DecodeError,
    16: errors.InvalidElement,
    17: errors.InvalidPolicy,
}

_CODE_FOR = {cls: code for code, cls in ERROR_CODES.items()}


def code_for_error(exc: Exception) -> int:
    return _CODE_FOR.get(type(exc), 1)


def error_for_code(code: int, message: str) -> Exception:
    return ERROR_CODES.get(code, errors.VfacError)(message)


@dataclass(frozen=True)
class WireMessage:
    version: int
    kind: int
    body: bytes

    @staticmethod
    def request(kind: int, body: bytes = b"") -> "WireMessage":
        return WireMessage(version=VERSION, kind=kind, body=body)

    @staticmethod
    def ok(body: bytes = b"") -> "WireMessage":
        return WireMessage(version=VERSION, kind=REPLY_OK, body=body)

    @staticmethod
    def error(exc: Exception) -> "WireMessage":
        body = Writer().u8(code_for_error(exc)).text(str(exc)).getvalue()
        return WireMessage(version=VERSION, kind=REPLY_ERR, body=body)

    def raise_if_error(self) -> "WireMessage":
        """Pass OK replies through; re-raise error replies as exceptions."""
        if self.kind != REPLY_ERR:
            return self
        try:
            r = Reader(self.body)
            code = r.u8()
            message = r.text()
            r.finish()
        except errors.DecodeError:
            raise ProtocolError("malformed error reply") from None
        raise error_for_code(code, message)


def encode_frame(msg: WireMessage) -> bytes:
    payload = bytes([msg.version, msg.kind]) + msg.body
    if len(payload) > MAX_FRAME:
        raise ProtocolError(f"frame of {len(payload)} bytes exceeds the maximum")
    return len(payload).to_bytes(4, "big") + payload


def decode_frame(data: bytes) -> WireMessage:
    """Decode one complete frame; reject anything malformed."""
    if len(data) < 4:
        raise ProtocolError("frame shorter than its length prefix")
    length = int.from_bytes(data[:4], "big")
    if length > MAX_FRAME:
        raise ProtocolError(f"declared frame length {length} exceeds the maximum")
    if len(data) != 4 + length:
        raise ProtocolError("frame length prefix disagrees with payload size")
    if length < 2:
        raise ProtocolError("frame too short for version and kind")
    version, kind = data[4], data[5]
    if version != VERSION:
        raise ProtocolError(f"unsupported wire version {version}")
    if kind not in KINDS:
        raise ProtocolError(f"unknown message kind 0x{kind:02x}")
    return WireMessage(version=version, kind=kind, body=data[6:])


def read_frame(recv) -> WireMessage:
    """Read one frame from a byte-stream callable recv(n) -> bytes.

    recv must return at most n bytes and b"" at end of stream; a stream
    ending mid-frame is a protocol violation.
    """
    header = _read_exact(recv, 4)
    length = int.from_bytes(header, "big")
    if length > MAX_FRAME:
        raise ProtocolError(f"declared frame length {length} exceeds the maximum")
    return decode_frame(header + _read_exact(recv, length))


def _read_exact(recv, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = recv(n - got)
        if not chunk:
            raise ProtocolError("stream ended mid-frame")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)
