"""Canonical byte encoding helpers shared by key/ciphertext types and the wire.

Conventions: integers big-endian; variable-length byte strings carry a
u32 length prefix; strings are UTF-8 with the same prefix.  Readers fail
with DecodeError on truncation, oversized declared lengths, or (via
``finish``) trailing garbage.
"""

from __future__ import annotations

from .errors import DecodeError
from .group import SCALAR_BYTES, SOURCE_BYTES, TARGET_BYTES, Scalar, SourceElement, TargetElement

MAX_CHUNK = 1 << 26  # 64 MiB sanity cap on any one length-prefixed field


class Writer:
    __slots__ = ("_parts",)

    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, v: int) -> "Writer":
        self._parts.append(v.to_bytes(1, "big"))
        return self

    def u16(self, v: int) -> "Writer":
        self._parts.append(v.to_bytes(2, "big"))
        return self

    def u32(self, v: int) -> "Writer":
        self._parts.append(v.to_bytes(4, "big"))
        return self

    def u64(self, v: int) -> "Writer":
        self._parts.append(v.to_bytes(8, "big"))
        return self

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(b)
        return self

    def blob(self, b: bytes) -> "Writer":
        self.u32(len(b))
        self._parts.append(b)
        return self

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def scalar(self, s: Scalar) -> "Writer":
        self._parts.append(s.to_bytes())
        return self

    def source(self, e: SourceElement) -> "Writer":
        self._parts.append(e.to_bytes())
        return self

    def target(self, e: TargetElement) -> "Writer":
        self._parts.append(e.to_bytes())
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    __slots__ = ("_data", "_pos")

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self._take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        n = self.u32()
        if n > MAX_CHUNK:
            raise DecodeError("declared length exceeds sanity cap")
        return self._take(n)

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"bad utf-8: {exc}") from None

    def scalar(self) -> Scalar:
        return Scalar.from_bytes(self._take(SCALAR_BYTES))

    def source(self) -> SourceElement:
        return SourceElement.from_bytes(self._take(SOURCE_BYTES))

    def target(self) -> TargetElement:
        return TargetElement.from_bytes(self._take(TARGET_BYTES))

    def remaining(self) -> int:
        return len(self._data) - self._pos

    def finish(self) -> None:
        if self._pos != len(self._data):
            raise DecodeError(f"{len(self._data) - self._pos} trailing bytes")
