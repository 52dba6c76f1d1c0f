"""Binary framing shared by every persisted type.

Layout: ``b"CPL+"`` | version 0x01 | type tag | fields | CRC-32 of all
preceding bytes (4 bytes, big-endian).  Integers are big-endian; strings and
byte blobs carry a u32 length; lists a u32 count; maps are written sorted by
key bytes.
"""
from __future__ import annotations

import struct
import zlib

from .errors import FormatError

MAGIC = b"CPL+"
FORMAT_VERSION = 1

TAG_PP = 0x01
TAG_MSK = 0x02
TAG_SK = 0x03
TAG_CT = 0x04
TAG_RL = 0x05
TAG_TABLE = 0x06
TAG_ENVELOPE = 0x07
TAG_REPORT = 0x08
TAG_BUNDLE = 0x09

_HEADER = len(MAGIC) + 2
_CRC = 4


class Writer:
    def __init__(self, tag: int):
        self.tag = tag
        self.parts = [MAGIC, bytes([FORMAT_VERSION, tag])]

    def u8(self, v: int):
        self.parts.append(struct.pack(">B", v))
        return self

    def u32(self, v: int):
        self.parts.append(struct.pack(">I", v))
        return self

    def raw(self, b: bytes):
        self.parts.append(b)
        return self

    def blob(self, b: bytes):
        self.u32(len(b))
        self.parts.append(b)
        return self

    def str(self, s: str):
        return self.blob(s.encode("utf-8"))

    def elem(self, x):
        self.parts.append(x.encode())
        return self

    def strs(self, items):
        self.u32(len(items))
        for s in items:
            self.str(s)
        return self

    def elems(self, items):
        self.u32(len(items))
        for x in items:
            self.elem(x)
        return self

    def finish(self) -> bytes:
        body = b"".join(self.parts)
        return body + struct.pack(">I", zlib.crc32(body))


class Reader:
    def __init__(self, data: bytes, tag: int):
        if not isinstance(data, (bytes, bytearray, memoryview)):
            raise FormatError("expected bytes")
        data = bytes(data)
        if len(data) < _HEADER + _CRC:
            raise FormatError("truncated object")
        if data[:4] != MAGIC:
            raise FormatError("bad magic")
        if data[4] != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {data[4]}")
        if data[5] != tag:
            raise FormatError(f"type tag {data[5]:#x}, expected {tag:#x}")
        (crc,) = struct.unpack(">I", data[-_CRC:])
        if zlib.crc32(data[:-_CRC]) != crc:
            raise FormatError("checksum mismatch")
        self.data = data[:-_CRC]
        self.pos = _HEADER

    def _take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise FormatError("truncated field")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def str(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid UTF-8: {exc}") from None

    def elem(self, decode):
        return decode(self._take(8))

    def count(self) -> int:
        n = self.u32()
        if n > len(self.data) - self.pos:
            raise FormatError("implausible item count")
        return n

    def strs(self) -> list:
        return [self.str() for _ in range(self.count())]

    def elems(self, decode) -> list:
        return [self.elem(decode) for _ in range(self.count())]

    def done(self):
        if self.pos != len(self.data):
            raise FormatError("trailing bytes after object")


def sorted_by_key_bytes(keys):
    return sorted(keys, key=lambda k: k.encode("utf-8") if isinstance(k, str) else k)


def peek_tag(data: bytes) -> int:
    if len(data) < _HEADER or data[:4] != MAGIC:
        raise FormatError("bad magic")
    return data[5]
