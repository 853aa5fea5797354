"""Modified UTF-8 codec for DEX string data.

MUTF-8 differs from UTF-8 in three ways: U+0000 is stored as the overlong
pair 0xC0 0x80 (so a raw 0x00 never occurs inside string data), supplementary
code points are stored as a CESU-8 style surrogate pair of two 3-byte
sequences, and 4-byte sequences do not exist.
"""

from __future__ import annotations

from .errors import DecodeError


def decode_mutf8(data: bytes) -> str:
    """Decode one string_data payload (length prefix and terminator excluded).

    Raises DecodeError on a raw 0x00 byte, malformed or missing continuation
    bytes, overlong encodings other than 0xC0 0x80, 4-byte lead bytes, and
    unpaired surrogates.
    """
    units = _decode_units(data)
    out: list[str] = []
    i = 0
    n = len(units)
    while i < n:
        u = units[i]
        if 0xD800 <= u <= 0xDBFF:
            if i + 1 < n and 0xDC00 <= units[i + 1] <= 0xDFFF:
                out.append(chr(0x10000 + ((u - 0xD800) << 10) + (units[i + 1] - 0xDC00)))
                i += 2
                continue
            raise DecodeError(f"dangling high surrogate 0x{u:04x} at unit {i}")
        if 0xDC00 <= u <= 0xDFFF:
            raise DecodeError(f"lone low surrogate 0x{u:04x} at unit {i}")
        out.append(chr(u))
        i += 1
    return "".join(out)


def _decode_units(data: bytes) -> list[int]:
    """Decode the byte stream into UTF-16 code units."""
    units: list[int] = []
    i = 0
    n = len(data)
    while i < n:
        b1 = data[i]
        if b1 == 0x00:
            raise DecodeError(f"raw null byte at offset {i}")
        if b1 < 0x80:
            units.append(b1)
            i += 1
        elif b1 >> 5 == 0b110:
            if i + 1 >= n:
                raise DecodeError(f"truncated 2-byte sequence at offset {i}")
            b2 = data[i + 1]
            if b2 >> 6 != 0b10:
                raise DecodeError(f"bad continuation byte 0x{b2:02x} at offset {i + 1}")
            u = (b1 & 0x1F) << 6 | (b2 & 0x3F)
            # 0xC0 0x80 is the sanctioned overlong encoding of U+0000.
            if u < 0x80 and not (b1 == 0xC0 and b2 == 0x80):
                raise DecodeError(f"overlong 2-byte sequence at offset {i}")
            units.append(u)
            i += 2
        elif b1 >> 4 == 0b1110:
            if i + 2 >= n:
                raise DecodeError(f"truncated 3-byte sequence at offset {i}")
            b2, b3 = data[i + 1], data[i + 2]
            if b2 >> 6 != 0b10:
                raise DecodeError(f"bad continuation byte 0x{b2:02x} at offset {i + 1}")
            if b3 >> 6 != 0b10:
                raise DecodeError(f"bad continuation byte 0x{b3:02x} at offset {i + 2}")
            u = (b1 & 0x0F) << 12 | (b2 & 0x3F) << 6 | (b3 & 0x3F)
            if u < 0x800:
                raise DecodeError(f"overlong 3-byte sequence at offset {i}")
            units.append(u)
            i += 3
        else:
            raise DecodeError(f"invalid lead byte 0x{b1:02x} at offset {i}")
    return units


def encode_mutf8(text: str) -> bytes:
    """Encode text as MUTF-8 (inverse of decode_mutf8 for well-formed text)."""
    out = bytearray()
    for ch in text:
        cp = ord(ch)
        if cp >= 0x10000:
            cp -= 0x10000
            _encode_unit(out, 0xD800 | (cp >> 10))
            _encode_unit(out, 0xDC00 | (cp & 0x3FF))
        else:
            _encode_unit(out, cp)
    return bytes(out)


def _encode_unit(out: bytearray, u: int) -> None:
    if u == 0x00:
        out += b"\xc0\x80"
    elif u < 0x80:
        out.append(u)
    elif u < 0x800:
        out.append(0xC0 | (u >> 6))
        out.append(0x80 | (u & 0x3F))
    else:
        out.append(0xE0 | (u >> 12))
        out.append(0x80 | ((u >> 6) & 0x3F))
        out.append(0x80 | (u & 0x3F))


def utf16_length(text: str) -> int:
    """Length of text in UTF-16 code units, the unit of dex string lengths."""
    return sum(2 if ord(ch) >= 0x10000 else 1 for ch in text)
