"""Independent reference implementations used as test oracles.

Each of these takes a deliberately different route from the library code it
checks: the MUTF-8 reference leans on the stdlib UTF-8/UTF-16 codecs, the
checksum/digest references are textbook reimplementations, the feature
reference recomputes every metric straight from its definition, and the box
oracle works on an explicitly sorted list.
"""

from __future__ import annotations

import math
import struct

_LEAD_LEN = {}
for _b in range(0x01, 0x80):
    _LEAD_LEN[_b] = 1
for _b in range(0xC0, 0xE0):
    _LEAD_LEN[_b] = 2
for _b in range(0xE0, 0xF0):
    _LEAD_LEN[_b] = 3


def reference_decode_mutf8(data) -> str | None:
    """Decode MUTF-8 via the stdlib codecs; None on any malformed input.

    Each 1-3 byte chunk is validated by Python's strict UTF-8 decoder
    (surrogatepass admits the surrogate range), and surrogate pairing is
    delegated to the UTF-16 decoder.
    """
    units = []
    i = 0
    n = len(data)
    while i < n:
        length = _LEAD_LEN.get(data[i])
        if length is None or i + length > n:
            return None
        chunk = bytes(data[i:i + length])
        if chunk == b"\xc0\x80":
            units.append(0)
        else:
            try:
                decoded = chunk.decode("utf-8", "surrogatepass")
            except UnicodeDecodeError:
                return None
            if len(decoded) != 1:
                return None
            units.append(ord(decoded))
        i += length
    try:
        return b"".join(struct.pack("<H", u) for u in units).decode("utf-16-le")
    except UnicodeDecodeError:
        return None


def reference_adler32(data: bytes) -> int:
    a, b = 1, 0
    for byte in data:
        a = (a + byte) % 65521
        b = (b + a) % 65521
    return (b << 16) | a


def reference_sha1(data: bytes) -> bytes:
    h = [0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0]
    ml = len(data) * 8
    padded = data + b"\x80" + b"\x00" * ((55 - len(data)) % 64) + ml.to_bytes(8, "big")

    def rol(x: int, k: int) -> int:
        return ((x << k) | (x >> (32 - k))) & 0xFFFFFFFF

    for start in range(0, len(padded), 64):
        w = list(struct.unpack(">16I", padded[start:start + 64]))
        for i in range(16, 80):
            w.append(rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1))
        a, b, c, d, e = h
        for i in range(80):
            if i < 20:
                f, k = (b & c) | (~b & d), 0x5A827999
            elif i < 40:
                f, k = b ^ c ^ d, 0x6ED9EBA1
            elif i < 60:
                f, k = (b & c) | (b & d) | (c & d), 0x8F1BBCDC
            else:
                f, k = b ^ c ^ d, 0xCA62C1D6
            a, b, c, d, e = (rol(a, 5) + f + e + k + w[i]) & 0xFFFFFFFF, a, rol(b, 30), c, d
        h = [(x + y) & 0xFFFFFFFF for x, y in zip(h, (a, b, c, d, e))]
    return b"".join(x.to_bytes(4, "big") for x in h)


def reference_utf8_len(s: str) -> int:
    """UTF-8 byte length from code-point ranges, no encoder involved."""
    total = 0
    for ch in s:
        cp = ord(ch)
        if cp < 0x80:
            total += 1
        elif cp < 0x800:
            total += 2
        elif cp < 0x10000:
            total += 3
        else:
            total += 4
    return total


def reference_entropy(s: str) -> float:
    if len(s) <= 1:
        return 0.0
    probs = [s.count(c) / len(s) for c in set(s)]
    return -sum(p * math.log2(p) for p in probs)


def reference_feature_means(strings) -> tuple[float, ...]:
    """(entropy, wordsize, length, eq, dash, slash, plus, repeat) means."""
    n = len(strings)
    if n == 0:
        return (0.0,) * 8
    cols = [
        [reference_entropy(s) for s in strings],
        [reference_utf8_len(s) for s in strings],
        [len(s) for s in strings],
        [sum(1 for c in s if c == "=") for s in strings],
        [sum(1 for c in s if c == "-") for s in strings],
        [sum(1 for c in s if c == "/") for s in strings],
        [sum(1 for c in s if c == "+") for s in strings],
        [len(s) - len(set(s)) for s in strings],
    ]
    return tuple(sum(col) / n for col in cols)


def reference_box_stats(values):
    """Sort-based box statistics with explicit type-7 interpolation."""
    v = sorted(values)
    n = len(v)

    def quantile(p: float) -> float:
        pos = p * (n - 1)
        lo = math.floor(pos)
        hi = math.ceil(pos)
        return v[lo] + (pos - lo) * (v[hi] - v[lo])

    q1, median, q3 = quantile(0.25), quantile(0.5), quantile(0.75)
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = [x for x in v if lo_fence <= x <= hi_fence]
    outliers = [x for x in v if x < lo_fence or x > hi_fence]
    return {
        "mean": sum(v) / n,
        "median": median,
        "q1": q1,
        "q3": q3,
        "whisker_lo": min(inside),
        "whisker_hi": max(inside),
        "outliers": sorted(outliers),
    }
