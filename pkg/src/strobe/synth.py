"""Synthetic DEX/APK corpus generation.

Contains the minimal DEX writer (the round-trip counterpart of the parser),
the XOR+base64 string scrambler used to simulate string encryption, and a
seeded generator that emits whole labeled corpora of APK files. Families get
stable random "fingerprints" (string length, alphabet size, punctuation
rates), which is the nuisance signal a leaky evaluation can memorize.
"""

from __future__ import annotations

import base64
import csv
import hashlib
import json
import math
import struct
import zipfile
import zlib
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from .errors import EmptyIdentifiers, InvalidConfig, SpecTooLarge
from .mutf8 import encode_mutf8, utf16_length

NO_INDEX = 0xFFFFFFFF

TYPE_HEADER_ITEM = 0x0000
TYPE_STRING_ID_ITEM = 0x0001
TYPE_TYPE_ID_ITEM = 0x0002
TYPE_PROTO_ID_ITEM = 0x0003
TYPE_FIELD_ID_ITEM = 0x0004
TYPE_METHOD_ID_ITEM = 0x0005
TYPE_CLASS_DEF_ITEM = 0x0006
TYPE_MAP_LIST = 0x1000
TYPE_STRING_DATA_ITEM = 0x2002

WIRING_ROLES = ("type", "method", "field", "source_file")

SCHEME_BASE64_XOR = "BASE64_XOR"
SCHEME_STRIP_ALL = "STRIP_ALL"


@dataclass(frozen=True)
class DexSpec:
    """Blueprint for one dex: which strings exist and how identifiers wire up.

    wiring maps an identifier string to one of "type", "method", "field" or
    "source_file"; identifiers left unmapped (or all of them when wiring is
    None) are assigned by shape: type-descriptor lookalikes become type
    descriptors, the rest alternate between method and field names.
    """

    identifier_strings: tuple[str, ...]
    non_identifier_strings: tuple[str, ...]
    wiring: dict[str, str] | None = None

    def validate(self) -> None:
        if not self.identifier_strings:
            raise EmptyIdentifiers("a dex needs at least one identifier string")
        ids = set(self.identifier_strings)
        payload = set(self.non_identifier_strings)
        if len(ids) != len(self.identifier_strings) or len(payload) != len(self.non_identifier_strings):
            raise ValueError("DexSpec string lists must be deduplicated")
        if ids & payload:
            raise ValueError(f"strings cannot be both identifier and payload: {sorted(ids & payload)[:3]}")
        if self.wiring:
            for name, role in self.wiring.items():
                if name not in ids:
                    raise ValueError(f"wiring references unknown identifier {name!r}")
                if role not in WIRING_ROLES:
                    raise ValueError(f"unknown wiring role {role!r}")


def _looks_like_type_descriptor(s: str) -> bool:
    core = s.lstrip("[")
    return core in "VZBSCIJFD" and len(core) == 1 or (
        core.startswith("L") and core.endswith(";") and len(core) > 2
    )


def _resolve_wiring(spec: DexSpec) -> dict[str, list[str]]:
    roles: dict[str, list[str]] = {r: [] for r in WIRING_ROLES}
    wiring = spec.wiring or {}
    flip = 0
    for s in spec.identifier_strings:
        role = wiring.get(s)
        if role is None:
            if _looks_like_type_descriptor(s):
                role = "type"
            else:
                role = "method" if flip % 2 == 0 else "field"
                flip += 1
        roles[role].append(s)
    if not roles["type"]:
        # A dex needs at least one type; promote the first identifier.
        for role in ("method", "field", "source_file"):
            if roles[role]:
                roles["type"].append(roles[role].pop(0))
                break
    return roles


def _utf16_sort_key(text: str) -> bytes:
    return text.encode("utf-16-be", "surrogatepass")


def _uleb128(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def build_dex(spec: DexSpec) -> bytes:
    """Emit a minimal structurally valid dex for the given string blueprint."""
    spec.validate()

    all_strings = sorted(
        set(spec.identifier_strings) | set(spec.non_identifier_strings),
        key=_utf16_sort_key,
    )
    if len(all_strings) > 0xFFFF:
        raise SpecTooLarge(f"{len(all_strings)} strings exceed the writer's 16-bit limits")
    sid = {s: i for i, s in enumerate(all_strings)}

    roles = _resolve_wiring(spec)
    type_list = sorted(roles["type"], key=lambda s: sid[s])
    if len(type_list) > 0xFFFF:
        raise SpecTooLarge("too many type descriptors")
    method_names = sorted(roles["method"], key=lambda s: sid[s])
    field_names = sorted(roles["field"], key=lambda s: sid[s])
    source_files = roles["source_file"]

    n_str, n_type = len(all_strings), len(type_list)
    n_proto = 1 if method_names else 0
    n_field, n_method = len(field_names), len(method_names)
    n_class = max(1, len(source_files))

    off = 0x70
    string_ids_off = off
    off += 4 * n_str
    type_ids_off = off
    off += 4 * n_type
    proto_ids_off = off if n_proto else 0
    off += 12 * n_proto
    field_ids_off = off if n_field else 0
    off += 8 * n_field
    method_ids_off = off if n_method else 0
    off += 8 * n_method
    class_defs_off = off
    off += 32 * n_class
    data_off = off

    string_data = bytearray()
    string_offsets = []
    for s in all_strings:
        string_offsets.append(data_off + len(string_data))
        string_data += _uleb128(utf16_length(s)) + encode_mutf8(s) + b"\x00"
    while (data_off + len(string_data)) % 4:
        string_data.append(0)
    map_off = data_off + len(string_data)

    map_items = [
        (TYPE_HEADER_ITEM, 1, 0),
        (TYPE_STRING_ID_ITEM, n_str, string_ids_off),
        (TYPE_TYPE_ID_ITEM, n_type, type_ids_off),
    ]
    if n_proto:
        map_items.append((TYPE_PROTO_ID_ITEM, n_proto, proto_ids_off))
    if n_field:
        map_items.append((TYPE_FIELD_ID_ITEM, n_field, field_ids_off))
    if n_method:
        map_items.append((TYPE_METHOD_ID_ITEM, n_method, method_ids_off))
    map_items.append((TYPE_CLASS_DEF_ITEM, n_class, class_defs_off))
    map_items.append((TYPE_STRING_DATA_ITEM, n_str, string_offsets[0] if n_str else data_off))
    map_items.append((TYPE_MAP_LIST, 1, map_off))

    file_size = map_off + 4 + 12 * len(map_items)
    data_size = file_size - data_off

    buf = bytearray(file_size)
    buf[0:8] = b"dex\n035\x00"
    struct.pack_into("<I", buf, 32, file_size)
    struct.pack_into("<I", buf, 36, 0x70)
    struct.pack_into("<I", buf, 40, 0x12345678)
    struct.pack_into("<II", buf, 44, 0, 0)  # link
    struct.pack_into("<I", buf, 52, map_off)
    struct.pack_into("<II", buf, 56, n_str, string_ids_off)
    struct.pack_into("<II", buf, 64, n_type, type_ids_off)
    struct.pack_into("<II", buf, 72, n_proto, proto_ids_off)
    struct.pack_into("<II", buf, 80, n_field, field_ids_off)
    struct.pack_into("<II", buf, 88, n_method, method_ids_off)
    struct.pack_into("<II", buf, 96, n_class, class_defs_off)
    struct.pack_into("<II", buf, 104, data_size, data_off)

    for i, s_off in enumerate(string_offsets):
        struct.pack_into("<I", buf, string_ids_off + 4 * i, s_off)
    for i, s in enumerate(type_list):
        struct.pack_into("<I", buf, type_ids_off + 4 * i, sid[s])
    if n_proto:
        # Reuse the first type descriptor string as the shorty; structurally
        # valid and keeps the string set exactly as specified.
        struct.pack_into("<III", buf, proto_ids_off, sid[type_list[0]], 0, 0)
    for i, s in enumerate(field_names):
        struct.pack_into("<HHI", buf, field_ids_off + 8 * i, 0, 0, sid[s])
    for i, s in enumerate(method_names):
        struct.pack_into("<HHI", buf, method_ids_off + 8 * i, 0, 0, sid[s])
    for i in range(n_class):
        sf_idx = sid[source_files[i]] if i < len(source_files) else NO_INDEX
        struct.pack_into(
            "<8I", buf, class_defs_off + 32 * i,
            0, 0x1, NO_INDEX, 0, sf_idx, 0, 0, 0,
        )

    buf[data_off:map_off] = string_data
    struct.pack_into("<I", buf, map_off, len(map_items))
    for i, (item_type, count, item_off) in enumerate(map_items):
        struct.pack_into("<HHII", buf, map_off + 4 + 12 * i, item_type, 0, count, item_off)

    buf[12:32] = hashlib.sha1(buf[32:]).digest()
    struct.pack_into("<I", buf, 8, zlib.adler32(bytes(buf[12:])))
    return bytes(buf)


def encrypt_string(s: str, key: int) -> str:
    """XOR the UTF-8 bytes of s with a single-byte key, then base64."""
    raw = bytes(b ^ (key & 0xFF) for b in s.encode("utf-8"))
    return base64.b64encode(raw).decode("ascii")


# --------------------------------------------------------------------------
# Corpus generation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    n_families: int = 20
    samples_per_family: tuple[int, int] = (10, 200)
    skew: float = 1.0
    se_family_fraction: float = 0.5
    mixed_family_fraction: float = 0.0
    fingerprint_strength: float = 1.0
    se_string_fraction: float = 0.1
    strings_per_app: tuple[int, int] = (20, 60)
    identifiers_per_app: tuple[int, int] = (8, 20)
    scheme: str = SCHEME_BASE64_XOR
    seed: int = 42

    def validate(self) -> None:
        if self.n_families < 2:
            raise InvalidConfig("need at least 2 families")
        for name in ("samples_per_family", "strings_per_app", "identifiers_per_app"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise InvalidConfig(f"{name} must satisfy 0 <= min <= max, got ({lo}, {hi})")
        if self.samples_per_family[0] < 1:
            raise InvalidConfig("families need at least one sample")
        if self.identifiers_per_app[0] < 1:
            raise InvalidConfig("apps need at least one identifier per dex")
        if self.skew < 0:
            raise InvalidConfig("skew must be >= 0")
        for name in ("se_family_fraction", "mixed_family_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if not 0.0 < self.se_string_fraction <= 1.0:
            raise InvalidConfig("se_string_fraction must lie in (0, 1]")
        if self.fingerprint_strength < 0:
            raise InvalidConfig("fingerprint_strength must be >= 0")
        if self.scheme not in (SCHEME_BASE64_XOR, SCHEME_STRIP_ALL):
            raise InvalidConfig(f"unknown scheme {self.scheme!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "SynthConfig":
        kwargs = dict(obj)
        for name in ("samples_per_family", "strings_per_app", "identifiers_per_app"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "SynthConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def confounded_preset() -> SynthConfig:
    """Frozen corpus used by the leakage experiments: skewed pure-label
    families with strong fingerprints and a weak encryption signal."""
    return SynthConfig(
        n_families=71,
        samples_per_family=(4, 2000),
        skew=1.5,
        se_family_fraction=0.5,
        mixed_family_fraction=0.15,
        fingerprint_strength=1.4,
        se_string_fraction=0.06,
        strings_per_app=(8, 18),
        identifiers_per_app=(8, 20),
        scheme=SCHEME_BASE64_XOR,
        seed=20260810,
    )


def control_preset() -> SynthConfig:
    """Control corpus: no family fingerprints, nearly everything encrypted."""
    return SynthConfig(
        n_families=20,
        samples_per_family=(60, 60),
        skew=0.0,
        se_family_fraction=0.5,
        mixed_family_fraction=0.15,
        fingerprint_strength=0.0,
        se_string_fraction=0.9,
        strings_per_app=(30, 70),
        identifiers_per_app=(8, 20),
        scheme=SCHEME_BASE64_XOR,
        seed=20260811,
    )


def stripped_preset() -> SynthConfig:
    """Corpus of stripped SE apps mixed 50/50 with plaintext apps."""
    return SynthConfig(
        n_families=20,
        samples_per_family=(20, 20),
        skew=0.0,
        se_family_fraction=0.5,
        mixed_family_fraction=0.0,
        fingerprint_strength=0.5,
        se_string_fraction=1.0,
        strings_per_app=(12, 40),
        identifiers_per_app=(8, 20),
        scheme=SCHEME_STRIP_ALL,
        seed=20260812,
    )


_MEMBER_PREFIXES = ("get", "set", "on", "run", "load", "init", "make", "read", "push", "bind")
_UNICODE_POOL = "áéíóúüñçøßπλΩжд中文字"
_MANIFEST_STUB = b"\x03\x00\x08\x00synthetic-manifest-stub"

_WORD_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789"


@dataclass
class _FamilyProfile:
    """Stable per-family string-style traits; all offsets scale with
    fingerprint_strength so strength 0 makes families statistically alike."""

    name: str
    label_kind: str  # "SE", "NOT_SE", "MIXED"
    alphabet: str
    word_len_mu: float
    extra_words: float
    dash_rate: float
    slash_rate: float
    plus_rate: float
    eq_rate: float
    doubling: float
    unicode_rate: float
    vocab: list[str] = field(default_factory=list)


def _make_profile(name: str, label_kind: str, strength: float, rng: np.random.Generator) -> _FamilyProfile:
    alphabet_size = int(np.clip(round(18 + strength * rng.uniform(-12, 12)), 5, len(_WORD_CHARS)))
    letters = rng.choice(list(_WORD_CHARS), size=alphabet_size, replace=False)
    profile = _FamilyProfile(
        name=name,
        label_kind=label_kind,
        alphabet="".join(letters),
        word_len_mu=float(np.clip(8 + strength * rng.uniform(-5, 9), 2.5, 26)),
        extra_words=float(max(0.05, 1.0 + strength * rng.uniform(-1.0, 3.0))),
        dash_rate=strength * rng.uniform(0, 1.5),
        slash_rate=strength * rng.uniform(0, 1.5),
        plus_rate=strength * rng.uniform(0, 0.6),
        eq_rate=strength * rng.uniform(0, 0.6),
        doubling=strength * rng.uniform(0, 0.35),
        unicode_rate=strength * rng.uniform(0, 0.4),
    )
    profile.vocab = _make_vocab(profile, rng)
    return profile


def _make_vocab(profile: _FamilyProfile, rng: np.random.Generator, size: int = 48) -> list[str]:
    vocab: list[str] = []
    seen: set[str] = set()
    while len(vocab) < size:
        word = _make_word(profile, rng)
        if word not in seen:
            seen.add(word)
            vocab.append(word)
    return vocab


def _make_word(profile: _FamilyProfile, rng: np.random.Generator) -> str:
    length = max(2, int(round(rng.normal(profile.word_len_mu, 1.5))))
    chars = [profile.alphabet[i] for i in rng.integers(0, len(profile.alphabet), size=length)]
    if rng.random() < profile.doubling:
        pos = int(rng.integers(0, len(chars)))
        chars.insert(pos, chars[pos])
    return "".join(chars)


@dataclass
class _AppStyle:
    """Per-app variant of a family profile.

    Big malware families ship many variants, so apps from a large family get
    jittered string-style traits; small families stay near-identical. Jitter
    is multiplicative and zero-mean, keeping the family centroid in place.
    """

    vocab: list[str]
    extra_words: float
    dash_rate: float
    slash_rate: float
    plus_rate: float
    eq_rate: float
    unicode_rate: float


def _variant_jitter(family_size: int) -> float:
    return 0.38 * min(1.0, family_size / 400.0)


def _app_style(profile: _FamilyProfile, rng: np.random.Generator, jitter: float) -> _AppStyle:
    def nudge(rate: float) -> float:
        return max(0.0, rate * (1.0 + jitter * rng.uniform(-1.0, 1.0)))

    vocab = profile.vocab
    if jitter > 0:
        keep = max(8, int(round(len(vocab) * (1.0 - 0.5 * jitter * rng.random()))))
        vocab = [vocab[i] for i in sorted(rng.choice(len(vocab), size=keep, replace=False))]
    return _AppStyle(
        vocab=vocab,
        extra_words=max(0.0, profile.extra_words * (1.0 + 0.6 * jitter * rng.uniform(-1.0, 1.0))),
        dash_rate=nudge(profile.dash_rate),
        slash_rate=nudge(profile.slash_rate),
        plus_rate=nudge(profile.plus_rate),
        eq_rate=nudge(profile.eq_rate),
        unicode_rate=nudge(profile.unicode_rate),
    )


def _make_payload_string(style: _AppStyle, rng: np.random.Generator) -> str:
    n_words = 1 + int(rng.poisson(style.extra_words))
    words = [style.vocab[i] for i in rng.integers(0, len(style.vocab), size=n_words)]
    s = " ".join(words)
    for ch, rate in (
        ("-", style.dash_rate),
        ("/", style.slash_rate),
        ("+", style.plus_rate),
        ("=", style.eq_rate),
    ):
        for _ in range(int(rng.poisson(rate))):
            pos = int(rng.integers(0, len(s) + 1))
            s = s[:pos] + ch + s[pos:]
    for _ in range(int(rng.poisson(style.unicode_rate))):
        pos = int(rng.integers(0, len(s) + 1))
        ch = _UNICODE_POOL[int(rng.integers(0, len(_UNICODE_POOL)))]
        s = s[:pos] + ch + s[pos:]
    return s


def _make_identifiers(profile: _FamilyProfile, rng: np.random.Generator, n_members: int, dex_tag: str) -> tuple[str, list[str]]:
    w1 = profile.vocab[int(rng.integers(0, len(profile.vocab)))][:8]
    w2 = profile.vocab[int(rng.integers(0, len(profile.vocab)))][:10]
    type_descriptor = f"Lcom/{w1}/{w2.capitalize()}{dex_tag};"
    members: list[str] = []
    seen: set[str] = set()
    while len(members) < n_members:
        prefix = _MEMBER_PREFIXES[int(rng.integers(0, len(_MEMBER_PREFIXES)))]
        word = profile.vocab[int(rng.integers(0, len(profile.vocab)))][:10]
        name = prefix + word.capitalize()
        if name not in seen:
            seen.add(name)
            members.append(name)
    return type_descriptor, members


def family_sizes(cfg: SynthConfig) -> list[int]:
    """Family sizes by rank: min + round((max-min) * (rank+1)^-skew).

    skew 0 gives every family the max size; larger skew concentrates the
    corpus in the first few families.
    """
    lo, hi = cfg.samples_per_family
    return [lo + int(round((hi - lo) * (i + 1) ** (-cfg.skew))) for i in range(cfg.n_families)]


@dataclass(frozen=True)
class _FamilyPlan:
    kind: str  # "SE", "NOT_SE", "MIXED"
    n_se: int  # SE samples in this family


def _plan_families(cfg: SynthConfig, sizes: list[int], rng: np.random.Generator) -> list[_FamilyPlan]:
    """Decide each family's class makeup.

    Mixed families include the largest family (if any are requested) plus
    mid-band ones: a label-pure giant makes whole-family splits collapse into
    one class, which no evaluation protocol survives. Mixed families carry a
    12-30% minority share. Pure families are then labeled greedily down the
    size ranking so both classes end with comparable sample mass, not just a
    comparable family count.
    """
    n = cfg.n_families
    by_size = sorted(range(n), key=lambda i: (-sizes[i], i))

    # Mixed families come from the mid-size band: heavy ones would cap the
    # achievable accuracy, featherweight ones add no both-class coverage.
    band = by_size[n // 6:max(n // 6 + 1, n // 2)]
    n_mixed = min(int(round(cfg.mixed_family_fraction * n)), len(band))
    mixed: set[int] = set()
    if n_mixed:
        mixed.update(int(i) for i in rng.choice(band, size=n_mixed, replace=False))

    plans: dict[int, _FamilyPlan] = {}
    se_mass = not_mass = 0
    for i in mixed:
        minority = min(sizes[i] - 1, max(1, int(round(rng.uniform(0.3, 0.5) * sizes[i]))))
        n_se = sizes[i] - minority if rng.random() < 0.5 else minority
        plans[i] = _FamilyPlan(kind="MIXED", n_se=n_se)
        se_mass += n_se
        not_mass += sizes[i] - n_se

    pure = [i for i in by_size if i not in mixed]
    n_se_fams = int(round(cfg.se_family_fraction * len(pure)))
    se_left, not_left = n_se_fams, len(pure) - n_se_fams
    for i in pure:
        if se_left == 0:
            side = "NOT_SE"
        elif not_left == 0:
            side = "SE"
        else:
            total = se_mass + not_mass + sizes[i]
            gap_se = abs((se_mass + sizes[i]) / total - 0.5)
            gap_not = abs(se_mass / total - 0.5)
            if math.isclose(gap_se, gap_not, rel_tol=0.0, abs_tol=1e-12):
                side = "SE" if rng.random() < 0.5 else "NOT_SE"
            else:
                side = "SE" if gap_se < gap_not else "NOT_SE"
        if side == "SE":
            se_left -= 1
            se_mass += sizes[i]
            plans[i] = _FamilyPlan(kind="SE", n_se=sizes[i])
        else:
            not_left -= 1
            not_mass += sizes[i]
            plans[i] = _FamilyPlan(kind="NOT_SE", n_se=0)
    return [plans[i] for i in range(n)]


def _sample_labels(plan: _FamilyPlan, size: int, rng: np.random.Generator) -> list[str]:
    labels = ["SE"] * plan.n_se + ["NOT_SE"] * (size - plan.n_se)
    order = rng.permutation(size)
    return [labels[order[i]] for i in range(size)]


def _build_app_dexes(
    cfg: SynthConfig,
    profile: _FamilyProfile,
    label: str,
    rng: np.random.Generator,
    family_size: int = 1,
) -> list[bytes]:
    style = _app_style(profile, rng, _variant_jitter(family_size))
    lo, hi = cfg.strings_per_app
    n_strings = int(rng.integers(lo, hi + 1))
    payload: list[str] = []
    seen: set[str] = set()
    while len(payload) < n_strings:
        s = _make_payload_string(style, rng)
        if s and s not in seen:
            seen.add(s)
            payload.append(s)

    if label == "SE":
        if cfg.scheme == SCHEME_STRIP_ALL:
            payload = []
        else:
            k = int(np.ceil(cfg.se_string_fraction * len(payload)))
            key = int(rng.integers(1, 256))
            picks = set(int(i) for i in rng.choice(len(payload), size=k, replace=False))
            payload = [encrypt_string(s, key) if i in picks else s for i, s in enumerate(payload)]
            # Re-deduplicate: encryption could in principle collide.
            payload = list(dict.fromkeys(payload))

    n_dex = int(rng.integers(1, 4))
    ilo, ihi = cfg.identifiers_per_app
    n_ids = int(rng.integers(ilo, ihi + 1))
    n_members_total = max(0, n_ids - n_dex)

    dexes: list[bytes] = []
    for d in range(n_dex):
        chunk = payload[d::n_dex]
        members_share = n_members_total // n_dex + (1 if d < n_members_total % n_dex else 0)
        tag = "" if d == 0 else str(d + 1)
        type_descriptor, members = _make_identifiers(profile, rng, members_share, tag)
        identifiers = [type_descriptor] + members
        id_set = set(identifiers)
        chunk = [s for s in chunk if s not in id_set]
        spec = DexSpec(
            identifier_strings=tuple(identifiers),
            non_identifier_strings=tuple(chunk),
        )
        dexes.append(build_dex(spec))
    return dexes


def write_apk(path: Path, dex_payloads: list[bytes]) -> None:
    """Write an APK (ZIP) with fixed metadata so output is byte-reproducible."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for i, payload in enumerate(dex_payloads):
            name = "classes.dex" if i == 0 else f"classes{i + 1}.dex"
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, payload)
        info = zipfile.ZipInfo("AndroidManifest.xml", date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, _MANIFEST_STUB)


def gen_corpus(cfg: SynthConfig, out_dir: str | Path) -> tuple[Path, Path]:
    """Generate the corpus; returns (corpus directory, manifest path).

    Layout: out_dir/<family>/<sample_id>.apk plus out_dir/manifest.csv with
    rows sample_id,family,label,path. Fully deterministic for a fixed config.
    """
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    base = cfg.seed & 0xFFFFFFFFFFFFFFFF
    meta_rng = np.random.default_rng(np.random.SeedSequence([base, 0]))
    sizes = family_sizes(cfg)
    plans = _plan_families(cfg, sizes, meta_rng)

    rows: list[tuple[str, str, str, str]] = []
    for fam_idx in range(cfg.n_families):
        fam_name = f"fam{fam_idx:03d}"
        fam_rng = np.random.default_rng(np.random.SeedSequence([base, 1, fam_idx]))
        # Heavy families get the full fingerprint spread; the light tail stays
        # closer to a common core, like the many me-too families in the wild.
        strength = cfg.fingerprint_strength * (0.45 + 0.55 * min(1.0, sizes[fam_idx] / 250.0))
        profile = _make_profile(fam_name, plans[fam_idx].kind, strength, fam_rng)
        labels = _sample_labels(plans[fam_idx], sizes[fam_idx], fam_rng)
        for s_idx in range(sizes[fam_idx]):
            sample_id = f"{fam_name}_{s_idx:04d}"
            app_rng = np.random.default_rng(np.random.SeedSequence([base, 2, fam_idx, s_idx]))
            dexes = _build_app_dexes(cfg, profile, labels[s_idx], app_rng, sizes[fam_idx])
            rel_path = f"{fam_name}/{sample_id}.apk"
            write_apk(out_dir / rel_path, dexes)
            rows.append((sample_id, fam_name, labels[s_idx], rel_path))

    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "family", "label", "path"])
        writer.writerows(rows)
    return out_dir, manifest_path
