"""The eight per-app string-encryption features.

Every feature is the unweighted arithmetic mean of a per-string metric over
an app's non-identifier strings: Shannon entropy (bits, code-point
frequencies), UTF-8 byte size, code-point length, counts of '=', '-', '/'
and '+', and repeated-character count (length minus distinct characters).
An app with zero strings gets an all-zero vector — itself a strong signal
for stripped apps — rather than NaNs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .apk import AppStrings

FEATURE_NAMES = (
    "avg_entropy",
    "avg_wordsize",
    "avg_length",
    "avg_eq",
    "avg_dash",
    "avg_slash",
    "avg_plus",
    "avg_repeat",
)

CSV_HEADER = (
    "sample_id", "family", "label",
    *FEATURE_NAMES,
    "n_strings", "decode_failures",
)


@dataclass(frozen=True)
class PerStringMetrics:
    entropy: float
    wordsize: int
    length: int
    eq_count: int
    dash_count: int
    slash_count: int
    plus_count: int
    repeat_count: int


@dataclass(frozen=True)
class FeatureVector:
    avg_entropy: float = 0.0
    avg_wordsize: float = 0.0
    avg_length: float = 0.0
    avg_eq: float = 0.0
    avg_dash: float = 0.0
    avg_slash: float = 0.0
    avg_plus: float = 0.0
    avg_repeat: float = 0.0
    n_strings: int = 0

    def as_tuple(self) -> tuple[float, ...]:
        """The eight averages in FEATURE_NAMES order."""
        return (
            self.avg_entropy, self.avg_wordsize, self.avg_length, self.avg_eq,
            self.avg_dash, self.avg_slash, self.avg_plus, self.avg_repeat,
        )


def shannon_entropy(s: str) -> float:
    """Base-2 Shannon entropy of the code-point frequency distribution."""
    n = len(s)
    if n <= 1:
        return 0.0
    counts = Counter(s)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


def per_string_metrics(s: str) -> PerStringMetrics:
    return PerStringMetrics(
        entropy=shannon_entropy(s),
        wordsize=len(s.encode("utf-8")),
        length=len(s),
        eq_count=s.count("="),
        dash_count=s.count("-"),
        slash_count=s.count("/"),
        plus_count=s.count("+"),
        repeat_count=len(s) - len(set(s)),
    )


def feature_vector(app: AppStrings) -> FeatureVector:
    return feature_vector_from_strings(app.non_identifier_strings)


def feature_vector_from_strings(strings: tuple[str, ...] | list[str]) -> FeatureVector:
    n = len(strings)
    if n == 0:
        return FeatureVector()
    metrics = [per_string_metrics(s) for s in strings]
    return FeatureVector(
        avg_entropy=sum(m.entropy for m in metrics) / n,
        avg_wordsize=sum(m.wordsize for m in metrics) / n,
        avg_length=sum(m.length for m in metrics) / n,
        avg_eq=sum(m.eq_count for m in metrics) / n,
        avg_dash=sum(m.dash_count for m in metrics) / n,
        avg_slash=sum(m.slash_count for m in metrics) / n,
        avg_plus=sum(m.plus_count for m in metrics) / n,
        avg_repeat=sum(m.repeat_count for m in metrics) / n,
        n_strings=n,
    )


def csv_row(sample_id: str, family: str, label: str, fv: FeatureVector, decode_failures: int) -> list[str]:
    """One feature-CSV row; reals printed to 9 significant digits."""
    return [
        sample_id, family, label,
        *(f"{v:.9g}" for v in fv.as_tuple()),
        str(fv.n_strings), str(decode_failures),
    ]
