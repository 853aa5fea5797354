"""Labeled corpora, manifests, and the three train/test split strategies.

The family-disjoint splitter moves whole families into the training side
until it holds more than half the corpus; nothing from a family ever sits on
both sides. Degenerate draws (empty test set, or a side missing a class) are
rejected and retried with the next derived seed.
"""

from __future__ import annotations

import csv
import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    BadHeader,
    Degenerate,
    DuplicateId,
    TooFewFamilies,
    TooSmall,
    UnknownId,
    UnknownLabel,
)
from .features import FEATURE_NAMES, FeatureVector

MAX_SPLIT_RETRIES = 1000

PATH_HEADER = ["sample_id", "family", "label", "path"]
FEATURE_HEADER = ["sample_id", "family", "label", *FEATURE_NAMES, "n_strings", "decode_failures"]


class Label(enum.Enum):
    SE = "SE"
    NOT_SE = "NOT_SE"

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls(text)
        except ValueError:
            raise UnknownLabel(f"label must be SE or NOT_SE, got {text!r}") from None


class SplitStrategy(enum.Enum):
    RANDOM = "RANDOM"
    FAMILY_DISJOINT = "FAMILY_DISJOINT"
    LOFO = "LOFO"


@dataclass(frozen=True)
class Sample:
    sample_id: str
    family: str
    label: Label
    features: FeatureVector | None = None
    path: str | None = None


@dataclass(frozen=True)
class Corpus:
    samples: tuple[Sample, ...]
    family_index: dict[str, list[int]]
    id_index: dict[str, int]

    @classmethod
    def from_samples(cls, samples: list[Sample]) -> "Corpus":
        family_index: dict[str, list[int]] = {}
        id_index: dict[str, int] = {}
        for i, s in enumerate(samples):
            if s.sample_id in id_index:
                raise DuplicateId(f"duplicate sample_id {s.sample_id!r}")
            id_index[s.sample_id] = i
            family_index.setdefault(s.family, []).append(i)
        return cls(samples=tuple(samples), family_index=family_index, id_index=id_index)

    def families(self) -> list[str]:
        return sorted(self.family_index)

    def by_ids(self, ids) -> list[Sample]:
        """Samples for the given ids, in corpus order."""
        ids = set(ids)
        return [s for s in self.samples if s.sample_id in ids]


@dataclass(frozen=True)
class Split:
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    strategy: SplitStrategy
    seed: int
    held_out_family: str | None = None
    retries: int = 0

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "seed": self.seed,
            "retries": self.retries,
            "train_ids": sorted(self.train_ids),
            "test_ids": sorted(self.test_ids),
            "held_out_family": self.held_out_family,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Split":
        return cls(
            train_ids=frozenset(obj["train_ids"]),
            test_ids=frozenset(obj["test_ids"]),
            strategy=SplitStrategy(obj["strategy"]),
            seed=obj["seed"],
            held_out_family=obj.get("held_out_family"),
            retries=obj.get("retries", 0),
        )


@dataclass(frozen=True)
class ValidationReport:
    partition_ok: bool
    family_overlap: int
    train_class_counts: dict[str, int]
    test_class_counts: dict[str, int]
    train_family_count: int
    test_family_count: int


def load_manifest(path: str | Path) -> Corpus:
    """Load a corpus from a manifest CSV.

    Two layouts are accepted: sample_id,family,label,path (features to be
    extracted later from the referenced APKs) and the feature CSV written by
    the extractor (features inline).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BadHeader("empty manifest") from None
        if header == PATH_HEADER:
            inline_features = False
        elif header == FEATURE_HEADER:
            inline_features = True
        else:
            raise BadHeader(f"unrecognized manifest header {header!r}")

        samples: list[Sample] = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise BadHeader(f"row {row_no} has {len(row)} columns, expected {len(header)}")
            sample_id, family, label_text = row[0], row[1], row[2]
            label = Label.parse(label_text)
            if inline_features:
                values = [float(v) for v in row[3:11]]
                fv = FeatureVector(*values, n_strings=int(row[11]))
                samples.append(Sample(sample_id, family, label, features=fv))
            else:
                samples.append(Sample(sample_id, family, label, path=row[3]))
    return Corpus.from_samples(samples)


def random_split(corpus: Corpus, seed: int) -> Split:
    """Uniformly random half/half partition (train gets the ceiling)."""
    n = len(corpus.samples)
    if n < 2:
        raise TooSmall(f"need at least 2 samples, got {n}")
    ids = [s.sample_id for s in corpus.samples]
    rng = random.Random(seed)
    rng.shuffle(ids)
    cut = (n + 1) // 2
    return Split(
        train_ids=frozenset(ids[:cut]),
        test_ids=frozenset(ids[cut:]),
        strategy=SplitStrategy.RANDOM,
        seed=seed,
    )


def family_disjoint_split(corpus: Corpus, seed: int) -> Split:
    """Split by repeatedly moving whole random families into the train side.

    Families are drawn uniformly without replacement while the train side
    holds at most half the samples. A draw order can absorb every family or
    strand one class on one side; such outcomes are rejected and the split is
    retried with the next derived seed, up to MAX_SPLIT_RETRIES times.
    """
    if len(corpus.family_index) < 2:
        raise TooFewFamilies("family-disjoint split needs at least 2 families")

    for retry in range(MAX_SPLIT_RETRIES):
        train = _draw_family_train(corpus, random.Random(seed + retry))
        test = frozenset(s.sample_id for s in corpus.samples) - train
        if test and _both_classes(corpus, train) and _both_classes(corpus, test):
            return Split(
                train_ids=train,
                test_ids=test,
                strategy=SplitStrategy.FAMILY_DISJOINT,
                seed=seed,
                retries=retry,
            )
    raise Degenerate(f"no valid family-disjoint split in {MAX_SPLIT_RETRIES} retries")


def _draw_family_train(corpus: Corpus, rng) -> frozenset[str]:
    """One pass of the draw loop: pull random whole families into the train
    side while it holds at most half the samples. rng needs randrange only."""
    n = len(corpus.samples)
    remaining = sorted(corpus.family_index)
    train_idx: list[int] = []
    while len(train_idx) <= n / 2:
        if not remaining:
            break  # absorbed every family; caller rejects the empty test set
        fam = remaining.pop(rng.randrange(len(remaining)))
        train_idx.extend(corpus.family_index[fam])
    return frozenset(corpus.samples[i].sample_id for i in train_idx)


def _both_classes(corpus: Corpus, ids: frozenset[str]) -> bool:
    labels = {corpus.samples[corpus.id_index[i]].label for i in ids}
    return labels == {Label.SE, Label.NOT_SE}


def lofo_splits(corpus: Corpus) -> list[Split]:
    """One split per family: that family is the test set, the rest train."""
    families = corpus.families()
    if len(families) < 2:
        raise TooFewFamilies("leave-one-family-out needs at least 2 families")
    all_ids = frozenset(s.sample_id for s in corpus.samples)
    splits = []
    for fam in families:
        test = frozenset(corpus.samples[i].sample_id for i in corpus.family_index[fam])
        splits.append(Split(
            train_ids=all_ids - test,
            test_ids=test,
            strategy=SplitStrategy.LOFO,
            seed=0,
            held_out_family=fam,
        ))
    return splits


def validate_split(corpus: Corpus, split: Split) -> ValidationReport:
    """Check partition correctness and count family overlap between sides."""
    for sid in split.train_ids | split.test_ids:
        if sid not in corpus.id_index:
            raise UnknownId(f"split references unknown sample {sid!r}")

    all_ids = frozenset(s.sample_id for s in corpus.samples)
    partition_ok = (
        not (split.train_ids & split.test_ids)
        and split.train_ids | split.test_ids == all_ids
    )

    def side_stats(ids: frozenset[str]) -> tuple[set[str], dict[str, int]]:
        families: set[str] = set()
        class_counts = {Label.SE.value: 0, Label.NOT_SE.value: 0}
        for sid in ids:
            s = corpus.samples[corpus.id_index[sid]]
            families.add(s.family)
            class_counts[s.label.value] += 1
        return families, class_counts

    train_families, train_classes = side_stats(split.train_ids)
    test_families, test_classes = side_stats(split.test_ids)
    return ValidationReport(
        partition_ok=partition_ok,
        family_overlap=len(train_families & test_families),
        train_class_counts=train_classes,
        test_class_counts=test_classes,
        train_family_count=len(train_families),
        test_family_count=len(test_families),
    )


def save_split(split: Split, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(split.to_json(), fh, indent=2)
        fh.write("\n")


def load_split(path: str | Path) -> Split:
    with open(path, encoding="utf-8") as fh:
        return Split.from_json(json.load(fh))
