"""Stratified train/validation/test splitting with exact rational ratios.

Per-label counts are apportioned by largest-remainder rounding, with
leftover units going to the larger fractional remainders and ties broken
in favor of train, then validation, then test.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .labels import LABEL_ORDER, RelationLabel
from .pairs import LabeledPair, read_pairs, write_pairs

SPLIT_NAMES = ("train", "val", "test")

DEFAULT_RATIOS = (Fraction(7, 10), Fraction(1, 10), Fraction(2, 10))


class DuplicatePairId(ValueError):
    def __init__(self, pair_id: str):
        super().__init__(f"duplicate pair_id: {pair_id}")
        self.pair_id = pair_id


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[Fraction, Fraction, Fraction] = DEFAULT_RATIOS
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.ratios) != 3:
            raise ValueError("expected exactly three split ratios")
        if any(r < 0 for r in self.ratios):
            raise ValueError("split ratios must be non-negative")
        if sum(self.ratios) != 1:
            raise ValueError(f"split ratios must sum to 1, got {self.ratios}")


@dataclass
class DatasetBundle:
    name: str
    train: list[LabeledPair] = field(default_factory=list)
    val: list[LabeledPair] = field(default_factory=list)
    test: list[LabeledPair] = field(default_factory=list)

    def splits(self) -> list[tuple[str, list[LabeledPair]]]:
        return [("train", self.train), ("val", self.val), ("test", self.test)]

    def all_pairs(self) -> list[LabeledPair]:
        return self.train + self.val + self.test

    def validate(self) -> None:
        seen_ids: set[str] = set()
        seen_content: set[tuple[str, str, str]] = set()
        for _, pairs in self.splits():
            for pair in pairs:
                if pair.pair_id in seen_ids:
                    raise DuplicatePairId(pair.pair_id)
                seen_ids.add(pair.pair_id)
                key = (pair.topic_a, pair.topic_b, pair.label.value)
                if key in seen_content:
                    raise ValueError(f"duplicate pair content: {key}")
                seen_content.add(key)


def allocate(count: int, ratios: tuple[Fraction, Fraction, Fraction]) -> tuple[int, int, int]:
    """Largest-remainder apportionment of `count` across three ratios,
    remainder priority train > val > test."""
    exact = [count * r for r in ratios]
    floors = [int(e) for e in exact]
    remainders = [e - f for e, f in zip(exact, floors)]
    leftover = count - sum(floors)
    by_priority = sorted(range(3), key=lambda i: (-remainders[i], i))
    for i in by_priority[:leftover]:
        floors[i] += 1
    return floors[0], floors[1], floors[2]


def make_splits(pairs: list[LabeledPair], spec: SplitSpec, *, name: str) -> DatasetBundle:
    """Stratified split: within each label, pairs are shuffled (seeded)
    and cut by largest-remainder counts; each split is then reshuffled.

    Input order does not matter: pairs are sorted by pair_id before the
    seeded shuffle.
    """
    rng = random.Random(spec.seed)
    bundle = DatasetBundle(name=name)
    groups: dict[RelationLabel, list[LabeledPair]] = {label: [] for label in LABEL_ORDER}
    for pair in pairs:
        groups[pair.label].append(pair)

    for label in LABEL_ORDER:
        group = sorted(groups[label], key=lambda p: p.pair_id)
        rng.shuffle(group)
        n_train, n_val, _ = allocate(len(group), spec.ratios)
        bundle.train.extend(group[:n_train])
        bundle.val.extend(group[n_train : n_train + n_val])
        bundle.test.extend(group[n_train + n_val :])

    for _, split_pairs in bundle.splits():
        rng.shuffle(split_pairs)

    bundle.validate()
    return bundle


def merge_bundles(bundles: list[DatasetBundle], *, name: str) -> DatasetBundle:
    """Split-wise concatenation; every pair_id must be globally unique."""
    merged = DatasetBundle(name=name)
    for bundle in bundles:
        merged.train.extend(bundle.train)
        merged.val.extend(bundle.val)
        merged.test.extend(bundle.test)
    merged.validate()
    return merged


def split_path(directory: Path | str, name: str, split: str) -> Path:
    if split not in SPLIT_NAMES:
        raise ValueError(f"unknown split: {split!r}")
    return Path(directory) / f"{name}.{split}.jsonl"


def save_bundle(bundle: DatasetBundle, directory: Path | str) -> dict[str, int]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    counts = {}
    for split, pairs in bundle.splits():
        counts[split] = write_pairs(split_path(directory, bundle.name, split), pairs)
    return counts


def load_bundle(directory: Path | str, name: str) -> DatasetBundle:
    bundle = DatasetBundle(name=name)
    bundle.train = read_pairs(split_path(directory, name, "train"))
    bundle.val = read_pairs(split_path(directory, name, "val"))
    bundle.test = read_pairs(split_path(directory, name, "test"))
    return bundle


def label_counts(pairs: Iterable[LabeledPair]) -> dict[str, int]:
    counts = {label.value: 0 for label in LABEL_ORDER}
    for pair in pairs:
        counts[pair.label.value] += 1
    return counts
