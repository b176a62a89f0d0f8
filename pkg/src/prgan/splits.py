"""Three-slice, class-stratified splitting (A: classifiers, B: GAN, C: testing)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import TooFewRecords

SLICE_NAMES = ("A", "B", "C")
TEST_FRACTION_DENOMINATOR = 5  # 4:1 train/test


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray

    @property
    def all(self) -> np.ndarray:
        return np.concatenate([self.train, self.test])


@dataclass(frozen=True)
class SplitPlan:
    A: Split
    B: Split
    C: Split
    seed: int

    def slices(self):
        return {"A": self.A, "B": self.B, "C": self.C}

    def to_json(self) -> str:
        doc = {"seed": self.seed}
        for name, s in self.slices().items():
            doc[name] = {"train": s.train.tolist(), "test": s.test.tolist()}
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> SplitPlan:
        doc = json.loads(text)
        parts = {
            n: Split(np.asarray(doc[n]["train"], dtype=np.int64), np.asarray(doc[n]["test"], dtype=np.int64))
            for n in SLICE_NAMES
        }
        return cls(seed=int(doc["seed"]), **parts)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> SplitPlan:
        return cls.from_json(Path(path).read_text())


def _joint_key(target, sensitive):
    target = np.asarray(target, dtype=np.int64)
    sensitive = np.asarray(sensitive, dtype=np.int64)
    return target * (int(sensitive.max(initial=0)) + 1) + sensitive


def _class_ordered(indices, key, rng):
    """Indices grouped by class (classes ascending), shuffled within each class."""
    indices = np.asarray(indices, dtype=np.int64)
    perm = indices[rng.permutation(len(indices))]
    return perm[np.argsort(key[perm], kind="stable")]


def stratified_holdout(indices, key, rng, denominator=TEST_FRACTION_DENOMINATOR):
    """Split ``indices`` into (train, test) with ``len(test) == len // denominator``.

    Test members are evenly spaced positions of the class-grouped ordering, so each
    class contributes within one record of its proportional share.
    """
    ordered = _class_ordered(indices, key, rng)
    m = len(ordered)
    t = m // denominator
    k = np.arange(m)
    is_test = ((k + 1) * t) // m > (k * t) // m if m else np.zeros(0, dtype=bool)
    return np.sort(ordered[~is_test]), np.sort(ordered[is_test])


def slice_dataset(dataset, seed: int) -> SplitPlan:
    """Slice records into A/B/C of (near) equal size, each split 4:1 train/test.

    Stratification is on the joint ``(y_L, y_P)`` pair. Remainder records go to
    earlier slices; sub-split remainders go to train.
    """
    n = len(dataset)
    if n < 15:
        raise TooFewRecords(f"need at least 15 records, got {n}")
    key = _joint_key(dataset.target_labels, dataset.sensitive_labels)
    classes, counts = np.unique(key, return_counts=True)
    if counts.min() < 3:
        bad = classes[counts.argmin()]
        k = int(dataset.sensitive_labels.max()) + 1
        raise TooFewRecords(
            f"class pair (y_L={bad // k}, y_P={bad % k}) has {counts.min()} records; "
            "every pair needs at least 3 to appear in all slices"
        )
    rng = np.random.default_rng(seed)
    ordered = _class_ordered(np.arange(n), key, rng)
    parts = {}
    for s, name in enumerate(SLICE_NAMES):
        members = ordered[s::3]
        train, test = stratified_holdout(members, key, rng)
        parts[name] = Split(train, test)
    return SplitPlan(seed=seed, **parts)


def validation_split(dataset, indices, seed: int):
    """4:1 class-preserving re-split of ``indices`` (used to carve a tuning set)."""
    key = _joint_key(dataset.target_labels, dataset.sensitive_labels)
    return stratified_holdout(indices, key, np.random.default_rng(seed))
