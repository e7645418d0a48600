"""Validation datasets, the question pool Q = D x C, and uncertainty candidates."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .errors import FormatError, InputError, PoolExhausted

if TYPE_CHECKING:
    from .gp import UncertaintySplit

TIE_TOL = 1e-12

# skewed 11-concept prevalence used for OCT-sized synthetic pools
SKEWED_PREVALENCE = (0.60, 0.40, 0.30, 0.25, 0.20, 0.15, 0.12, 0.10, 0.08, 0.06, 0.05)


@dataclass(frozen=True)
class Question:
    sample_id: str
    concept_id: str
    gt: int


@dataclass
class Dataset:
    samples: list[str]
    concepts: list[str]
    labels: np.ndarray  # (n_samples, n_concepts) of 0/1

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.labels.shape != (len(self.samples), len(self.concepts)):
            raise InputError(f"label matrix shape {self.labels.shape} does not match "
                             f"{len(self.samples)} samples x {len(self.concepts)} concepts")
        if len(set(self.samples)) != len(self.samples):
            raise InputError("sample ids must be unique")
        if len(set(self.concepts)) != len(self.concepts):
            raise InputError("concept ids must be unique")
        if not np.isin(self.labels, (0, 1)).all():
            raise InputError("labels must be 0 or 1")
        self._sample_pos = {s: i for i, s in enumerate(self.samples)}
        self._concept_pos = {c: j for j, c in enumerate(self.concepts)}

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def n_concepts(self) -> int:
        return len(self.concepts)

    def label(self, sample_id: str, concept_id: str) -> int:
        return int(self.labels[self._sample_pos[sample_id], self._concept_pos[concept_id]])

    def sample_index(self, sample_id: str) -> int:
        return self._sample_pos[sample_id]

    def concept_index(self, concept_id: str) -> int:
        return self._concept_pos[concept_id]

    def positives(self) -> np.ndarray:
        return self.labels.sum(axis=0)

    def prevalence(self) -> np.ndarray:
        return self.positives() / max(self.n_samples, 1)


def _read_table(path, cell) -> tuple[list[str], list[str], np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file", row=1) from None
        header = [h.strip() for h in header]
        if not header or header[0] != "sample_id":
            raise FormatError("header must start with 'sample_id'", row=1)
        concepts = header[1:]
        if not concepts:
            raise FormatError("header names no concepts", row=1)
        if len(set(concepts)) != len(concepts):
            raise FormatError("duplicate concept names in header", row=1)
        samples, rows, seen = [], [], set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FormatError(f"expected {len(header)} cells, found {len(row)}", row=lineno)
            sid = row[0].strip()
            if not sid:
                raise FormatError("missing sample_id", row=lineno)
            if sid in seen:
                raise FormatError(f"duplicate sample_id {sid!r}", row=lineno)
            seen.add(sid)
            values = []
            for name, raw in zip(concepts, row[1:]):
                raw = raw.strip()
                if raw == "":
                    raise FormatError(f"missing value for concept {name!r}", row=lineno)
                try:
                    values.append(cell(raw))
                except ValueError as exc:
                    raise FormatError(f"concept {name!r}: {exc}", row=lineno) from None
            samples.append(sid)
            rows.append(values)
    return samples, concepts, np.array(rows).reshape(len(rows), len(concepts))


def _binary_cell(raw: str) -> int:
    if raw not in ("0", "1"):
        raise ValueError(f"label must be 0 or 1, got {raw!r}")
    return int(raw)


def load_dataset(path) -> Dataset:
    """Read ``sample_id,<concept_1>,...`` with 0/1 cells."""
    samples, concepts, labels = _read_table(path, _binary_cell)
    return Dataset(samples, concepts, labels.astype(np.int8))


def write_dataset(dataset: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", *dataset.concepts])
        for sid, row in zip(dataset.samples, dataset.labels):
            w.writerow([sid, *(int(v) for v in row)])


def generate_dataset(n_samples: int, n_concepts: int,
                     prevalence: Optional[Sequence[float]] = None,
                     seed: int = 0) -> Dataset:
    """Synthetic pool with exactly round(p * n_samples) positives per concept.

    Without ``prevalence`` an 11-concept skew is used (truncated or padded
    with its last value to fit ``n_concepts``).
    """
    if n_samples < 1 or n_concepts < 1:
        raise InputError("need at least one sample and one concept")
    if prevalence is None:
        base = list(SKEWED_PREVALENCE)
        prevalence = (base + [base[-1]] * n_concepts)[:n_concepts]
    if len(prevalence) != n_concepts:
        raise InputError(f"{len(prevalence)} prevalences given for {n_concepts} concepts")
    if any(not 0.0 <= p <= 1.0 for p in prevalence):
        raise InputError("prevalences must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    labels = np.zeros((n_samples, n_concepts), dtype=np.int8)
    for j, p in enumerate(prevalence):
        k = int(np.floor(p * n_samples + 0.5))
        labels[rng.permutation(n_samples)[:k], j] = 1
    width = len(str(n_samples - 1))
    samples = [f"s{i:0{width}d}" for i in range(n_samples)]
    concepts = [f"c{j:02d}" for j in range(n_concepts)]
    return Dataset(samples, concepts, labels)


class QuestionPool:
    """Remaining questions, bucketed by (concept, gt) in a canonical order.

    Buckets keep sample indices sorted so that every draw made through a
    seeded generator is reproducible.
    """

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self._buckets: dict[tuple[int, int], list[int]] = {}
        for j in range(dataset.n_concepts):
            col = dataset.labels[:, j]
            for gt in (0, 1):
                self._buckets[(j, gt)] = [int(i) for i in np.flatnonzero(col == gt)]
        self._size = dataset.n_samples * dataset.n_concepts

    def __len__(self) -> int:
        return self._size

    def __contains__(self, q: Question) -> bool:
        try:
            key = (self.dataset.concept_index(q.concept_id), q.gt)
            return self.dataset.sample_index(q.sample_id) in self._buckets[key]
        except KeyError:
            return False

    @property
    def keys(self) -> list[tuple[int, int]]:
        return list(self._buckets)

    def bucket_size(self, concept: int, gt: int) -> int:
        return len(self._buckets[(concept, gt)])

    def concept_size(self, concept: int) -> int:
        return self.bucket_size(concept, 0) + self.bucket_size(concept, 1)

    def question(self, concept: int, gt: int, sample: int) -> Question:
        return Question(self.dataset.samples[sample], self.dataset.concepts[concept], gt)

    def questions(self, keys=None) -> list[Question]:
        keys = self.keys if keys is None else keys
        return [self.question(j, gt, i) for j, gt in keys for i in self._buckets[(j, gt)]]

    def remaining(self) -> list[Question]:
        return self.questions()

    def draw(self, keys: Sequence[tuple[int, int]], rng: np.random.Generator) -> Question:
        """Uniform draw over the union of the given buckets; does not remove."""
        sizes = [len(self._buckets[k]) for k in keys]
        total = sum(sizes)
        if total == 0:
            raise PoolExhausted("no questions in the requested buckets")
        r = int(rng.integers(total))
        for key, size in zip(keys, sizes):
            if r < size:
                return self.question(key[0], key[1], self._buckets[key][r])
            r -= size
        raise AssertionError("unreachable")

    def remove(self, q: Question) -> None:
        key = (self.dataset.concept_index(q.concept_id), q.gt)
        try:
            self._buckets[key].remove(self.dataset.sample_index(q.sample_id))
        except (KeyError, ValueError):
            raise KeyError(f"{q} is not in the pool") from None
        self._size -= 1


def build_pool(dataset: Dataset) -> QuestionPool:
    return QuestionPool(dataset)


def candidate_keys(pool: QuestionPool, splits: Mapping[str, "UncertaintySplit"],
                   tol: float = TIE_TOL) -> list[tuple[int, int]]:
    """Buckets making up the candidate set, after the exhaustion fallback.

    Concepts are ranked by max(u-, u+); concepts within ``tol`` of each other
    form one tier.  For each tier: the dominant-half buckets, else the other
    half of the same concepts, else the next tier.
    """
    if len(pool) == 0:
        raise PoolExhausted("question pool is empty")
    concepts = pool.dataset.concepts
    live = [j for j in range(len(concepts)) if pool.concept_size(j) > 0]
    missing = [concepts[j] for j in live if concepts[j] not in splits]
    if missing:
        raise InputError(f"no uncertainty split for concepts {missing}")
    peaks = {j: splits[concepts[j]].peak for j in live}
    order = sorted(live, key=lambda j: (-peaks[j], j))
    while order:
        top = peaks[order[0]]
        tier = [j for j in order if top - peaks[j] <= tol]
        order = [j for j in order if j not in tier]
        dominant = [(j, splits[concepts[j]].dominant_gt) for j in tier]
        keys = [k for k in dominant if pool.bucket_size(*k) > 0]
        if keys:
            return keys
        keys = [(j, 1 - gt) for j, gt in dominant if pool.bucket_size(j, 1 - gt) > 0]
        if keys:
            return keys
    raise PoolExhausted("question pool is empty")


def candidate_set(pool: QuestionPool, splits) -> list[Question]:
    return pool.questions(candidate_keys(pool, splits))
