"""Per-concept ledger of encoded answers and the GP fitted to it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import InputError, UsageError
from .gp import (DEFAULT_GRID, N_BINS, KernelParams, Observation, PosteriorCurve,
                 UncertaintySplit, band_integrals, gp_posterior)
from .pool import Question

OUTCOMES = ("TN", "FP", "FN", "TP")


def encode_answer(prob: float, gt: int) -> float:
    if not 0.0 <= prob <= 1.0:
        raise InputError(f"probability must lie in [0, 1], got {prob!r}")
    if gt not in (0, 1):
        raise InputError(f"ground truth must be 0 or 1, got {gt!r}")
    return (prob + gt) / 2.0


def bin_index(a: float) -> int:
    if not 0.0 <= a <= 1.0:
        raise InputError(f"encoded answer must lie in [0, 1], got {a!r}")
    # half-up, not banker's rounding
    return min(max(math.floor(a * 100.0 + 0.5), 0), N_BINS - 1)


def classify_outcome(a: float, gt: Optional[int] = None) -> str:
    """Map an encoded answer to TN/FP/FN/TP.

    A probability of exactly 0.5 counts as a "Yes" prediction, so a = 0.25
    is FP and a = 0.75 is TP.  a = 0.5 is FP unless ``gt=1`` is given, in
    which case it is the confident miss (prob 0) and therefore FN.
    """
    if a < 0.25:
        return "TN"
    if a < 0.5 or (a == 0.5 and gt != 1):
        return "FP"
    if a < 0.75:
        return "FN"
    return "TP"


# inclusive bin ranges per outcome; boundary bins are owned by one side only
OUTCOME_BINS = {"TN": (0, 24), "FP": (25, 50), "FN": (51, 74), "TP": (75, 100)}


def outcome_of_bin(index: int) -> str:
    for outcome, (lo, hi) in OUTCOME_BINS.items():
        if lo <= index <= hi:
            return outcome
    raise InputError(f"bin index out of range: {index!r}")


def answer_bin(a: float, gt: int) -> int:
    """Nearest bin, clamped into the bin range of the answer's outcome.

    Differs from ``bin_index`` only for answers within half a bin of the
    0.25 / 0.5 / 0.75 boundaries, so bin-wise subregion sums reproduce the
    exact confusion counts.
    """
    lo, hi = OUTCOME_BINS[classify_outcome(a, gt)]
    return min(max(bin_index(a), lo), hi)


@dataclass(frozen=True)
class AnswerRecord:
    question: Question
    prob: float
    a: float
    step: int

    @property
    def outcome(self) -> str:
        return classify_outcome(self.a, self.question.gt)

    @property
    def bin(self) -> int:
        return answer_bin(self.a, self.question.gt)

    @property
    def said_yes(self) -> bool:
        return self.prob >= 0.5


@dataclass
class ConfusionCounts:
    tn: int = 0
    fp: int = 0
    fn: int = 0
    tp: int = 0

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def add(self, outcome: str, n: int = 1) -> None:
        setattr(self, outcome.lower(), getattr(self, outcome.lower()) + n)

    def as_tuple(self) -> tuple:
        return (self.tn, self.fp, self.fn, self.tp)


def confusion_counts(history: Iterable[AnswerRecord]) -> ConfusionCounts:
    counts = ConfusionCounts()
    for record in history:
        counts.add(record.outcome)
    return counts


@dataclass
class ConceptModel:
    """Binned answer counts for one concept plus a cached GP posterior.

    With ``frequency_mode`` the GP observes count / total instead of raw
    counts; posterior variance is identical either way.  The band split
    depends only on which bins are occupied, so it is recomputed only when
    a new bin fills; the mean curve is invalidated on every record.
    """

    concept_id: str
    kernel: KernelParams = field(default_factory=KernelParams)
    frequency_mode: bool = False
    band_mode: str = "std"
    bin_counts: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS, dtype=np.int64))
    _curve: Optional[PosteriorCurve] = field(default=None, repr=False)
    _split: Optional[UncertaintySplit] = field(default=None, repr=False)
    _split_key: Optional[bytes] = field(default=None, repr=False)

    @property
    def grid(self) -> np.ndarray:
        return DEFAULT_GRID

    @property
    def n_answers(self) -> int:
        return int(self.bin_counts.sum())

    def record_answer(self, q: Question, prob: float, step: int = 0) -> AnswerRecord:
        if q.concept_id != self.concept_id:
            raise UsageError(f"question about {q.concept_id!r} recorded into model "
                             f"for {self.concept_id!r}")
        a = encode_answer(prob, q.gt)
        self.bin_counts[answer_bin(a, q.gt)] += 1
        self._curve = None
        return AnswerRecord(q, prob, a, step)

    def observations(self) -> list[Observation]:
        occupied = np.flatnonzero(self.bin_counts)
        total = self.bin_counts.sum()
        obs = []
        for i in occupied:
            value = float(self.bin_counts[i])
            if self.frequency_mode:
                value /= float(total)
            obs.append(Observation(float(self.grid[i]), value))
        return obs

    def curve(self) -> PosteriorCurve:
        if self._curve is None:
            self._curve = gp_posterior(self.observations(), self.grid, self.kernel)
        return self._curve

    def split(self) -> UncertaintySplit:
        key = (self.bin_counts > 0).tobytes()
        if self._split is None or key != self._split_key:
            self._split = band_integrals(self.curve(), self.band_mode)
            self._split_key = key
        return self._split

    def confusion(self) -> ConfusionCounts:
        """TN/FP/FN/TP recovered by summing bin counts over the four subregions."""
        counts = ConfusionCounts()
        for i in np.flatnonzero(self.bin_counts):
            counts.add(outcome_of_bin(int(i)), int(self.bin_counts[i]))
        return counts


def record_answer(model: ConceptModel, q: Question, prob: float,
                  step: int = 0) -> tuple[ConceptModel, AnswerRecord]:
    record = model.record_answer(q, prob, step)
    return model, record
