"""Questioning strategies and the adaptive questioning loop."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import AdapterError, ParameterError, PoolExhausted, VTTError
from .gp import BAND_MODES, KernelParams, UncertaintySplit
from .performance import AnswerRecord, ConceptModel
from .pool import TIE_TOL, Dataset, Question, QuestionPool, build_pool, candidate_keys

log = logging.getLogger(__name__)


class StrategyKind(enum.Enum):
    RANDOM = "random"
    UNPREDICTABILITY = "unpredictability"
    UNCERTAINTY = "uncertainty"
    COMBINED = "combined"

    @classmethod
    def parse(cls, text) -> "StrategyKind":
        if isinstance(text, cls):
            return text
        aliases = {"uncertainty+unpredictability": "combined",
                   "uncertainty_and_unpredictability": "combined"}
        try:
            return cls(aliases.get(str(text).lower(), str(text).lower()))
        except ValueError:
            raise ParameterError(f"unknown strategy {text!r}; choose from "
                                 f"{[s.value for s in cls]}") from None


ALL_STRATEGIES = tuple(StrategyKind)


@dataclass
class SessionConfig:
    strategy: StrategyKind = StrategyKind.UNCERTAINTY
    max_questions: int = 100
    uncertainty_stop: Optional[float] = None
    epsilon: float = 0.15
    kernel: KernelParams = field(default_factory=KernelParams)
    seed: int = 0
    frequency_mode: bool = False
    band_mode: str = "std"

    def __post_init__(self):
        self.strategy = StrategyKind.parse(self.strategy)
        if isinstance(self.kernel, Mapping):
            self.kernel = KernelParams(**self.kernel)
        if int(self.max_questions) < 1:
            raise ParameterError("max_questions must be at least 1")
        self.max_questions = int(self.max_questions)
        if not 0.0 < self.epsilon < 0.5:
            raise ParameterError("epsilon must lie in (0, 0.5)")
        if self.band_mode not in BAND_MODES:
            raise ParameterError(f"band_mode must be one of {BAND_MODES}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategy"] = self.strategy.value
        return d

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SessionConfig":
        data = dict(data)
        kernel = {}
        for key in ("length_scale", "signal_variance", "noise_variance"):
            if key in data:
                kernel[key] = float(data.pop(key))
        if kernel:
            base = data.pop("kernel", {}) or {}
            data["kernel"] = {**base, **kernel}
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _coerce(text: str):
    low = text.strip().lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text.strip()


def load_config(path) -> dict:
    """Read a JSON object or flat ``key = value`` lines (``#`` comments)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"{path}:{lineno}: expected key = value")
        out[key.strip()] = _coerce(value)
    return out


@dataclass
class SessionLog:
    """History of one session plus the uncertainty state after every step."""

    concepts: list[str]
    config: SessionConfig
    records: list[AnswerRecord] = field(default_factory=list)
    u_total: list[float] = field(default_factory=list)
    splits: list[np.ndarray] = field(default_factory=list)  # (n_concepts, 2) per step
    models: dict[str, ConceptModel] = field(default_factory=dict)
    complete: bool = True
    stop_reason: str = ""
    error: Optional[str] = None
    _tally: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: AnswerRecord, splits: Mapping[str, UncertaintySplit]) -> None:
        self.records.append(record)
        snap = np.array([[splits[c].u_neg, splits[c].u_pos] for c in self.concepts])
        self.splits.append(snap)
        self.u_total.append(float(sum(splits[c].total for c in self.concepts)))
        key = (record.question.concept_id, record.question.gt)
        n, n_yes = self._tally.get(key, (0, 0))
        self._tally[key] = (n + 1, n_yes + int(record.said_yes))

    def yes_tally(self, concept_id: str, gt: int) -> tuple[int, int]:
        return self._tally.get((concept_id, gt), (0, 0))

    def question_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(self.concepts, 0)
        for r in self.records:
            counts[r.question.concept_id] += 1
        return counts


def predictability(q: Question, history: SessionLog) -> float:
    """Laplace-smoothed Yes rate among past answers with the same (concept, gt)."""
    n, n_yes = history.yes_tally(q.concept_id, q.gt)
    return (n_yes + 1) / (n + 2)


def _bucket_predictability(pool: QuestionPool, history: SessionLog, key) -> float:
    j, gt = key
    n, n_yes = history.yes_tally(pool.dataset.concepts[j], gt)
    return (n_yes + 1) / (n + 2)


def _unpredictable(pool, history, keys, epsilon, fallback_to_closest):
    dist = {k: abs(_bucket_predictability(pool, history, k) - 0.5) for k in keys}
    chosen = [k for k in keys if dist[k] < epsilon]
    if chosen or not fallback_to_closest:
        return chosen
    best = min(dist.values())
    return [k for k in keys if dist[k] - best <= TIE_TOL]


def select_question(strategy: StrategyKind, pool: QuestionPool, history: SessionLog,
                    splits: Mapping[str, UncertaintySplit], rng: np.random.Generator,
                    epsilon: float = 0.15) -> Question:
    if len(pool) == 0:
        raise PoolExhausted("question pool is empty")
    strategy = StrategyKind.parse(strategy)
    live = [k for k in pool.keys if pool.bucket_size(*k) > 0]
    if strategy is StrategyKind.RANDOM:
        keys = live
    elif strategy is StrategyKind.UNPREDICTABILITY:
        keys = _unpredictable(pool, history, live, epsilon, fallback_to_closest=True)
    else:
        keys = candidate_keys(pool, splits)
        if strategy is StrategyKind.COMBINED:
            keys = _unpredictable(pool, history, keys, epsilon, fallback_to_closest=False) or keys
    return pool.draw(keys, rng)


Answerer = Callable[[Question], float]


def run_session(config: SessionConfig, dataset: Dataset, mue: Answerer,
                rng: Optional[np.random.Generator] = None) -> SessionLog:
    if rng is None:
        rng = np.random.default_rng(config.seed)
    pool = build_pool(dataset)
    models = {c: ConceptModel(c, config.kernel, config.frequency_mode, config.band_mode)
              for c in dataset.concepts}
    splits = {c: m.split() for c, m in models.items()}
    history = SessionLog(list(dataset.concepts), config, models=models)

    while True:
        q = select_question(config.strategy, pool, history, splits, rng, config.epsilon)
        try:
            prob = float(mue(q))
            if not 0.0 <= prob <= 1.0:
                raise AdapterError(f"answer {prob!r} for {q} outside [0, 1]")
        except (VTTError, OSError, ValueError) as exc:
            log.error("MuE failed on %s after %d answers: %s", q, len(history), exc)
            history.complete = False
            history.error = str(exc)
            history.stop_reason = "adapter-error"
            break
        model = models[q.concept_id]
        record = model.record_answer(q, prob, step=len(history) + 1)
        splits[q.concept_id] = model.split()
        history.append(record, splits)
        pool.remove(q)

        if config.uncertainty_stop is not None and history.u_total[-1] <= config.uncertainty_stop:
            history.stop_reason = "uncertainty"
            break
        if len(history) >= config.max_questions:
            history.stop_reason = "budget"
            break
        if len(pool) == 0:
            history.stop_reason = "exhausted"
            break
    return history
