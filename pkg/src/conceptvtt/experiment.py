"""Repeated multi-strategy experiments: sessions fan out, aggregate joins."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ParameterError
from .gp import prior_split
from .mue import (SYNTHETIC_PROFILES, Confidence, ProbabilityMatrix, SubprocessMuE,
                  SyntheticMuE, SyntheticMuESpec)
from .pool import Dataset
from .report import (aggregate, emit_concept_comparison, emit_gp_curve, render_aggregate_svg,
                     write_aggregate_csv, write_session_csv)
from .strategies import ALL_STRATEGIES, SessionConfig, SessionLog, StrategyKind, run_session

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MuESource:
    """What answers the questions.

    ``kind`` is a synthetic profile name (unbiased / biased / neg-biased),
    ``matrix`` (``target`` is a CSV path) or ``subprocess`` (``target`` is
    the command line).
    """

    kind: str = "unbiased"
    target: Optional[str] = None
    confidence: Confidence = field(default_factory=Confidence)
    seed: int = 0
    timeout: float = 10.0

    @classmethod
    def parse(cls, text: str, **kw) -> "MuESource":
        kind, _, target = text.partition(":")
        if kind in SYNTHETIC_PROFILES and not target:
            return cls(kind, **kw)
        if kind in ("matrix", "subprocess") and target:
            return cls(kind, target, **kw)
        raise ParameterError(f"cannot parse MuE source {text!r}; expected one of "
                             f"{sorted(SYNTHETIC_PROFILES)}, matrix:PATH or subprocess:CMD")

    @property
    def shareable(self) -> bool:
        return self.kind != "subprocess"

    def synthetic_spec(self, dataset: Dataset, repeat: int = 0) -> SyntheticMuESpec:
        # one MuE per repeat, shared by every strategy in that repeat
        seed = int(np.random.SeedSequence([self.seed, repeat]).generate_state(1)[0])
        return SYNTHETIC_PROFILES[self.kind](dataset, confidence=self.confidence, seed=seed)

    def build(self, dataset: Dataset, repeat: int = 0):
        if self.kind in SYNTHETIC_PROFILES:
            return SyntheticMuE(self.synthetic_spec(dataset, repeat))
        if self.kind == "matrix":
            return ProbabilityMatrix.load(self.target)
        if self.kind == "subprocess":
            return SubprocessMuE(self.target, timeout=self.timeout)
        raise ParameterError(f"unknown MuE kind {self.kind!r}")

    def describe(self) -> dict:
        return {"kind": self.kind, "target": self.target, "confidence": str(self.confidence),
                "seed": self.seed, "timeout": self.timeout}


@dataclass
class ExperimentSpec:
    dataset: Dataset
    mue: MuESource
    config: SessionConfig
    strategies: Sequence[StrategyKind] = ALL_STRATEGIES
    repeats: int = 10
    checkpoints: Optional[Sequence[int]] = None
    out_dir: Union[str, Path] = "results"
    workers: int = 1
    curves: bool = False

    def __post_init__(self):
        self.strategies = [StrategyKind.parse(s) for s in self.strategies]
        if not self.strategies:
            raise ParameterError("at least one strategy is required")
        if self.repeats < 1:
            raise ParameterError("repeats must be at least 1")
        self.out_dir = Path(self.out_dir)


def session_rng(seed: int, repeat: int, strategy: StrategyKind) -> np.random.Generator:
    return np.random.default_rng([seed, repeat, ALL_STRATEGIES.index(strategy)])


def run_one(dataset: Dataset, mue, config: SessionConfig, repeat: int) -> SessionLog:
    rng = session_rng(config.seed, repeat, config.strategy)
    return run_session(config, dataset, mue, rng)


def _worker(args) -> SessionLog:
    dataset, source, config, repeat = args
    return run_one(dataset, source.build(dataset, repeat), config, repeat)


def session_name(strategy: StrategyKind, repeat: int) -> str:
    return f"{strategy.value}_r{repeat:02d}"


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every (strategy, repeat) session and write the report files.

    Layout under ``out_dir``: ``sessions/<strategy>_rNN.csv``,
    ``aggregate.csv`` / ``aggregate.svg``, ``concept_summary.csv``,
    ``manifest.json`` and, with ``curves``, ``curves/<strategy>/`` for the
    first repeat.
    """
    out = spec.out_dir
    (out / "sessions").mkdir(parents=True, exist_ok=True)
    jobs = [(r, s) for r in range(spec.repeats) for s in spec.strategies]
    configs = {s: replace(spec.config, strategy=s) for s in spec.strategies}

    if spec.workers > 1 and spec.mue.shareable:
        args = [(spec.dataset, spec.mue, configs[s], r) for r, s in jobs]
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            logs = list(pool.map(_worker, args))
    else:
        logs = []
        cache = {}
        for r, s in jobs:
            if r not in cache:
                for old in cache.values():
                    getattr(old, "close", lambda: None)()
                cache = {r: spec.mue.build(spec.dataset, r)}
            logs.append(run_one(spec.dataset, cache[r], configs[s], r))
        for old in cache.values():
            getattr(old, "close", lambda: None)()

    summary = out / "concept_summary.csv"
    summary.unlink(missing_ok=True)
    traces: dict[str, list] = {s.value: [] for s in spec.strategies}
    incomplete = []
    for (r, s), history in zip(jobs, logs):
        write_session_csv(history, out / "sessions" / f"{session_name(s, r)}.csv")
        emit_concept_comparison(history, summary, extra={"strategy": s.value, "repeat": r},
                                append=True)
        traces[s.value].append(history.u_total)
        if not history.complete:
            incomplete.append({"session": session_name(s, r), "error": history.error})
        if spec.curves and r == 0:
            cdir = out / "curves" / s.value
            cdir.mkdir(parents=True, exist_ok=True)
            for c, model in history.models.items():
                emit_gp_curve(model, cdir / f"{c}.csv", svg=True)

    prior_total = prior_split(spec.config.kernel, spec.config.band_mode).total * spec.dataset.n_concepts
    rows = aggregate(traces, spec.dataset.n_concepts, prior_total, spec.checkpoints)
    write_aggregate_csv(rows, out / "aggregate.csv")
    render_aggregate_svg(out / "aggregate.csv", out / "aggregate.svg",
                         title=f"{spec.mue.kind} MuE, {spec.repeats} repeats")

    manifest = {
        "config": spec.config.to_dict(),
        "strategies": [s.value for s in spec.strategies],
        "repeats": spec.repeats,
        "mue": spec.mue.describe(),
        "n_samples": spec.dataset.n_samples,
        "concepts": spec.dataset.concepts,
        "incomplete": incomplete,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if incomplete:
        log.error("%d sessions aborted early", len(incomplete))
    return {"logs": logs, "jobs": jobs, "aggregate": rows, "incomplete": incomplete}
