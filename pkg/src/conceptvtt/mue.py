"""Answer sources f: Q -> [0, 1] for the method under evaluation (MuE)."""

from __future__ import annotations

import csv
import math
import os
import select
import shlex
import subprocess
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from .errors import AdapterError, InputError, MissingEntryError, SpecError
from .pool import Dataset, Question, _read_table


def most_common_concept(dataset: Dataset) -> str:
    if dataset.n_samples == 0 or dataset.n_concepts == 0:
        raise InputError("dataset is empty")
    # argmax returns the first maximum, which is the tie rule we want
    return dataset.concepts[int(np.argmax(dataset.positives()))]


@dataclass(frozen=True)
class Confidence:
    """How a Yes/No decision is turned into a probability.

    kind ``uniform``: uniform over the chosen half, (0.5, 1] for Yes and
    [0, 0.5) for No.  ``fixed``: Yes -> value, No -> 1 - value.  ``beta``:
    x ~ Beta(alpha, beta) folded onto the half, Yes -> 0.5 + x/2.
    """

    kind: str = "uniform"
    value: float = 1.0
    alpha: float = 2.0
    beta: float = 2.0

    def __post_init__(self):
        if self.kind not in ("uniform", "fixed", "beta"):
            raise SpecError(f"unknown confidence distribution {self.kind!r}")
        if self.kind == "fixed" and not 0.5 < self.value <= 1.0:
            raise SpecError("fixed confidence must lie in (0.5, 1]")
        if self.kind == "beta" and not (self.alpha > 0 and self.beta > 0):
            raise SpecError("beta parameters must be positive")

    @classmethod
    def parse(cls, text: str) -> "Confidence":
        """``uniform`` | ``fixed:0.9`` | ``beta:2,5``."""
        name, _, arg = text.partition(":")
        try:
            if name == "uniform" and not arg:
                return cls("uniform")
            if name == "fixed":
                return cls("fixed", value=float(arg))
            if name == "beta":
                a, b = (float(v) for v in arg.split(","))
                return cls("beta", alpha=a, beta=b)
        except ValueError:
            pass
        raise SpecError(f"cannot parse confidence distribution {text!r}")

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed:{self.value!r}"
        if self.kind == "beta":
            return f"beta:{self.alpha!r},{self.beta!r}"
        return "uniform"

    def draw(self, yes: bool, rng: np.random.Generator) -> float:
        if self.kind == "uniform":
            x = rng.uniform(0.0, 0.5)  # [0, 0.5)
            return 1.0 - x if yes else x
        if self.kind == "fixed":
            return self.value if yes else 1.0 - self.value
        x = 0.5 * rng.beta(self.alpha, self.beta)
        if x <= 0.0:
            x = math.nextafter(0.0, 1.0)
        return 0.5 + x if yes else 0.5 - x


@dataclass(frozen=True)
class SyntheticMuESpec:
    accuracy_by_concept: Mapping[str, float]
    confidence: Confidence = field(default_factory=Confidence)
    seed: int = 0

    def __post_init__(self):
        for c, acc in self.accuracy_by_concept.items():
            if not 0.0 < acc <= 1.0:
                raise SpecError(f"accuracy for {c!r} must lie in (0, 1], got {acc!r}")

    def accuracy(self, concept_id: str) -> float:
        try:
            return self.accuracy_by_concept[concept_id]
        except KeyError:
            raise SpecError(f"synthetic MuE has no accuracy for concept {concept_id!r}") from None


def unbiased_spec(dataset: Dataset, accuracy: float = 0.7, **kw) -> SyntheticMuESpec:
    return SyntheticMuESpec({c: accuracy for c in dataset.concepts}, **kw)


def biased_spec(dataset: Dataset, common: float = 0.9, others: float = 0.5,
                **kw) -> SyntheticMuESpec:
    top = most_common_concept(dataset)
    return SyntheticMuESpec({c: common if c == top else others for c in dataset.concepts}, **kw)


def negatively_biased_spec(dataset: Dataset, **kw) -> SyntheticMuESpec:
    return biased_spec(dataset, common=0.5, others=0.9, **kw)


SYNTHETIC_PROFILES = {
    "unbiased": unbiased_spec,
    "biased": biased_spec,
    "neg-biased": negatively_biased_spec,
}


def synthetic_answer(spec: SyntheticMuESpec, q: Question, rng: np.random.Generator) -> float:
    acc = spec.accuracy(q.concept_id)
    correct = rng.random() < acc
    yes = correct == bool(q.gt)
    return float(spec.confidence.draw(yes, rng))


class SyntheticMuE:
    """Deterministic synthetic classifier.

    Each question gets its own generator seeded from (seed, sample, concept),
    so the answer to a question does not depend on when it is asked.
    """

    def __init__(self, spec: SyntheticMuESpec):
        self.spec = spec

    def _rng(self, q: Question) -> np.random.Generator:
        key = zlib.crc32(f"{q.sample_id}\x1f{q.concept_id}".encode())
        return np.random.default_rng([self.spec.seed, key])

    def __call__(self, q: Question) -> float:
        return synthetic_answer(self.spec, q, self._rng(q))


class ProbabilityMatrix:
    """Pre-computed MuE outputs, one probability per (sample, concept)."""

    def __init__(self, table: Mapping[tuple[str, str], float]):
        for key, p in table.items():
            if not 0.0 <= p <= 1.0:
                raise InputError(f"probability for {key} outside [0, 1]: {p!r}")
        self.table = dict(table)

    @classmethod
    def load(cls, path) -> "ProbabilityMatrix":
        def cell(raw):
            value = float(raw)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"probability must lie in [0, 1], got {raw!r}")
            return value
        samples, concepts, probs = _read_table(path, cell)
        return cls({(s, c): float(probs[i, j]) for i, s in enumerate(samples)
                    for j, c in enumerate(concepts)})

    @classmethod
    def from_answers(cls, dataset: Dataset, mue) -> "ProbabilityMatrix":
        return cls({(s, c): float(mue(Question(s, c, dataset.label(s, c))))
                    for s in dataset.samples for c in dataset.concepts})

    def write(self, path, dataset: Dataset) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", *dataset.concepts])
            for s in dataset.samples:
                w.writerow([s, *(repr(self.table[(s, c)]) for c in dataset.concepts)])

    def __call__(self, q: Question) -> float:
        return matrix_answer(self, q)


def matrix_answer(matrix: ProbabilityMatrix, q: Question) -> float:
    try:
        return matrix.table[(q.sample_id, q.concept_id)]
    except KeyError:
        raise MissingEntryError(f"no probability stored for sample {q.sample_id!r}, "
                                f"concept {q.concept_id!r}") from None


def parse_reply(line: str) -> float:
    try:
        value = float(line.strip())
    except ValueError:
        raise AdapterError(f"malformed reply {line!r}") from None
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise AdapterError(f"reply {value!r} outside [0, 1]")
    return value


class SubprocessMuE:
    """Line-protocol bridge to an external classifier.

    Request ``sample_id,concept_id\\n``; reply one decimal in [0, 1] per line.
    One request is in flight at a time.
    """

    def __init__(self, command: Union[str, list], timeout: float = 10.0,
                 cwd: Optional[str] = None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.timeout = timeout
        self._buf = b""
        try:
            self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE,
                                         stdout=subprocess.PIPE, bufsize=0, cwd=cwd)
        except OSError as exc:
            raise AdapterError(f"cannot start {self.command}: {exc}") from exc

    def _readline(self) -> str:
        fd = self.proc.stdout.fileno()
        deadline = time.monotonic() + self.timeout
        while b"\n" not in self._buf:
            left = deadline - time.monotonic()
            if left <= 0:
                raise AdapterError(f"no reply within {self.timeout} s")
            ready, _, _ = select.select([fd], [], [], left)
            if not ready:
                raise AdapterError(f"no reply within {self.timeout} s")
            chunk = os.read(fd, 4096)
            if not chunk:
                raise AdapterError(f"answer process exited (code {self.proc.poll()})")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("utf-8", errors="replace")

    def __call__(self, q: Question) -> float:
        return subprocess_answer(self, q)

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
                self.proc.wait(timeout=1.0)
            except (OSError, subprocess.TimeoutExpired):
                self.proc.kill()
                self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def subprocess_answer(endpoint: SubprocessMuE, q: Question) -> float:
    if "," in q.sample_id or "\n" in q.sample_id or "," in q.concept_id:
        raise AdapterError(f"ids cannot be sent over the line protocol: {q}")
    try:
        endpoint.proc.stdin.write(f"{q.sample_id},{q.concept_id}\n".encode())
        endpoint.proc.stdin.flush()
    except (BrokenPipeError, OSError) as exc:
        raise AdapterError(f"cannot write to answer process: {exc}") from exc
    return parse_reply(endpoint._readline())
