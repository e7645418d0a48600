"""Command-line front end: ``run``, ``experiment``, ``gen-dataset``, ``replay``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import VTTError
from .experiment import ExperimentSpec, MuESource, run_experiment
from .mue import Confidence
from .pool import generate_dataset, load_dataset, write_dataset
from .report import (emit_concept_comparison, emit_gp_curve, read_session_csv, replay,
                     write_session_csv, write_session_meta)
from .strategies import (ALL_STRATEGIES, SessionConfig, SessionLog, StrategyKind, load_config,
                         run_session)

log = logging.getLogger("conceptvtt")

# flag dest -> SessionConfig key
CONFIG_FLAGS = {
    "strategy": "strategy", "max_questions": "max_questions",
    "uncertainty_stop": "uncertainty_stop", "epsilon": "epsilon", "seed": "seed",
    "frequency_mode": "frequency_mode", "band_mode": "band_mode",
    "length_scale": "length_scale", "signal_variance": "signal_variance",
    "noise_variance": "noise_variance",
}


def _prevalence(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prevalence list {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _add_dataset_args(p):
    g = p.add_argument_group("dataset")
    g.add_argument("--dataset", type=Path, help="label CSV: sample_id,<concept>,...")
    g.add_argument("--n-samples", type=int, default=200)
    g.add_argument("--n-concepts", type=int, default=11)
    g.add_argument("--prevalence", type=_prevalence, help="comma-separated, one per concept")
    g.add_argument("--dataset-seed", type=int, default=0)


def _add_session_args(p, seed_required=False):
    p.add_argument("--config", type=Path, help="JSON or key = value file")
    p.add_argument("--max-questions", type=int, help="question budget (tau)")
    p.add_argument("--uncertainty-stop", type=float)
    p.add_argument("--epsilon", type=float, help="unpredictability threshold")
    p.add_argument("--seed", type=int, required=seed_required)
    p.add_argument("--frequency-mode", action="store_true", default=None)
    p.add_argument("--band-mode", choices=["std", "variance"])
    p.add_argument("--length-scale", type=float)
    p.add_argument("--signal-variance", type=float)
    p.add_argument("--noise-variance", type=float)
    g = p.add_argument_group("method under evaluation")
    g.add_argument("--mue", default="unbiased",
                   help="unbiased | biased | neg-biased | matrix:PATH | subprocess:CMD")
    g.add_argument("--confidence", default="uniform", help="uniform | fixed:V | beta:A,B")
    g.add_argument("--mue-seed", type=int, default=0)
    g.add_argument("--timeout", type=float, default=10.0, help="subprocess reply timeout (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conceptvtt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="write a synthetic label CSV")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--n-concepts", type=int, required=True)
    p.add_argument("--prevalence", type=_prevalence)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("run", help="run one questioning session")
    _add_dataset_args(p)
    _add_session_args(p)
    p.add_argument("--strategy", choices=[s.value for s in ALL_STRATEGIES])
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--svg", action="store_true", help="also render per-concept SVG curves")

    p = sub.add_parser("experiment", help="strategies x repeats grid")
    _add_dataset_args(p)
    _add_session_args(p, seed_required=True)
    p.add_argument("--strategies", default=",".join(s.value for s in ALL_STRATEGIES))
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--checkpoints", type=_int_list)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--curves", action="store_true", help="GP curves for the first repeat")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("replay", help="rebuild the performance model from a session CSV")
    p.add_argument("session", type=Path)
    p.add_argument("--dataset", type=Path, help="supplies concepts never asked about")
    p.add_argument("--config", type=Path)
    p.add_argument("--frequency-mode", action="store_true", default=None)
    p.add_argument("--band-mode", choices=["std", "variance"])
    p.add_argument("--length-scale", type=float)
    p.add_argument("--signal-variance", type=float)
    p.add_argument("--noise-variance", type=float)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--svg", action="store_true")
    return parser


def session_config(args) -> SessionConfig:
    data = load_config(args.config) if getattr(args, "config", None) else {}
    for dest, key in CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            data[key] = value
    return SessionConfig.from_mapping(data)


def dataset_from_args(args):
    if args.dataset is not None:
        return load_dataset(args.dataset)
    return generate_dataset(args.n_samples, args.n_concepts, args.prevalence, args.dataset_seed)


def mue_source(args) -> MuESource:
    return MuESource.parse(args.mue, confidence=Confidence.parse(args.confidence),
                           seed=args.mue_seed, timeout=args.timeout)


def cmd_gen_dataset(args) -> int:
    ds = generate_dataset(args.n_samples, args.n_concepts, args.prevalence, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, args.out)
    print(f"wrote {ds.n_samples} samples x {ds.n_concepts} concepts to {args.out}")
    return 0


def _write_models(history: SessionLog, out: Path, svg: bool) -> None:
    (out / "curves").mkdir(parents=True, exist_ok=True)
    for c, model in history.models.items():
        emit_gp_curve(model, out / "curves" / f"{c}.csv", svg=svg)
    emit_concept_comparison(history, out / "concepts.csv")


def cmd_run(args) -> int:
    config = session_config(args)
    dataset = dataset_from_args(args)
    source = mue_source(args)
    mue = source.build(dataset)
    try:
        history = run_session(config, dataset, mue)
    finally:
        getattr(mue, "close", lambda: None)()
    args.out.mkdir(parents=True, exist_ok=True)
    write_session_csv(history, args.out / "session.csv")
    write_session_meta(history, args.out / "session.json")
    _write_models(history, args.out, args.svg)
    u = history.u_total[-1] if history.u_total else float("nan")
    print(f"{config.strategy.value}: {len(history)} questions, stop={history.stop_reason}, "
          f"u_total={u:.6f}")
    if not history.complete:
        print(f"error: session aborted: {history.error}", file=sys.stderr)
        return 2
    return 0


def cmd_experiment(args) -> int:
    config = session_config(args)
    dataset = dataset_from_args(args)
    strategies = [StrategyKind.parse(s) for s in args.strategies.split(",") if s]
    spec = ExperimentSpec(dataset, mue_source(args), config, strategies, args.repeats,
                          args.checkpoints, args.out, args.workers, args.curves)
    result = run_experiment(spec)
    last = {}
    for row in result["aggregate"]:
        last[row["strategy"]] = row
    for s, row in last.items():
        print(f"{s:>16}: checkpoint {row['checkpoint']:>5}  mean u_total "
              f"{row['mean_u_total']:.4f} +/- {row['std_u_total']:.4f}")
    if result["incomplete"]:
        print(f"error: {len(result['incomplete'])} sessions aborted", file=sys.stderr)
        return 2
    return 0


def cmd_replay(args) -> int:
    config = session_config(args)
    rows = read_session_csv(args.session)
    concepts = load_dataset(args.dataset).concepts if args.dataset else None
    models, records, trace = replay(rows, concepts, config.kernel, config.frequency_mode,
                                    config.band_mode)
    history = SessionLog(list(models), config, models=models)
    history.records = records
    history.u_total = trace
    args.out.mkdir(parents=True, exist_ok=True)
    _write_models(history, args.out, args.svg)
    worst = max((abs(t - r["u_total_after"]) for t, r in zip(trace, rows)), default=0.0)
    print(f"replayed {len(rows)} answers over {len(models)} concepts; "
          f"max |u_total - logged| = {worst:.3g}")
    return 0


COMMANDS = {"gen-dataset": cmd_gen_dataset, "run": cmd_run, "experiment": cmd_experiment,
            "replay": cmd_replay}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (VTTError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
