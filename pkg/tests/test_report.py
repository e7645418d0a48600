import csv
import filecmp
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conceptvtt.cli import main
from conceptvtt.experiment import ExperimentSpec, MuESource, run_experiment
from conceptvtt.mue import ProbabilityMatrix, SyntheticMuE, unbiased_spec
from conceptvtt.performance import ConceptModel
from conceptvtt.pool import Question, generate_dataset
from conceptvtt.report import (SESSION_COLUMNS, concept_rows, default_checkpoints,
                               emit_concept_comparison, emit_gp_curve, read_aggregate_csv,
                               read_curve_csv, read_session_csv, write_session_csv)
from conceptvtt.strategies import ALL_STRATEGIES, SessionConfig, SessionLog, run_session


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def small():
    return generate_dataset(40, 3, prevalence=[0.5, 0.25, 0.1], seed=4)


class TestCurveFile:
    def test_empty_model(self, tmp_path):
        data = read_curve_csv(emit_gp_curve(ConceptModel("A"), tmp_path / "a.csv"))
        assert len(data["a"]) == 101
        assert np.all(data["mean"] == 0) and np.all(data["count"] == 0)
        assert np.all(data["lower"] == -2.0) and np.all(data["upper"] == 2.0)

    def test_single_answer(self, tmp_path):
        m = ConceptModel("A")
        m.record_answer(Question("s", "A", 1), 0.9)
        data = read_curve_csv(emit_gp_curve(m, tmp_path / "a.csv"))
        assert data["count"].sum() == 1
        assert data["a"][data["count"] == 1].tolist() == [0.95]

    def test_band_area_matches_integrals(self, tmp_path, small):
        log = run_session(SessionConfig(max_questions=30), small, SyntheticMuE(unbiased_spec(small)))
        for c, m in log.models.items():
            data = read_curve_csv(emit_gp_curve(m, tmp_path / f"{c}.csv"))
            width = data["upper"] - data["lower"]
            # plain trapezoid over the file rows
            area = float(np.sum(np.diff(data["a"]) * (width[1:] + width[:-1]) / 2))
            assert area == pytest.approx(m.split().total, abs=1e-6)

    def test_svg_is_wellformed(self, tmp_path):
        m = ConceptModel("A")
        m.record_answer(Question("s", "A", 0), 0.3)
        emit_gp_curve(m, tmp_path / "a.csv", svg=True)
        root = ET.parse(tmp_path / "a.svg").getroot()
        assert root.tag.endswith("svg")
        tags = {el.tag.split("}")[-1] for el in root.iter()}
        assert {"polygon", "polyline", "circle"} <= tags


class TestComparison:
    def test_zero_question_session(self, tmp_path, small):
        cfg = SessionConfig()
        log = SessionLog(small.concepts, cfg,
                         models={c: ConceptModel(c) for c in small.concepts})
        rows = read_rows(emit_concept_comparison(log, tmp_path / "c.csv"))
        assert [int(r["questions"]) for r in rows] == [0, 0, 0]
        assert all(float(r["u_total"]) == 4.0 for r in rows)
        assert all(r[k] == "0" for r in rows for k in ("tn", "fp", "fn", "tp"))

    def test_counts_sum_to_questions(self, small):
        log = run_session(SessionConfig(max_questions=37), small, SyntheticMuE(unbiased_spec(small)))
        rows = concept_rows(log)
        assert sum(r["questions"] for r in rows) == 37
        assert sum(r["tn"] + r["fp"] + r["fn"] + r["tp"] for r in rows) == 37
        assert all(r["asked_neg"] + r["asked_pos"] == r["questions"] for r in rows)


class TestSessionCsv:
    def test_roundtrip(self, tmp_path, small):
        log = run_session(SessionConfig(max_questions=20), small, SyntheticMuE(unbiased_spec(small)))
        path = write_session_csv(log, tmp_path / "s.csv")
        assert path.read_text().splitlines()[0] == ",".join(SESSION_COLUMNS)
        rows = read_session_csv(path)
        assert [r["prob"] for r in rows] == [r.prob for r in log.records]
        assert [r["u_total_after"] for r in rows] == log.u_total
        assert [r["outcome"] for r in rows] == [r.outcome for r in log.records]


def test_default_checkpoints():
    assert default_checkpoints(35) == [10, 20, 30, 35]
    assert default_checkpoints(30) == [10, 20, 30]
    assert default_checkpoints(0) == []


@pytest.fixture(scope="module")
def result(tmp_path_factory, small):
    out = tmp_path_factory.mktemp("exp")
    spec = ExperimentSpec(small, MuESource("biased", seed=2), SessionConfig(max_questions=60, seed=7),
                          repeats=10, out_dir=out, curves=True)
    return out, run_experiment(spec)


class TestExperiment:
    def test_file_counts(self, result):
        out, _ = result
        assert len(list((out / "sessions").glob("*.csv"))) == 40
        assert (out / "aggregate.csv").exists() and (out / "aggregate.svg").exists()
        assert len(list((out / "curves" / "random").glob("*.csv"))) == 3

    def test_aggregate_non_increasing(self, result):
        out, _ = result
        rows = read_aggregate_csv(out / "aggregate.csv")
        for s in ALL_STRATEGIES:
            means = [r["mean_u_total"] for r in rows if r["strategy"] == s.value]
            assert len(means) == 6
            assert all(b <= a + 1e-12 for a, b in zip(means, means[1:]))

    def test_aggregate_recomputed_from_sessions(self, result):
        out, _ = result
        rows = read_aggregate_csv(out / "aggregate.csv")
        for r in rows:
            vals = []
            for rep in range(10):
                session = read_session_csv(out / "sessions" / f"{r['strategy']}_r{rep:02d}.csv")
                vals.append(session[min(r["checkpoint"], len(session)) - 1]["u_total_after"])
            assert r["mean_u_total"] == pytest.approx(np.mean(vals), abs=1e-9)
            assert r["std_u_total"] == pytest.approx(np.std(vals), abs=1e-9)
            assert r["mean_u_per_concept"] == pytest.approx(np.mean(vals) / 3, abs=1e-9)

    def test_summary_rows(self, result):
        out, _ = result
        rows = read_rows(out / "concept_summary.csv")
        assert len(rows) == 40 * 3
        assert {r["strategy"] for r in rows} == {s.value for s in ALL_STRATEGIES}

    def test_rerun_byte_identical(self, result, tmp_path, small):
        out, _ = result
        spec = ExperimentSpec(small, MuESource("biased", seed=2), SessionConfig(max_questions=60, seed=7),
                              repeats=10, out_dir=tmp_path, workers=2)
        run_experiment(spec)
        names = [p.name for p in (out / "sessions").glob("*.csv")]
        match, mismatch, errors = filecmp.cmpfiles(out / "sessions", tmp_path / "sessions", names,
                                                   shallow=False)
        assert not mismatch and not errors
        assert filecmp.cmp(out / "aggregate.csv", tmp_path / "aggregate.csv", shallow=False)

    def test_full_pool_same_final_state(self, tmp_path, small):
        matrix_path = tmp_path / "probs.csv"
        ProbabilityMatrix.from_answers(small, SyntheticMuE(unbiased_spec(small, seed=5))).write(
            matrix_path, small)
        spec = ExperimentSpec(small, MuESource("matrix", str(matrix_path)),
                              SessionConfig(max_questions=10_000, seed=1), repeats=2, out_dir=tmp_path)
        res = run_experiment(spec)
        finals = [{c: m.bin_counts.tolist() for c, m in log.models.items()} for log in res["logs"]]
        assert all(f == finals[0] for f in finals)


class TestCli:
    def test_gen_and_run(self, tmp_path, capsys):
        ds = tmp_path / "d.csv"
        assert main(["gen-dataset", "--n-samples", "30", "--n-concepts", "3",
                     "--prevalence", "0.5,0.2,0.1", "--seed", "1", "--out", str(ds)]) == 0
        assert main(["run", "--dataset", str(ds), "--strategy", "uncertainty", "--max-questions",
                     "25", "--mue", "biased", "--seed", "4", "--out", str(tmp_path / "run"),
                     "--svg"]) == 0
        assert "25 questions" in capsys.readouterr().out
        assert len(read_session_csv(tmp_path / "run" / "session.csv")) == 25
        assert (tmp_path / "run" / "curves" / "c00.svg").exists()
        assert (tmp_path / "run" / "concepts.csv").exists()

        assert main(["replay", str(tmp_path / "run" / "session.csv"), "--dataset", str(ds),
                     "--out", str(tmp_path / "replay")]) == 0
        assert "max |u_total - logged| = 0" in capsys.readouterr().out
        assert filecmp.cmp(tmp_path / "run" / "concepts.csv", tmp_path / "replay" / "concepts.csv",
                           shallow=False)

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("strategy = random\nmax_questions = 12\n")
        assert main(["run", "--n-samples", "20", "--n-concepts", "2", "--config", str(cfg),
                     "--max-questions", "7", "--out", str(tmp_path / "o")]) == 0
        rows = read_session_csv(tmp_path / "o" / "session.csv")
        assert len(rows) == 7

    def test_experiment_requires_seed(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["experiment", "--out", str(tmp_path)])

    def test_experiment(self, tmp_path, capsys):
        assert main(["experiment", "--n-samples", "20", "--n-concepts", "2", "--seed", "3",
                     "--repeats", "2", "--max-questions", "15", "--strategies", "random,uncertainty",
                     "--out", str(tmp_path)]) == 0
        assert len(list((tmp_path / "sessions").glob("*.csv"))) == 4

    def test_bad_dataset_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("sample_id,A\nx,7\n")
        assert main(["run", "--dataset", str(bad), "--out", str(tmp_path / "o")]) == 1
        assert "row 2" in capsys.readouterr().err

    def test_subprocess_mue_failure_exit_code(self, tmp_path, fake_mue_cmd, capsys):
        cmd = " ".join(fake_mue_cmd("fixed:abc"))
        code = main(["run", "--n-samples", "10", "--n-concepts", "2", "--mue", f"subprocess:{cmd}",
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "aborted" in capsys.readouterr().err
