import csv
import json
import sys
from pathlib import Path

import pytest

from reachcast.cli import main
from reachcast.core import load_cohort, save_cohort
from reachcast.synth import gen_cohort

STUBS = Path(__file__).parent / "stubs"


def synth_spec(tmp_path, n_control=3, n_stroke=3, protocol="P2", seed=7, **extra):
    spec = {"n_control": n_control, "n_stroke": n_stroke, "protocol": protocol,
            "seed": seed, **extra}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


def eval_config(tmp_path, **kw):
    doc = {"context_size": 8, "forecast_counts": [0, 8], "bootstrap_b": 20,
           "repeats_r": 3, "pool_size_m": 4, "seed": 5}
    doc.update(kw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestSynth:
    def test_writes_cohort(self, tmp_path, capsys):
        spec = synth_spec(tmp_path)
        out = tmp_path / "cohort.json"
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
        assert "6 subjects" in capsys.readouterr().out
        cohort = load_cohort(out)
        assert len(cohort.subjects) == 6

    def test_byte_identical_reruns(self, tmp_path):
        spec = synth_spec(tmp_path)
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        main(["synth", "--spec", str(spec), "--out", str(out1)])
        main(["synth", "--spec", str(spec), "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_spec_exits_2(self, tmp_path, capsys):
        missing = tmp_path / "nope.json"
        assert main(["synth", "--spec", str(missing), "--out", str(tmp_path / "o.json")]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_profile_overrides(self, tmp_path):
        spec = synth_spec(tmp_path, profile_overrides={"posture_noise_sd": 0.0})
        out = tmp_path / "c.json"
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
        cohort = load_cohort(out)
        t = cohort.subjects[0].valid_trials()[0]
        assert t.trace.samples[:4].max() == 0.0


@pytest.fixture(scope="module")
def run_inputs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cohort = gen_cohort(4, 4, "P2", seed=13, label="cli")
    cohort_path = tmp / "cohort.json"
    save_cohort(cohort, cohort_path)
    config_path = eval_config(tmp)
    return tmp, cohort_path, config_path


class TestRun:
    def test_replay_run_produces_outputs(self, run_inputs):
        tmp, cohort_path, config_path = run_inputs
        out = tmp / "out-replay"
        rc = main(["run", "--cohort", str(cohort_path), "--config", str(config_path),
                   "--forecaster", "replay", "--out", str(out)])
        assert rc == 0
        for name in ("curves.csv", "points.csv", "report.csv", "manifest.json"):
            assert (out / name).exists()
        with open(out / "report.csv") as fh:
            rows = list(csv.DictReader(fh))
        params = {r["parameter"] for r in rows}
        assert params == {"posture_speed", "reaction_time", "movement_time", "max_speed"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5
        assert set(manifest["inputs"]) == {str(cohort_path), str(config_path)}

    def test_rerun_byte_identical_csv(self, run_inputs):
        tmp, cohort_path, config_path = run_inputs
        out1, out2 = tmp / "det1", tmp / "det2"
        for out in (out1, out2):
            assert main(["run", "--cohort", str(cohort_path), "--config", str(config_path),
                         "--forecaster", "replay", "--out", str(out)]) == 0
        for name in ("curves.csv", "points.csv", "report.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_context_flag_overrides(self, run_inputs):
        tmp, cohort_path, config_path = run_inputs
        out = tmp / "out-c16"
        rc = main(["run", "--cohort", str(cohort_path), "--config", str(config_path),
                   "--forecaster", "replay", "--out", str(out), "--context", "16"])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["context_size"] == 16

    def test_bad_handshake_exits_3(self, run_inputs, capsys):
        tmp, cohort_path, config_path = run_inputs
        rc = main(["run", "--cohort", str(cohort_path), "--config", str(config_path),
                   "--forecaster", "external", "--out", str(tmp / "x"),
                   "--external-cmd", sys.executable, str(STUBS / "bad_handshake_stub.py")])
        assert rc == 3
        assert "forecaster" in capsys.readouterr().err

    def test_external_stub_run(self, run_inputs):
        tmp, cohort_path, config_path = run_inputs
        out = tmp / "out-ext"
        rc = main(["run", "--cohort", str(cohort_path), "--config", str(config_path),
                   "--forecaster", "external", "--out", str(out),
                   "--external-cmd", sys.executable, str(STUBS / "noise_stub.py")])
        assert rc == 0
        assert (out / "report.csv").exists()

    def test_missing_cohort_exits_2(self, run_inputs):
        tmp, _, config_path = run_inputs
        rc = main(["run", "--cohort", str(tmp / "nope.json"), "--config", str(config_path),
                   "--forecaster", "replay", "--out", str(tmp / "y")])
        assert rc == 2


class TestSessionTimes:
    def test_output_schema_and_ordering(self, tmp_path):
        cohort = gen_cohort(3, 3, ["P2", "P3"], seed=21, label="st")
        cohort_path = tmp_path / "c.json"
        save_cohort(cohort, cohort_path)
        out = tmp_path / "sessions.csv"
        assert main(["session-times", "--cohort", str(cohort_path), "--out", str(out)]) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        sessions = [r for r in rows if r["record"] == "session"]
        by_subject = {}
        for r in sessions:
            by_subject.setdefault(r["subject_id"], {})[r["scope"]] = float(r["seconds"])
        assert len(by_subject) == 6
        for scopes in by_subject.values():
            assert scopes["first8"] <= scopes["all"]
        ecdf = [r for r in rows if r["record"] == "ecdf"]
        assert ecdf and all(0 < float(r["cum_fraction"]) <= 1 for r in ecdf)

    def test_empty_cohort_warns(self, tmp_path, capsys):
        (tmp_path / "empty.json").write_text('{"label": "e", "subjects": []}')
        out = tmp_path / "s.csv"
        assert main(["session-times", "--cohort", str(tmp_path / "empty.json"),
                     "--out", str(out)]) == 0
        assert "empty" in capsys.readouterr().err
        assert out.read_text().startswith("record,")

    def test_bad_cohort_exits_2(self, tmp_path):
        (tmp_path / "bad.json").write_text("{")
        rc = main(["session-times", "--cohort", str(tmp_path / "bad.json"),
                   "--out", str(tmp_path / "s.csv")])
        assert rc == 2
