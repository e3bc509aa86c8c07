import json

import numpy as np
import pytest

from moreau_slab.cli import EXIT_IO, OUTPUT_ENV, main
from moreau_slab.dataio import (
    DataFormatError,
    atomic_output_dir,
    load_csv,
    read_matrix,
    read_trace,
    write_matrix,
)
from moreau_slab.harness import ConfigError, parse_config_text, replication_seeds


def test_csv_round_trip_is_exact(tmp_path):
    m = np.random.default_rng(0).standard_normal((7, 3)) * 10.0 ** np.arange(-5, 16, 7)
    write_matrix(tmp_path / "m.csv", m)
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), m)


def test_ragged_and_bad_cells_name_the_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(DataFormatError, match="line 3"):
        read_matrix(p)
    p.write_text("a,b\n1,2\n3,x\n")
    with pytest.raises(DataFormatError, match="line 3, column 2"):
        read_matrix(p)
    p.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        read_matrix(p)


def test_load_csv_checks_shapes(tmp_path):
    write_matrix(tmp_path / "X.csv", np.ones((4, 2)))
    write_matrix(tmp_path / "z.csv", np.ones((3, 1)), ["z"])
    with pytest.raises(DataFormatError, match="4 rows"):
        load_csv(tmp_path / "X.csv", tmp_path / "z.csv")


def test_atomic_dir_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with atomic_output_dir(target) as tmp:
            (tmp / "partial.txt").write_text("x")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_config_parsing():
    cfg = parse_config_text("# comment\nseed = 4\nn-iter=100 # inline\nsigma2 = none\nwrite_traces = no\n")
    assert cfg == {"seed": 4, "n_iter": 100, "sigma2": None, "write_traces": False}
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("seed 4")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("n = many")


def test_replication_seeds_are_stable_prefixes():
    assert replication_seeds(5, 3) == replication_seeds(5, 4)[:3]
    assert len(set(replication_seeds(5, 50))) == 50


SMALL = ["--n", "30", "--d", "6", "--s-star", "2", "--n-iter", "200", "--burn-in", "20"]


def test_simulate_writes_traces(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--seed", "1", "--replications", "2", "--thin", "4", "--out", str(out)] + SMALL) == 0
    trace = read_trace(out / "trace_001.jsonl")
    assert len(trace) == 50 and trace[-1]["iter"] == 200
    report = json.loads((out / "report.json").read_text())
    assert len(report["replications"]) == 2
    assert (out / "curves.csv").read_text().splitlines()[0].startswith("iter,")


def test_output_directory_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"seed = 2\nout = {tmp_path / 'from_config'}\n")
    assert main(["validate", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_config" / "report.json").exists()
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "from_env"))
    assert main(["validate", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_env" / "report.json").exists()
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "report.json").exists()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 2\nreplications = 3\n")
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--replications", "1", "--out", str(out)] + SMALL) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["replications"] == 1 and report["config"]["seed"] == 2


def test_error_exit_codes(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path / "a")] + SMALL) == EXIT_IO  # no seed
    assert main(["fit", "--seed", "1", "--x", "missing.csv", "--z", "missing.csv", "--out", str(tmp_path / "b")]) == EXIT_IO
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["simulate", "--config", str(bad)]) == EXIT_IO
    assert "unknown key" in capsys.readouterr().err
    assert not (tmp_path / "a").exists()


def test_fit_with_given_variance(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 4))
    write_matrix(tmp_path / "X.csv", X)
    write_matrix(tmp_path / "z.csv", (X[:, 0] * 2 + rng.standard_normal(40))[:, None], ["z"])
    out = tmp_path / "fit"
    args = ["fit", "--seed", "0", "--x", str(tmp_path / "X.csv"), "--z", str(tmp_path / "z.csv"),
            "--sigma2", "1.0", "--n-iter", "500", "--burn-in", "100", "--no-traces", "--out", str(out)]
    assert main(args) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["sigma2_source"] == "given"
    assert report["inclusion_probs"][0] > 0.9
    assert not (out / "trace.jsonl").exists()
