import csv
import json
from pathlib import Path

import numpy as np
import pytest

import ndmss.cli as cli
from ndmss import __version__
from ndmss.runio import read_csv, read_json, read_run_log, iteration_to_dict

N2 = """
[model]
n_sites = 2
V = 2.0
g = {g}

[optimizer]
n_iterations = {it}
checkpoint_interval = 100

[run]
mode = exact-summation
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def n2_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("n2")
    cfg = write(tmp, "n2.ini", N2.format(g=0.5, it=2000))
    assert run("run", "--config", cfg, "--output", tmp / "run") == 0
    assert run("exact", "--config", cfg, "--output", tmp / "exact") == 0
    return tmp, cfg


def test_run_outputs(n2_run):
    tmp, _ = n2_run
    summary = read_json(tmp / "run" / "summary.json")
    pt = summary["points"][0]
    assert pt["cost"]["mean"] <= 1e-3
    assert summary["version"] == __version__ and summary["config"]["model"]["n_sites"] == 2
    assert set(pt["observables"]) == {"sx", "sy", "sz"} and all("error" in v for v in pt["observables"].values())
    assert len(pt["reduced_density_matrices"]) == 2
    cks = sorted(p.name for p in (tmp / "run" / "checkpoints").iterdir())
    assert cks[0] == "final.txt" and len(cks) == 21
    assert "config=" in (tmp / "run" / "checkpoints" / "final.txt").read_text()


def test_run_log_roundtrip(n2_run):
    tmp, _ = n2_run
    path = tmp / "run" / "run.jsonl"
    header, records = read_run_log(path)
    assert header["version"] == __version__ and header["config"]["optimizer"]["n_iterations"] == 2000
    assert [r.iteration for r in records] == list(range(2000))
    lines = path.read_text().splitlines()[1:]
    assert [json.loads(x) for x in lines] == [iteration_to_dict(r) for r in records]
    assert records[0].wall_time > 0 and records[100].checkpoint == "checkpoints/iter_000100.txt"
    costs = np.array([r.cost.real for r in records])
    assert costs[-1] < costs[0] / 100


def test_rerun_identical_summary(n2_run, tmp_path):
    tmp, cfg = n2_run
    assert run("run", "--config", cfg, "--output", tmp_path / "again") == 0
    a = (tmp / "run" / "summary.json").read_text()
    b = (tmp_path / "again" / "summary.json").read_text()
    assert a.replace(str(tmp / "run"), "X") == b.replace(str(tmp_path / "again"), "X")


def test_exact_outputs(n2_run, tmp_path):
    tmp, _ = n2_run
    ex = read_json(tmp / "exact" / "exact.json")["points"][0]
    assert ex["residual"] <= 1e-10
    cfg = write(tmp_path, "one.ini", "[model]\nn_sites = 1\ng = 0\n")
    assert run("exact", "--config", cfg, "--output", tmp_path / "e1") == 0
    one = read_json(tmp_path / "e1" / "exact.json")["points"][0]
    assert one["observables"]["sz"]["mean"] == pytest.approx(-1)
    assert one["purity"] == pytest.approx(1)


def test_exact_regression(tmp_path):
    cfg = write(tmp_path, "n2.ini", N2.format(g=1.0, it=1))
    assert run("exact", "--config", cfg, "--output", tmp_path) == 0
    obs = read_json(tmp_path / "exact.json")["points"][0]["observables"]
    assert obs["sx"]["mean"] == pytest.approx(4 / 13, abs=1e-12)
    assert obs["sy"]["mean"] == pytest.approx(6 / 13, abs=1e-12)
    assert obs["sz"]["mean"] == pytest.approx(-7 / 13, abs=1e-12)


def test_compare(n2_run, tmp_path):
    tmp, _ = n2_run
    s, e = tmp / "run" / "summary.json", tmp / "exact" / "exact.json"
    assert run("compare", s, s, "--output", tmp_path / "self") == 0
    rows = read_csv(tmp_path / "self" / "compare.csv")
    assert all(float(r["abs_error"]) == 0 and float(r["rel_error"]) == 0 for r in rows if r["abs_error"])
    assert run("compare", s, e, "--output", tmp_path / "vs") == 0
    rows = read_csv(tmp_path / "vs" / "compare.csv")
    obs = [r for r in rows if r["quantity"] in ("sx", "sy", "sz")]
    assert len(obs) == 3 and all(float(r["rel_error"]) <= 0.05 for r in obs)
    fid = [float(r["fidelity"]) for r in rows if r["fidelity"]]
    assert len(fid) == 2 and all(0.995 <= f <= 1 for f in fid)
    assert (tmp_path / "vs" / "compare.csv").read_text().startswith(f"# version={__version__}")


def test_compare_mismatch(n2_run, tmp_path):
    tmp, _ = n2_run
    cfg = write(tmp_path, "n3.ini", "[model]\nn_sites = 3\ng = 0.5\n")
    assert run("exact", "--config", cfg, "--output", tmp_path / "e3") == 0
    assert run("compare", tmp / "run" / "summary.json", tmp_path / "e3" / "exact.json") == cli.EXIT_MISMATCH
    assert run("compare", tmp / "run" / "summary.json", tmp_path / "missing.json") == cli.EXIT_MISMATCH


def test_exit_codes(tmp_path, monkeypatch):
    bad = write(tmp_path, "bad.ini", "[model]\nn_sites = 2\nV = abc\n")
    assert run("run", "--config", bad) == cli.EXIT_CONFIG
    big = write(tmp_path, "big.ini", "[model]\nn_sites = 7\n")
    assert run("exact", "--config", big) == cli.EXIT_MISMATCH
    assert run("run", "--config", big) == cli.EXIT_CONFIG
    multi = write(tmp_path, "multi.ini", N2.format(g="0.5, 1.0", it=1))
    assert run("run", "--config", multi, "--output", tmp_path / "m") == cli.EXIT_CONFIG

    def boom(*a, **k):
        raise cli.NumericalAbort("non-finite cost")

    monkeypatch.setattr(cli, "run_optimization", boom)
    ok = write(tmp_path, "ok.ini", N2.format(g=0.5, it=3))
    assert run("run", "--config", ok, "--output", tmp_path / "o") == cli.EXIT_NUMERICAL


def test_overrides(tmp_path):
    cfg = write(tmp_path, "c.ini", N2.format(g=0.5, it=3))
    assert run("run", "--config", cfg, "--output", tmp_path / "o", "--seed-override", 7, "--mode", "sampled") == 0
    s = read_json(tmp_path / "o" / "summary.json")
    assert s["config"]["run"]["mode"] == "sampled"
    assert s["config"]["ansatz"]["init_seed"] == 7 and s["config"]["sampler"]["seed"] == 7
    assert s["points"][0]["acceptance_rate"] > 0


def test_single_point_sweep_equals_run(n2_run, tmp_path):
    tmp, cfg = n2_run
    assert run("sweep", "--config", cfg, "--output", tmp_path) == 0
    rows = read_csv(tmp_path / "aggregate.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    sweep = read_json(tmp_path / rows[0]["directory"] / "summary.json")
    single = read_json(tmp / "run" / "summary.json")
    assert sweep["points"] == single["points"]


def test_sweep_continues_after_failure(tmp_path, monkeypatch):
    cfg = write(tmp_path, "s.ini", N2.format(g="0.5, 1.0, 2.0", it=5))
    real = cli.execute_point

    def flaky(c, outdir):
        if c.model.g[0] == 1.0:
            raise cli.NumericalAbort("synthetic failure")
        return real(c, outdir)

    monkeypatch.setattr(cli, "execute_point", flaky)
    assert run("sweep", "--config", cfg, "--output", tmp_path / "sw") == cli.EXIT_SWEEP_FAILED
    rows = read_csv(tmp_path / "sw" / "aggregate.csv")
    assert [r["status"] for r in rows] == ["ok", "failed", "ok"]
    assert "synthetic failure" in rows[1]["message"]
    seeds = {read_json(tmp_path / "sw" / r["directory"] / "summary.json")["points"][0]["init_seed"] for r in (rows[0], rows[2])}
    assert len(seeds) == 2


def test_derived_seeds():
    assert cli.derive_seed(5, 0) == 5
    assert len({cli.derive_seed(5, i) for i in range(20)}) == 20


def test_thread_env(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.thread_count() == 3
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    with pytest.raises(cli.ConfigError):
        cli.thread_count()


def test_parallel_sweep_matches_sequential(tmp_path, monkeypatch):
    text = N2.format(g="0.5, 1.5", it=20)
    seq = write(tmp_path, "seq.ini", text)
    par = write(tmp_path, "par.ini", text + "parallel_points = 2\n")
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    assert run("sweep", "--config", seq, "--output", tmp_path / "a") == 0
    assert run("sweep", "--config", par, "--output", tmp_path / "b") == 0
    ra, rb = read_csv(tmp_path / "a" / "aggregate.csv"), read_csv(tmp_path / "b" / "aggregate.csv")
    assert [r["sx"] for r in ra] == [r["sx"] for r in rb]


def test_n4_sweep_trend(tmp_path):
    text = """
[model]
n_sites = 4
V = 2.0
g = 0.5, 1.0, 2.0, 3.0
[optimizer]
n_iterations = 2000
observable_interval = 100
checkpoint_interval = 1000
[run]
mode = exact-summation
"""
    cfg = write(tmp_path, "n4.ini", text)
    assert run("sweep", "--config", cfg, "--output", tmp_path) == 0
    rows = read_csv(tmp_path / "aggregate.csv")
    assert len(rows) == 4
    with open(tmp_path / "aggregate.csv") as fh:
        assert fh.readline().startswith("# version=")
    sz = np.array([float(r["sz"]) for r in rows])
    exact = np.array([float(r["exact_sz"]) for r in rows])
    assert np.all(np.diff(exact) > 0) and exact[0] < -0.9
    assert np.all(np.diff(sz) > 0)
    assert np.all(np.abs(sz - exact) <= 0.05)
