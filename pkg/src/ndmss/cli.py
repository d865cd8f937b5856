"""Command-line driver: ``ndmss {run,exact,compare,sweep}``.

Exit codes: 0 success, 1 at least one sweep point failed, 2 configuration
error, 3 numerical abort, 4 system too large or mismatched inputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import NdmParameters, init_random, save_parameters
from .config import ConfigError, ExperimentConfig, load_config
from .model import TransverseIsingModel
from .observables import magnetizations
from .optimizer import NumericalAbort, SolverError, evaluate_state, iteration_seed, run_optimization
from .oracle import (
    MAX_DENSE_SITES,
    ansatz_to_dense,
    build_dense_liouvillian,
    expectation,
    fidelity,
    partial_trace,
    purity,
    steady_state,
    steady_state_residual,
)
from .runio import RunLog, matrix_from_json, matrix_to_json, read_json, write_csv, write_json

log = logging.getLogger("ndmss")

EXIT_OK, EXIT_SWEEP_FAILED, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_MISMATCH = 0, 1, 2, 3, 4
THREADS_ENV = "NDMSS_THREADS"
OBSERVABLES = ("sx", "sy", "sz")


class InputMismatch(ValueError):
    pass


class TooLarge(ValueError):
    pass


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def derive_seed(seed, point: int):
    """Seed for sweep point ``point``; point 0 keeps the master seed."""
    if point == 0:
        return seed
    return int(np.random.SeedSequence([*np.atleast_1d(seed).tolist(), point]).generate_state(1)[0])


def point_config(cfg: ExperimentConfig, g: float, point: int) -> ExperimentConfig:
    cfg = cfg.with_point(g)
    return dataclasses.replace(
        cfg,
        ansatz=dataclasses.replace(cfg.ansatz, init_seed=derive_seed(cfg.ansatz.init_seed, point)),
        sampler=dataclasses.replace(cfg.sampler, seed=derive_seed(cfg.sampler.seed, point)),
    )


def model_of(cfg: ExperimentConfig, g: float | None = None) -> TransverseIsingModel:
    m = cfg.model
    return TransverseIsingModel(m.n_sites, m.V, m.g[0] if g is None else g, m.gamma, boundary=m.boundary)


def _model_echo(cfg: ExperimentConfig) -> dict:
    m = cfg.model
    return {"n_sites": m.n_sites, "V": m.V, "gamma": m.gamma, "boundary": m.boundary}


def _site_matrices(rho) -> list:
    return [matrix_to_json(partial_trace(rho, [j]).matrix) for j in range(rho.n_sites)]


def _reproducibility_header(cfg: ExperimentConfig) -> str:
    return f"version={__version__}\nconfig={json.dumps(cfg.to_dict(), sort_keys=True)}"


# ---------------------------------------------------------------- run


def execute_point(cfg: ExperimentConfig, outdir: Path) -> dict:
    """Optimise one model point; writes run.jsonl, checkpoints and summary.json in ``outdir``."""
    outdir.mkdir(parents=True, exist_ok=True)
    ckdir = outdir / "checkpoints"
    ckdir.mkdir(exist_ok=True)
    model = model_of(cfg)
    a = cfg.ansatz
    params = init_random(cfg.model.n_sites, a.alpha, a.beta, a.init_scale, a.init_seed)
    header = _reproducibility_header(cfg)

    def checkpoint(t: int, p: NdmParameters) -> str:
        name = f"checkpoints/iter_{t:06d}.txt"
        save_parameters(p, outdir / name, header=f"iteration={t}\n{header}")
        return name

    with RunLog(outdir / "run.jsonl", cfg.to_dict()) as runlog:
        p, _ = run_optimization(
            model,
            params,
            cfg.sampler,
            cfg.optimizer,
            mode=cfg.run.mode,
            callback=runlog.append,
            checkpoint=checkpoint,
            keep_records=False,
        )
    n_it = cfg.optimizer.n_iterations
    save_parameters(p, ckdir / "final.txt", header=f"iteration={n_it}\n{header}")

    # final state, evaluated with the seed stream of iteration n_iterations
    final = evaluate_state(p, model, cfg.sampler, cfg.run.mode, n_it, with_observables=True, with_sr=False)
    point = {
        "g": model.g,
        "mode": cfg.run.mode,
        "n_iterations": n_it,
        "cost": final.cost.as_dict(),
        "acceptance_rate": final.acceptance_rate,
        "observables": {k: final.observables[k].as_dict() for k in OBSERVABLES},
        "checkpoint": "checkpoints/final.txt",
        "init_seed": cfg.ansatz.init_seed,
        "sampler_seed": cfg.sampler.seed,
    }
    if cfg.model.n_sites <= MAX_DENSE_SITES:
        point["reduced_density_matrices"] = _site_matrices(ansatz_to_dense(p))
    summary = {
        "kind": "run",
        "version": __version__,
        "config": cfg.to_dict(),
        "model": _model_echo(cfg),
        "points": [point],
    }
    write_json(outdir / "summary.json", summary)
    return summary


def cmd_run(cfg: ExperimentConfig, outdir: Path) -> int:
    if len(cfg.model.g) != 1:
        raise ConfigError("[model] g: 'run' takes a single value; use 'sweep' for a list")
    summary = execute_point(point_config(cfg, cfg.model.g[0], 0), outdir)
    pt = summary["points"][0]
    obs = "  ".join(f"{k}={v['mean']:+.6f}+-{v['error']:.1e}" for k, v in pt["observables"].items())
    print(f"g={pt['g']:g}  cost={pt['cost']['mean']:.3e}  {obs}")
    print(f"wrote {outdir / 'summary.json'}")
    return EXIT_OK


# ---------------------------------------------------------------- exact


def exact_point(cfg: ExperimentConfig, g: float) -> dict:
    n = cfg.model.n_sites
    if n > MAX_DENSE_SITES:
        raise TooLarge(f"dense oracle supports n_sites <= {MAX_DENSE_SITES}, got {n}")
    model = model_of(cfg, g)
    L = build_dense_liouvillian(model)
    rho = steady_state(L)
    ops = magnetizations(n)
    return {
        "g": g,
        "observables": {k: {"mean": expectation(rho, ops[k]), "error": 0.0} for k in OBSERVABLES},
        "purity": purity(rho),
        "residual": steady_state_residual(L, rho),
        "reduced_density_matrices": _site_matrices(rho),
    }


def cmd_exact(cfg: ExperimentConfig, outdir: Path) -> int:
    points = [exact_point(cfg, g) for g in cfg.model.g]
    outdir.mkdir(parents=True, exist_ok=True)
    write_json(
        outdir / "exact.json",
        {"kind": "exact", "version": __version__, "config": cfg.to_dict(), "model": _model_echo(cfg), "points": points},
    )
    for pt in points:
        obs = "  ".join(f"{k}={v['mean']:+.6f}" for k, v in pt["observables"].items())
        print(f"g={pt['g']:g}  {obs}  purity={pt['purity']:.6f}  residual={pt['residual']:.1e}")
    print(f"wrote {outdir / 'exact.json'}")
    return EXIT_OK


# ---------------------------------------------------------------- compare

COMPARE_COLUMNS = ["g", "quantity", "value", "reference", "abs_error", "rel_error", "fidelity"]


def _rel(a: float, b: float) -> float:
    d = abs(a - b)
    if d == 0:
        return 0.0
    return d / abs(b) if b != 0 else math.inf


def compare_summaries(a: dict, b: dict) -> list[dict]:
    """Rows of ``a`` measured against the reference ``b``."""
    if a.get("model") != b.get("model"):
        raise InputMismatch(f"model blocks differ: {a.get('model')} vs {b.get('model')}")
    rows = []
    for pa in a["points"]:
        match = [pb for pb in b["points"] if math.isclose(pa["g"], pb["g"], rel_tol=1e-12, abs_tol=1e-12)]
        if not match:
            raise InputMismatch(f"reference has no point with g={pa['g']}")
        pb = match[0]
        for k in OBSERVABLES:
            va, vb = pa["observables"][k]["mean"], pb["observables"][k]["mean"]
            rows.append(
                {"g": pa["g"], "quantity": k, "value": va, "reference": vb, "abs_error": abs(va - vb), "rel_error": _rel(va, vb)}
            )
        ra, rb = pa.get("reduced_density_matrices"), pb.get("reduced_density_matrices")
        if ra is not None and rb is not None:
            for j, (ma, mb) in enumerate(zip(ra, rb)):
                f = fidelity(matrix_from_json(ma), matrix_from_json(mb))
                rows.append({"g": pa["g"], "quantity": f"site{j}", "fidelity": f})
    return rows


def cmd_compare(run_path: Path, ref_path: Path, outdir: Path) -> int:
    a, b = read_json(run_path), read_json(ref_path)
    rows = compare_summaries(a, b)
    outdir.mkdir(parents=True, exist_ok=True)
    comments = [f"version={__version__}", f"run={run_path}", f"reference={ref_path}", f"config={json.dumps(a.get('config'), sort_keys=True)}"]
    write_csv(outdir / "compare.csv", COMPARE_COLUMNS, rows, comments)
    for r in rows:
        if "fidelity" in r:
            print(f"g={r['g']:g}  {r['quantity']}  fidelity={r['fidelity']:.6f}")
        else:
            print(f"g={r['g']:g}  {r['quantity']}  abs={r['abs_error']:.3e}  rel={r['rel_error']:.3e}")
    print(f"wrote {outdir / 'compare.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = ["g", "status", "cost", "cost_error"]
for _k in OBSERVABLES:
    SWEEP_COLUMNS += [_k, f"{_k}_error"]
SWEEP_COLUMNS += [f"exact_{k}" for k in OBSERVABLES] + [f"rel_error_{k}" for k in OBSERVABLES]
SWEEP_COLUMNS += ["min_fidelity", "directory", "message"]


def _sweep_point(cfg: ExperimentConfig, g: float, i: int, root: Path) -> dict:
    sub = root / f"point_{i:03d}_g{g:g}"
    row = {"g": g, "directory": sub.name}
    try:
        summary = execute_point(point_config(cfg, g, i), sub)
        pt = summary["points"][0]
        row.update(status="ok", cost=pt["cost"]["mean"], cost_error=pt["cost"]["error"])
        for k in OBSERVABLES:
            row[k] = pt["observables"][k]["mean"]
            row[f"{k}_error"] = pt["observables"][k]["error"]
        if cfg.model.n_sites <= MAX_DENSE_SITES:
            ex = {"kind": "exact", "version": __version__, "config": cfg.with_point(g).to_dict(),
                  "model": _model_echo(cfg), "points": [exact_point(cfg, g)]}
            write_json(sub / "exact.json", ex)
            cmp = compare_summaries(summary, ex)
            for r in cmp:
                if "fidelity" in r:
                    row["min_fidelity"] = min(row.get("min_fidelity", 1.0), r["fidelity"])
                else:
                    row[f"exact_{r['quantity']}"] = r["reference"]
                    row[f"rel_error_{r['quantity']}"] = r["rel_error"]
    except Exception as exc:  # noqa: BLE001 - a failed point must not stop the sweep
        log.error("sweep point g=%g failed: %s", g, exc)
        row.update(status="failed", message=f"{type(exc).__name__}: {exc}")
    return row


def cmd_sweep(cfg: ExperimentConfig, outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    gs = cfg.model.g
    workers = min(cfg.run.parallel_points, thread_count(), len(gs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, [cfg] * len(gs), gs, range(len(gs)), [outdir] * len(gs)))
    else:
        rows = [_sweep_point(cfg, g, i, outdir) for i, g in enumerate(gs)]
    comments = [f"version={__version__}", f"config={json.dumps(cfg.to_dict(), sort_keys=True)}"]
    write_csv(outdir / "aggregate.csv", SWEEP_COLUMNS, rows, comments)
    n_failed = sum(r["status"] != "ok" for r in rows)
    for r in rows:
        if r["status"] == "ok":
            print(f"g={r['g']:g}  cost={r['cost']:.3e}  sx={r['sx']:+.5f}  sy={r['sy']:+.5f}  sz={r['sz']:+.5f}")
        else:
            print(f"g={r['g']:g}  FAILED  {r['message']}")
    print(f"wrote {outdir / 'aggregate.csv'}")
    return EXIT_SWEEP_FAILED if n_failed else EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ndmss", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", type=Path, required=config_required, help="experiment config file")
        p.add_argument("--output", type=Path, help="output directory (overrides [output] directory)")
        p.add_argument("--seed-override", type=int, help="replaces both the init and the sampler seed")
        p.add_argument("--mode", choices=("sampled", "exact-summation"), help="overrides [run] mode")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("run", help="optimise the ansatz for one model point"))
    common(sub.add_parser("exact", help="dense steady state for each g"))
    common(sub.add_parser("sweep", help="one run per g value plus an aggregate table"))
    cp = sub.add_parser("compare", help="compare a run summary against a reference output")
    cp.add_argument("summary", type=Path)
    cp.add_argument("reference", type=Path)
    cp.add_argument("--output", type=Path, default=Path("."))
    cp.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed_override is not None:
        cfg = dataclasses.replace(
            cfg,
            ansatz=dataclasses.replace(cfg.ansatz, init_seed=args.seed_override),
            sampler=dataclasses.replace(cfg.sampler, seed=args.seed_override),
        )
    if args.mode is not None:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, mode=args.mode))
    if args.output is not None:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, directory=str(args.output)))
    if cfg.run.mode == "exact-summation" and cfg.model.n_sites > MAX_DENSE_SITES and args.command != "exact":
        raise ConfigError(f"[run] mode: exact-summation requires n_sites <= {MAX_DENSE_SITES}")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            return cmd_compare(args.summary, args.reference, args.output)
        cfg = resolve_config(args)
        outdir = Path(cfg.output.directory)
        if args.command == "run":
            return cmd_run(cfg, outdir)
        if args.command == "exact":
            return cmd_exact(cfg, outdir)
        return cmd_sweep(cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalAbort, SolverError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TooLarge, InputMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (OSError, ValueError, KeyError) as exc:
        if args.command == "compare":
            print(f"error: cannot read inputs: {exc}", file=sys.stderr)
            return EXIT_MISMATCH
        raise


if __name__ == "__main__":
    sys.exit(main())
