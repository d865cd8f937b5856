"""Site-averaged magnetisation versus transverse field, ansatz against the exact steady state.

Writes a CSV with one row per field value. Exact summation keeps this quick
at N <= 6; pass --sampled to train with Monte Carlo estimates instead.

    python scripts/field_sweep.py --n-sites 4 --out results/field_sweep.csv
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from ndmss.ansatz import init_random
from ndmss.model import TransverseIsingModel
from ndmss.observables import magnetizations
from ndmss.optimizer import OptimizerConfig, evaluate_state, run_optimization
from ndmss.oracle import ansatz_to_dense, build_dense_liouvillian, expectation, fidelity, partial_trace, steady_state
from ndmss.runio import write_csv
from ndmss.sampler import SamplerConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-sites", type=int, default=4)
    ap.add_argument("--V", type=float, default=2.0)
    ap.add_argument("--g", type=float, nargs="+", default=[0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    ap.add_argument("--alpha", default="1")
    ap.add_argument("--beta", default="1")
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sampled", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("results/field_sweep.csv"))
    args = ap.parse_args()

    mode = "sampled" if args.sampled else "exact-summation"
    sampler = SamplerConfig(100, 30, 10, 1, seed=args.seed)
    opt = OptimizerConfig(n_iterations=args.iterations, observable_interval=10**9)
    ops = magnetizations(args.n_sites)
    rows = []
    for g in args.g:
        m = TransverseIsingModel(args.n_sites, args.V, g)
        rho_ss = steady_state(build_dense_liouvillian(m))
        p0 = init_random(args.n_sites, args.alpha, args.beta, 0.01, args.seed)
        p, tr = run_optimization(m, p0, sampler, opt, mode=mode, keep_records=True)
        final = evaluate_state(p, m, dataclasses.replace(sampler, seed=args.seed + 1), mode, args.iterations, True, False)
        rho = ansatz_to_dense(p)
        row = {"g": g, "cost": final.cost.real}
        for k, op in ops.items():
            row[k] = final.observables[k].real
            row[f"{k}_error"] = final.observables[k].error_of_mean
            row[f"exact_{k}"] = expectation(rho_ss, op)
        row["min_fidelity"] = min(
            fidelity(partial_trace(rho, [j]), partial_trace(rho_ss, [j])) for j in range(args.n_sites)
        )
        rows.append(row)
        print(
            f"g={g:5.2f} cost={row['cost']:.2e} "
            + " ".join(f"{k}={row[k]:+.4f}({row['exact_' + k]:+.4f})" for k in ops)
            + f" F={row['min_fidelity']:.5f}"
        )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, list(rows[0]), rows, [f"n_sites={args.n_sites} V={args.V} mode={mode} seed={args.seed}"])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
