"""Cost and <sx> against iteration for one run, written as a two-panel CSV.

    python scripts/convergence_trace.py --g 3.0 --out results/trace_g3.csv
    python scripts/convergence_trace.py --sampled --g 0.5 --iterations 1000
"""

import argparse
from pathlib import Path

from ndmss.ansatz import init_random
from ndmss.model import TransverseIsingModel
from ndmss.optimizer import OptimizerConfig, run_optimization
from ndmss.runio import write_csv
from ndmss.sampler import SamplerConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-sites", type=int, default=4)
    ap.add_argument("--V", type=float, default=2.0)
    ap.add_argument("--g", type=float, default=3.0)
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sampled", action="store_true")
    ap.add_argument("--every", type=int, default=10, help="observable interval")
    ap.add_argument("--out", type=Path, default=Path("results/convergence.csv"))
    args = ap.parse_args()

    mode = "sampled" if args.sampled else "exact-summation"
    m = TransverseIsingModel(args.n_sites, args.V, args.g)
    rows = []

    def record(rec):
        row = {"iteration": rec.iteration, "cost": rec.cost.real, "cost_error": rec.cost.error_of_mean}
        if rec.observables:
            row["sx"] = rec.observables["sx"].real
            row["sx_error"] = rec.observables["sx"].error_of_mean
        rows.append(row)
        if rec.iteration % 100 == 0:
            print(f"{rec.iteration:6d}  cost={rec.cost.real:.3e}")

    run_optimization(
        m, init_random(args.n_sites, 1, 1, 0.01, args.seed), SamplerConfig(100, 30, 10, 1, seed=args.seed),
        OptimizerConfig(n_iterations=args.iterations, observable_interval=args.every), mode=mode,
        callback=record, keep_records=False,
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["iteration", "cost", "cost_error", "sx", "sx_error"], rows,
              [f"n_sites={args.n_sites} V={args.V} g={args.g} mode={mode} seed={args.seed}"])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
