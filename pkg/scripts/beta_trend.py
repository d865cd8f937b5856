"""Relative error of <sx> against the ancilla density beta, over several seeds.

    python scripts/beta_trend.py --g 1.2 --betas 1 2 --seeds 5
"""

import argparse

import numpy as np

from ndmss.ansatz import init_random
from ndmss.model import TransverseIsingModel
from ndmss.observables import magnetizations
from ndmss.optimizer import OptimizerConfig, run_optimization
from ndmss.oracle import ansatz_to_dense, build_dense_liouvillian, expectation, steady_state
from ndmss.sampler import SamplerConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-sites", type=int, default=4)
    ap.add_argument("--V", type=float, default=2.0)
    ap.add_argument("--g", type=float, default=1.2)
    ap.add_argument("--alpha", default="1")
    ap.add_argument("--betas", nargs="+", default=["1", "2"])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--iterations", type=int, default=2000)
    args = ap.parse_args()

    m = TransverseIsingModel(args.n_sites, args.V, args.g)
    sx = magnetizations(args.n_sites)["sx"]
    exact = expectation(steady_state(build_dense_liouvillian(m)), sx)
    print(f"exact <sx> = {exact:.6f}")
    print("beta  median_rel_err  per-seed")
    for beta in args.betas:
        errs = []
        for seed in range(args.seeds):
            p, _ = run_optimization(
                m, init_random(args.n_sites, args.alpha, beta, 0.01, seed), SamplerConfig(),
                OptimizerConfig(n_iterations=args.iterations, observable_interval=10**9), mode="exact-summation",
            )
            errs.append(abs(expectation(ansatz_to_dense(p), sx) - exact) / abs(exact))
        print(f"{beta:>4}  {np.median(errs):.4f}          " + " ".join(f"{e:.4f}" for e in errs))


if __name__ == "__main__":
    main()
