"""Stochastic gradient descent with optional stochastic reconfiguration.

Each iteration draws one batch from the joint chain (or enumerates all labels
in exact-summation mode), estimates cost and gradient, optionally
preconditions the gradient with ``(S + shift I)^{-1}`` where ``S`` is the
covariance of the log-derivatives, and steps ``v <- v - lr(t) * delta``.

Randomness for iteration ``t`` is derived from ``(seed, t)``, so a run
resumed from a checkpoint at iteration ``t`` reproduces the original
trajectory exactly.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .ansatz import NdmParameters
from .estimators import exact_statistics, gradient_estimate, observable_estimate
from .model import TransverseIsingModel
from .observables import magnetizations
from .sampler import SamplerConfig, run_chain_diagonal, run_chain_joint
from .stats import EstimateWithError

log = logging.getLogger(__name__)

MODES = ("sampled", "exact-summation")
DENSE_SOLVE_LIMIT = 2000


class NumericalAbort(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    n_iterations: int = 1000
    learning_rate: float = 0.005
    schedule: str = "constant"  # or "exponential"
    decay_rate: float = 0.0
    sr_enabled: bool = True
    sr_diag_shift: float = 5e-4
    solver_tolerance: float = 1e-6
    observable_interval: int = 1
    checkpoint_interval: int = 100
    divergence_factor: float = 100.0

    def validate(self) -> None:
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.schedule not in ("constant", "exponential"):
            raise ValueError(f"schedule must be 'constant' or 'exponential', got {self.schedule!r}")
        if self.sr_enabled and not self.sr_diag_shift > 0:
            raise ValueError("sr_diag_shift must be positive when SR is enabled")
        if self.observable_interval < 1:
            raise ValueError("observable_interval must be >= 1")
        if self.checkpoint_interval < 0:
            raise ValueError("checkpoint_interval must be >= 0")
        if self.decay_rate < 0:
            raise ValueError("decay_rate must be >= 0")

    def learning_rate_at(self, t: int) -> float:
        if self.schedule == "exponential":
            return self.learning_rate * math.exp(-self.decay_rate * t)
        return self.learning_rate


@dataclass
class IterationRecord:
    iteration: int
    cost: EstimateWithError
    acceptance_rate: float | None
    observables: dict[str, EstimateWithError]
    checkpoint: str | None = None
    wall_time: float = 0.0


@dataclass
class OptimizationTrajectory:
    records: list[IterationRecord] = field(default_factory=list)

    def append(self, rec: IterationRecord) -> None:
        if self.records and rec.iteration <= self.records[-1].iteration:
            raise ValueError("records must be strictly ordered by iteration")
        self.records.append(rec)

    def costs(self) -> np.ndarray:
        return np.array([r.cost.real for r in self.records])


def sr_matrix(O, weights=None) -> np.ndarray:
    """``Re[<O* O^T> - <O*><O^T>]`` over samples (rows of ``O``), optionally weighted."""
    O = np.atleast_2d(np.asarray(O))
    if O.shape[0] == 0:
        raise ValueError("no samples")
    if weights is None:
        w = np.full(O.shape[0], 1.0 / O.shape[0])
    else:
        w = np.asarray(weights, dtype=np.float64)
        w = w / w.sum()
    mean = w @ O
    centered = O - mean
    S = (centered.conj().T * w) @ centered
    S = S.real
    return 0.5 * (S + S.T)


def compute_update(g, S, cfg: OptimizerConfig) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if not cfg.sr_enabled or S is None:
        return g.copy()
    S = np.asarray(S)
    if S.shape != (g.size, g.size):
        raise ValueError("SR matrix and gradient shapes differ")
    A = S + cfg.sr_diag_shift * np.eye(g.size)
    if g.size <= DENSE_SOLVE_LIMIT:
        try:
            return sla.cho_solve(sla.cho_factor(A), g)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"SR solve failed: {exc}") from exc
    delta, info = spla.cg(A, g, rtol=cfg.solver_tolerance, maxiter=10 * g.size)
    if info != 0:
        raise SolverError(f"conjugate gradient did not converge (info={info})")
    return delta


def iteration_seed(seed, t: int, stream: int) -> tuple[int, ...]:
    return tuple(np.atleast_1d(seed).tolist()) + (t, stream)


@dataclass
class StateEvaluation:
    cost: EstimateWithError
    gradient: np.ndarray
    sr: np.ndarray | None
    acceptance_rate: float | None
    observables: dict[str, EstimateWithError]


def evaluate_state(
    p: NdmParameters,
    model: TransverseIsingModel,
    sampler_cfg: SamplerConfig,
    mode: str,
    iteration: int,
    with_observables: bool = True,
    with_sr: bool = True,
) -> StateEvaluation:
    ops = magnetizations(model.n_sites)
    if mode == "exact-summation":
        st = exact_statistics(p, model)
        obs = {}
        if with_observables:
            D = 2**model.n_sites
            rho = st.rho.reshape(D, D)
            tr = np.trace(rho)
            obs = {
                name: EstimateWithError.exact(float(np.real(np.trace(rho @ op.to_dense(model.n_sites)) / tr)))
                for name, op in ops.items()
            }
        S = sr_matrix(st.log_derivatives, st.probabilities) if with_sr else None
        return StateEvaluation(EstimateWithError.exact(st.cost), st.gradient, S, None, obs)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    joint_cfg = dataclasses.replace(sampler_cfg, seed=iteration_seed(sampler_cfg.seed, iteration, 0))
    samples = run_chain_joint(p, joint_cfg)
    ge = gradient_estimate(p, model, samples)
    obs = {}
    if with_observables:
        diag_cfg = dataclasses.replace(sampler_cfg, seed=iteration_seed(sampler_cfg.seed, iteration, 1))
        diag = run_chain_diagonal(p, diag_cfg)
        obs = {name: observable_estimate(p, op, diag) for name, op in ops.items()}
    S = sr_matrix(ge.log_derivatives) if with_sr else None
    return StateEvaluation(ge.cost, ge.gradient, S, samples.acceptance_rate, obs)


def run_optimization(
    model: TransverseIsingModel,
    params: NdmParameters,
    sampler_cfg: SamplerConfig,
    opt_cfg: OptimizerConfig,
    mode: str = "sampled",
    callback: Callable[[IterationRecord], None] | None = None,
    checkpoint: Callable[[int, NdmParameters], str] | None = None,
    start_iteration: int = 0,
    keep_records: bool = True,
) -> tuple[NdmParameters, OptimizationTrajectory]:
    """Minimise the cost starting from ``params`` (iterations ``start_iteration..n_iterations-1``).

    ``callback`` receives each record as soon as it is produced.
    ``checkpoint(t, params)`` is called every ``checkpoint_interval``
    iterations with the parameters *before* the update of iteration ``t``
    and returns a reference stored in that record.
    """
    opt_cfg.validate()
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if params.n_visible != model.n_sites:
        raise ValueError("ansatz and model sizes differ")
    if mode == "sampled":
        sampler_cfg.validate(model.n_sites)

    traj = OptimizationTrajectory()
    v = params.to_vector()
    p = params
    first_cost = None
    for t in range(start_iteration, opt_cfg.n_iterations):
        t0 = time.perf_counter()
        want_obs = t % opt_cfg.observable_interval == 0
        ev = evaluate_state(p, model, sampler_cfg, mode, t, want_obs, opt_cfg.sr_enabled)
        cost = ev.cost.real
        if not np.isfinite(cost) or not np.all(np.isfinite(ev.gradient)):
            raise NumericalAbort(f"non-finite cost or gradient at iteration {t}")
        if first_cost is None:
            first_cost = cost
        elif cost > opt_cfg.divergence_factor * first_cost:
            raise NumericalAbort(
                f"cost {cost:.3e} at iteration {t} exceeds {opt_cfg.divergence_factor}x the initial {first_cost:.3e}"
            )
        ref = None
        if checkpoint is not None and opt_cfg.checkpoint_interval > 0 and t % opt_cfg.checkpoint_interval == 0:
            ref = checkpoint(t, p)

        delta = compute_update(ev.gradient, ev.sr, opt_cfg)
        v = v - opt_cfg.learning_rate_at(t) * delta
        if not np.all(np.isfinite(v)):
            raise NumericalAbort(f"non-finite parameters after iteration {t}")
        p = params.with_vector(v)

        rec = IterationRecord(t, ev.cost, ev.acceptance_rate, ev.observables, ref, time.perf_counter() - t0)
        if keep_records:
            traj.append(rec)
        if callback is not None:
            callback(rec)
    return p, traj
