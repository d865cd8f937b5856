"""Cost, gradient and observable estimators.

The cost is ``C = ||L rho||^2 / ||rho||^2 = E_p |C_loc|^2`` with
``p(s, t) = |rho(s, t)|^2 / Z`` and the local cost

    C_loc(s, t) = sum_{(s', t')} L(s, t; s', t') rho(s', t') / rho(s, t).

For real parameters ``v`` its gradient is ``2 Re G`` with

    G = E_p[ conj(C_loc) sum L rho'/rho O(s', t') ] - C E_p[O],
    O(s, t) = d log rho(s, t) / dv.

Each quantity has a Monte Carlo version (fold over samples of the joint
chain) and an exact version (full enumeration of the ``4^N`` labels).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ansatz import NdmParameters, contracted_log_derivatives, log_derivatives_batch
from .hilbert import all_doubled_configurations, as_doubled
from .model import TransverseIsingModel, connections_batch, sparse_liouvillian
from .observables import ObservableOperator
from .stats import EstimateWithError, binning_error, estimate

log = logging.getLogger(__name__)

MAX_EXACT_SITES = 6
_CHUNK_ENTRIES = 2_000_000


class SystemTooLarge(ValueError):
    pass


class ZeroAmplitudeError(ValueError):
    pass


def _check_exact(n: int):
    if n > MAX_EXACT_SITES:
        raise SystemTooLarge(f"exact summation over 4^{n} labels is disabled (N > {MAX_EXACT_SITES})")


def _local_terms(state, m: TransverseIsingModel, rows, cols):
    """Connected targets, amplitudes and ``rho(target) / rho(label)`` ratios."""
    t_rows, t_cols, amps = connections_batch(m, rows, cols)
    log_d = state.log_rho_batch(rows, cols)
    if not np.all(np.isfinite(log_d.real)):
        raise ZeroAmplitudeError("sampled label has vanishing density-matrix amplitude")
    log_t = state.log_rho_batch(t_rows, t_cols)
    with np.errstate(under="ignore"):
        ratios = np.where(amps != 0, np.exp(log_t - log_d[:, None]), 0.0)
    return t_rows, t_cols, amps, ratios


def local_costs(state, m: TransverseIsingModel, rows, cols) -> np.ndarray:
    rows = np.atleast_2d(rows)
    cols = np.atleast_2d(cols)
    _, _, amps, ratios = _local_terms(state, m, rows, cols)
    return np.sum(amps * ratios, axis=1)


def local_cost(state, m: TransverseIsingModel, d) -> complex:
    d = as_doubled(d)
    return complex(local_costs(state, m, np.asarray(d.row)[None], np.asarray(d.col)[None])[0])


@lru_cache(maxsize=8)
def _cached_liouvillian(m: TransverseIsingModel):
    return sparse_liouvillian(m)


def _full_rho(state, n: int) -> np.ndarray:
    rows, cols = all_doubled_configurations(n)
    logr = state.log_rho_batch(rows, cols)
    return np.exp(logr - np.max(logr.real))


def cost_full_summation(state, m: TransverseIsingModel) -> float:
    """Exact ``sum_p |C_loc|^2`` written as ``||L rho||^2 / ||rho||^2`` (no divisions by rho)."""
    _check_exact(m.n_sites)
    rho = _full_rho(state, m.n_sites)
    lrho = _cached_liouvillian(m) @ rho
    return float(np.vdot(lrho, lrho).real / np.vdot(rho, rho).real)


@dataclass
class ExactStatistics:
    cost: float
    gradient: np.ndarray  # real, (P,)
    probabilities: np.ndarray  # p(s, t) over all labels
    log_derivatives: np.ndarray  # (4^N, P)
    rho: np.ndarray  # unnormalised entries, flat row-major


def exact_statistics(p: NdmParameters, m: TransverseIsingModel) -> ExactStatistics:
    """Cost and gradient by full enumeration; also returns what SR needs."""
    _check_exact(m.n_sites)
    rows, cols = all_doubled_configurations(m.n_sites)
    rho = _full_rho(p, m.n_sites)
    L = _cached_liouvillian(m)
    lrho = L @ rho
    Z = np.vdot(rho, rho).real
    cost = np.vdot(lrho, lrho).real / Z
    O = log_derivatives_batch(p, rows, cols)
    rho_o = rho[:, None] * O
    g = (lrho.conj() @ (L @ rho_o)) / Z - cost * (rho.conj() @ rho_o) / Z
    return ExactStatistics(float(cost), 2.0 * g.real, np.abs(rho) ** 2 / Z, O, rho)


def gradient_full_summation(p: NdmParameters, m: TransverseIsingModel) -> np.ndarray:
    return exact_statistics(p, m).gradient


def cost_mc(state, m: TransverseIsingModel, samples) -> EstimateWithError:
    rows, cols = samples.flat()
    if rows.shape[0] == 0:
        raise ValueError("no samples")
    c = local_costs(state, m, rows, cols)
    return estimate(np.abs(c) ** 2)


@dataclass
class GradientEstimate:
    gradient: np.ndarray  # real, (P,)
    variance: np.ndarray
    error_of_mean: np.ndarray
    n_samples: int
    cost: EstimateWithError
    log_derivatives: np.ndarray  # O(s, t) at the samples, (B, P)

    def component(self, i: int) -> EstimateWithError:
        return EstimateWithError(
            float(self.gradient[i]), float(self.variance[i]), self.n_samples, float(self.error_of_mean[i])
        )


def gradient_estimate(p: NdmParameters, m: TransverseIsingModel, samples) -> GradientEstimate:
    rows, cols = samples.flat()
    B = rows.shape[0]
    if B == 0:
        raise ValueError("no samples")
    N, P = m.n_sites, p.n_parameters
    K = m.n_connections
    t_rows, t_cols, amps, ratios = _local_terms(p, m, rows, cols)
    cloc = np.sum(amps * ratios, axis=1)
    weights = amps * ratios

    chunk = max(1, _CHUNK_ENTRIES // (K * P))
    pulled = np.empty((B, P), dtype=np.complex128)
    for lo in range(0, B, chunk):
        hi = min(B, lo + chunk)
        pulled[lo:hi] = contracted_log_derivatives(p, t_rows[lo:hi], t_cols[lo:hi], weights[lo:hi])
    O = log_derivatives_batch(p, rows, cols)

    cost = estimate(np.abs(cloc) ** 2)
    local = 2.0 * np.real(cloc.conj()[:, None] * pulled - cost.mean * O)
    grad = local.mean(axis=0)
    var = local.var(axis=0, ddof=1) if B > 1 else np.zeros(P)
    err = binning_error(local) if B >= 16 else np.sqrt(var / B)
    return GradientEstimate(grad, var, np.asarray(err), B, cost, O)


def local_observable(state, op: ObservableOperator, configs) -> np.ndarray:
    """``sum_t rho(s, t) Theta(t, s) / rho(s, s)`` for each diagonal sample ``s``."""
    configs = np.atleast_2d(configs)
    log_d = state.log_rho_batch(configs, configs)
    out = np.zeros(configs.shape[0], dtype=np.complex128)
    for term in op.terms:
        t = term.apply_flip(configs)
        ratio = np.exp(state.log_rho_batch(configs, t) - log_d)
        out += ratio * term.element(configs)
    return out


def observable_estimate(state, op: ObservableOperator, samples) -> EstimateWithError:
    rows, _ = samples.flat()
    if rows.shape[0] == 0:
        raise ValueError("no samples")
    est = estimate(local_observable(state, op, rows))
    if abs(np.imag(est.mean)) > 5 * est.error_of_mean + 1e-10:
        log.warning("observable %s has imaginary part %.3e", op.name, np.imag(est.mean))
    return est


def observable_exact(rho_dense: np.ndarray, op: ObservableOperator, n_sites: int) -> float:
    theta = op.to_dense(n_sites)
    return float(np.real(np.trace(rho_dense @ theta) / np.trace(rho_dense)))
