"""Metropolis chains over density-matrix labels.

The joint chain targets ``|rho(s, t)|^2`` on the doubled space, the diagonal
chain targets ``rho(s, s)``. A bank of chains advances in lock-step with
numpy; each chain draws all of its random numbers from its own substream
``SeedSequence(seed).spawn(n_chains)[c]``, so a chain's trajectory does not
depend on how many other chains run beside it.

One sweep is ``N`` proposals. After ``burn_in_sweeps`` sweeps one sample is
kept per sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AngleCache, NdmParameters
from .hilbert import DoubledConfiguration, SpinConfiguration, as_configuration


@dataclass(frozen=True)
class SamplerConfig:
    n_chains: int = 16
    n_samples_per_chain: int = 100
    burn_in_sweeps: int = 10
    max_flips_per_move: int = 1
    seed: int | tuple[int, ...] = 0

    def validate(self, n_sites: int) -> None:
        if self.n_chains < 1 or self.n_samples_per_chain < 1:
            raise ValueError("n_chains and n_samples_per_chain must be >= 1")
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")
        if not 1 <= self.max_flips_per_move <= n_sites:
            raise ValueError(f"max_flips_per_move must lie in [1, {n_sites}]")

    @property
    def n_samples(self) -> int:
        return self.n_chains * self.n_samples_per_chain


@dataclass
class ChainState:
    """Current labels and bookkeeping of a bank of chains (one row per chain)."""

    rows: np.ndarray
    cols: np.ndarray
    log_weight: np.ndarray
    accepted: np.ndarray
    proposed: np.ndarray


@dataclass
class Samples:
    rows: np.ndarray  # (n_chains, n_samples_per_chain, N)
    cols: np.ndarray
    log_weights: np.ndarray  # (n_chains, n_samples_per_chain)
    accepted: np.ndarray  # per chain
    proposed: np.ndarray
    diagonal: bool = False
    final: ChainState | None = None

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0] * self.rows.shape[1]

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.sum() / max(self.proposed.sum(), 1))

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """Chain-major flattened ``(rows, cols)``."""
        N = self.rows.shape[-1]
        return self.rows.reshape(-1, N), self.cols.reshape(-1, N)

    @classmethod
    def from_labels(cls, rows, cols, diagonal: bool = False) -> "Samples":
        rows = np.asarray(rows, dtype=np.int8)[None]
        cols = np.asarray(cols, dtype=np.int8)[None]
        n = rows.shape[1]
        return cls(rows, cols, np.zeros((1, n)), np.zeros(1, int), np.zeros(1, int), diagonal)


def chain_rngs(seed, n_chains: int) -> list[np.random.Generator]:
    seq = np.random.SeedSequence(list(np.atleast_1d(seed).tolist()))
    return [np.random.default_rng(s) for s in seq.spawn(n_chains)]


def draw_moves(rng: np.random.Generator, n_steps: int, n_sites: int, max_flips: int, joint: bool):
    """Flip masks ``(n_steps, 2N or N)`` and acceptance uniforms ``(n_steps,)``.

    Each touched register flips a uniformly random subset of ``k`` sites,
    ``k`` uniform in ``[1, max_flips]``. For the joint chain the move touches
    the row, the column or both with probability 1/3 each.
    """

    def subset_mask():
        k = rng.integers(1, max_flips + 1, size=n_steps)
        ranks = np.argsort(np.argsort(rng.random((n_steps, n_sites)), axis=1), axis=1)
        return ranks < k[:, None]

    row = subset_mask()
    if joint:
        col = subset_mask()
        which = rng.integers(0, 3, size=n_steps)
        row &= (which != 1)[:, None]
        col &= (which != 0)[:, None]
        mask = np.concatenate([row, col], axis=1)
    else:
        mask = row
    return mask, rng.random(n_steps)


def _accept_mask(log_w_old, log_w_new, u):
    with np.errstate(invalid="ignore", over="ignore"):
        return np.exp(np.minimum(0.0, log_w_new - log_w_old)) > u


def accept(log_w_old: float, log_w_new: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: true with probability ``min(1, exp(log_w_new - log_w_old))``."""
    return bool(_accept_mask(log_w_old, log_w_new, rng.random()))


def propose(current, cfg: SamplerConfig, rng: np.random.Generator):
    """Candidate label for a single chain (doubled or diagonal)."""
    if isinstance(current, DoubledConfiguration):
        n = current.n_sites
        mask, _ = draw_moves(rng, 1, n, cfg.max_flips_per_move, True)
        spins = np.concatenate([np.asarray(current.row), np.asarray(current.col)])
        new = np.where(mask[0], -spins, spins)
        return DoubledConfiguration(SpinConfiguration(new[:n]), SpinConfiguration(new[n:]))
    c = as_configuration(current)
    mask, _ = draw_moves(rng, 1, len(c), cfg.max_flips_per_move, False)
    spins = np.asarray(c)
    return SpinConfiguration(np.where(mask[0], -spins, spins))


class _Evaluator:
    """Log target weight via full re-evaluation (any ``log_rho_batch`` provider)."""

    def __init__(self, state, rows, cols, joint):
        self.state = state
        self.joint = joint
        self.rows, self.cols = rows, cols
        self.logw = self._weight(state.log_rho_batch(rows, cols))

    def _weight(self, logr):
        return 2.0 * logr.real if self.joint else logr.real

    def trial(self, rows, cols):
        self._trial = (rows, cols)
        return self._weight(self.state.log_rho_batch(rows, cols))

    def commit(self, acc, new_logw):
        rows, cols = self._trial
        self.rows = np.where(acc[:, None], rows, self.rows)
        self.cols = np.where(acc[:, None], cols, self.cols)
        self.logw = np.where(acc, new_logw, self.logw)

    def resync(self):
        pass


class _AnsatzEvaluator(_Evaluator):
    """Incremental effective-angle updates, re-synchronised once per sweep."""

    def __init__(self, p: NdmParameters, rows, cols, joint):
        self.state = p
        self.joint = joint
        self.cache = AngleCache.build(p, rows, cols)
        self.rows, self.cols = self.cache.rows, self.cache.cols
        self.logw = self._weight(self.cache.log_rho(p))

    def trial(self, rows, cols):
        self._trial = self.cache.moved(self.state, rows, cols)
        return self._weight(self._trial.log_rho(self.state))

    def commit(self, acc, new_logw):
        self.cache = self.cache.take(acc, self._trial)
        self.rows, self.cols = self.cache.rows, self.cache.cols
        self.logw = np.where(acc, new_logw, self.logw)

    def resync(self):
        self.cache = AngleCache.build(self.state, self.rows, self.cols)
        self.logw = self._weight(self.cache.log_rho(self.state))


def _initial_labels(state, rngs, n_sites, joint):
    width = 2 * n_sites if joint else n_sites
    spins = np.ones((len(rngs), width), dtype=np.int8)
    todo = np.arange(len(rngs))
    for _ in range(100):
        for c in todo:
            spins[c] = 2 * rngs[c].integers(0, 2, size=width) - 1
        r = spins[todo, :n_sites]
        c = spins[todo, n_sites:] if joint else r
        todo = todo[~np.isfinite(state.log_rho_batch(r, c).real)]
        if todo.size == 0:
            return spins
    raise RuntimeError("could not find a starting label with nonzero weight")


def _run(state, cfg: SamplerConfig, joint: bool) -> Samples:
    N = state.n_visible
    cfg.validate(N)
    rngs = chain_rngs(cfg.seed, cfg.n_chains)
    start = _initial_labels(state, rngs, N, joint)
    n_sweeps = cfg.burn_in_sweeps + cfg.n_samples_per_chain
    moves = [draw_moves(rng, n_sweeps * N, N, cfg.max_flips_per_move, joint) for rng in rngs]
    masks = np.stack([m for m, _ in moves])  # (C, steps, width)
    uniforms = np.stack([u for _, u in moves])

    rows = start[:, :N]
    cols = start[:, N:] if joint else rows
    ev_cls = _AnsatzEvaluator if isinstance(state, NdmParameters) else _Evaluator
    ev = ev_cls(state, rows, cols, joint)

    C, S = cfg.n_chains, cfg.n_samples_per_chain
    out_rows = np.empty((C, S, N), dtype=np.int8)
    out_cols = np.empty((C, S, N), dtype=np.int8)
    out_logw = np.empty((C, S))
    accepted = np.zeros(C, dtype=np.int64)
    kept = 0
    for step in range(n_sweeps * N):
        mask = masks[:, step]
        if joint:
            new_rows = np.where(mask[:, :N], -ev.rows, ev.rows)
            new_cols = np.where(mask[:, N:], -ev.cols, ev.cols)
        else:
            new_rows = np.where(mask, -ev.rows, ev.rows)
            new_cols = new_rows
        new_logw = ev.trial(new_rows, new_cols)
        acc = _accept_mask(ev.logw, new_logw, uniforms[:, step])
        ev.commit(acc, new_logw)
        accepted += acc
        if (step + 1) % N == 0:
            ev.resync()
            if (step + 1) // N > cfg.burn_in_sweeps:
                out_rows[:, kept] = ev.rows
                out_cols[:, kept] = ev.cols
                out_logw[:, kept] = ev.logw
                kept += 1
    proposed = np.full(C, n_sweeps * N, dtype=np.int64)
    final = ChainState(ev.rows.copy(), ev.cols.copy(), ev.logw.copy(), accepted, proposed)
    return Samples(out_rows, out_cols, out_logw, accepted, proposed, not joint, final)


def run_chain_joint(state, cfg: SamplerConfig) -> Samples:
    """Samples of ``(s, t)`` distributed as ``|rho(s, t)|^2 / Z``; weights are ``log|rho|^2``."""
    return _run(state, cfg, joint=True)


def run_chain_diagonal(state, cfg: SamplerConfig) -> Samples:
    """Samples of ``s`` distributed as ``rho(s, s) / Tr rho``."""
    return _run(state, cfg, joint=False)
