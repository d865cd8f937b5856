"""Purified neural-network density matrix (two tri-partite RBMs).

Two real RBMs share the topology visible (sigma) - hidden (h) - ancilla (a).
Network 0 carries the amplitude, network 1 the phase of the purified state

    psi(sigma, a) = sqrt(P_A(sigma, a)) * exp(-(i/2) log P_theta(sigma, a)),
    P_nu(sigma, a) = exp[-(sigma.b_sigma + a.b_a + sigma^T U a)] prod_j 2cosh(theta_j),
    theta_j(sigma) = b_h[j] + sum_i sigma_i W[i, j].

Tracing the ancilla, ``rho(s, t) = sum_a psi(s, a) conj(psi(t, a))``, gives

    log rho = Gamma_minus + Gamma_plus + Pi
    Gamma_minus = -1/2 (s + t).b_sigma[A] + 1/2 sum_j [ln2cosh th_A(s) + ln2cosh th_A(t)]
    Gamma_plus  = i/2 { (s - t).b_sigma[T] - sum_j [ln2cosh th_T(s) - ln2cosh th_T(t)] }
    Pi          = sum_k ln2cosh( b_a[k] + 1/2 (s + t).U[A][:, k] - i/2 (s - t).U[T][:, k] )

An ancilla bias on the phase network enters psi(s, a) as exp(+i/2 a.b) and
conj(psi(t, a)) as exp(-i/2 a.b), so it cancels term by term in the trace.
It is therefore not a parameter: ``b_a`` below belongs to the amplitude
network only.

Flat parameter ordering (``to_vector``)::

    b_sigma[A] (N) | b_h[A] (Nh) | W[A] (N*Nh, row-major) | U[A] (N*Na, row-major)
    b_sigma[T] (N) | b_h[T] (Nh) | W[T] (N*Nh)            | U[T] (N*Na)
    b_a (Na)

for a total of ``2 (N + Nh + N Nh + N Na) + Na`` real numbers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .hilbert import as_configuration, as_doubled

AMPLITUDE, PHASE = 0, 1
LOG2 = np.log(2.0)


def ln2cosh(z):
    """``log(2 cosh z)`` for real or complex input without overflow.

    Uses ``w + log1p(exp(-2w))`` with ``w = +/-z`` chosen so that
    ``Re w >= 0``. The imaginary part is not wrapped, so nearby arguments
    give nearby values (no 2*pi*i jumps away from Re z = 0).
    """
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        return np.logaddexp(z, -z)
    w = np.where(z.real < 0, -z, z)
    return w + np.log1p(np.exp(-2.0 * w))


@dataclass
class NdmParameters:
    b_sigma: np.ndarray  # (2, N)
    b_h: np.ndarray  # (2, Nh)
    W: np.ndarray  # (2, N, Nh)
    U: np.ndarray  # (2, N, Na)
    b_a: np.ndarray  # (Na,)

    def __post_init__(self):
        self.b_sigma = np.asarray(self.b_sigma, dtype=np.float64)
        self.b_h = np.asarray(self.b_h, dtype=np.float64)
        self.W = np.asarray(self.W, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64)
        self.b_a = np.asarray(self.b_a, dtype=np.float64)
        N, Nh, Na = self.n_visible, self.n_hidden, self.n_ancilla
        if N < 1:
            raise ValueError("need at least one visible unit")
        expected = {
            "b_sigma": (2, N),
            "b_h": (2, Nh),
            "W": (2, N, Nh),
            "U": (2, N, Na),
            "b_a": (Na,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not np.all(np.isfinite(self.to_vector())):
            raise ValueError("parameters must be finite")

    @property
    def n_visible(self) -> int:
        return self.b_sigma.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.b_h.shape[1]

    @property
    def n_ancilla(self) -> int:
        return self.b_a.shape[0]

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.n_hidden, self.n_visible)

    @property
    def beta(self) -> Fraction:
        return Fraction(self.n_ancilla, self.n_visible)

    @property
    def n_parameters(self) -> int:
        return n_parameters(self.n_visible, self.n_hidden, self.n_ancilla)

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int, n_ancilla: int) -> "NdmParameters":
        N, Nh, Na = n_visible, n_hidden, n_ancilla
        return cls(
            np.zeros((2, N)), np.zeros((2, Nh)), np.zeros((2, N, Nh)), np.zeros((2, N, Na)), np.zeros(Na)
        )

    def to_vector(self) -> np.ndarray:
        parts = []
        for nu in (AMPLITUDE, PHASE):
            parts += [self.b_sigma[nu], self.b_h[nu], self.W[nu].ravel(), self.U[nu].ravel()]
        parts.append(self.b_a)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, v, n_visible: int, n_hidden: int, n_ancilla: int) -> "NdmParameters":
        N, Nh, Na = n_visible, n_hidden, n_ancilla
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (n_parameters(N, Nh, Na),):
            raise ValueError(f"vector has length {v.size}, expected {n_parameters(N, Nh, Na)}")
        out = cls.zeros(N, Nh, Na)
        pos = 0
        for nu in (AMPLITUDE, PHASE):
            for name, shape in (("b_sigma", (N,)), ("b_h", (Nh,)), ("W", (N, Nh)), ("U", (N, Na))):
                size = int(np.prod(shape))
                getattr(out, name)[nu] = v[pos : pos + size].reshape(shape)
                pos += size
        out.b_a[:] = v[pos:]
        return out

    def with_vector(self, v) -> "NdmParameters":
        return NdmParameters.from_vector(v, self.n_visible, self.n_hidden, self.n_ancilla)

    def log_rho_batch(self, rows, cols) -> np.ndarray:
        return log_rho_batch(self, rows, cols)


def n_parameters(n_visible: int, n_hidden: int, n_ancilla: int) -> int:
    N, Nh, Na = n_visible, n_hidden, n_ancilla
    return 2 * (N + Nh + N * Nh + N * Na) + Na


def parameter_slices(p: NdmParameters) -> dict[str, slice]:
    """Named blocks of the flat parameter vector, e.g. ``'W[A]'``."""
    N, Nh, Na = p.n_visible, p.n_hidden, p.n_ancilla
    out = {}
    pos = 0
    for tag in ("A", "T"):
        for name, size in (("b_sigma", N), ("b_h", Nh), ("W", N * Nh), ("U", N * Na)):
            out[f"{name}[{tag}]"] = slice(pos, pos + size)
            pos += size
    out["b_a"] = slice(pos, pos + Na)
    return out


def effective_angle(p: NdmParameters, nu: int, j: int, c) -> float:
    s = np.asarray(as_configuration(c), dtype=np.float64)
    return float(p.b_h[nu, j] + s @ p.W[nu, :, j])


def effective_angles(p: NdmParameters, spins) -> np.ndarray:
    """Hidden-unit angles of both networks, shape ``(2, ..., Nh)``."""
    s = np.asarray(spins, dtype=np.float64)
    return np.stack([p.b_h[nu] + s @ p.W[nu] for nu in (AMPLITUDE, PHASE)])


def ancilla_argument(p: NdmParameters, rows, cols) -> np.ndarray:
    s = np.asarray(rows, dtype=np.float64)
    t = np.asarray(cols, dtype=np.float64)
    return p.b_a + 0.5 * (s + t) @ p.U[AMPLITUDE] - 0.5j * ((s - t) @ p.U[PHASE])


@dataclass
class AngleCache:
    """Effective angles of a batch of labels, updated incrementally under flips."""

    rows: np.ndarray  # (B, N) spins
    cols: np.ndarray
    theta_row: np.ndarray  # (2, B, Nh)
    theta_col: np.ndarray
    pi_arg: np.ndarray  # (B, Na) complex

    @classmethod
    def build(cls, p: NdmParameters, rows, cols) -> "AngleCache":
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int8))
        cols = np.atleast_2d(np.asarray(cols, dtype=np.int8))
        return cls(
            rows.copy(), cols.copy(),
            effective_angles(p, rows), effective_angles(p, cols),
            ancilla_argument(p, rows, cols),
        )

    def moved(self, p: NdmParameters, new_rows, new_cols) -> "AngleCache":
        """Angles at ``(new_rows, new_cols)`` computed from the spin differences."""
        new_rows = np.atleast_2d(np.asarray(new_rows, dtype=np.int8))
        new_cols = np.atleast_2d(np.asarray(new_cols, dtype=np.int8))
        dr = new_rows.astype(np.float64) - self.rows
        dc = new_cols.astype(np.float64) - self.cols
        th_r = self.theta_row.copy()
        th_c = self.theta_col.copy()
        pi = self.pi_arg.copy()
        r_idx = np.flatnonzero(np.any(dr != 0, axis=1))
        c_idx = np.flatnonzero(np.any(dc != 0, axis=1))
        for nu in (AMPLITUDE, PHASE):
            th_r[nu, r_idx] += dr[r_idx] @ p.W[nu]
            th_c[nu, c_idx] += dc[c_idx] @ p.W[nu]
        idx = np.union1d(r_idx, c_idx)
        if idx.size:
            dr, dc = dr[idx], dc[idx]
            pi[idx] += 0.5 * (dr + dc) @ p.U[AMPLITUDE] - 0.5j * ((dr - dc) @ p.U[PHASE])
        return AngleCache(new_rows.copy(), new_cols.copy(), th_r, th_c, pi)

    def take(self, mask, other: "AngleCache") -> "AngleCache":
        """Entries of ``other`` where ``mask`` is true, of ``self`` elsewhere."""
        m = np.asarray(mask, dtype=bool)
        return AngleCache(
            np.where(m[:, None], other.rows, self.rows),
            np.where(m[:, None], other.cols, self.cols),
            np.where(m[None, :, None], other.theta_row, self.theta_row),
            np.where(m[None, :, None], other.theta_col, self.theta_col),
            np.where(m[:, None], other.pi_arg, self.pi_arg),
        )

    def log_rho(self, p: NdmParameters) -> np.ndarray:
        s = self.rows.astype(np.float64)
        t = self.cols.astype(np.float64)
        lc_r = ln2cosh(self.theta_row).sum(axis=-1)
        lc_c = ln2cosh(self.theta_col).sum(axis=-1)
        gamma_minus = -0.5 * (s + t) @ p.b_sigma[AMPLITUDE] + 0.5 * (lc_r[AMPLITUDE] + lc_c[AMPLITUDE])
        gamma_plus = 0.5j * ((s - t) @ p.b_sigma[PHASE] - (lc_r[PHASE] - lc_c[PHASE]))
        pi = ln2cosh(self.pi_arg).sum(axis=-1)
        return gamma_minus + gamma_plus + pi


def log_rho_batch(p: NdmParameters, rows, cols) -> np.ndarray:
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    lead = rows.shape[:-1]
    N = rows.shape[-1]
    cache = AngleCache.build(p, rows.reshape(-1, N), cols.reshape(-1, N))
    return cache.log_rho(p).reshape(lead)


def log_rho(p: NdmParameters, d) -> complex:
    d = as_doubled(d)
    return complex(log_rho_batch(p, np.asarray(d.row), np.asarray(d.col)))


def log_rho_diff(p: NdmParameters, d_old, d_new) -> complex:
    """``log rho(d_new) - log rho(d_old)`` via incremental angle updates."""
    d_old, d_new = as_doubled(d_old), as_doubled(d_new)
    if d_old.n_sites != d_new.n_sites:
        raise ValueError("configurations differ in size")
    old = AngleCache.build(p, np.asarray(d_old.row), np.asarray(d_old.col))
    new = old.moved(p, np.asarray(d_new.row), np.asarray(d_new.col))
    return complex(new.log_rho(p)[0] - old.log_rho(p)[0])


def log_derivatives_batch(p: NdmParameters, rows, cols) -> np.ndarray:
    """``d log rho / d v`` for every real parameter, shape ``(B, P)`` complex."""
    rows = np.atleast_2d(np.asarray(rows))
    cols = np.atleast_2d(np.asarray(cols))
    s = rows.astype(np.float64)
    t = cols.astype(np.float64)
    B, N = s.shape
    Nh, Na = p.n_hidden, p.n_ancilla
    tr = np.tanh(effective_angles(p, s))
    tc = np.tanh(effective_angles(p, t))
    tpi = np.tanh(ancilla_argument(p, s, t))
    plus, minus = 0.5 * (s + t), 0.5 * (s - t)

    out = np.empty((B, p.n_parameters), dtype=np.complex128)
    sl = parameter_slices(p)
    out[:, sl["b_sigma[A]"]] = -plus
    out[:, sl["b_h[A]"]] = 0.5 * (tr[AMPLITUDE] + tc[AMPLITUDE])
    out[:, sl["W[A]"]] = (
        0.5 * (s[:, :, None] * tr[AMPLITUDE][:, None, :] + t[:, :, None] * tc[AMPLITUDE][:, None, :])
    ).reshape(B, N * Nh)
    out[:, sl["U[A]"]] = (plus[:, :, None] * tpi[:, None, :]).reshape(B, N * Na)
    out[:, sl["b_sigma[T]"]] = 1j * minus
    out[:, sl["b_h[T]"]] = -0.5j * (tr[PHASE] - tc[PHASE])
    out[:, sl["W[T]"]] = (
        -0.5j * (s[:, :, None] * tr[PHASE][:, None, :] - t[:, :, None] * tc[PHASE][:, None, :])
    ).reshape(B, N * Nh)
    out[:, sl["U[T]"]] = (-1j * minus[:, :, None] * tpi[:, None, :]).reshape(B, N * Na)
    out[:, sl["b_a"]] = tpi
    return out


def contracted_log_derivatives(p: NdmParameters, rows, cols, weights) -> np.ndarray:
    """``sum_k weights[b, k] * O(rows[b, k], cols[b, k])`` without forming ``O`` per target.

    ``rows``/``cols`` have shape ``(B, K, N)``, ``weights`` ``(B, K)``; the
    result is ``(B, P)`` and equals contracting :func:`log_derivatives_batch`.
    """
    s = np.asarray(rows, dtype=np.float64)
    t = np.asarray(cols, dtype=np.float64)
    w = np.asarray(weights, dtype=np.complex128)
    B, K, N = s.shape
    Nh, Na = p.n_hidden, p.n_ancilla
    tr = np.tanh(effective_angles(p, s))  # (2, B, K, Nh)
    tc = np.tanh(effective_angles(p, t))
    tpi = np.tanh(ancilla_argument(p, s, t))  # (B, K, Na)
    ws = w[:, :, None] * s  # (B, K, N)
    wt = w[:, :, None] * t
    wsT = ws.transpose(0, 2, 1)
    wtT = wt.transpose(0, 2, 1)

    out = np.empty((B, p.n_parameters), dtype=np.complex128)
    sl = parameter_slices(p)
    out[:, sl["b_sigma[A]"]] = -0.5 * (ws.sum(axis=1) + wt.sum(axis=1))
    out[:, sl["b_h[A]"]] = 0.5 * np.einsum("bk,bkj->bj", w, tr[AMPLITUDE] + tc[AMPLITUDE])
    out[:, sl["W[A]"]] = (0.5 * (wsT @ tr[AMPLITUDE] + wtT @ tc[AMPLITUDE])).reshape(B, N * Nh)
    out[:, sl["U[A]"]] = (0.5 * (wsT + wtT) @ tpi).reshape(B, N * Na)
    out[:, sl["b_sigma[T]"]] = 0.5j * (ws.sum(axis=1) - wt.sum(axis=1))
    out[:, sl["b_h[T]"]] = -0.5j * np.einsum("bk,bkj->bj", w, tr[PHASE] - tc[PHASE])
    out[:, sl["W[T]"]] = (-0.5j * (wsT @ tr[PHASE] - wtT @ tc[PHASE])).reshape(B, N * Nh)
    out[:, sl["U[T]"]] = (-0.5j * (wsT - wtT) @ tpi).reshape(B, N * Na)
    out[:, sl["b_a"]] = np.einsum("bk,bkj->bj", w, tpi)
    return out


def log_derivatives(p: NdmParameters, d) -> np.ndarray:
    d = as_doubled(d)
    return log_derivatives_batch(p, np.asarray(d.row), np.asarray(d.col))[0]


def log_psi(p: NdmParameters, c, a) -> complex:
    s = np.asarray(as_configuration(c), dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (p.n_ancilla,):
        raise ValueError("ancilla configuration has the wrong size")
    th = effective_angles(p, s)
    b_anc = (p.b_a, np.zeros_like(p.b_a))
    log_p = [
        -(s @ p.b_sigma[nu] + a @ b_anc[nu] + s @ p.U[nu] @ a) + ln2cosh(th[nu]).sum()
        for nu in (AMPLITUDE, PHASE)
    ]
    return complex(0.5 * log_p[AMPLITUDE] - 0.5j * log_p[PHASE])


def psi(p: NdmParameters, c, a) -> complex:
    return complex(np.exp(log_psi(p, c, a)))


def rho_by_ancilla_trace(p: NdmParameters, d, max_ancilla: int = 16) -> complex:
    """Reference ``sum_a psi(row, a) conj(psi(col, a))`` by explicit enumeration."""
    d = as_doubled(d)
    if p.n_ancilla > max_ancilla:
        raise ValueError(f"ancilla space of {p.n_ancilla} units is too large to enumerate")
    total = 0j
    for a in itertools.product((1, -1), repeat=p.n_ancilla):
        total += psi(p, d.row, a) * np.conj(psi(p, d.col, a))
    return complex(total)


def layer_size(n: int, density) -> int:
    size = Fraction(density) * n
    if size.denominator != 1 or size < 0:
        raise ValueError(f"density {density} with N={n} does not give an integer layer size")
    return int(size)


def init_random(n: int, alpha, beta, scale: float, seed: int) -> NdmParameters:
    """Gaussian initialisation with standard deviation ``scale``."""
    if scale < 0:
        raise ValueError("scale must be non-negative")
    Nh, Na = layer_size(n, alpha), layer_size(n, beta)
    rng = np.random.default_rng(seed)
    v = scale * rng.standard_normal(n_parameters(n, Nh, Na))
    return NdmParameters.from_vector(v, n, Nh, Na)


def save_parameters(p: NdmParameters, path, header: str = "") -> None:
    """Write ``p`` as one value per line with a ``# N Nh Na`` header."""
    lines = [f"n_visible={p.n_visible} n_hidden={p.n_hidden} n_ancilla={p.n_ancilla}"]
    if header:
        lines += header.splitlines()
    np.savetxt(path, p.to_vector(), fmt="%.17g", header="\n".join(lines))


def load_parameters(path) -> NdmParameters:
    first = Path(path).read_text().splitlines()[0].lstrip("# ")
    dims = dict(item.split("=") for item in first.split())
    v = np.atleast_1d(np.loadtxt(path))
    return NdmParameters.from_vector(
        v, int(dims["n_visible"]), int(dims["n_hidden"]), int(dims["n_ancilla"])
    )
