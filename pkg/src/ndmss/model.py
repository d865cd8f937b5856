"""Dissipative transverse-field Ising model and its Liouvillian matrix elements.

Hamiltonian ``H = V/4 sum_<jl> sz_j sz_l + g/2 sum_j sx_j`` with one
spin-lowering jump operator per site at rate ``gamma``. The Liouvillian

    L rho = -i[H, rho] + gamma/2 sum_j (2 s-_j rho s+_j - {s+_j s-_j, rho})

is enumerated entry-wise: for every density-matrix label ``(sigma, sigma~)``
we list the labels ``(sigma', sigma~')`` and amplitudes ``A`` such that
``(L rho)(sigma, sigma~) = sum A rho(sigma', sigma~')``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    DoubledConfiguration,
    SpinConfiguration,
    all_doubled_configurations,
    as_configuration,
    as_doubled,
    doubled_index,
    flip,
)


def ring_bonds(n_sites: int, periodic: bool = True) -> tuple[tuple[int, int], ...]:
    if n_sites < 2:
        return ()
    bonds = [(j, j + 1) for j in range(n_sites - 1)]
    if periodic and n_sites > 2:
        bonds.append((n_sites - 1, 0))
    return tuple(bonds)


@dataclass(frozen=True)
class TransverseIsingModel:
    n_sites: int
    V: float
    g: float
    gamma: float = 1.0
    bonds: tuple[tuple[int, int], ...] | None = None
    boundary: str = "periodic"

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        bonds = self.bonds
        if bonds is None:
            bonds = ring_bonds(self.n_sites, self.boundary == "periodic")
        seen = set()
        clean = []
        for j, l in bonds:
            j, l = int(j), int(l)
            if not (0 <= j < self.n_sites and 0 <= l < self.n_sites) or j == l:
                raise ValueError(f"invalid bond {(j, l)}")
            key = frozenset((j, l))
            if key in seen:
                raise ValueError(f"duplicated bond {(j, l)}")
            seen.add(key)
            clean.append((j, l))
        object.__setattr__(self, "bonds", tuple(clean))

    @property
    def n_connections(self) -> int:
        """Padded number of connected elements per entry in the batched enumerator."""
        return 1 + 3 * self.n_sites


def _bond_arrays(m: TransverseIsingModel):
    if not m.bonds:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    b = np.asarray(m.bonds, dtype=np.int64)
    return b[:, 0], b[:, 1]


def diagonal_energy(m: TransverseIsingModel, spins: np.ndarray) -> np.ndarray:
    """``<s|H|s>`` for a batch of configurations (last axis = sites)."""
    spins = np.asarray(spins, dtype=np.float64)
    j, l = _bond_arrays(m)
    if j.size == 0:
        return np.zeros(spins.shape[:-1])
    return 0.25 * m.V * np.sum(spins[..., j] * spins[..., l], axis=-1)


def hamiltonian_connections(m: TransverseIsingModel, c) -> list[tuple[SpinConfiguration, float]]:
    c = as_configuration(c)
    if len(c) != m.n_sites:
        raise ValueError("configuration size does not match the model")
    out = [(c, float(diagonal_energy(m, np.asarray(c))))]
    if m.g != 0:
        out.extend((flip(c, [j]), 0.5 * m.g) for j in range(m.n_sites))
    return [(t, mel) for t, mel in out if mel != 0]


def jump_connections(m: TransverseIsingModel, j: int, c) -> list[tuple[SpinConfiguration, float]]:
    """Action of the lowering operator on site ``j``: ``s-_j |c> = sum mel |c'>``."""
    c = as_configuration(c)
    if not 0 <= j < m.n_sites:
        raise IndexError(f"site {j} out of range")
    if c[j] == 1:
        return [(flip(c, [j]), 1.0)]
    return []


@dataclass(frozen=True)
class ConnectedElement:
    target: DoubledConfiguration
    amplitude: complex


def connections_batch(m: TransverseIsingModel, rows: np.ndarray, cols: np.ndarray):
    """Padded connected elements for a batch of labels.

    Returns ``(target_rows, target_cols, amplitudes)`` with shapes
    ``(B, K, N)``, ``(B, K, N)`` and ``(B, K)``, ``K = 1 + 3N``. Slot 0 is the
    diagonal term, slots ``1..N`` flip the row at one site (Hamiltonian on the
    left), ``N+1..2N`` flip the column (Hamiltonian on the right) and
    ``2N+1..3N`` flip both (recycling term). Inactive slots have amplitude 0.
    All targets of one label are distinct, so no merging is needed.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    squeeze = rows.ndim == 1
    rows = np.atleast_2d(rows)
    cols = np.atleast_2d(cols)
    B, N = rows.shape
    K = 1 + 3 * N
    eye = np.eye(N, dtype=bool)

    t_rows = np.empty((B, K, N), dtype=rows.dtype)
    t_cols = np.empty((B, K, N), dtype=cols.dtype)
    amps = np.zeros((B, K), dtype=np.complex128)

    rows_up = rows == 1
    cols_up = cols == 1
    n_up = rows_up.sum(axis=1) + cols_up.sum(axis=1)

    t_rows[:, 0] = rows
    t_cols[:, 0] = cols
    amps[:, 0] = (
        -1j * diagonal_energy(m, rows)
        + 1j * diagonal_energy(m, cols)
        - 0.5 * m.gamma * n_up
    )

    flipped_rows = np.where(eye[None], -rows[:, None, :], rows[:, None, :])
    flipped_cols = np.where(eye[None], -cols[:, None, :], cols[:, None, :])

    t_rows[:, 1 : N + 1] = flipped_rows
    t_cols[:, 1 : N + 1] = cols[:, None, :]
    amps[:, 1 : N + 1] = -0.5j * m.g

    t_rows[:, N + 1 : 2 * N + 1] = rows[:, None, :]
    t_cols[:, N + 1 : 2 * N + 1] = flipped_cols
    amps[:, N + 1 : 2 * N + 1] = 0.5j * m.g

    # <s|s-_j|s'> is nonzero only for s_j = -1 with s' = s flipped at j.
    t_rows[:, 2 * N + 1 :] = flipped_rows
    t_cols[:, 2 * N + 1 :] = flipped_cols
    both_down = (rows == -1) & (cols == -1)
    amps[:, 2 * N + 1 :] = m.gamma * both_down

    if squeeze:
        return t_rows[0], t_cols[0], amps[0]
    return t_rows, t_cols, amps


def liouvillian_connections(m: TransverseIsingModel, d) -> list[ConnectedElement]:
    d = as_doubled(d)
    if d.n_sites != m.n_sites:
        raise ValueError("configuration size does not match the model")
    t_rows, t_cols, amps = connections_batch(
        m, np.asarray(d.row, dtype=np.int8), np.asarray(d.col, dtype=np.int8)
    )
    merged: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}
    for r, c, a in zip(t_rows, t_cols, amps):
        if a == 0:
            continue
        key = (tuple(r.tolist()), tuple(c.tolist()))
        merged[key] = merged.get(key, 0) + complex(a)
    return [
        ConnectedElement(DoubledConfiguration(SpinConfiguration(r), SpinConfiguration(c)), a)
        for (r, c), a in merged.items()
        if a != 0
    ]


def sparse_liouvillian(m: TransverseIsingModel) -> sp.csr_matrix:
    """Assemble the enumerator output into a ``4^N x 4^N`` CSR matrix.

    Rows and columns use the flat doubled index ``idx(row) * 2^N + idx(col)``,
    i.e. row-major vectorisation of the density matrix.
    """
    rows, cols = all_doubled_configurations(m.n_sites)
    t_rows, t_cols, amps = connections_batch(m, rows, cols)
    dim = rows.shape[0]
    K = amps.shape[1]
    src = np.repeat(np.arange(dim), K)
    dst = doubled_index(t_rows.reshape(-1, m.n_sites), t_cols.reshape(-1, m.n_sites))
    vals = amps.ravel()
    keep = vals != 0
    mat = sp.coo_matrix((vals[keep], (src[keep], dst[keep])), shape=(dim, dim))
    return mat.tocsr()
