"""Pauli-string observables for the local estimator and the dense oracle.

An operator is a sum of terms. A term flips ``flip_sites`` and multiplies by
``factor * prod_{k in z_sites} sigma_k``, evaluated on the ket, so that
``<flip(s)|term|s> = factor * prod sigma_k(s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import all_configurations, indices_of


@dataclass(frozen=True)
class PauliTerm:
    flip_sites: tuple[int, ...]
    z_sites: tuple[int, ...]
    factor: complex

    def element(self, kets: np.ndarray) -> np.ndarray:
        kets = np.asarray(kets, dtype=np.float64)
        val = np.full(kets.shape[:-1], complex(self.factor))
        for k in self.z_sites:
            val = val * kets[..., k]
        return val

    def apply_flip(self, kets: np.ndarray) -> np.ndarray:
        out = np.array(kets, copy=True)
        if self.flip_sites:
            out[..., list(self.flip_sites)] *= -1
        return out


@dataclass(frozen=True)
class ObservableOperator:
    name: str
    terms: tuple[PauliTerm, ...]

    def to_dense(self, n_sites: int) -> np.ndarray:
        kets = all_configurations(n_sites)
        dim = kets.shape[0]
        mat = np.zeros((dim, dim), dtype=np.complex128)
        cols = np.arange(dim)
        for term in self.terms:
            rows = indices_of(term.apply_flip(kets))
            np.add.at(mat, (rows, cols), term.element(kets))
        return mat

    def is_hermitian(self, n_sites: int) -> bool:
        mat = self.to_dense(n_sites)
        return bool(np.allclose(mat, mat.conj().T, atol=1e-14))


def sigma_x(j: int) -> ObservableOperator:
    return ObservableOperator(f"sx{j}", (PauliTerm((j,), (), 1.0),))


def sigma_y(j: int) -> ObservableOperator:
    # sy|up> = i|down>, sy|down> = -i|up>
    return ObservableOperator(f"sy{j}", (PauliTerm((j,), (j,), 1j),))


def sigma_z(j: int) -> ObservableOperator:
    return ObservableOperator(f"sz{j}", (PauliTerm((), (j,), 1.0),))


_SINGLE = {"x": sigma_x, "y": sigma_y, "z": sigma_z}


def average_magnetization(axis: str, n_sites: int) -> ObservableOperator:
    """Lattice average ``(1/N) sum_j sigma^axis_j``."""
    terms = []
    for j in range(n_sites):
        for t in _SINGLE[axis](j).terms:
            terms.append(PauliTerm(t.flip_sites, t.z_sites, t.factor / n_sites))
    return ObservableOperator(f"s{axis}", tuple(terms))


def magnetizations(n_sites: int) -> dict[str, ObservableOperator]:
    return {f"s{ax}": average_magnetization(ax, n_sites) for ax in "xyz"}
