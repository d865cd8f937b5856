"""Spin-1/2 basis labels and their integer encodings.

Spins take values +1 (up) and -1 (down). Configurations are encoded
little-endian: bit ``i`` of the index is ``(1 + s_i) / 2``, so site 0 is the
least significant bit and index 0 is the all-down state. Every module that
builds dense matrices relies on this convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class SpinConfiguration:
    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if len(vals) < 1:
            raise ValueError("a spin configuration needs at least one site")
        if any(v not in (1, -1) for v in vals):
            raise ValueError(f"spin values must be +1 or -1, got {vals}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype if dtype is not None else np.int8)

    @property
    def n_sites(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DoubledConfiguration:
    """Row and column labels ``(sigma, sigma_tilde)`` of a density-matrix entry."""

    row: SpinConfiguration
    col: SpinConfiguration

    def __post_init__(self):
        row = as_configuration(self.row)
        col = as_configuration(self.col)
        if len(row) != len(col):
            raise ValueError("row and column configurations differ in length")
        object.__setattr__(self, "row", row)
        object.__setattr__(self, "col", col)

    @property
    def n_sites(self) -> int:
        return len(self.row)

    def swapped(self) -> "DoubledConfiguration":
        return DoubledConfiguration(self.col, self.row)


def as_configuration(c) -> SpinConfiguration:
    if isinstance(c, SpinConfiguration):
        return c
    return SpinConfiguration(tuple(np.asarray(c).ravel().tolist()))


def as_doubled(d) -> DoubledConfiguration:
    if isinstance(d, DoubledConfiguration):
        return d
    row, col = d
    return DoubledConfiguration(as_configuration(row), as_configuration(col))


def config_to_index(c) -> int:
    spins = np.asarray(as_configuration(c).values)
    bits = (1 + spins) // 2
    return int(np.dot(bits, 1 << np.arange(len(spins), dtype=np.int64)))


def index_to_config(i: int, n: int) -> SpinConfiguration:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= i < 2**n:
        raise IndexError(f"index {i} out of range for {n} sites")
    return SpinConfiguration(tuple(2 * ((i >> k) & 1) - 1 for k in range(n)))


def flip(c, sites: Iterable[int]) -> SpinConfiguration:
    c = as_configuration(c)
    vals = list(c.values)
    for s in set(sites):
        if not 0 <= s < len(vals):
            raise IndexError(f"site {s} out of range for {len(vals)} sites")
        vals[s] = -vals[s]
    return SpinConfiguration(tuple(vals))


# Vectorised helpers used on the hot paths. Arrays hold +/-1 along the last axis.

def indices_of(spins: np.ndarray) -> np.ndarray:
    spins = np.asarray(spins)
    weights = 1 << np.arange(spins.shape[-1], dtype=np.int64)
    return ((1 + spins.astype(np.int64)) // 2) @ weights


def all_configurations(n: int) -> np.ndarray:
    """All ``2**n`` configurations as an ``(2**n, n)`` int8 array, ordered by index."""
    idx = np.arange(2**n)[:, None]
    return (2 * ((idx >> np.arange(n)) & 1) - 1).astype(np.int8)


def all_doubled_configurations(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows and columns of all ``4**n`` entries, flat index ``row * 2**n + col``."""
    basis = all_configurations(n)
    dim = basis.shape[0]
    return np.repeat(basis, dim, axis=0), np.tile(basis, (dim, 1))


def doubled_index(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    n = np.asarray(rows).shape[-1]
    return indices_of(rows) * (2**n) + indices_of(cols)


def validate_spins(spins: Sequence[int] | np.ndarray, n: int | None = None) -> np.ndarray:
    arr = np.asarray(spins)
    if arr.ndim != 1 or not np.all(np.abs(arr) == 1):
        raise ValueError("expected a 1D array of +/-1 spins")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} sites, got {arr.shape[0]}")
    return arr.astype(np.int8)
