"""Sample means with autocorrelation-aware error bars."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SAMPLES = 16
MIN_BINS = 32


@dataclass(frozen=True)
class EstimateWithError:
    mean: complex | float
    variance: float
    n_samples: int
    error_of_mean: float

    def __post_init__(self):
        if self.variance < 0 or self.error_of_mean < 0:
            raise ValueError("variance and error must be non-negative")

    @property
    def real(self) -> float:
        return float(np.real(self.mean))

    def as_dict(self) -> dict:
        out = {
            "mean": float(np.real(self.mean)),
            "error": float(self.error_of_mean),
            "variance": float(self.variance),
            "n_samples": int(self.n_samples),
        }
        if np.iscomplexobj(self.mean):
            out["mean_imag"] = float(np.imag(self.mean))
        return out

    @classmethod
    def exact(cls, value) -> "EstimateWithError":
        return cls(value, 0.0, 0, 0.0)


def binning_levels(x) -> np.ndarray:
    """Standard error of the mean at each binning level (rows) for each column.

    Level ``l`` averages ``2^l`` consecutive samples; levels stop once fewer
    than ``MIN_BINS`` bins remain. A trailing odd bin is dropped.
    """
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < MIN_SAMPLES:
        raise ValueError(f"binning needs at least {MIN_SAMPLES} samples, got {x.shape[0]}")
    errs = []
    b = x
    while True:
        n = b.shape[0]
        errs.append(np.std(b, axis=0, ddof=1) / np.sqrt(n))
        if n // 2 < MIN_BINS:
            break
        b = 0.5 * (b[0 : 2 * (n // 2) : 2] + b[1 : 2 * (n // 2) : 2])
    return np.array(errs)


def binning_error(x):
    """Plateau (maximum over levels) of the binned standard error."""
    out = binning_levels(x).max(axis=0)
    return float(out[0]) if np.ndim(x) == 1 else out


def estimate(x) -> EstimateWithError:
    """Mean of a scalar sample stream with a binning error bar.

    Streams shorter than ``MIN_SAMPLES`` fall back to the naive error.
    """
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("no samples")
    n = x.shape[0]
    mean = x.mean()
    var = float(np.var(x, ddof=1)) if n > 1 else 0.0
    if n >= MIN_SAMPLES:
        err = float(np.hypot(binning_error(x.real), binning_error(x.imag))) if np.iscomplexobj(x) else binning_error(x)
    else:
        err = float(np.sqrt(var / n))
    if not np.iscomplexobj(x):
        mean = float(mean)
    return EstimateWithError(mean, var, n, err)
