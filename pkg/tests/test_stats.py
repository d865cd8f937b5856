import numpy as np
import pytest

from ndmss.stats import EstimateWithError, binning_error, estimate


def test_iid_matches_naive():
    x = np.random.default_rng(1).standard_normal(2**14)
    naive = x.std(ddof=1) / np.sqrt(x.size)
    assert binning_error(x) == pytest.approx(naive, rel=0.2)


def test_constant_stream():
    e = estimate(np.full(1000, 3.5))
    assert e.mean == 3.5 and e.error_of_mean == 0 and e.variance == 0


def test_ar1_inflation():
    phi, n = 0.8, 2**17
    rng = np.random.default_rng(2)
    noise = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = noise[0] / np.sqrt(1 - phi**2)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + noise[i]
    naive = x.std(ddof=1) / np.sqrt(n)
    expected = naive * np.sqrt((1 + phi) / (1 - phi))
    assert binning_error(x) == pytest.approx(expected, rel=0.3)


def test_short_stream_and_complex():
    e = estimate(np.array([1.0, 3.0]))
    assert e.error_of_mean == pytest.approx(1.0)
    z = estimate(np.random.default_rng(0).standard_normal(256) * (1 + 1j))
    assert np.iscomplexobj(z.mean) and "mean_imag" in z.as_dict()
    with pytest.raises(ValueError):
        estimate(np.array([]))


def test_vector_binning():
    x = np.random.default_rng(3).standard_normal((512, 3))
    assert binning_error(x).shape == (3,)


def test_negative_error_rejected():
    with pytest.raises(ValueError):
        EstimateWithError(0.0, -1.0, 1, 0.0)
