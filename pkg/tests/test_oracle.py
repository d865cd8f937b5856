import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_params
from ndmss.model import TransverseIsingModel
from ndmss.observables import magnetizations, sigma_x, sigma_y, sigma_z
from ndmss.oracle import (
    DenseDensityMatrix,
    SystemTooLarge,
    ansatz_to_dense,
    build_dense_liouvillian,
    expectation,
    fidelity,
    partial_trace,
    purity,
    steady_state,
    steady_state_residual,
)

# N=2, V=2, g=1, gamma=1 steady state, frozen from the null-space solve.
# The entries are rational with denominator 13 (index 0 = all down).
RHO_N2 = np.array(
    [
        [8, 2 + 2j, 2 + 2j, -1 + 2j],
        [2 - 2j, 2, 1, 1j],
        [2 - 2j, 1, 2, 1j],
        [-1 - 2j, -1j, -1j, 1],
    ]
) / 13


def test_dense_liouvillian_single_site():
    L = build_dense_liouvillian(TransverseIsingModel(1, 0.0, 0.0, gamma=1.0)).matrix
    # doubled index row*2 + col with 0 = down, 1 = up
    uu, ud, du, dd = 3, 2, 1, 0
    expected = np.zeros((4, 4))
    expected[uu, uu] = -1
    expected[dd, uu] = 1
    expected[ud, ud] = -0.5
    expected[du, du] = -0.5
    np.testing.assert_allclose(L, expected, atol=1e-15)


def test_single_site_decay():
    L = build_dense_liouvillian(TransverseIsingModel(1, 0.0, 0.0))
    rho = steady_state(L)
    np.testing.assert_allclose(rho.matrix, [[1, 0], [0, 0]], atol=1e-12)
    assert expectation(rho, sigma_z(0)) == pytest.approx(-1)
    assert expectation(rho, sigma_x(0)) == pytest.approx(0, abs=1e-12)
    assert expectation(rho, sigma_y(0)) == pytest.approx(0, abs=1e-12)


def test_two_site_regression():
    L = build_dense_liouvillian(TransverseIsingModel(2, 2.0, 1.0))
    rho = steady_state(L)
    np.testing.assert_allclose(rho.matrix, RHO_N2, atol=1e-12)
    ops = magnetizations(2)
    assert expectation(rho, ops["sx"]) == pytest.approx(4 / 13, abs=1e-12)
    assert expectation(rho, ops["sy"]) == pytest.approx(6 / 13, abs=1e-12)
    assert expectation(rho, ops["sz"]) == pytest.approx(-7 / 13, abs=1e-12)
    assert purity(rho) == pytest.approx(121 / 169, abs=1e-12)
    assert steady_state_residual(L, rho) <= 1e-10


@pytest.mark.parametrize("n, g", [(3, 0.7), (4, 3.0)])
def test_steady_state_contract(n, g):
    L = build_dense_liouvillian(TransverseIsingModel(n, 2.0, g))
    rho = steady_state(L)
    assert steady_state_residual(L, rho) <= 1e-10
    assert np.trace(rho.matrix) == pytest.approx(1)
    assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-10


def test_too_large():
    with pytest.raises(SystemTooLarge):
        build_dense_liouvillian(TransverseIsingModel(7, 1.0, 1.0))


def test_trace_preservation_columns():
    L = build_dense_liouvillian(TransverseIsingModel(3, 2.0, 0.9)).matrix
    diag_rows = [i * 8 + i for i in range(8)]
    np.testing.assert_allclose(L[diag_rows].sum(axis=0), 0, atol=1e-12)


def test_expectation_examples():
    mixed = DenseDensityMatrix(np.eye(4) / 4, 2)
    for op in magnetizations(2).values():
        assert expectation(mixed, op) == pytest.approx(0, abs=1e-15)
    down = DenseDensityMatrix(np.diag([1.0, 0.0]), 1)
    assert expectation(down, sigma_z(0)) == -1


def test_observables_hermitian():
    for op in list(magnetizations(3).values()) + [sigma_y(1)]:
        assert op.is_hermitian(3)


def test_partial_trace():
    rng = np.random.default_rng(0)

    def rand_rho(d):
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        r = a @ a.conj().T
        return r / np.trace(r)

    ra, rb = rand_rho(2), rand_rho(4)
    # little-endian: site 0 is the least significant factor, so kron(rb, ra) has ra on site 0
    full = DenseDensityMatrix(np.kron(rb, ra), 3)
    np.testing.assert_allclose(partial_trace(full, [0]).matrix, ra, atol=1e-14)
    np.testing.assert_allclose(partial_trace(full, [1, 2]).matrix, rb, atol=1e-14)
    np.testing.assert_allclose(partial_trace(full, [0, 1, 2]).matrix, full.matrix)
    bell = np.zeros(4)
    bell[[0, 3]] = 2**-0.5
    b = DenseDensityMatrix(np.outer(bell, bell), 2)
    np.testing.assert_allclose(partial_trace(b, [1]).matrix, np.eye(2) / 2, atol=1e-15)


def test_fidelity_examples():
    up, down = np.diag([0.0, 1.0]), np.diag([1.0, 0.0])
    assert fidelity(up, down) == pytest.approx(0, abs=1e-12)
    assert fidelity(up, up) == pytest.approx(1)
    psi = np.array([1, 1j]) / np.sqrt(2)
    phi = np.array([np.cos(0.3), np.sin(0.3)])
    assert fidelity(np.outer(psi, psi.conj()), np.outer(phi, phi)) == pytest.approx(abs(np.vdot(psi, phi)) ** 2)
    with pytest.raises(ValueError):
        fidelity(np.diag([1.0, -0.5]), up)


@given(st.integers(0, 2**32 - 1))
def test_fidelity_bounds(seed):
    rng = np.random.default_rng(seed)
    a = ansatz_to_dense(random_params(rng, 2, 2, 2))
    b = ansatz_to_dense(random_params(rng, 2, 2, 2))
    f = fidelity(a, b)
    assert 0 <= f <= 1
    assert fidelity(a, a) == pytest.approx(1, abs=1e-7)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-7)


def test_ansatz_zero_state_is_plus_state():
    from ndmss.ansatz import NdmParameters

    rho = ansatz_to_dense(NdmParameters.zeros(2, 2, 2))
    ops = magnetizations(2)
    assert expectation(rho, ops["sx"]) == pytest.approx(1)
    assert expectation(rho, ops["sz"]) == pytest.approx(0, abs=1e-14)
