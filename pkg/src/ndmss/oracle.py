"""Dense ground truth for small lattices.

Everything here works on explicit ``2^N x 2^N`` density matrices and
``4^N x 4^N`` superoperators, built independently of the sparse enumerator
from Kronecker products of single-site matrices. Basis index ``i`` has bit
``k`` set when site ``k`` is up (see :mod:`ndmss.hilbert`), so the single-site
ordering is ``(down, up)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .hilbert import all_doubled_configurations
from .model import TransverseIsingModel
from .observables import ObservableOperator

MAX_DENSE_SITES = 6

_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SY = np.array([[0, 1j], [-1j, 0]], dtype=np.complex128)
_SZ = np.diag([-1.0, 1.0]).astype(np.complex128)
_SMINUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)


class SystemTooLarge(ValueError):
    pass


class DegenerateSteadyState(ValueError):
    pass


@dataclass
class DenseDensityMatrix:
    matrix: np.ndarray
    n_sites: int
    normalized: bool = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class DenseSuperoperator:
    """Liouvillian acting on row-major vectorised density matrices."""

    matrix: np.ndarray
    n_sites: int


class TabulatedDensityMatrix:
    """Wrap an explicit matrix so that estimators and samplers can use it like an ansatz."""

    def __init__(self, rho):
        mat = rho.matrix if isinstance(rho, DenseDensityMatrix) else np.asarray(rho)
        self.matrix = np.asarray(mat, dtype=np.complex128)
        self.n_visible = int(np.log2(self.matrix.shape[0]))
        with np.errstate(divide="ignore"):
            self._log = np.log(self.matrix)

    def log_rho_batch(self, rows, cols) -> np.ndarray:
        from .hilbert import indices_of

        return self._log[indices_of(rows), indices_of(cols)]


def site_operator(op: np.ndarray, site: int, n_sites: int) -> sp.csr_matrix:
    left = sp.identity(2 ** (n_sites - 1 - site), format="csr")
    right = sp.identity(2**site, format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def _check_size(n_sites: int):
    if n_sites > MAX_DENSE_SITES:
        raise SystemTooLarge(f"{n_sites} sites exceeds the dense limit of {MAX_DENSE_SITES}")


def dense_hamiltonian(m: TransverseIsingModel) -> np.ndarray:
    _check_size(m.n_sites)
    N = m.n_sites
    H = sp.csr_matrix((2**N, 2**N), dtype=np.complex128)
    for j, l in m.bonds:
        H = H + 0.25 * m.V * site_operator(_SZ, j, N) @ site_operator(_SZ, l, N)
    for j in range(N):
        H = H + 0.5 * m.g * site_operator(_SX, j, N)
    return H.toarray()


def build_dense_liouvillian(m: TransverseIsingModel) -> DenseSuperoperator:
    _check_size(m.n_sites)
    N = m.n_sites
    dim = 2**N
    eye = sp.identity(dim, format="csr", dtype=np.complex128)
    H = sp.csr_matrix(dense_hamiltonian(m))
    # row-major vec: vec(A rho B) = (A kron B^T) vec(rho)
    L = -1j * (sp.kron(H, eye) - sp.kron(eye, H.T))
    for j in range(N):
        c = site_operator(_SMINUS, j, N).astype(np.complex128)
        cdc = (c.conj().T @ c).tocsr()
        L = L + m.gamma * (
            sp.kron(c, c.conj()) - 0.5 * sp.kron(cdc, eye) - 0.5 * sp.kron(eye, cdc.T)
        )
    return DenseSuperoperator(L.toarray(), N)


def _spectral_norm(mat: np.ndarray, iters: int = 50) -> float:
    if mat.shape[0] <= 256:
        return float(np.linalg.norm(mat, 2))
    v = np.random.default_rng(0).standard_normal(mat.shape[1]).astype(np.complex128)
    est = 0.0
    for _ in range(iters):
        w = mat.conj().T @ (mat @ v)
        est = np.linalg.norm(w)
        v = w / est
    return float(np.sqrt(est))


def steady_state_residual(L: DenseSuperoperator, rho: DenseDensityMatrix) -> float:
    return float(np.linalg.norm(L.matrix @ rho.matrix.ravel()))


def steady_state(L: DenseSuperoperator, kernel_tol: float = 1e-9) -> DenseDensityMatrix:
    """Unique null vector of ``L``, Hermitised and normalised to unit trace."""
    mat = L.matrix
    dim2 = mat.shape[0]
    dim = int(round(np.sqrt(dim2)))
    if dim2 <= 1024:
        _, s, vh = np.linalg.svd(mat)
        n_kernel = int(np.sum(s <= kernel_tol * max(s[0], 1e-300)))
        if n_kernel != 1:
            raise DegenerateSteadyState(f"Liouvillian kernel has dimension {n_kernel}")
        vec = vh[-1].conj()
    else:
        # Replace one equation by the trace condition; singular if the kernel is not 1D.
        A = mat.copy()
        A[0, :] = 0
        A[0, :: dim + 1] = 1
        rhs = np.zeros(dim2, dtype=np.complex128)
        rhs[0] = 1
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                vec = sla.solve(A, rhs)
            except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
                raise DegenerateSteadyState(str(exc)) from exc
    rho = vec.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho)
    if abs(tr) == 0:
        raise DegenerateSteadyState("null vector has zero trace")
    rho = rho / tr
    out = DenseDensityMatrix(rho, L.n_sites, True)
    res = steady_state_residual(L, out)
    if res > 1e-10 * _spectral_norm(mat):
        raise DegenerateSteadyState(f"steady-state residual {res:.3e} too large")
    return out


def expectation(rho: DenseDensityMatrix, op: ObservableOperator) -> float:
    theta = op.to_dense(rho.n_sites)
    if theta.shape != rho.matrix.shape:
        raise ValueError("operator and density matrix dimensions differ")
    val = np.trace(rho.matrix @ theta) / np.trace(rho.matrix)
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-12 * scale and np.allclose(theta, theta.conj().T):
        raise ValueError(f"expectation of a Hermitian operator has imaginary part {val.imag:.3e}")
    return float(val.real)


def partial_trace(rho: DenseDensityMatrix, keep) -> DenseDensityMatrix:
    N = rho.n_sites
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(not 0 <= k < N for k in keep):
        raise ValueError(f"invalid site set {keep} for {N} sites")
    # tensor axis a (of N) holds site N-1-a
    t = rho.matrix.reshape((2,) * (2 * N))
    traced = [k for k in range(N) if k not in keep]
    row_axes = [N - 1 - k for k in keep]
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rin = list(letters[:N])
    cin = list(letters[N : 2 * N])
    for k in traced:
        cin[N - 1 - k] = rin[N - 1 - k]
    # keep the little-endian convention: output axes ordered from the highest kept site down
    order = sorted(row_axes)
    out_r = "".join(rin[a] for a in order)
    out_c = "".join(cin[a] for a in order)
    red = np.einsum("".join(rin) + "".join(cin) + "->" + out_r + out_c, t)
    d = 2 ** len(keep)
    return DenseDensityMatrix(red.reshape(d, d), len(keep), rho.normalized)


def _psd_sqrt(mat: np.ndarray, tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    if w.min() < -tol * max(abs(w).max(), 1e-300):
        raise ValueError(f"matrix is not positive semi-definite (min eigenvalue {w.min():.3e})")
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(a: DenseDensityMatrix, b: DenseDensityMatrix, raw: bool = False, tol: float = 1e-8) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))^2``, clipped to [0, 1] unless ``raw``."""
    A = a.matrix if isinstance(a, DenseDensityMatrix) else np.asarray(a)
    B = b.matrix if isinstance(b, DenseDensityMatrix) else np.asarray(b)
    if A.shape != B.shape:
        raise ValueError("density matrices have different dimensions")
    sa = _psd_sqrt(A, tol)
    _psd_sqrt(B, tol)
    m = sa @ B @ sa
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    f = float(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2)
    return f if raw else float(min(max(f, 0.0), 1.0))


def ansatz_to_dense(p) -> DenseDensityMatrix:
    """Enumerate ``rho(s, t)`` of any object with ``log_rho_batch`` and normalise."""
    N = p.n_visible
    _check_size(N)
    rows, cols = all_doubled_configurations(N)
    logr = p.log_rho_batch(rows, cols)
    rho = np.exp(logr - np.max(logr.real)).reshape(2**N, 2**N)
    return DenseDensityMatrix(rho / np.trace(rho), N, True)


def purity(rho: DenseDensityMatrix) -> float:
    m = rho.matrix / np.trace(rho.matrix)
    return float(np.real(np.trace(m @ m)))
