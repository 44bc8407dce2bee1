"""Finite-dimensional spectral triples (A, H, D) realized by matrices."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

HERMITIAN_TOL = 1e-12
SPAN_TOL = 1e-10
NULLSPACE_RTOL = 1e-9


class ValidationError(ValueError):
    """An input violates a structural invariant (hermiticity, closure, ...)."""


def commutator(D: np.ndarray, a: np.ndarray) -> np.ndarray:
    D = np.asarray(D)
    a = np.asarray(a)
    if D.shape != a.shape or D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"shape mismatch: {D.shape} vs {a.shape}")
    return D @ a - a @ D


SPARSE_NORM_MIN_DIM = 256


def operator_norm(T) -> float:
    """Largest singular value of ``T``.

    Dense input goes through the top eigenvalue of ``T* T`` (or ``T T*``,
    whichever is smaller).  Large sparse input uses Lanczos on ``T* T`` with
    a fixed start vector, so results are reproducible.
    """
    if sp.issparse(T):
        if min(T.shape) < SPARSE_NORM_MIN_DIM:
            T = T.toarray()
        else:
            return _sparse_norm(sp.csr_matrix(T))
    T = np.asarray(T)
    if T.size == 0:
        return 0.0
    if not np.all(np.isfinite(T)):
        raise ValueError("operator_norm: non-finite entries")
    if T.ndim == 1:
        return float(np.linalg.norm(T))
    m, n = T.shape
    if min(m, n) <= 64:
        return float(np.linalg.norm(T, 2))
    G = T.conj().T @ T if n <= m else T @ T.conj().T
    k = G.shape[0]
    top = sla.eigh(G, eigvals_only=True, subset_by_index=[k - 1, k - 1], check_finite=False)
    return float(np.sqrt(max(top[0], 0.0)))


def _sparse_norm(T: sp.csr_matrix) -> float:
    if not np.all(np.isfinite(T.data)):
        raise ValueError("operator_norm: non-finite entries")
    T = T.copy()
    T.eliminate_zeros()
    if T.nnz == 0:
        return 0.0
    G = (T.conj().T @ T).tocsr()
    v0 = np.random.default_rng(12345).standard_normal(G.shape[0]).astype(G.dtype)
    try:
        top = spla.eigsh(G, k=1, which="LA", v0=v0, tol=0, return_eigenvectors=False)
    except spla.ArpackError:
        return operator_norm(T.toarray())
    return float(np.sqrt(max(top[0].real, 0.0)))


def span_residual(basis: np.ndarray, x: np.ndarray) -> float:
    """Least-squares distance from ``x`` to the complex span of ``basis`` (m x n x n)."""
    B = basis.reshape(basis.shape[0], -1).T
    coeffs, *_ = np.linalg.lstsq(B, x.reshape(-1), rcond=None)
    return float(np.linalg.norm(B @ coeffs - x.reshape(-1)))


@dataclass(frozen=True)
class LipschitzReport:
    a: np.ndarray
    seminorm: float
    norm: float
    banach_norm: float


class FiniteSpectralTriple:
    """A unital *-closed matrix algebra with a Hermitian Dirac matrix."""

    def __init__(self, D, basis, name: str = "inline", validate: bool = True):
        self.D = np.asarray(D, dtype=complex)
        self.basis = np.asarray([np.asarray(b, dtype=complex) for b in basis])
        self.name = name
        if validate:
            self.validate()

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    def validate(self) -> None:
        D = self.D
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValidationError(f"D must be square, got {D.shape}")
        if self.basis.ndim != 3 or self.basis.shape[1:] != D.shape:
            raise ValidationError("basis matrices must match the shape of D")
        if np.max(np.abs(D - D.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValidationError("D is not Hermitian")
        if span_residual(self.basis, np.eye(self.n)) > SPAN_TOL:
            raise ValidationError("identity is not in the algebra span")
        for i, b in enumerate(self.basis):
            if span_residual(self.basis, b.conj().T) > SPAN_TOL:
                raise ValidationError(f"algebra span is not *-closed (basis element {i})")

    def in_span(self, a, tol: float = 1e-8) -> bool:
        return span_residual(self.basis, np.asarray(a, dtype=complex)) < tol

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.D)

    def commutator(self, a) -> np.ndarray:
        return commutator(self.D, np.asarray(a, dtype=complex))

    def lipschitz(self, a) -> LipschitzReport:
        return lipschitz_seminorm(self, a)

    def __repr__(self) -> str:
        return f"FiniteSpectralTriple(name={self.name!r}, n={self.n}, m={self.m})"


def lipschitz_seminorm(X: FiniteSpectralTriple, a) -> LipschitzReport:
    a = np.asarray(a, dtype=complex)
    if not X.in_span(a):
        warnings.warn("element is not in the algebra span", stacklevel=2)
    L = operator_norm(X.commutator(a))
    norm = operator_norm(a)
    return LipschitzReport(a, L, norm, norm + L)


def commutator_map(D: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Matrix of the linear map ``coefficients -> vec([D, sum_i x_i b_i])``."""
    return np.stack([commutator(D, b).reshape(-1) for b in basis], axis=1)


def numerical_nullspace(M: np.ndarray, rtol: float = NULLSPACE_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical nullspace of ``M``."""
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return vh.conj().T
    rank = int(np.sum(s > rtol * s[0]))
    return vh[rank:].conj().T


def metric_commutant_dimension(X: FiniteSpectralTriple, rtol: float = NULLSPACE_RTOL) -> int:
    """Dimension of ``{a in A : [D, a] = 0}``.

    The basis may be linearly dependent, so the count is taken on an
    orthonormal basis of the span rather than on raw coefficients.
    """
    B = X.basis.reshape(X.m, -1).T
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(s[0], 1.0)))
    ortho = u[:, :rank].T.reshape(rank, X.n, X.n)
    return numerical_nullspace(commutator_map(X.D, ortho), rtol).shape[1]


@dataclass(frozen=True)
class State:
    """A density matrix on H, read as a state on the algebra."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        object.__setattr__(self, "rho", rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValidationError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(rho)[0] < -1e-10:
            raise ValidationError("density matrix is not positive semidefinite")
        if abs(np.trace(rho) - 1) > 1e-10:
            raise ValidationError("density matrix does not have unit trace")

    @classmethod
    def pure(cls, vector) -> "State":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def basis_state(cls, n: int, i: int) -> "State":
        return cls.pure(np.eye(n)[i])

    @classmethod
    def maximally_mixed(cls, n: int) -> "State":
        return cls(np.eye(n) / n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, rank: int | None = None) -> "State":
        rank = rank or n
        Z = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
        rho = Z @ Z.conj().T
        rho = (rho + rho.conj().T) / 2
        return cls(rho / np.trace(rho).real)

    @property
    def n(self) -> int:
        return self.rho.shape[0]


def state_eval(rho, a) -> complex:
    rho = rho.rho if isinstance(rho, State) else np.asarray(rho)
    a = np.asarray(a)
    if rho.shape != a.shape:
        raise ValueError(f"shape mismatch: {rho.shape} vs {a.shape}")
    return complex(np.trace(rho @ a))


# -- builders ---------------------------------------------------------------

def matrix_units(n: int) -> np.ndarray:
    units = np.zeros((n * n, n, n), dtype=complex)
    for k in range(n * n):
        units[k, k // n, k % n] = 1.0
    return units


def two_point(Lam: float) -> FiniteSpectralTriple:
    """Two points at distance 1/|Lam|: diagonal C^2 with an off-diagonal D."""
    D = np.array([[0.0, Lam], [Lam, 0.0]], dtype=complex)
    basis = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], dtype=complex)
    return FiniteSpectralTriple(D, basis, name=f"two_point(Lam={Lam})")


def clock_matrix(N: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(N) / N))


def shift_matrix(N: int) -> np.ndarray:
    return np.roll(np.eye(N, dtype=complex), 1, axis=0)


def fourier_matrix(N: int) -> np.ndarray:
    k = np.arange(N)
    return np.exp(2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)


def clock_shift(N: int, spectrum=None, eigenbasis: str = "standard") -> FiniteSpectralTriple:
    """M_N spanned by ``clock^j shift^k``; D has the given spectrum.

    ``eigenbasis="standard"`` makes D diagonal (it then commutes with the
    clock); ``"fourier"`` diagonalizes D in the Fourier basis, which makes D a
    polynomial in the shift.
    """
    spectrum = np.arange(N, dtype=float) if spectrum is None else np.asarray(spectrum, float)
    if spectrum.shape != (N,):
        raise ValidationError(f"clock_shift spectrum needs {N} entries")
    if eigenbasis == "standard":
        D = np.diag(spectrum).astype(complex)
    elif eigenbasis == "fourier":
        V = fourier_matrix(N)
        D = V @ np.diag(spectrum) @ V.conj().T
        D = (D + D.conj().T) / 2
    else:
        raise ValidationError(f"unknown eigenbasis {eigenbasis!r}")
    C, S = clock_matrix(N), shift_matrix(N)
    basis = np.array([np.linalg.matrix_power(C, j) @ np.linalg.matrix_power(S, k)
                      for j in range(N) for k in range(N)])
    return FiniteSpectralTriple(D, basis, name=f"clock_shift(N={N}, {eigenbasis})")


def graph_triple(weights) -> FiniteSpectralTriple:
    """Points of a weighted graph: diagonal algebra, D the symmetric weight matrix.

    The metric commutant is trivial exactly when the graph is connected.
    """
    W = np.asarray(weights, dtype=float)
    D = ((W + W.T) / 2).astype(complex)
    n = D.shape[0]
    basis = np.array([np.diag(np.eye(n)[i]) for i in range(n)], dtype=complex)
    return FiniteSpectralTriple(D, basis, name=f"graph(n={n})")


def scalar_triple() -> FiniteSpectralTriple:
    """A = C on H = C with D = 0; crossed with G this is the pure group triple."""
    return FiniteSpectralTriple(np.zeros((1, 1)), np.ones((1, 1, 1)), name="scalar")


def full_matrix_triple(D) -> FiniteSpectralTriple:
    D = np.asarray(D, dtype=complex)
    return FiniteSpectralTriple(D, matrix_units(D.shape[0]), name=f"M_{D.shape[0]}")
