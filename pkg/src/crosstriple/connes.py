"""Connes pseudo-metric on states of a finite spectral triple.

``d(rho1, rho2) = sup { |tr((rho1 - rho2) a)| : ||[D, a]|| <= 1 }``

The supremum is taken over Hermitian, trace-free elements of the algebra
(the antihermitian part and the scalars contribute nothing).  It is solved by
a cutting-plane method: a linear master problem over accumulated cuts
``Re(u*[D, a(x)] w) <= 1`` taken from the top singular pair at each iterate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .action import UnitaryAction
from .crossed import CrossedElement, DualOperator, represent
from .triple import (
    FiniteSpectralTriple,
    State,
    commutator,
    numerical_nullspace,
    operator_norm,
)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
UNBOUNDED_TOL = 1e-8


@dataclass
class DistanceResult:
    value: float
    unbounded: bool = False
    coefficients: np.ndarray | None = None
    element: np.ndarray | None = None
    seminorm: float = 0.0
    iterations: int = 0
    gap: float = 0.0
    upper: float = 0.0
    converged: bool = True
    cuts: list = field(default_factory=list, repr=False)

    @property
    def display(self) -> str:
        return "UNBOUNDED" if self.unbounded else repr(float(self.value))


def hermitian_basis(X: FiniteSpectralTriple) -> np.ndarray:
    """Real-orthonormal basis of the trace-free Hermitian part of the algebra span.

    Orthonormality is for ``<h, k> = Re tr(h* k)``.
    """
    n = X.n
    herm = []
    for b in X.basis:
        herm.append((b + b.conj().T) / 2)
        herm.append((b - b.conj().T) / 2j)
    herm = np.array(herm)
    herm = herm - (np.trace(herm, axis1=1, axis2=2).real / n)[:, None, None] * np.eye(n)
    # stack real and imaginary parts so the Gram-Schmidt runs over the reals
    V = np.concatenate([herm.real.reshape(len(herm), -1), herm.imag.reshape(len(herm), -1)], axis=1)
    u, s, vh = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(s[0] if s.size else 0.0, 1.0)))
    rows = vh[:rank]
    half = n * n
    return (rows[:, :half] + 1j * rows[:, half:]).reshape(rank, n, n)


class _Problem:
    def __init__(self, X: FiniteSpectralTriple, rho1: State, rho2: State):
        self.X = X
        self.h = hermitian_basis(X)
        diff = rho1.rho - rho2.rho
        self.v = np.array([np.trace(diff @ h).real for h in self.h])
        self.comms = np.array([commutator(X.D, h) for h in self.h])

    def element(self, x: np.ndarray) -> np.ndarray:
        return np.tensordot(x, self.h, axes=1)

    def comm(self, x: np.ndarray) -> np.ndarray:
        return np.tensordot(x, self.comms, axes=1)


def connes_distance(X: FiniteSpectralTriple, rho1: State, rho2: State,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> DistanceResult:
    """Cutting-plane evaluation of the spectral distance.

    Stops once the LP upper bound and the best rescaled feasible value are
    within ``tol``.  ``result.cuts`` holds each cut ``g`` in the coordinates
    of ``hermitian_basis(X)``: every a with ``||[D, a]|| <= 1`` has ``g . x <= 1``.
    """
    if rho1.n != X.n or rho2.n != X.n:
        raise ValueError("state dimension does not match the triple")
    prob = _Problem(X, rho1, rho2)
    p = len(prob.h)
    if p == 0 or np.max(np.abs(prob.v), initial=0.0) <= UNBOUNDED_TOL:
        return DistanceResult(0.0, coefficients=np.zeros(p), element=np.zeros((X.n, X.n)))

    # directions with [D, h] = 0 cost nothing; a component of v there is unbounded
    L = np.stack([prob.comms.real.reshape(p, -1), prob.comms.imag.reshape(p, -1)], axis=1)
    L = L.reshape(p, -1).T
    null = numerical_nullspace(L)
    if null.shape[1] and np.max(np.abs(null.T @ prob.v)) > UNBOUNDED_TOL:
        return DistanceResult(float("inf"), unbounded=True)
    # restrict to the complement of the commutant, where the seminorm is a norm
    basis = np.eye(p) if null.shape[1] == 0 else numerical_nullspace(null.T.real)
    v = basis.T @ prob.v
    q = basis.shape[1]
    sigma_min = np.linalg.svd(L @ basis, compute_uv=False)[-1]
    box = np.sqrt(X.n) / sigma_min * (1 + 1e-6)

    cuts: list[np.ndarray] = []
    full_cuts: list[np.ndarray] = []
    best_val, best_x = 0.0, np.zeros(q)
    upper = float(np.sum(np.abs(v)) * box)
    it = 0
    for it in range(1, max_iter + 1):
        res = linprog(-v, A_ub=np.array(cuts) if cuts else None,
                      b_ub=np.ones(len(cuts)) if cuts else None,
                      bounds=[(-box, box)] * q, method="highs")
        if res.status != 0:
            raise RuntimeError(f"master LP failed: {res.message}")
        x = res.x
        upper = min(upper, float(v @ x))
        C = prob.comm(basis @ x)
        U, s, Vh = np.linalg.svd(C)
        sig = float(s[0])
        scale = max(sig, 1.0)
        if v @ x / scale > best_val:
            best_val, best_x = float(v @ x / scale), x / scale
        if upper - best_val <= tol:
            break
        u, w = U[:, 0], Vh[0].conj()
        g_full = np.array([np.vdot(u, c @ w).real for c in prob.comms])
        g = basis.T @ g_full
        full_cuts.append(g_full)
        cuts.append(g)
        cuts.append(-g)
    coeffs = basis @ best_x
    a = prob.element(coeffs)
    seminorm = operator_norm(commutator(X.D, a))
    gap = upper - best_val
    return DistanceResult(best_val, False, coeffs, a, seminorm, it, gap, upper, gap <= tol,
                          full_cuts)


def distance_value(result: DistanceResult) -> float:
    return float("inf") if result.unbounded else result.value


# -- comparison with the crossed-product triple -------------------------------

def dual_triple(X: FiniteSpectralTriple, alpha: UnitaryAction, R: int, window: int = 1,
                cap_dim: int = 4096) -> FiniteSpectralTriple:
    """The truncated dual triple: span of ``(a_i (x) delta_g) (+) (a_i (x) delta_g)``
    for g in B_window, acting on ``H (x) l2(B_R) (x) C^2`` with D_hat."""
    Dop = DualOperator(X, alpha.group, R, cap_dim)
    basis = []
    for g in alpha.group.ball(window):
        for b in X.basis:
            rep = represent(CrossedElement.delta(g, b), alpha, R, cap_dim=cap_dim).matrix
            basis.append(np.kron(np.eye(2), rep))
    return FiniteSpectralTriple(Dop.matrix, basis, name=f"dual(R={R}, window={window})",
                                validate=False)


def pullback_state(rho: State, ball_size: int) -> State:
    """``rho (x) (uniform on the ball) (x) (uniform on C^2)`` in the dual layout."""
    return State(np.kron(np.eye(2) / 2, np.kron(np.eye(ball_size) / ball_size, rho.rho)))


@dataclass
class ComparisonRow:
    pair_id: str
    d_x: DistanceResult
    d_y: DistanceResult

    @property
    def ratio(self) -> float:
        if self.d_x.unbounded or self.d_y.unbounded or self.d_x.value == 0:
            return float("nan")
        return self.d_y.value / self.d_x.value


def compare_dual_metric(X: FiniteSpectralTriple, alpha: UnitaryAction, R: int, pairs,
                        window: int = 1, tol: float = DEFAULT_TOL, cap_dim: int = 4096) -> list:
    """Distances on A from X and from the truncated dual triple (no equivalence is asserted)."""
    Y = dual_triple(X, alpha, R, window, cap_dim)
    nb = len(alpha.group.ball(R))
    rows = []
    for pair_id, r1, r2 in pairs:
        dx = connes_distance(X, r1, r2, tol)
        dy = connes_distance(Y, pullback_state(r1, nb), pullback_state(r2, nb), tol)
        rows.append(ComparisonRow(pair_id, dx, dy))
    return rows
