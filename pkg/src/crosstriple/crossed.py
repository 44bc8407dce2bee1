"""Truncated reduced crossed products and the dual Dirac operator.

Everything lives on ``H (x) l2(B_R)`` with a group-major layout: the basis
vector ``delta_t (x) e_i`` sits at index ``pos(t) * n + i``.  In this layout
``D (x) 1`` is block diagonal and ``1 (x) M_c`` is diagonal, with ``c(t)``
repeated n times.  All infinite objects are compressed by the projection onto
the ball B_R; translates falling outside the ball are dropped.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .action import UnitaryAction
from .groups import Ball, Element, GroupModel, ResourceError
from .triple import FiniteSpectralTriple, operator_norm, span_residual

DEFAULT_CAP_DIM = 4096
SPECTRUM_TOL = 1e-9
KERNEL_TOL = 1e-12
BOUND_TOL = 1e-9
MONOTONE_TOL = 1e-10


class BoundaryError(ValueError):
    """The support of a crossed element does not fit in the truncation window."""


@dataclass(frozen=True)
class CrossedElement:
    """A finitely supported map ``F: G -> M_n`` (an element of C_c(G, A))."""

    terms: dict
    n: int

    @classmethod
    def from_pairs(cls, pairs, n: int | None = None) -> "CrossedElement":
        terms: dict = {}
        for g, a in pairs:
            a = np.asarray(a, dtype=complex)
            terms[g] = terms[g] + a if g in terms else a
        if n is None:
            n = next(iter(terms.values())).shape[0]
        return cls(terms, n)

    @classmethod
    def elementary(cls, a, f: dict) -> "CrossedElement":
        """The tensor ``a (x) f``: ``s -> f(s) a``."""
        a = np.asarray(a, dtype=complex)
        return cls({s: complex(c) * a for s, c in f.items()}, a.shape[0])

    @classmethod
    def delta(cls, g: Element, a) -> "CrossedElement":
        a = np.asarray(a, dtype=complex)
        return cls({g: a}, a.shape[0])

    @property
    def support(self) -> list:
        return list(self.terms)

    def __call__(self, s: Element) -> np.ndarray:
        a = self.terms.get(s)
        return np.zeros((self.n, self.n), dtype=complex) if a is None else a

    def __add__(self, other: "CrossedElement") -> "CrossedElement":
        return CrossedElement.from_pairs(list(self.terms.items()) + list(other.terms.items()), self.n)

    def scale(self, c: complex) -> "CrossedElement":
        return CrossedElement({s: c * a for s, a in self.terms.items()}, self.n)

    def adjoint(self, alpha: UnitaryAction) -> "CrossedElement":
        """``F*(t) = alpha_t(F(t^-1)*)`` (discrete G, modular function 1)."""
        group = alpha.group
        return CrossedElement(
            {group.inv(s): alpha.apply(group.inv(s), a.conj().T) for s, a in self.terms.items()},
            self.n,
        )

    def diameter(self, group: GroupModel) -> int:
        return max((group.word_length(s) for s in self.terms), default=0)

    def in_algebra(self, X: FiniteSpectralTriple, tol: float = 1e-8) -> bool:
        return all(span_residual(X.basis, a) < tol for a in self.terms.values())


def check_window(F: CrossedElement, ball: Ball) -> bool:
    return all(s in ball for s in F.terms)


def _kernel_entries(F: CrossedElement, alpha: UnitaryAction, ball: Ball):
    """Yield ``(row_pos, col_pos, s, block)`` with block = alpha_{t^-1}(F(s)), s = t t'^-1."""
    group = alpha.group
    for s, a in F.terms.items():
        for j, tp in enumerate(ball.elements):
            t = group.mul(s, tp)
            i = ball.index.get(t)
            if i is not None:
                yield i, j, s, alpha.apply(group.inv(t), a)


def _assemble(blocks, size: int, n: int, sparse: bool):
    rows, cols, vals = [], [], []
    local_r, local_c = np.divmod(np.arange(n * n), n)
    for i, j, blk in blocks:
        rows.append(i * n + local_r)
        cols.append(j * n + local_c)
        vals.append(np.asarray(blk).reshape(-1))
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    M = sp.coo_matrix((vals, (rows, cols)), shape=(size, size), dtype=complex).tocsr()
    return M if sparse else M.toarray()


@dataclass
class TruncatedRep:
    radius: int
    ball: Ball
    n: int
    matrix: object
    source: CrossedElement


def represent(F: CrossedElement, alpha: UnitaryAction, R: int, sparse: bool = False,
              cap_dim: int = DEFAULT_CAP_DIM) -> TruncatedRep:
    """Compression ``P_R pi_hat(F) P_R`` on ``H (x) l2(B_R)``."""
    ball = alpha.group.ball(R)
    n = F.n
    if not sparse and n * len(ball) > cap_dim:
        raise ResourceError(f"dimension {n * len(ball)} exceeds cap {cap_dim}")
    if not check_window(F, ball):
        warnings.warn(f"support of F leaves the radius-{R} ball; translates are truncated",
                      stacklevel=2)
    blocks = ((i, j, blk) for i, j, _, blk in _kernel_entries(F, alpha, ball))
    return TruncatedRep(R, ball, n, _assemble(blocks, n * len(ball), n, sparse), F)


class DualOperator:
    """``D_hat = [[0, D_-], [D_+, 0]]`` with ``D_-+ = D (x) 1 -+ i 1 (x) M_c`` on a ball."""

    def __init__(self, X: FiniteSpectralTriple, group: GroupModel, R: int,
                 cap_dim: int = DEFAULT_CAP_DIM):
        if R < 0:
            raise ValueError("radius must be nonnegative")
        self.triple = X
        self.group = group
        self.radius = R
        self.ball = group.ball(R)
        self.n = X.n
        if self.dim > cap_dim:
            raise ResourceError(f"n*|B_R| = {self.dim} exceeds cap {cap_dim}")
        self.lambdas = X.eigh[0]
        self.lengths = np.asarray(self.ball.lengths, dtype=float)
        self.mc_diag = np.repeat(self.lengths, self.n)

    @property
    def dim(self) -> int:
        return self.n * len(self.ball)

    @cached_property
    def d_part(self) -> np.ndarray:
        return np.kron(np.eye(len(self.ball)), self.triple.D)

    @cached_property
    def minus(self) -> np.ndarray:
        return self.d_part - 1j * np.diag(self.mc_diag)

    @cached_property
    def plus(self) -> np.ndarray:
        return self.d_part + 1j * np.diag(self.mc_diag)

    def half(self, sign: str) -> np.ndarray:
        return self.plus if sign == "+" else self.minus

    @cached_property
    def matrix(self) -> np.ndarray:
        Z = np.zeros((self.dim, self.dim), dtype=complex)
        return np.block([[Z, self.minus], [self.plus, Z]])


def build_dual_operator(X: FiniteSpectralTriple, group: GroupModel, R: int,
                        cap_dim: int = DEFAULT_CAP_DIM) -> DualOperator:
    return DualOperator(X, group, R, cap_dim)


@dataclass
class SpectrumReport:
    radius: int
    computed: np.ndarray
    predicted: np.ndarray
    mismatch: float
    multiplicity_ok: bool

    @property
    def passed(self) -> bool:
        return self.mismatch <= SPECTRUM_TOL and self.multiplicity_ok


def predicted_spectrum(Dop: DualOperator) -> np.ndarray:
    mags = np.sqrt(np.add.outer(Dop.lambdas**2, Dop.lengths**2)).ravel()
    return np.sort(np.concatenate([-mags, mags]))


def dual_spectrum(Dop: DualOperator) -> SpectrumReport:
    computed = np.linalg.eigvalsh(Dop.matrix)
    predicted = predicted_spectrum(Dop)
    mismatch = float(np.max(np.abs(computed - predicted), initial=0.0))
    return SpectrumReport(Dop.radius, computed, predicted, mismatch, _multiplicities_ok(Dop, computed))


def _multiplicities_ok(Dop: DualOperator, computed: np.ndarray, tol: float = 1e-7) -> bool:
    """Each ``+-sqrt(lam^2 + mu^2)`` occurs at least ``dim E_lam * #{t : c(t) = mu}`` times."""
    lam_vals, lam_mult = _cluster(Dop.lambdas, tol)
    mu_vals, mu_mult = np.unique(Dop.lengths, return_counts=True)
    for lam, lm in zip(lam_vals, lam_mult):
        for mu, mm in zip(mu_vals, mu_mult):
            r = np.hypot(lam, mu)
            for value in {r, -r}:
                if np.sum(np.abs(computed - value) <= tol * max(1.0, r)) < lm * mm:
                    return False
    return True


def _cluster(values: np.ndarray, tol: float):
    vals, mults = [], []
    for v in np.sort(values):
        if vals and abs(v - vals[-1]) <= tol * max(1.0, abs(v)):
            mults[-1] += 1
        else:
            vals.append(v)
            mults.append(1)
    return vals, mults


@dataclass
class DualCommutator:
    """Kernel-route commutators of a crossed element with the pieces of D_hat.

    Parts are sparse (CSR); call ``.toarray()`` for dense matrices.
    """

    radius: int
    d_part: sp.csr_matrix
    m_part: sp.csr_matrix
    naive_mismatch: float

    @cached_property
    def minus(self) -> sp.csr_matrix:
        return (self.d_part - 1j * self.m_part).tocsr()

    @cached_property
    def plus(self) -> sp.csr_matrix:
        return (self.d_part + 1j * self.m_part).tocsr()

    def half(self, sign: str) -> sp.csr_matrix:
        return self.plus if sign == "+" else self.minus

    @property
    def assembled(self) -> sp.csr_matrix:
        return sp.bmat([[None, self.minus], [self.plus, None]], format="csr")

    @cached_property
    def norms(self) -> dict:
        return {"+": operator_norm(self.plus), "-": operator_norm(self.minus)}

    @property
    def norm(self) -> float:
        return max(self.norms.values())


def commutator_with_dual(F: CrossedElement, Dop: DualOperator, alpha: UnitaryAction,
                         cross_check: bool = True) -> DualCommutator:
    """``[D (x) 1, F]`` and ``[1 (x) M_c, F]`` on the ball, from their kernels.

    Block (t, t') of the first is ``[D, alpha_{t^-1}(F(s))]`` and of the second
    ``alpha_{t^-1}(F(s)) (c(t) - c(s^-1 t))`` with ``s = t t'^-1``.  With
    ``cross_check`` the naive commutators of the compressed operators are
    formed too and their worst entrywise deviation recorded.
    """
    ball = Dop.ball
    if not check_window(F, ball):
        raise BoundaryError(f"support of F must lie in the radius-{Dop.radius} ball")
    D = Dop.triple.D
    n, size = Dop.n, Dop.dim
    lengths = ball.lengths
    d_blocks, m_blocks = [], []
    for i, j, _, blk in _kernel_entries(F, alpha, ball):
        d_blocks.append((i, j, D @ blk - blk @ D))
        m_blocks.append((i, j, blk * (lengths[i] - lengths[j])))
    d_part = _assemble(d_blocks, size, n, sparse=True)
    m_part = _assemble(m_blocks, size, n, sparse=True)
    mismatch = float("nan")
    if cross_check:
        P = represent(F, alpha, Dop.radius, cap_dim=size).matrix
        naive_d = Dop.d_part @ P - P @ Dop.d_part
        mc = Dop.mc_diag
        naive_m = mc[:, None] * P - P * mc[None, :]
        mismatch = float(max(np.max(np.abs(naive_d - d_part.toarray()), initial=0.0),
                             np.max(np.abs(naive_m - m_part.toarray()), initial=0.0)))
    return DualCommutator(Dop.radius, d_part, m_part, mismatch)


def window_sup_commutator(X: FiniteSpectralTriple, alpha: UnitaryAction, a, ball: Ball) -> float:
    """``max_{t in ball} ||[D, alpha_{t^-1}(a)]||`` (the ball is symmetric)."""
    return max(operator_norm(X.commutator(alpha.apply(t, a))) for t in ball)


@dataclass
class BoundCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= -BOUND_TOL


@dataclass
class BoundsReport:
    radius: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> BoundCheck:
        return next(c for c in self.checks if c.name == name)


def verify_bounds(a, f: dict, Dop: DualOperator, alpha: UnitaryAction) -> BoundsReport:
    """Check the three norm bounds for ``F = a (x) f`` at the operator's radius.

    * ``d_part``: ``||[D (x) 1, F]|| <= M ||f||_1`` with M the windowed sup of
      ``||[D, alpha_t(a)]||``.
    * ``mc_weighted``: ``||[1 (x) M_c, F]|| <= ||a|| ||m f||_1`` with windowed
      displacements ``m_s``; ``mc_weighted_analytic`` uses ``m_s = c(s)``.
    * ``mc_sup``: ``||[1 (x) M_c, F]|| <= ||a|| ||f||_1 max_{f(s) != 0} m_s``.
    * ``dual_+`` / ``dual_-``: the sum of the first two for ``[D_hat_+-, F]``.
    """
    group = Dop.group
    a = np.asarray(a, dtype=complex)
    F = CrossedElement.elementary(a, f)
    comm = commutator_with_dual(F, Dop, alpha, cross_check=False)
    f_l1 = sum(abs(c) for c in f.values())
    a_norm = operator_norm(a)
    M = window_sup_commutator(Dop.triple, alpha, a, Dop.ball)
    disp = {s: group.displacement(s, Dop.radius).value for s in f}
    mf_l1 = sum(disp[s] * abs(c) for s, c in f.items())
    mf_l1_analytic = sum(group.word_length(s) * abs(c) for s, c in f.items())
    max_disp = max((disp[s] for s, c in f.items() if c != 0), default=0)
    lhs_d = operator_norm(comm.d_part)
    lhs_m = operator_norm(comm.m_part)
    report = BoundsReport(Dop.radius)
    report.checks += [
        BoundCheck("d_part", lhs_d, M * f_l1),
        BoundCheck("mc_weighted", lhs_m, a_norm * mf_l1),
        BoundCheck("mc_weighted_analytic", lhs_m, a_norm * mf_l1_analytic),
        BoundCheck("mc_sup", lhs_m, a_norm * f_l1 * max_disp),
        BoundCheck("dual_+", comm.norms["+"], M * f_l1 + a_norm * mf_l1),
        BoundCheck("dual_-", comm.norms["-"], M * f_l1 + a_norm * mf_l1),
    ]
    return report


def commutator_bound(F: CrossedElement, Dop: DualOperator, alpha: UnitaryAction) -> float:
    """Triangle-inequality bound on ``||[D_hat, F (+) F]||`` at the operator's radius."""
    group = Dop.group
    total = 0.0
    for s, a in F.terms.items():
        total += window_sup_commutator(Dop.triple, alpha, a, Dop.ball)
        total += operator_norm(a) * group.displacement(s, Dop.radius).value
    return total


@dataclass
class CompressionProfile:
    radii: list
    norms: list
    bound: float

    @property
    def monotone(self) -> bool:
        return all(b >= a - MONOTONE_TOL for a, b in zip(self.norms, self.norms[1:]))

    @property
    def last_increment(self) -> float:
        return self.norms[-1] - self.norms[-2] if len(self.norms) > 1 else 0.0

    @property
    def within_bound(self) -> bool:
        return all(v <= self.bound + BOUND_TOL for v in self.norms)


def compression_profile(F: CrossedElement, X: FiniteSpectralTriple, alpha: UnitaryAction,
                        radii, cap_dim: int = DEFAULT_CAP_DIM) -> CompressionProfile:
    """``||P_R [D_hat, F (+) F] P_R||`` for increasing R."""
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    norms = []
    Dop = None
    for R in radii:
        Dop = DualOperator(X, alpha.group, R, cap_dim)
        norms.append(commutator_with_dual(F, Dop, alpha, cross_check=False).norm)
    return CompressionProfile(radii, norms, commutator_bound(F, Dop, alpha))
