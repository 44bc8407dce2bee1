"""States on C*_r(G), their action on the crossed product, and the dual coaction.

A state ``phi`` is handled as the positive-definite function
``s -> phi(lambda_s)``.  Three exactly computable subclasses are provided:
characters of abelian groups, vector states of finitely supported unit
vectors, and finite convex combinations.  Pointwise products are kept as
their own variant so the semigroup law can be checked directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .action import UnitaryAction
from .crossed import (
    BoundaryError,
    CrossedElement,
    DualOperator,
    check_window,
    commutator_with_dual,
    represent,
)
from .groups import Ball, Element, GroupModel
from .triple import operator_norm

CONTRACTIVE_TOL = 1e-9
PSD_TOL = 1e-10
IDENTITY_TOL = 1e-10

MECHANISM_NOTE = (
    "on the ball, beta_phi multiplies block (t, t') of the commutator by "
    "K(t, t') = phi(t t'^-1); K is positive semidefinite with unit diagonal, "
    "so this Schur multiplication cannot increase the operator norm"
)


class NonAbelianError(ValueError):
    pass


class PositiveDefiniteState:
    """Base class: subclasses implement ``value(s)`` for ``phi(lambda_s)``."""

    kind = "abstract"

    def value(self, s: Element) -> complex:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, s: Element) -> complex:
        return self.value(s)

    def __mul__(self, other: "PositiveDefiniteState") -> "ProductState":
        return ProductState((self, other))

    def to_config(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Character(PositiveDefiniteState):
    """``chi(g) = exp(i <g, angles>)`` on ``Z^d``; angles are per canonical generator."""

    group: GroupModel
    angles: tuple
    kind = "character"

    def __post_init__(self):
        if not self.group.abelian:
            raise NonAbelianError(f"characters need an abelian group, got {self.group.label}")
        if len(self.angles) != self.group.rank:
            raise ValueError(f"{self.group.label} needs {self.group.rank} angles")

    def value(self, s: Element) -> complex:
        theta = sum(k * a for k, a in zip(s, self.angles))
        return complex(math.cos(theta), math.sin(theta))

    def inverse(self) -> "Character":
        return Character(self.group, tuple(-a for a in self.angles))

    def to_config(self) -> dict:
        return {"kind": "character", "angles": list(self.angles)}


@dataclass(frozen=True, eq=False)
class VectorState(PositiveDefiniteState):
    """``phi(s) = <lambda_s xi, xi> = sum_t xi(s^-1 t) conj(xi(t))``."""

    group: GroupModel
    xi: dict
    kind = "vector"

    def __post_init__(self):
        total = sum(abs(v) ** 2 for v in self.xi.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"xi must be a unit vector (norm^2 = {total})")

    @classmethod
    def normalized(cls, group: GroupModel, xi: dict) -> "VectorState":
        norm = math.sqrt(sum(abs(v) ** 2 for v in xi.values()))
        return cls(group, {g: complex(v) / norm for g, v in xi.items() if v != 0})

    def value(self, s: Element) -> complex:
        g = self.group
        total = 0j
        for t, xt in self.xi.items():
            x = self.xi.get(g.mul(g.inv(s), t))
            if x is not None:
                total += x * xt.conjugate()
        return total

    def to_config(self) -> dict:
        return {"kind": "vector", "support": [
            {"g": list(g), "re": v.real, "im": v.imag} for g, v in self.xi.items()]}


@dataclass(frozen=True, eq=False)
class Mixture(PositiveDefiniteState):
    weights: tuple
    members: tuple
    kind = "mixture"

    def __post_init__(self):
        if len(self.weights) != len(self.members) or not self.members:
            raise ValueError("mixture needs one weight per member")
        if min(self.weights) < 0 or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("mixture weights must be a probability vector")

    def value(self, s: Element) -> complex:
        return sum(w * m.value(s) for w, m in zip(self.weights, self.members))

    def to_config(self) -> dict:
        return {"kind": "mixture", "weights": list(self.weights),
                "members": [m.to_config() for m in self.members]}


@dataclass(frozen=True, eq=False)
class ProductState(PositiveDefiniteState):
    factors: tuple
    kind = "product"

    def value(self, s: Element) -> complex:
        out = 1 + 0j
        for f in self.factors:
            out *= f.value(s)
        return out

    def to_config(self) -> dict:
        return {"kind": "product", "factors": [f.to_config() for f in self.factors]}


def trivial_state(group: GroupModel) -> VectorState:
    """The canonical trace: ``phi(s) = 1`` at e, 0 elsewhere."""
    return VectorState(group, {group.identity: 1 + 0j})


def eval_state(phi: PositiveDefiniteState, s: Element) -> complex:
    return phi.value(s)


def state_from_config(group: GroupModel, spec: dict) -> PositiveDefiniteState:
    kind = spec.get("kind")
    if kind == "character":
        return Character(group, tuple(float(a) for a in spec["angles"]))
    if kind == "vector":
        xi = {}
        for item in spec["support"]:
            g = group.normalize(item["g"])
            xi[g] = xi.get(g, 0j) + complex(item.get("re", 0.0), item.get("im", 0.0))
        return VectorState.normalized(group, xi)
    if kind == "mixture":
        members = tuple(state_from_config(group, m) for m in spec["members"])
        w = np.asarray(spec["weights"], dtype=float)
        return Mixture(tuple(float(x) for x in w / w.sum()), members)
    if kind == "product":
        return ProductState(tuple(state_from_config(group, m) for m in spec["factors"]))
    raise ValueError(f"unknown state kind {kind!r}")


def random_vector_state(group: GroupModel, rng: np.random.Generator, radius: int = 2,
                        size: int = 3) -> VectorState:
    ball = group.ball(radius).elements
    picks = rng.choice(len(ball), size=min(size, len(ball)), replace=False)
    xi = {ball[int(i)]: complex(rng.standard_normal(), rng.standard_normal()) for i in sorted(picks)}
    return VectorState.normalized(group, xi)


def random_character(group: GroupModel, rng: np.random.Generator) -> Character:
    return Character(group, tuple(float(a) for a in rng.uniform(-math.pi, math.pi, group.rank)))


def random_mixture(group: GroupModel, rng: np.random.Generator, members: int = 3) -> Mixture:
    parts = []
    for _ in range(members):
        if group.abelian and rng.random() < 0.5:
            parts.append(random_character(group, rng))
        else:
            parts.append(random_vector_state(group, rng))
    w = rng.random(members) + 0.05
    return Mixture(tuple(float(x) for x in w / w.sum()), tuple(parts))


# -- action of P_r(G) on C_c(G, A) ---------------------------------------------

def beta(phi: PositiveDefiniteState, F: CrossedElement) -> CrossedElement:
    """Pointwise multiplication ``(beta_phi F)(s) = phi(s) F(s)``; zero terms drop out."""
    terms = {}
    for s, a in F.terms.items():
        c = phi.value(s)
        if c != 0:
            terms[s] = c * a
    return CrossedElement(terms, F.n)


@dataclass
class SchurKernel:
    radius: int
    matrix: np.ndarray
    min_eigenvalue: float

    @property
    def psd(self) -> bool:
        return self.min_eigenvalue >= -PSD_TOL


def kernel_matrix(phi: PositiveDefiniteState, ball: Ball, group: GroupModel) -> np.ndarray:
    """``K(t, t') = phi(t t'^-1)`` on the ball.

    Structured states build K without visiting every pair: a vector state
    gives the Gram matrix ``V* V`` with ``V[u, t] = xi(t u)``, a character an
    outer product, mixtures and products combine member kernels.
    """
    if isinstance(phi, VectorState):
        index: dict = {}
        rows, cols, vals = [], [], []
        for j, t in enumerate(ball.elements):
            t_inv = group.inv(t)
            for x, val in phi.xi.items():
                u = group.mul(t_inv, x)
                rows.append(index.setdefault(u, len(index)))
                cols.append(j)
                vals.append(val)
        V = sp.csr_matrix((vals, (rows, cols)), shape=(len(index), len(ball)), dtype=complex)
        return (V.conj().T @ V).toarray()
    if isinstance(phi, Character):
        chi = np.array([phi.value(t) for t in ball.elements])
        return np.outer(chi, chi.conj())
    if isinstance(phi, Mixture):
        return sum(w * kernel_matrix(m, ball, group) for w, m in zip(phi.weights, phi.members))
    if isinstance(phi, ProductState):
        out = np.ones((len(ball), len(ball)), dtype=complex)
        for f in phi.factors:
            out = out * kernel_matrix(f, ball, group)
        return out
    return direct_kernel_matrix(phi, ball, group)


def direct_kernel_matrix(phi: PositiveDefiniteState, ball: Ball, group: GroupModel) -> np.ndarray:
    """Pairwise evaluation of ``phi(t t'^-1)``; the slow reference route."""
    values: dict = {}
    K = np.empty((len(ball), len(ball)), dtype=complex)
    for j, tp in enumerate(ball.elements):
        tp_inv = group.inv(tp)
        for i, t in enumerate(ball.elements):
            s = group.mul(t, tp_inv)
            v = values.get(s)
            if v is None:
                v = values[s] = phi.value(s)
            K[i, j] = v
    return K


def schur_kernel(phi: PositiveDefiniteState, group: GroupModel, R: int) -> SchurKernel:
    """``K(t, t') = phi(t t'^-1)`` on B_R with its smallest eigenvalue."""
    K = kernel_matrix(phi, group.ball(R), group)
    H = (K + K.conj().T) / 2
    return SchurKernel(R, K, float(np.linalg.eigvalsh(H)[0]))


# -- contractivity ----------------------------------------------------------------

@dataclass
class ContractivityRow:
    sign: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else float("inf"))

    @property
    def passed(self) -> bool:
        return self.slack >= -CONTRACTIVE_TOL


@dataclass
class ContractivityReport:
    radius: int
    rows: list
    psd_min_eig: float
    schur_mismatch: float
    note: str = MECHANISM_NOTE

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def min_slack(self) -> float:
        return min(r.slack for r in self.rows)


def _schur_mismatch(K: np.ndarray, base, moved, n: int) -> float:
    """Worst entry of ``(K (x) ones(n, n)) o base - moved`` (Schur product on the pattern)."""
    coo = base.tocoo()
    schur = sp.csr_matrix((K[coo.row // n, coo.col // n] * coo.data, (coo.row, coo.col)),
                          shape=base.shape)
    diff = (schur - moved).tocsr()
    return float(np.max(np.abs(diff.data), initial=0.0))


def verify_contractive(F: CrossedElement, phi: PositiveDefiniteState, Dop: DualOperator,
                       alpha: UnitaryAction, base=None, kernel=None) -> ContractivityReport:
    """Compare ``||[D_hat_+-, beta_phi F]||`` with ``||[D_hat_+-, F]||`` on the ball.

    ``base`` may carry a precomputed ``commutator_with_dual(F, ...)`` and
    ``kernel`` a precomputed ``schur_kernel(phi, ...)`` at the same radius.
    """
    if not check_window(F, Dop.ball):
        raise BoundaryError(f"support of F must lie in the radius-{Dop.radius} ball")
    base = base or commutator_with_dual(F, Dop, alpha, cross_check=False)
    moved = commutator_with_dual(beta(phi, F), Dop, alpha, cross_check=False)
    kernel = kernel or schur_kernel(phi, Dop.group, Dop.radius)
    mismatch = max(_schur_mismatch(kernel.matrix, base.half(sgn), moved.half(sgn), Dop.n)
                   for sgn in "+-")
    psd = kernel.min_eigenvalue
    rows = [ContractivityRow(sgn, moved.norms[sgn], base.norms[sgn]) for sgn in "+-"]
    return ContractivityReport(Dop.radius, rows, psd, mismatch)


@dataclass
class IsometryReport:
    radius: int
    norm_gaps: dict
    conjugation_mismatch: float
    commutator_conjugation_mismatch: float

    @property
    def passed(self) -> bool:
        return (max(self.norm_gaps.values()) <= CONTRACTIVE_TOL
                and self.conjugation_mismatch <= IDENTITY_TOL
                and self.commutator_conjugation_mismatch <= IDENTITY_TOL)


def character_multiplier(chi: Character, ball: Ball, n: int) -> np.ndarray:
    """Diagonal of ``1 (x) M_chi`` in the group-major layout."""
    return np.repeat(np.array([chi.value(t) for t in ball.elements]), n)


def verify_isometric_abelian(F: CrossedElement, chi: Character, Dop: DualOperator,
                             alpha: UnitaryAction) -> IsometryReport:
    if not Dop.group.abelian:
        raise NonAbelianError("isometry check needs an abelian group")
    if not isinstance(chi, Character):
        raise TypeError("verify_isometric_abelian needs a Character")
    R = Dop.radius
    m = character_multiplier(chi, Dop.ball, Dop.n)
    left = represent(beta(chi, F), alpha, R, cap_dim=Dop.dim).matrix
    right = m[:, None] * represent(F, alpha, R, cap_dim=Dop.dim).matrix * m.conj()[None, :]
    base = commutator_with_dual(F, Dop, alpha, cross_check=False)
    moved = commutator_with_dual(beta(chi, F), Dop, alpha, cross_check=False)
    comm_mismatch = max(
        float(np.max(np.abs(moved.half(sgn).toarray()
                            - m[:, None] * base.half(sgn).toarray() * m.conj()[None, :]),
                     initial=0.0))
        for sgn in "+-")
    gaps = {sgn: abs(moved.norms[sgn] - base.norms[sgn]) for sgn in "+-"}
    return IsometryReport(R, gaps, float(np.max(np.abs(left - right), initial=0.0)), comm_mismatch)


# -- the unitary W and the dual coaction ------------------------------------

def left_table(ball: Ball, group: GroupModel) -> np.ndarray:
    """``table[v, t] = pos(v^-1 t)`` on the ball, -1 where it leaves the ball.

    Cached per radius on the group model since it costs ``|B_R|^2`` products.
    """
    key = ("left_table", ball.radius)
    table = group._cache.get(key)
    if table is None:
        N = len(ball)
        table = np.full((N, N), -1, dtype=np.int64)
        for vi, v in enumerate(ball.elements):
            v_inv = group.inv(v)
            row = table[vi]
            for ti, t in enumerate(ball.elements):
                ui = ball.index.get(group.mul(v_inv, t))
                if ui is not None:
                    row[ti] = ui
        group._cache[key] = table
    return table


def w_operator(ball: Ball, group: GroupModel, k: int) -> sp.csr_matrix:
    """Truncated ``W zeta(s, t) = zeta(s, s^-1 t)`` on ``K (x) l2(B_R)``.

    ``K = H (x) l2(B_R)`` has dimension ``k = n |B_R|`` and group-major layout,
    so ``zeta(v, t)`` with internal index i sits at ``(pos(v) n + i) |B_R| + pos(t)``.
    Entries whose target ``s^-1 t`` leaves the ball are dropped.
    """
    N = len(ball)
    n = k // N
    vi, ti = np.nonzero(left_table(ball, group) >= 0)
    ui = left_table(ball, group)[vi, ti]
    base = (vi[:, None] * n + np.arange(n)[None, :]) * N
    rows = (base + ti[:, None]).ravel()
    cols = (base + ui[:, None]).ravel()
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(k * N, k * N))


def translation(ball: Ball, group: GroupModel, s: Element) -> sp.csr_matrix:
    """Compressed left translation: ``(lambda_s xi)(t) = xi(s^-1 t)``."""
    s_inv = group.inv(s)
    rows, cols = [], []
    for ti, t in enumerate(ball.elements):
        u = ball.index.get(group.mul(s_inv, t))
        if u is not None:
            rows.append(ti)
            cols.append(u)
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ball), len(ball)))


def coaction_image(T, ball: Ball, group: GroupModel) -> sp.csr_matrix:
    """``W (T (x) 1) W*`` for an operator T on ``K = H (x) l2(B_R)``."""
    T = sp.csr_matrix(T)
    k = T.shape[0]
    W = w_operator(ball, group, k)
    lifted = sp.kron(T, sp.identity(len(ball), format="csr"), format="csr")
    return (W @ lifted @ W.T).tocsr()


def summed_coaction(F: CrossedElement, alpha: UnitaryAction, R: int) -> sp.csr_matrix:
    """``sum_s pi_hat(F(s) delta_s) (x) lambda_s`` on the ball."""
    ball = alpha.group.ball(R)
    out = None
    for s, a in F.terms.items():
        piece = represent(CrossedElement.delta(s, a), alpha, R, sparse=True).matrix
        term = sp.kron(piece, translation(ball, alpha.group, s), format="csr")
        out = term if out is None else out + term
    if out is None:
        k = F.n * len(ball)
        out = sp.csr_matrix((k * len(ball), k * len(ball)), dtype=complex)
    return out.tocsr()


def inner_indices(ball: Ball, R_inner: int, n: int) -> np.ndarray:
    """Indices ``(v, i, t)`` of ``K (x) l2(B_R)`` with v and t both in B_{R_inner}."""
    N = len(ball)
    inner = [p for p, c in enumerate(ball.lengths) if c <= R_inner]
    idx = [(vi * n + i) * N + ti for vi in inner for i in range(n) for ti in inner]
    return np.asarray(idx, dtype=int)


@dataclass
class CoactionReport:
    radius: int
    inner_radius: int
    mismatch: float
    compared_entries: int

    @property
    def passed(self) -> bool:
        return self.mismatch <= IDENTITY_TOL


def _check_inner(group: GroupModel, F: CrossedElement, R: int, R_inner: int) -> None:
    if R_inner < 0 or 2 * R_inner > R or R_inner + F.diameter(group) > R:
        raise ValueError(
            f"window too small: need R >= 2*R_inner and R >= R_inner + diam(supp F) "
            f"(R={R}, R_inner={R_inner}, diam={F.diameter(group)})")


def coaction_via_W(F: CrossedElement, alpha: UnitaryAction, R: int, R_inner: int) -> CoactionReport:
    """Compare ``W (pi_hat(F) (x) 1) W*`` with the summed dual coaction on inner blocks."""
    group = alpha.group
    _check_inner(group, F, R, R_inner)
    ball = group.ball(R)
    rep = represent(F, alpha, R, sparse=True).matrix
    lhs = coaction_image(rep, ball, group)
    rhs = summed_coaction(F, alpha, R)
    idx = inner_indices(ball, R_inner, F.n)
    diff = (lhs - rhs)[idx][:, idx]
    mismatch = float(np.max(np.abs(diff.data), initial=0.0)) if diff.nnz else 0.0
    return CoactionReport(R, R_inner, mismatch, len(idx) ** 2)


# -- slice maps -------------------------------------------------------------------

@dataclass
class SliceResult:
    value: np.ndarray
    structure_defect: float

    @property
    def translation_structured(self) -> bool:
        return self.structure_defect <= IDENTITY_TOL


def slice_map(phi: PositiveDefiniteState, T, ball: Ball, group: GroupModel,
              inner_radius: int | None = None) -> SliceResult:
    """``S_phi(sum_s T_s (x) lambda_s) = sum_s phi(s) T_s``.

    ``T`` acts on ``K (x) l2(B_R)`` with ``l2(B_R)`` as the fastest index.
    ``T_s`` is read from the group block ``(s, e)``.  Blocks ``(s t', t')``
    for generators t' are compared with it on the inner window of K (when
    ``inner_radius`` is given) to detect operators that are not translation
    structured; slicing proceeds either way.
    """
    T = sp.csr_matrix(T)
    N = len(ball)
    k = T.shape[0] // N
    e_pos = ball.index[group.identity]
    k_idx = np.arange(k)
    if inner_radius is not None:
        n = k // N
        k_inner = np.asarray([vi * n + i for vi, c in enumerate(ball.lengths)
                              if c <= inner_radius for i in range(n)], dtype=int)
    else:
        k_inner = k_idx
    cols_e = k_idx * N + e_pos
    Tc = T.tocsc()
    by_col = {e_pos: Tc[:, cols_e].tocsr()}
    out = sp.csr_matrix((k, k), dtype=complex)
    defect = 0.0
    gens = [g for g in group.generators() if g in ball]
    for tp in gens:
        by_col[ball.index[tp]] = Tc[:, k_inner * N + ball.index[tp]].tocsr()
    for s in ball.elements:
        c = phi.value(s)
        block = by_col[e_pos][k_idx * N + ball.index[s]]
        if c != 0:
            out = out + c * block
        ref = block[k_inner][:, k_inner]
        for tp in gens:
            t = group.mul(s, tp)
            if t not in ball:
                continue
            other = by_col[ball.index[tp]][k_inner * N + ball.index[t]]
            diff = other - ref
            if diff.nnz:
                defect = max(defect, float(np.max(np.abs(diff.data))))
    out = out.toarray()
    return SliceResult(out, defect)


@dataclass
class MechanismReport:
    radius: int
    inner_radius: int
    mismatch: dict
    structure_defect: float

    @property
    def passed(self) -> bool:
        return max(self.mismatch.values()) <= CONTRACTIVE_TOL


def verify_mechanism(F: CrossedElement, phi: PositiveDefiniteState, Dop: DualOperator,
                     alpha: UnitaryAction, R_inner: int) -> MechanismReport:
    """Check ``S_phi(delta([D_hat_+-, F])) = [D_hat_+-, beta_phi F]`` on the inner window."""
    group = Dop.group
    _check_inner(group, F, Dop.radius, R_inner)
    base = commutator_with_dual(F, Dop, alpha, cross_check=False)
    moved = commutator_with_dual(beta(phi, F), Dop, alpha, cross_check=False)
    inner = np.asarray([vi * Dop.n + i for vi, c in enumerate(Dop.ball.lengths)
                        if c <= R_inner for i in range(Dop.n)], dtype=int)
    mismatch, defect = {}, 0.0
    for sgn in "+-":
        image = coaction_image(base.half(sgn), Dop.ball, group)
        sliced = slice_map(phi, image, Dop.ball, group, inner_radius=R_inner)
        defect = max(defect, sliced.structure_defect)
        diff = sliced.value[np.ix_(inner, inner)] - moved.half(sgn)[inner][:, inner].toarray()
        mismatch[sgn] = float(np.max(np.abs(diff), initial=0.0))
    return MechanismReport(Dop.radius, R_inner, mismatch, defect)


@dataclass
class AffineReport:
    deviation: float

    @property
    def passed(self) -> bool:
        return self.deviation <= IDENTITY_TOL


def verify_affine(F: CrossedElement, phi0: PositiveDefiniteState, phi1: PositiveDefiniteState,
                  Dop: DualOperator, alpha: UnitaryAction, lambdas=(0.25, 0.5, 0.75)) -> AffineReport:
    """``lam -> [D_hat_+-, beta_{(1-lam) phi0 + lam phi1} F]`` is affine in lam."""
    c0 = commutator_with_dual(beta(phi0, F), Dop, alpha, cross_check=False)
    c1 = commutator_with_dual(beta(phi1, F), Dop, alpha, cross_check=False)
    worst = 0.0
    for lam in lambdas:
        mix = Mixture((1 - lam, lam), (phi0, phi1))
        cl = commutator_with_dual(beta(mix, F), Dop, alpha, cross_check=False)
        for sgn in "+-":
            target = (1 - lam) * c0.half(sgn) + lam * c1.half(sgn)
            worst = max(worst, operator_norm(cl.half(sgn) - target))
    return AffineReport(worst)
