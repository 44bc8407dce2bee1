"""Unitarily implemented group actions on a finite spectral triple."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import Element, GroupModel
from .triple import FiniteSpectralTriple, ValidationError, operator_norm, span_residual

UNITARY_TOL = 1e-10
INVARIANCE_TOL = 1e-8
ISOMETRY_TOL = 1e-9


class UnitaryAction:
    """``alpha_g(a) = u_g a u_g*`` from unitary images of the canonical generators."""

    def __init__(self, group: GroupModel, generator_images, validate: bool = True):
        self.group = group
        self.images = [np.asarray(u, dtype=complex) for u in generator_images]
        if len(self.images) != len(group.canonical_generators()):
            raise ValidationError(
                f"{group.label} needs {len(group.canonical_generators())} generator images, "
                f"got {len(self.images)}"
            )
        self._cache: dict = {}
        if validate:
            self.validate()

    @classmethod
    def trivial(cls, group: GroupModel, n: int) -> "UnitaryAction":
        return cls(group, [np.eye(n)] * len(group.canonical_generators()))

    @property
    def n(self) -> int:
        return self.images[0].shape[0]

    def validate(self) -> None:
        n = self.n
        for i, u in enumerate(self.images):
            if u.shape != (n, n):
                raise ValidationError("generator images must share one square shape")
            if np.max(np.abs(u.conj().T @ u - np.eye(n))) > UNITARY_TOL:
                raise ValidationError(f"generator image {i} is not unitary")
        if self.group.abelian:
            for i, u in enumerate(self.images):
                for v in self.images[i + 1:]:
                    if np.max(np.abs(u @ v - v @ u)) > UNITARY_TOL:
                        raise ValidationError("generator images of an abelian group must commute")

    def unitary(self, g: Element) -> np.ndarray:
        u = self._cache.get(g)
        if u is not None:
            return u
        n = self.n
        u = np.eye(n, dtype=complex)
        if self.group.is_free:
            for letter in g:
                img = self.images[abs(letter) - 1]
                u = u @ (img if letter > 0 else img.conj().T)
        else:
            for k, img in zip(g, self.images):
                if k:
                    base = img if k > 0 else img.conj().T
                    u = u @ np.linalg.matrix_power(base, abs(k))
        self._cache[g] = u
        return u

    def apply(self, g: Element, a) -> np.ndarray:
        u = self.unitary(g)
        return u @ np.asarray(a, dtype=complex) @ u.conj().T

    def invariance_residual(self, X: FiniteSpectralTriple, R: int = 1) -> float:
        """Worst distance of ``alpha_g(b_i)`` from the algebra span, over g in B_R."""
        worst = 0.0
        for g in self.group.ball(R):
            for b in X.basis:
                worst = max(worst, span_residual(X.basis, self.apply(g, b)))
        return worst


def apply(alpha: UnitaryAction, g: Element, a) -> np.ndarray:
    return alpha.apply(g, a)


def swap_action(group: GroupModel) -> UnitaryAction:
    """Every canonical generator acts by the 2x2 swap (flip of the two points)."""
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    return UnitaryAction(group, [swap] * len(group.canonical_generators()))


@dataclass(frozen=True)
class BoundProfile:
    """``g -> ||[D, alpha_g(a)]||`` over a ball, plus diagnostics."""

    radius: int
    values: dict
    sup: float
    half_radius_sup: float

    @property
    def growth_ratio(self) -> float:
        if self.half_radius_sup == 0.0:
            return 1.0 if self.sup == 0.0 else float("inf")
        return self.sup / self.half_radius_sup


def bound_profile(X: FiniteSpectralTriple, alpha: UnitaryAction, a, R: int) -> BoundProfile:
    ball = alpha.group.ball(R)
    values = {g: operator_norm(X.commutator(alpha.apply(g, a))) for g in ball}
    half = R // 2
    half_sup = max(v for g, v in values.items() if alpha.group.word_length(g) <= half)
    return BoundProfile(R, values, max(values.values()), half_sup)


@dataclass
class ElementVerdict:
    index: int
    base_seminorm: float
    window_sup: float
    max_deviation: float
    isometric: bool


@dataclass
class WindowClassification:
    radius: int
    elements: list = field(default_factory=list)
    invariance_residual: float = 0.0
    invariant_algebra: bool = True
    caveat: str = ("verdicts cover the ball of the stated radius only; "
                   "boundedness over the whole group is not decided")

    @property
    def isometric_on_window(self) -> bool:
        return self.invariant_algebra and all(e.isometric for e in self.elements)

    @property
    def bounded_on_window(self) -> bool:
        return all(np.isfinite(e.window_sup) for e in self.elements)


def classify_on_window(X: FiniteSpectralTriple, alpha: UnitaryAction, R: int,
                       sample=None, tol: float = ISOMETRY_TOL) -> WindowClassification:
    """Check ``||[D, alpha_g(a)]|| == ||[D, a]||`` for g in B_R on sampled elements.

    ``sample`` is a list of matrices; defaults to the algebra basis.
    """
    sample = list(X.basis) if sample is None else [np.asarray(a, dtype=complex) for a in sample]
    residual = alpha.invariance_residual(X, R)
    report = WindowClassification(R, invariance_residual=residual,
                                  invariant_algebra=residual < INVARIANCE_TOL)
    for i, a in enumerate(sample):
        prof = bound_profile(X, alpha, a, R)
        base = operator_norm(X.commutator(a))
        dev = max(abs(v - base) for v in prof.values.values())
        report.elements.append(ElementVerdict(i, base, prof.sup, dev, dev <= tol))
    return report
