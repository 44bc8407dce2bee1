"""Acceptance suite: one group of tests per criterion, named test_ac<k>_*.

The demos are run once per session through the same Runner the CLI uses,
and the rows are checked here against the numeric thresholds directly
rather than through the row verdicts.
"""
import time

import numpy as np
import pytest

from crosstriple.action import UnitaryAction
from crosstriple.cli import main
from crosstriple.coaction import Character
from crosstriple.config import load_config
from crosstriple.connes import connes_distance
from crosstriple.crossed import CrossedElement, DualOperator, commutator_with_dual
from crosstriple.groups import GroupModel
from crosstriple.suites import Runner
from crosstriple.triple import (
    FiniteSpectralTriple,
    State,
    commutator,
    graph_triple,
    operator_norm,
    scalar_triple,
    two_point,
)

DEMOS = ("two_point_z", "free_scalar", "clock_shift_z")
RADII = [2, 4, 6]


class DemoRuns:
    def __init__(self):
        self.runners = {name: Runner(load_config(f"demo:{name}")) for name in DEMOS}
        self.results: dict = {}
        self.seconds: dict = {}

    def get(self, demo: str, suite: str):
        key = (demo, suite)
        if key not in self.results:
            t0 = time.perf_counter()
            self.results[key] = self.runners[demo].run(suite)
            self.seconds[key] = time.perf_counter() - t0
        return self.results[key]

    def rows(self, demo: str, suite: str, check: str) -> list:
        return [r for r in self.get(demo, suite).rows if r.check == check]


@pytest.fixture(scope="session")
def demos():
    return DemoRuns()


# -- AC1 -------------------------------------------------------------------------------

def test_ac1_spectrum_closed_form(demos):
    for demo in DEMOS:
        rows = demos.rows(demo, "spectrum", "eigenvalues")
        assert sorted(r.inputs["R"] for r in rows) == RADII
        assert demos.runners[demo].cfg.cap_dim <= 4096
        for r in rows:
            assert r.lhs <= 1e-9, (demo, r.inputs, r.lhs)
        for r in demos.rows(demo, "spectrum", "multiplicities"):
            assert r.passed
    total = sum(demos.seconds[(d, "spectrum")] for d in DEMOS)
    print(f"AC1 spectrum runtime {total:.1f}s")
    assert total < 60


# -- AC2 -------------------------------------------------------------------------------

def test_ac2_contractivity_grid(demos):
    total = 0.0
    for demo in DEMOS:
        rows = demos.rows(demo, "contractivity", "beta_contractive")
        cfg = demos.runners[demo].cfg
        states = {r.inputs["phi"] for r in rows}
        assert len(states) >= 20
        for R in RADII:
            assert len({r.inputs["F"] for r in rows if r.inputs["R"] == R}) >= 5
        kinds = {type(cfg.group_states[s]).__name__ for s in states}
        assert {"VectorState", "Mixture"} <= kinds
        if cfg.group.abelian:
            assert "Character" in kinds
        worst = min(r.rhs - r.lhs for r in rows)
        assert worst >= -1e-9, (demo, worst)
        total += demos.seconds[(demo, "contractivity")]
    print(f"AC2 contractivity runtime {total:.1f}s")
    assert total < 300


# -- AC3 -------------------------------------------------------------------------------

def test_ac3_abelian_isometry(demos):
    cfg = demos.runners["two_point_z"].cfg
    chars = [s for s, phi in cfg.group_states.items() if isinstance(phi, Character)]
    assert len(chars) >= 10
    gaps = demos.rows("two_point_z", "abelian-isometry", "norm_gap")
    assert {r.inputs["phi"] for r in gaps} == set(chars)
    assert max(r.lhs for r in gaps) <= 1e-9
    for check in ("multiplier_conjugation", "commutator_conjugation"):
        rows = demos.rows("two_point_z", "abelian-isometry", check)
        assert rows and max(r.lhs for r in rows) <= 1e-10


# -- AC4 -------------------------------------------------------------------------------

def test_ac4_norm_bounds_on_demos(demos):
    names = {"d_part", "mc_weighted", "mc_weighted_analytic", "mc_sup", "dual_+", "dual_-"}
    for demo in DEMOS:
        rows = [r for r in demos.get(demo, "bounds").rows if r.check in names]
        assert {r.check for r in rows} == names
        assert {r.inputs["R"] for r in rows} == set(RADII)
        assert min(r.rhs - r.lhs for r in rows) >= -1e-9, demo


@pytest.mark.parametrize("group", [GroupModel.integers(), GroupModel.lattice(2), GroupModel.free(2)],
                         ids=lambda g: g.label)
def test_ac4_pure_group_word_length_bound(group):
    rng = np.random.default_rng(11)
    X = scalar_triple()
    alpha = UnitaryAction.trivial(group, 1)
    for R in (2, 4):
        Dop = DualOperator(X, group, R)
        for _ in range(6):
            elems = group.ball(2).elements
            support = [elems[int(i)] for i in rng.choice(len(elems), 3, replace=False)]
            f = {s: complex(*rng.standard_normal(2)) for s in support}
            F = CrossedElement.elementary(np.eye(1), f)
            lhs = commutator_with_dual(F, Dop, alpha, cross_check=False).m_part
            bound = sum(group.word_length(s) * abs(c) for s, c in f.items())
            assert operator_norm(lhs) <= bound + 1e-9


# -- AC5 -------------------------------------------------------------------------------

def test_ac5_coaction_identity(demos):
    for demo in DEMOS:
        cfg = demos.runners[demo].cfg
        assert cfg.coaction["R"] == 6 and cfg.coaction["R_inner"] == 3
        res = demos.get(demo, "coaction-identity")
        w = [r for r in res.rows if r.check == "w_conjugation"]
        assert {r.inputs["F"] for r in w} == set(cfg.crossed), res.note
        assert max(r.lhs for r in w) <= 1e-10
        mech = [r for r in res.rows if r.check == "slice_mechanism"]
        assert mech and max(r.lhs for r in mech) <= 1e-9


# -- AC6 -------------------------------------------------------------------------------

def sphere(count):
    """Fibonacci points on S^2."""
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    phi = np.pi * (1 + 5 ** 0.5) * k
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def brute_force_two_point(Lam, count=20000):
    """sup over trace-free Hermitian directions of |tr((rho0 - rho1) a)| / ||[D, a]||."""
    paulis = np.array([[[1, 0], [0, -1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]]])
    D = np.array([[0, Lam], [Lam, 0]])
    diff = np.diag([1.0, -1.0])
    best = 0.0
    for u in sphere(count):
        a = np.tensordot(u, paulis, axes=1)
        s = np.linalg.norm(D @ a - a @ D, 2)
        if s > 1e-12:
            best = max(best, abs(np.trace(diff @ a).real) / s)
    return best


@pytest.mark.parametrize("Lam", [0.5, 1.0, 2.0, 4.0])
def test_ac6_two_point_distance(Lam):
    r = connes_distance(two_point(Lam), State.basis_state(2, 0), State.basis_state(2, 1))
    assert not r.unbounded
    assert abs(r.value - 1 / abs(Lam)) <= 1e-6
    assert abs(r.value - brute_force_two_point(Lam)) <= 1e-6


def test_ac6_symmetry_and_triangle():
    tol = 1e-6
    rng = np.random.default_rng(2024)
    triples = 0
    for _ in range(55):
        n = int(rng.integers(2, 5))
        if n == 2:
            X = two_point(rng.uniform(0.2, 5.0))
        else:
            W = np.triu(rng.uniform(0.2, 3.0, (n, n)), 1)
            X = graph_triple(W + W.T)
        s = [State.random(n, rng) if rng.random() < 0.7 else State.basis_state(n, int(rng.integers(n)))
             for _ in range(3)]
        d = {(i, j): connes_distance(X, s[i], s[j], tol) for i in range(3) for j in range(3) if i != j}
        for (i, j), r in d.items():
            assert r.converged and not r.unbounded
            assert abs(r.value - d[(j, i)].value) <= 2 * tol
            assert operator_norm(commutator(X.D, r.element)) <= 1 + 1e-9
        for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 0, 2)):
            assert d[(i, k)].value <= d[(i, j)].value + d[(j, k)].value + 3 * tol
        triples += 1
    assert triples >= 50


def test_ac6_zero_dirac_unbounded(demos):
    X0 = FiniteSpectralTriple(np.zeros((2, 2)), two_point(1.0).basis)
    r = connes_distance(X0, State.basis_state(2, 0), State.basis_state(2, 1))
    assert r.unbounded and r.display == "UNBOUNDED"
    rows = demos.rows("two_point_z", "distance", "expected_value")
    assert rows and all(r.passed for r in rows)


# -- AC7 -------------------------------------------------------------------------------

def test_ac7_kernels_psd(demos):
    for demo in DEMOS:
        cfg = demos.runners[demo].cfg
        rows = demos.rows(demo, "contractivity", "kernel_psd")
        assert {(r.inputs["phi"], r.inputs["R"]) for r in rows} == {
            (s, R) for s in cfg.group_states for R in cfg.radii}
        assert min(r.rhs for r in rows) >= -1e-10, demo


# -- AC8 -------------------------------------------------------------------------------

def test_ac8_monotone_profiles(demos):
    for demo in DEMOS:
        rows = demos.rows(demo, "bounds", "compression_monotone")
        assert rows and max(r.lhs for r in rows) <= 1e-10, demo
        # profiles of every crossed element, including non-elementary ones
        runner = demos.runners[demo]
        for fid in runner.fitting(RADII[0]):
            for sign in ("+", "-"):
                norms = [runner.base(fid, R).norms[sign] for R in RADII]
                assert all(b >= a - 1e-10 for a, b in zip(norms, norms[1:])), (demo, fid, sign)


@pytest.mark.parametrize("demo", ["two_point_z", "clock_shift_z"])
def test_ac8_reruns_byte_identical(demo, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["run", "--config", f"demo:{demo}", "--out", str(out), "-q"]) == 0
    files = sorted(p.name for p in outs[0].iterdir())
    assert files == sorted(p.name for p in outs[1].iterdir())
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
