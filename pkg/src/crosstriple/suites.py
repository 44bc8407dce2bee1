"""Verification suites over an ``ExperimentConfig``.

Each suite returns ``Row`` objects.  A row records which inputs it used (ids
of crossed elements and states from the config, the radius, the sign of
``D_hat``), the two sides of the inequality or identity, and the verdict.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coaction import (
    Character,
    coaction_via_W,
    schur_kernel,
    verify_affine,
    verify_contractive,
    verify_isometric_abelian,
    verify_mechanism,
)
from .config import ExperimentConfig
from .connes import compare_dual_metric, connes_distance
from .crossed import (
    DualOperator,
    check_window,
    commutator_bound,
    commutator_with_dual,
    dual_spectrum,
    verify_bounds,
)

SUITES = ("spectrum", "bounds", "contractivity", "abelian-isometry", "coaction-identity", "distance")


@dataclass
class Row:
    """One checked relation.

    ``kind="bound"`` means ``lhs <= rhs`` with ``slack = rhs - lhs >= -tol``;
    ``kind="identity"`` means ``mismatch = lhs <= tol = rhs``.
    """

    suite: str
    check: str
    inputs: dict
    lhs: float
    rhs: float
    kind: str = "bound"
    tol: float = 0.0

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if not (np.isfinite(self.lhs) and np.isfinite(self.rhs)):
            return False
        if self.kind == "identity":
            return self.lhs <= self.rhs
        return self.slack >= -self.tol

    def sort_key(self) -> tuple:
        return (self.suite, self.check, sorted((k, str(v)) for k, v in self.inputs.items()))


def identity_row(suite, check, inputs, mismatch, tol) -> Row:
    return Row(suite, check, inputs, float(mismatch), float(tol), "identity", tol)


@dataclass
class SuiteResult:
    name: str
    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def pmap(func, items, threads: int = 1) -> list:
    """Order-preserving map, fanned out over threads when asked."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


class Runner:
    """Caches dual operators per radius so suites can share them."""

    def __init__(self, cfg: ExperimentConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = threads
        self._dual: dict = {}
        self._kernels: dict = {}
        self._base: dict = {}
        self.partial: SuiteResult | None = None

    def dual(self, R: int) -> DualOperator:
        if R not in self._dual:
            self._dual[R] = DualOperator(self.cfg.triple, self.cfg.group, R, self.cfg.cap_dim)
        return self._dual[R]

    def kernel(self, sid: str, R: int):
        key = (sid, R)
        if key not in self._kernels:
            self._kernels[key] = schur_kernel(self.cfg.group_states[sid], self.cfg.group, R)
        return self._kernels[key]

    def base(self, fid: str, R: int):
        key = (fid, R)
        if key not in self._base:
            self._base[key] = commutator_with_dual(self.cfg.crossed[fid], self.dual(R),
                                                   self.cfg.action, cross_check=False)
        return self._base[key]

    def fitting(self, R: int) -> list:
        """Ids of crossed elements whose support lies in B_R."""
        ball = self.cfg.group.ball(R)
        return [fid for fid, F in self.cfg.crossed.items() if check_window(F, ball)]

    def start(self, name: str) -> SuiteResult:
        """Open a result that stays reachable if the suite aborts midway."""
        self.partial = SuiteResult(name)
        return self.partial

    def run(self, name: str) -> SuiteResult:
        result = SUITE_FUNCS[name](self)
        self.partial = None
        return result


def suite_spectrum(run: Runner) -> SuiteResult:
    cfg = run.cfg
    out = run.start("spectrum")
    table = []
    for R in cfg.radii:
        rep = dual_spectrum(run.dual(R))
        out.rows.append(identity_row("spectrum", "eigenvalues", {"R": R},
                                     rep.mismatch, cfg.tolerances["spectrum"]))
        out.rows.append(Row("spectrum", "multiplicities", {"R": R},
                            0.0 if rep.multiplicity_ok else 1.0, 0.0, "identity"))
        for k, (c, p) in enumerate(zip(rep.computed, rep.predicted)):
            table.append({"R": R, "k": k, "computed": c, "predicted": p})
    out.tables["spectrum"] = table
    return out


def suite_bounds(run: Runner) -> SuiteResult:
    cfg = run.cfg
    tol = cfg.tolerances["bounds"]
    out = run.start("bounds")
    for R in cfg.radii:
        fitting = set(run.fitting(R))
        for fid, (a, f) in cfg.elementary.items():
            if fid not in fitting:
                continue
            rep = verify_bounds(a, f, run.dual(R), cfg.action)
            for c in rep.checks:
                out.rows.append(Row("bounds", c.name, {"F": fid, "R": R}, c.lhs, c.rhs, tol=tol))
    profiles = []
    mono_tol = cfg.tolerances["monotone"]
    for fid in run.fitting(cfg.radii[0]):
        norms = [run.base(fid, R).norm for R in cfg.radii]
        bound = commutator_bound(cfg.crossed[fid], run.dual(cfg.radii[-1]), cfg.action)
        drop = max([max(a - b, 0.0) for a, b in zip(norms, norms[1:])], default=0.0)
        out.rows.append(identity_row("bounds", "compression_monotone", {"F": fid}, drop, mono_tol))
        out.rows.append(Row("bounds", "compression_within_bound", {"F": fid, "R": cfg.radii[-1]},
                            norms[-1], bound, tol=tol))
        for R, v in zip(cfg.radii, norms):
            profiles.append({"F": fid, "R": R, "norm": v, "bound": bound})
    out.tables["compression"] = profiles
    return out


def suite_contractivity(run: Runner) -> SuiteResult:
    cfg = run.cfg
    tol = cfg.tolerances["contractive"]
    psd_tol = cfg.tolerances["psd"]
    out = run.start("contractivity")
    table = []
    for R in cfg.radii:
        Dop = run.dual(R)
        for sid in cfg.group_states:
            k = run.kernel(sid, R)
            out.rows.append(Row("contractivity", "kernel_psd", {"phi": sid, "R": R},
                                0.0, k.min_eigenvalue, tol=psd_tol))

        def one(item, R=R, Dop=Dop):
            fid, sid = item
            return verify_contractive(cfg.crossed[fid], cfg.group_states[sid], Dop, cfg.action,
                                      base=run.base(fid, R), kernel=run.kernel(sid, R))

        fitting = run.fitting(R)
        for fid in fitting:
            run.base(fid, R)  # fill the cache before any fan-out
        items = list(itertools.product(fitting, cfg.group_states))
        for (fid, sid), rep in zip(items, pmap(one, items, run.threads)):
            for r in rep.rows:
                inputs = {"F": fid, "phi": sid, "R": R, "sign": r.sign}
                out.rows.append(Row("contractivity", "beta_contractive", inputs, r.lhs, r.rhs, tol=tol))
                table.append({**inputs, "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack})
            out.rows.append(identity_row("contractivity", "schur_form", {"F": fid, "phi": sid, "R": R},
                                         rep.schur_mismatch, cfg.tolerances["identity"]))
    out.tables["contractivity"] = table
    return out


def suite_isometry(run: Runner) -> SuiteResult:
    cfg = run.cfg
    out = run.start("abelian-isometry")
    if not cfg.group.abelian:
        out.note = f"skipped: {cfg.group.label} is not abelian"
        return out
    chars = [sid for sid, phi in cfg.group_states.items() if isinstance(phi, Character)]
    if not chars:
        out.note = "skipped: no characters configured"
    for R in cfg.radii:
        for fid in run.fitting(R):
            for sid in chars:
                rep = verify_isometric_abelian(cfg.crossed[fid], cfg.group_states[sid],
                                               run.dual(R), cfg.action)
                inputs = {"F": fid, "phi": sid, "R": R}
                for sgn, gap in rep.norm_gaps.items():
                    out.rows.append(identity_row("abelian-isometry", "norm_gap",
                                                 {**inputs, "sign": sgn}, gap, cfg.tolerances["isometry"]))
                out.rows.append(identity_row("abelian-isometry", "multiplier_conjugation", inputs,
                                             rep.conjugation_mismatch, cfg.tolerances["identity"]))
                out.rows.append(identity_row("abelian-isometry", "commutator_conjugation", inputs,
                                             rep.commutator_conjugation_mismatch,
                                             cfg.tolerances["identity"]))
    return out


def suite_coaction(run: Runner) -> SuiteResult:
    cfg = run.cfg
    R = int(cfg.coaction.get("R", 6))
    R_inner = int(cfg.coaction.get("R_inner", 3))
    n_states = int(cfg.coaction.get("mechanism_states", 3))
    out = run.start("coaction-identity")
    group = cfg.group
    eligible = [fid for fid, F in cfg.crossed.items()
                if 2 * R_inner <= R and R_inner + F.diameter(group) <= R]
    skipped = sorted(set(cfg.crossed) - set(eligible))
    if skipped:
        out.note = f"skipped (support too wide for the window): {', '.join(skipped)}"
    states = list(cfg.group_states)[:n_states]
    Dop = run.dual(R)
    for fid in eligible:
        F = cfg.crossed[fid]
        rep = coaction_via_W(F, cfg.action, R, R_inner)
        out.rows.append(identity_row("coaction-identity", "w_conjugation",
                                     {"F": fid, "R": R, "R_inner": R_inner},
                                     rep.mismatch, cfg.tolerances["identity"]))
        for sid in states:
            mech = verify_mechanism(F, cfg.group_states[sid], Dop, cfg.action, R_inner)
            for sgn, mis in mech.mismatch.items():
                out.rows.append(identity_row("coaction-identity", "slice_mechanism",
                                             {"F": fid, "phi": sid, "R": R, "R_inner": R_inner,
                                              "sign": sgn}, mis, cfg.tolerances["contractive"]))
        if len(states) >= 2:
            aff = verify_affine(F, cfg.group_states[states[0]], cfg.group_states[states[1]],
                                Dop, cfg.action)
            out.rows.append(identity_row("coaction-identity", "affine_in_state",
                                         {"F": fid, "phi0": states[0], "phi1": states[1], "R": R},
                                         aff.deviation, cfg.tolerances["identity"]))
    return out


def suite_distance(run: Runner) -> SuiteResult:
    cfg = run.cfg
    tol = cfg.tolerances["distance"]
    out = run.start("distance")
    X = cfg.triple
    table = []
    results = {}
    for pair in cfg.distance.get("pairs", []):
        pid, s1, s2 = pair["id"], pair["states"][0], pair["states"][1]
        r1, r2 = cfg.algebra_states[s1], cfg.algebra_states[s2]
        res = connes_distance(X, r1, r2, tol)
        rev = connes_distance(X, r2, r1, tol)
        results[pid] = res
        table.append({"state_pair_id": pid, "value_or_flag": res.display,
                      "certificate_seminorm": res.seminorm, "iterations": res.iterations,
                      "gap": res.gap})
        inputs = {"pair": pid, "rho1": s1, "rho2": s2}
        if "expected" in pair:
            expected = pair["expected"]
            if expected == "UNBOUNDED":
                out.rows.append(Row("distance", "unbounded_flag", inputs,
                                    0.0 if res.unbounded else 1.0, 0.0, "identity"))
            else:
                value = float("inf") if res.unbounded else res.value
                out.rows.append(identity_row("distance", "expected_value", inputs,
                                             abs(value - float(expected)), tol))
        if res.unbounded or rev.unbounded:
            out.rows.append(Row("distance", "symmetry_flag", inputs,
                                float(res.unbounded != rev.unbounded), 0.0, "identity"))
            continue
        out.rows.append(identity_row("distance", "symmetry", inputs, abs(res.value - rev.value), 2 * tol))
        out.rows.append(identity_row("distance", "duality_gap", inputs, res.gap, tol))
        out.rows.append(Row("distance", "certificate_feasible", inputs, res.seminorm, 1.0, tol=1e-9))
    out.tables["distance"] = table

    states = list(cfg.algebra_states)
    if cfg.distance.get("triangle", True) and 3 <= len(states) <= 12:
        d = {}
        for i, j in itertools.combinations(range(len(states)), 2):
            r = connes_distance(X, cfg.algebra_states[states[i]], cfg.algebra_states[states[j]], tol)
            d[i, j] = d[j, i] = float("inf") if r.unbounded else r.value
        for i, j, k in itertools.permutations(range(len(states)), 3):
            if i < k and np.isfinite(d[i, k]):
                out.rows.append(Row("distance", "triangle",
                                    {"rho1": states[i], "rho2": states[j], "rho3": states[k]},
                                    d[i, k], d[i, j] + d[j, k], tol=3 * tol))

    comp = cfg.distance.get("compare")
    if comp:
        pairs = [(p["id"], cfg.algebra_states[p["states"][0]], cfg.algebra_states[p["states"][1]])
                 for p in cfg.distance.get("pairs", [])]
        rows = compare_dual_metric(X, cfg.action, int(comp.get("R", 1)), pairs,
                                   int(comp.get("window", 1)), tol, cfg.cap_dim)
        out.tables["distance_comparison"] = [
            {"state_pair_id": r.pair_id, "d_X": r.d_x.display, "d_dual": r.d_y.display,
             "ratio": r.ratio, "R": int(comp.get("R", 1)), "window": int(comp.get("window", 1))}
            for r in rows]
    return out


SUITE_FUNCS = {
    "spectrum": suite_spectrum,
    "bounds": suite_bounds,
    "contractivity": suite_contractivity,
    "abelian-isometry": suite_isometry,
    "coaction-identity": suite_coaction,
    "distance": suite_distance,
}


def select(suite: str) -> list:
    if suite == "all":
        return list(SUITES)
    names = [s.strip() for s in suite.split(",")]
    unknown = [s for s in names if s not in SUITE_FUNCS]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}; choose from all, {', '.join(SUITES)}")
    return names
