"""Experiment configuration: JSON in, validated model objects out.

Matrices are lists of rows whose entries are either real numbers or
``[re, im]`` pairs.  Group elements are ints (``Z``), int lists (``Z^d``) or
words for free groups (``"aB"`` or ``[1, -2]``; upper case is the inverse).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .action import UnitaryAction, swap_action
from .coaction import (
    PositiveDefiniteState,
    random_character,
    random_mixture,
    random_vector_state,
    state_from_config,
)
from .crossed import DEFAULT_CAP_DIM, CrossedElement
from .groups import GroupModel
from .triple import (
    FiniteSpectralTriple,
    State,
    ValidationError,
    clock_matrix,
    clock_shift,
    graph_triple,
    scalar_triple,
    two_point,
)

SCHEMA_VERSION = 1
RNG_NAME = "numpy.random.Generator(PCG64)"
DEMO_NAMES = ("two_point_z", "free_scalar", "clock_shift_z")


class ConfigError(ValueError):
    """The configuration cannot be parsed or is inconsistent."""


def parse_matrix(data) -> np.ndarray:
    rows = []
    for row in data:
        rows.append([complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x)
                     for x in row])
    M = np.array(rows, dtype=complex)
    if M.ndim != 2:
        raise ConfigError("matrices must be lists of equal-length rows")
    return M


def dump_matrix(M) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


@dataclass
class ExperimentConfig:
    raw: dict
    group: GroupModel
    triple: FiniteSpectralTriple
    action: UnitaryAction
    crossed: dict
    elementary: dict
    algebra_states: dict
    group_states: dict
    radii: list
    seed: int
    cap_dim: int
    tolerances: dict
    coaction: dict = field(default_factory=dict)
    distance: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.raw.get("name", "experiment")

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def demo_path(name: str):
    if name not in DEMO_NAMES:
        raise ConfigError(f"unknown demo {name!r}; choose from {', '.join(DEMO_NAMES)}")
    return resources.files("crosstriple").joinpath("demos", f"{name}.json")


def read_config(source: str) -> dict:
    """Read a config from a path, or ``demo:<name>`` for a bundled demo."""
    try:
        if source.startswith("demo:"):
            text = demo_path(source[5:]).read_text()
        else:
            text = Path(source).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {source!r}: {exc}") from exc


def load_config(source, cap_dim: int | None = None) -> ExperimentConfig:
    raw = read_config(source) if isinstance(source, str) else source
    try:
        return build_config(raw, cap_dim)
    except ConfigError:
        raise
    except (ValidationError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _build_triple(spec: dict) -> FiniteSpectralTriple:
    if "inline" in spec:
        inline = spec["inline"]
        return FiniteSpectralTriple(parse_matrix(inline["D"]),
                                    [parse_matrix(b) for b in inline["basis"]])
    builder = spec.get("builder")
    if builder == "two_point":
        return two_point(float(spec["Lambda"]))
    if builder == "clock_shift":
        return clock_shift(int(spec["N"]), spec.get("spectrum"), spec.get("eigenbasis", "standard"))
    if builder == "scalar":
        return scalar_triple()
    if builder == "graph":
        return graph_triple(spec["weights"])
    raise ConfigError(f"unknown triple builder {builder!r}")


def _build_action(spec: dict, group: GroupModel, X: FiniteSpectralTriple) -> UnitaryAction:
    if "generators" in spec:
        return UnitaryAction(group, [parse_matrix(u) for u in spec["generators"]])
    builder = spec.get("builder", "trivial")
    if builder == "trivial":
        return UnitaryAction.trivial(group, X.n)
    if builder == "swap":
        if X.n != 2:
            raise ConfigError("swap action needs a 2-dimensional Hilbert space")
        return swap_action(group)
    if builder == "clock":
        return UnitaryAction(group, [clock_matrix(X.n)] * len(group.canonical_generators()))
    raise ConfigError(f"unknown action builder {builder!r}")


def random_algebra_element(X: FiniteSpectralTriple, rng: np.random.Generator) -> np.ndarray:
    c = rng.standard_normal(X.m) + 1j * rng.standard_normal(X.m)
    a = np.tensordot(c, X.basis, axes=1)
    return a / np.linalg.norm(a, 2)


def _crossed_from_spec(item: dict, group: GroupModel, n: int):
    """Return ``(F, elementary)`` where elementary is ``(a, f)`` or None."""
    if "a" in item:
        a = parse_matrix(item["a"])
        f = {}
        for entry in item["f"]:
            g = group.normalize(entry["g"])
            f[g] = f.get(g, 0j) + complex(entry.get("re", 0.0), entry.get("im", 0.0))
        return CrossedElement.elementary(a, f), (a, f)
    pairs = [(group.normalize(t["g"]), parse_matrix(t["matrix"])) for t in item["terms"]]
    return CrossedElement.from_pairs(pairs, n), None


def _algebra_state(item: dict, n: int) -> State:
    if "rho" in item:
        return State(parse_matrix(item["rho"]))
    if "vector" in item:
        v = [complex(x[0], x[1]) if isinstance(x, list) else complex(x) for x in item["vector"]]
        return State.pure(v)
    if "basis" in item:
        return State.basis_state(n, int(item["basis"]))
    if item.get("mixed"):
        return State.maximally_mixed(n)
    raise ConfigError(f"cannot read algebra state {item!r}")


def build_config(raw: dict, cap_dim: int | None = None) -> ExperimentConfig:
    if raw.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {raw.get('schema')!r}")
    caps = raw.get("caps", {})
    cap_dim = int(cap_dim or caps.get("dim", DEFAULT_CAP_DIM))
    group = GroupModel.from_config(raw["group"], ball_cap=int(caps.get("ball", 200_000)))
    X = _build_triple(raw["triple"])
    alpha = _build_action(raw.get("action", {}), group, X)
    if alpha.n != X.n:
        raise ConfigError(f"action acts on dimension {alpha.n}, triple has n = {X.n}")
    residual = alpha.invariance_residual(X, 1)
    if residual > 1e-8:
        raise ConfigError(f"action does not preserve the algebra (residual {residual:.2e})")

    radii = [int(r) for r in raw.get("radii", [2, 4, 6])]
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] < 0:
        raise ConfigError("radii must be a nonempty strictly increasing list of nonnegative ints")
    seed = int(raw.get("seed", 0))
    rng = np.random.default_rng(seed)

    crossed, elementary = {}, {}
    for item in raw.get("crossed_elements", []):
        F, elem = _crossed_from_spec(item, group, X.n)
        if F.n != X.n or any(a.shape != (X.n, X.n) for a in F.terms.values()):
            raise ConfigError(f"crossed element {item['id']!r} has the wrong matrix size")
        if not F.in_algebra(X):
            raise ConfigError(f"crossed element {item['id']!r} leaves the algebra")
        crossed[item["id"]] = F
        if elem is not None:
            elementary[item["id"]] = elem
    rand = raw.get("random_crossed", {})
    for k in range(int(rand.get("count", 0))):
        ball = group.ball(int(rand.get("support_radius", 1))).elements
        size = min(int(rand.get("terms", 2)), len(ball))
        picks = sorted(rng.choice(len(ball), size=size, replace=False))
        if rand.get("elementary", False):
            a = random_algebra_element(X, rng)
            f = {ball[int(i)]: complex(rng.standard_normal(), rng.standard_normal()) for i in picks}
            F = CrossedElement.elementary(a, f)
            elementary[f"rand{k}"] = (a, f)
        else:
            F = CrossedElement.from_pairs(
                [(ball[int(i)], random_algebra_element(X, rng)) for i in picks], X.n)
        crossed[f"rand{k}"] = F

    algebra_states = {item["id"]: _algebra_state(item, X.n) for item in raw.get("algebra_states", [])}
    for s in algebra_states.values():
        if s.n != X.n:
            raise ConfigError("algebra state dimension does not match the triple")
    rand_states = raw.get("random_algebra_states", {})
    for k in range(int(rand_states.get("count", 0))):
        algebra_states[f"rho{k}"] = State.random(X.n, rng)

    group_states: dict[str, PositiveDefiniteState] = {}
    for item in raw.get("group_states", []):
        group_states[item["id"]] = state_from_config(group, item)
    rgs = raw.get("random_group_states", {})
    for k in range(int(rgs.get("characters", 0))):
        if group.abelian:
            group_states[f"chi{k}"] = random_character(group, rng)
    for k in range(int(rgs.get("vectors", 0))):
        group_states[f"xi{k}"] = random_vector_state(group, rng, int(rgs.get("support_radius", 2)),
                                                     int(rgs.get("support_size", 3)))
    for k in range(int(rgs.get("mixtures", 0))):
        group_states[f"mix{k}"] = random_mixture(group, rng)

    tolerances = {"spectrum": 1e-9, "bounds": 1e-9, "contractive": 1e-9, "isometry": 1e-9,
                  "identity": 1e-10, "psd": 1e-10, "monotone": 1e-10, "distance": 1e-6}
    tolerances.update(raw.get("tolerances", {}))
    return ExperimentConfig(raw, group, X, alpha, crossed, elementary, algebra_states,
                            group_states, radii, seed, cap_dim, tolerances,
                            raw.get("coaction", {}), raw.get("distance", {}))
