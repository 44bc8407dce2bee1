"""Finitely generated discrete groups with word-length functions.

Three families are supported: the integers, integer lattices and free groups
of rank at least two.  Elements are hashable tuples so they can key dicts:

* ``Z^d`` elements are ``d``-tuples of ints (``Z`` is ``Z^1``).
* ``F_k`` elements are reduced words, tuples of nonzero ints where ``i``
  stands for the i-th letter and ``-i`` for its inverse.

Canonical generators are ``+e_1, ..., +e_d`` (resp. the letters ``1..k``);
the symmetric generating set adds their inverses.
"""
from __future__ import annotations

import string
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Element = tuple

DEFAULT_BALL_CAP = 200_000


class ResourceError(RuntimeError):
    """Raised when a truncation would exceed a configured size cap."""


def _ball_size_zd(d: int, R: int) -> int:
    # number of lattice points with l1 norm <= R (Delannoy-type sum)
    from math import comb
    return sum(comb(d, k) * comb(R, k) * 2**k for k in range(min(d, R) + 1))


def _ball_size_free(k: int, R: int) -> int:
    return 1 + sum(2 * k * (2 * k - 1) ** (j - 1) for j in range(1, R + 1))


@dataclass(frozen=True)
class GroupModel:
    """A group from the closed family enum ``Z``, ``Zd`` or ``Free``."""

    family: str
    rank: int = 1
    ball_cap: int = DEFAULT_BALL_CAP
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.family not in ("Z", "Zd", "Free"):
            raise ValueError(f"unknown group family {self.family!r}")
        if self.family == "Z" and self.rank != 1:
            raise ValueError("family 'Z' has rank 1")
        if self.family == "Zd" and self.rank < 1:
            raise ValueError("Zd needs d >= 1")
        if self.family == "Free" and self.rank < 2:
            raise ValueError("free groups need k >= 2")

    # -- constructors -------------------------------------------------------
    @classmethod
    def integers(cls) -> "GroupModel":
        return cls("Z", 1)

    @classmethod
    def lattice(cls, d: int) -> "GroupModel":
        return cls("Zd", d)

    @classmethod
    def free(cls, k: int) -> "GroupModel":
        return cls("Free", k)

    @classmethod
    def from_config(cls, spec: dict, ball_cap: int = DEFAULT_BALL_CAP) -> "GroupModel":
        family = spec.get("family")
        if family == "Z":
            return cls("Z", 1, ball_cap)
        if family == "Zd":
            return cls("Zd", int(spec["d"]), ball_cap)
        if family == "Free":
            return cls("Free", int(spec["k"]), ball_cap)
        raise ValueError(f"unknown group family {family!r}")

    def to_config(self) -> dict:
        if self.family == "Z":
            return {"family": "Z"}
        if self.family == "Zd":
            return {"family": "Zd", "d": self.rank}
        return {"family": "Free", "k": self.rank}

    @property
    def abelian(self) -> bool:
        return self.family != "Free"

    @property
    def is_free(self) -> bool:
        return self.family == "Free"

    # -- element arithmetic -------------------------------------------------
    @property
    def identity(self) -> Element:
        return () if self.is_free else (0,) * self.rank

    def canonical_generators(self) -> list[Element]:
        """Generators whose images define an action (inverses are implied)."""
        if self.is_free:
            return [(i,) for i in range(1, self.rank + 1)]
        gens = []
        for i in range(self.rank):
            e = [0] * self.rank
            e[i] = 1
            gens.append(tuple(e))
        return gens

    def generators(self) -> list[Element]:
        """The symmetric generating set S: each canonical generator, then its inverse."""
        out = []
        for g in self.canonical_generators():
            out.append(g)
            out.append(self.inv(g))
        return out

    def mul(self, g: Element, h: Element) -> Element:
        if not self.is_free:
            return tuple(a + b for a, b in zip(g, h))
        word = list(g)
        for letter in h:
            if word and word[-1] == -letter:
                word.pop()
            else:
                word.append(letter)
        return tuple(word)

    def inv(self, g: Element) -> Element:
        if not self.is_free:
            return tuple(-a for a in g)
        return tuple(-x for x in reversed(g))

    def normalize(self, g) -> Element:
        """Coerce user input into the canonical element representation.

        Accepts ints (rank-one lattices), int sequences, and for free groups
        strings over ``a, b, c, ...`` with upper case letters as inverses.
        """
        if self.is_free:
            if isinstance(g, str):
                letters = []
                for ch in g.replace(" ", ""):
                    if ch == "e":
                        continue
                    idx = string.ascii_lowercase.index(ch.lower()) + 1
                    if idx > self.rank:
                        raise ValueError(f"letter {ch!r} outside F_{self.rank}")
                    letters.append(idx if ch.islower() else -idx)
                g = letters
            word: tuple = ()
            for x in g:
                x = int(x)
                if x == 0 or abs(x) > self.rank:
                    raise ValueError(f"invalid letter {x} for F_{self.rank}")
                word = self.mul(word, (x,))
            return word
        if isinstance(g, str):
            g = [int(x) for x in g.strip("() ").split(",") if x.strip()]
        if isinstance(g, (int,)) and not isinstance(g, bool):
            g = (g,)
        g = tuple(int(x) for x in g)
        if len(g) != self.rank:
            raise ValueError(f"expected {self.rank} coordinates, got {g}")
        return g

    def is_reduced(self, g: Element) -> bool:
        return all(a != -b for a, b in zip(g, g[1:]))

    def format(self, g: Element) -> str:
        if not self.is_free:
            return str(g[0]) if self.rank == 1 else "(" + ",".join(map(str, g)) + ")"
        if not g:
            return "e"
        return "".join(
            string.ascii_lowercase[abs(x) - 1] if x > 0 else string.ascii_uppercase[abs(x) - 1]
            for x in g
        )

    def sort_key(self, g: Element) -> tuple:
        """Total order used inside balls: word length, then lexicographic."""
        return (self.word_length(g), g)

    # -- length function ----------------------------------------------------
    def word_length(self, g: Element) -> int:
        if self.is_free:
            return len(g)
        return sum(abs(a) for a in g)

    def ball(self, R: int) -> "Ball":
        if R < 0:
            raise ValueError("radius must be nonnegative")
        cached = self._cache.get(("ball", R))
        if cached is not None:
            return cached
        expected = self.ball_size(R)
        if expected > self.ball_cap:
            raise ResourceError(
                f"ball of radius {R} in {self.label} has {expected} elements (cap {self.ball_cap})"
            )
        elements = sorted(bfs_ball(self, R), key=self.sort_key)
        ball = Ball(R, tuple(elements), {g: i for i, g in enumerate(elements)},
                    tuple(self.word_length(g) for g in elements))
        self._cache[("ball", R)] = ball
        return ball

    def ball_size(self, R: int) -> int:
        if self.is_free:
            return _ball_size_free(self.rank, R)
        return _ball_size_zd(self.rank, R)

    def displacement(self, s: Element, R: int) -> "Displacement":
        ball = self.ball(R)
        s_inv = self.inv(s)
        best, witness = 0, self.identity
        for t, ct in zip(ball.elements, ball.lengths):
            d = abs(ct - self.word_length(self.mul(s_inv, t)))
            if d > best:
                best, witness = d, t
        bound = self.word_length(s)
        return Displacement(best, bound, best == bound, witness)

    @property
    def label(self) -> str:
        if self.family == "Z":
            return "Z"
        if self.family == "Zd":
            return f"Z^{self.rank}"
        return f"F_{self.rank}"


@dataclass(frozen=True)
class Ball:
    radius: int
    elements: tuple
    index: dict
    lengths: tuple

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g) -> bool:
        return g in self.index

    def __iter__(self):
        return iter(self.elements)


@dataclass(frozen=True)
class Displacement:
    """Windowed ``max_t |c(t) - c(s^-1 t)|`` with the triangle bound ``c(s)``."""

    value: int
    bound: int
    attained: bool
    witness: Element


def bfs_ball(group: GroupModel, R: int) -> list[Element]:
    """All elements within distance R of e, by BFS on the Cayley graph."""
    return list(bfs_lengths(group, R))


def bfs_lengths(group: GroupModel, R: int) -> dict:
    """BFS distances from the identity, for every element of word length <= R."""
    gens = group.generators()
    dist = {group.identity: 0}
    queue = deque([group.identity])
    while queue:
        g = queue.popleft()
        if dist[g] == R:
            continue
        for s in gens:
            h = group.mul(g, s)
            if h not in dist:
                dist[h] = dist[g] + 1
                queue.append(h)
    return dist


def word_length(group: GroupModel, g) -> int:
    return group.word_length(group.normalize(g))


def ball(group: GroupModel, R: int) -> Ball:
    return group.ball(R)


def displacement(group: GroupModel, s, R: int) -> Displacement:
    return group.displacement(group.normalize(s), R)


def parse_elements(group: GroupModel, items: Iterable) -> list[Element]:
    return [group.normalize(g) for g in items]


def support_diameter(group: GroupModel, support: Sequence[Element]) -> int:
    return max((group.word_length(s) for s in support), default=0)
