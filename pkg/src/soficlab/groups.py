"""Acting groups: integer lattices, free groups, and a grid-discretized real line.

Every group element is an exact combinatorial object (lattice vector, reduced
word, or integer grid multiple), so group arithmetic, balls and Haar weights
are computed without floating-point drift.  The real line is represented by a
uniform quadrature grid of step ``step``; its Haar measure is the cell width.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

INT_LATTICE = "int_lattice"
FREE_GROUP = "free_group"
REAL_LINE = "real_line"

_KINDS = (INT_LATTICE, FREE_GROUP, REAL_LINE)


@dataclass(frozen=True)
class GroupModel:
    """The acting group.

    kind:
      - ``int_lattice``: Z^dim with the closed l-infinity word metric.
      - ``free_group``: free group of the given rank, word-length metric.
      - ``real_line``: R sampled on the grid step*Z; balls are open intervals.
    """

    kind: str
    dim: int = 1
    rank: int = 1
    step: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown group kind: {self.kind!r}")
        if self.kind == INT_LATTICE and self.dim < 1:
            raise ValueError("lattice dimension must be >= 1")
        if self.kind == FREE_GROUP and self.rank < 1:
            raise ValueError("free-group rank must be >= 1")
        if self.kind == REAL_LINE and not self.step > 0:
            raise ValueError("real-line quadrature step must be > 0")

    @property
    def is_discrete(self) -> bool:
        return self.kind in (INT_LATTICE, FREE_GROUP)


@dataclass(frozen=True)
class GroupElement:
    """A group element with an exact payload.

    The payload convention per group kind:
      - int_lattice: tuple of ``dim`` integers;
      - free_group: reduced word as a tuple of nonzero signed generator
        indices (+1 = first generator, -1 = its inverse, ...);
      - real_line: a single integer k, with real value k * step.
    """

    group: GroupModel
    word: Tuple[int, ...]

    def __post_init__(self) -> None:
        g = self.group
        if g.kind == INT_LATTICE:
            if len(self.word) != g.dim:
                raise ValueError("lattice element has wrong dimension")
        elif g.kind == FREE_GROUP:
            for s in self.word:
                if s == 0 or abs(s) > g.rank:
                    raise ValueError(f"letter {s} outside generator range")
            for a, b in zip(self.word, self.word[1:]):
                if a == -b:
                    raise ValueError("free-group word is not reduced")
        else:
            if len(self.word) != 1:
                raise ValueError("real-line element must be a single grid index")

    @property
    def value(self) -> float:
        """Real value of a real-line element."""
        if self.group.kind != REAL_LINE:
            raise ValueError("value is only defined for real-line elements")
        return self.word[0] * self.group.step

    def length(self) -> float:
        """Distance to the identity in the group's metric."""
        g = self.group
        if g.kind == INT_LATTICE:
            return float(max((abs(c) for c in self.word), default=0))
        if g.kind == FREE_GROUP:
            return float(len(self.word))
        return abs(self.word[0]) * g.step

    def __repr__(self) -> str:  # compact, e.g. grp(1,-2)
        return f"g{self.word!r}"


def identity(group: GroupModel) -> GroupElement:
    if group.kind == INT_LATTICE:
        return GroupElement(group, (0,) * group.dim)
    if group.kind == FREE_GROUP:
        return GroupElement(group, ())
    return GroupElement(group, (0,))


def _reduce_word(letters: Sequence[int]) -> Tuple[int, ...]:
    out: list[int] = []
    for s in letters:
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group law; free-group output is reduced."""
    if g.group != h.group:
        raise ValueError("elements belong to different group models")
    grp = g.group
    if grp.kind == INT_LATTICE:
        return GroupElement(grp, tuple(a + b for a, b in zip(g.word, h.word)))
    if grp.kind == FREE_GROUP:
        return GroupElement(grp, _reduce_word(g.word + h.word))
    return GroupElement(grp, (g.word[0] + h.word[0],))


def inverse(g: GroupElement) -> GroupElement:
    grp = g.group
    if grp.kind == INT_LATTICE:
        return GroupElement(grp, tuple(-c for c in g.word))
    if grp.kind == FREE_GROUP:
        return GroupElement(grp, tuple(-s for s in reversed(g.word)))
    return GroupElement(grp, (-g.word[0],))


def generators(group: GroupModel) -> Tuple[GroupElement, ...]:
    """Standard generating set (without inverses)."""
    if group.kind == INT_LATTICE:
        gens = []
        for i in range(group.dim):
            w = [0] * group.dim
            w[i] = 1
            gens.append(GroupElement(group, tuple(w)))
        return tuple(gens)
    if group.kind == FREE_GROUP:
        return tuple(GroupElement(group, (i + 1,)) for i in range(group.rank))
    return (GroupElement(group, (1,)),)


def letters(g: GroupElement) -> Tuple[GroupElement, ...]:
    """Factor g into generator/inverse-generator letters, leftmost first.

    A word acts on model spaces by left-to-right composition: the rightmost
    letter is applied to the point first.
    """
    grp = g.group
    if grp.kind == FREE_GROUP:
        out = []
        for s in g.word:
            out.append(GroupElement(grp, (s,)))
        return tuple(out)
    if grp.kind == INT_LATTICE:
        out = []
        for i, c in enumerate(g.word):
            if c == 0:
                continue
            w = [0] * grp.dim
            w[i] = 1 if c > 0 else -1
            out.extend([GroupElement(grp, tuple(w))] * abs(c))
        return tuple(out)
    k = g.word[0]
    if k == 0:
        return ()
    letter = GroupElement(grp, (1 if k > 0 else -1,))
    return (letter,) * abs(k)


@dataclass(frozen=True)
class WeightedElementSet:
    """Finite set of group elements with Haar quadrature weights.

    Discrete groups carry counting weights (1 per element); the real line
    carries the cell width.  Total weight is the Haar measure of the set.
    """

    elements: Tuple[GroupElement, ...]
    weights: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.elements) != len(self.weights):
            raise ValueError("elements and weights length mismatch")
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate elements in weighted set")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if self.elements:
            grp = self.elements[0].group
            if any(e.group != grp for e in self.elements):
                raise ValueError("mixed group models in weighted set")

    @property
    def group(self) -> Optional[GroupModel]:
        return self.elements[0].group if self.elements else None

    def total_weight(self) -> float:
        return float(sum(self.weights))

    def weight_of(self, g: GroupElement) -> float:
        try:
            return self.weights[self.elements.index(g)]
        except ValueError:
            raise KeyError(g) from None

    def __contains__(self, g: GroupElement) -> bool:
        return g in self.elements

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)


def weighted_set(elements: Sequence[GroupElement], group: GroupModel) -> WeightedElementSet:
    """Wrap elements with their canonical Haar weights."""
    w = group.step if group.kind == REAL_LINE else 1.0
    return WeightedElementSet(tuple(elements), (w,) * len(elements))


def ball(group: GroupModel, r: float) -> WeightedElementSet:
    """Ball of radius r about the identity, with Haar weights.

    Discrete groups use the closed ball in the word metric; the real line
    uses the open interval (-r, r) sampled on the grid.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if group.kind == INT_LATTICE:
        m = math.floor(r)
        elems = [GroupElement(group, w)
                 for w in itertools.product(range(-m, m + 1), repeat=group.dim)]
        return weighted_set(elems, group)
    if group.kind == FREE_GROUP:
        m = math.floor(r)
        words: list[Tuple[int, ...]] = [()]
        frontier: list[Tuple[int, ...]] = [()]
        for _ in range(m):
            nxt = []
            for w in frontier:
                for s in range(1, group.rank + 1):
                    for letter in (s, -s):
                        if w and w[-1] == -letter:
                            continue
                        nxt.append(w + (letter,))
            words.extend(nxt)
            frontier = nxt
        return weighted_set([GroupElement(group, w) for w in words], group)
    h = group.step
    k = math.floor(r / h)
    if k * h >= r - 1e-12 * max(1.0, r):
        k -= 1
    k = max(k, 0) if r > 0 else -1
    elems = [GroupElement(group, (i,)) for i in range(-k, k + 1)] if k >= 0 else []
    return weighted_set(elems, group)


def haar(s: WeightedElementSet) -> float:
    """Haar measure of a weighted set: the sum of its quadrature weights."""
    return s.total_weight()


def product_set(a: WeightedElementSet, b: WeightedElementSet) -> frozenset:
    """All products x*y with x in a, y in b (elements only, no weights)."""
    return frozenset(multiply(x, y) for x in a for y in b)


@dataclass(frozen=True)
class BallProductVerdict:
    """Outcome of the ball-product check.

    ``conclusion_holds`` is None when the hypotheses fail: the statement
    asserts nothing in that case, so no conclusion is claimed.
    """

    hypotheses_hold: bool
    conclusion_holds: Optional[bool]
    details: Tuple[Tuple[str, float], ...] = field(default=())


def check_ball_product(
    group: GroupModel,
    r0: float,
    r1: float,
    r2: float,
    delta: float,
    w0: WeightedElementSet,
    w2: WeightedElementSet,
) -> BallProductVerdict:
    """Check the ball-product statement on a concrete instance.

    Hypotheses: r0 + r1 < r2, delta * haar(B(r2)) < (1 - delta) * haar(B(r0)),
    and haar(Wi) > (1 - delta) * haar(B(ri)) for i in {0, 2}.  Conclusion
    (verified by exhaustive product-set computation): W0 * W2 covers B(r1).
    """
    if not (0 < r0 < r1 < r2):
        raise ValueError("radii must satisfy 0 < r0 < r1 < r2")
    if delta <= 0:
        raise ValueError("delta must be positive")
    b0, b1, b2 = ball(group, r0), ball(group, r1), ball(group, r2)
    if any(e not in b0 for e in w0):
        raise ValueError("W0 is not contained in the ball of radius r0")
    if any(e not in b2 for e in w2):
        raise ValueError("W2 is not contained in the ball of radius r2")

    h0, h2 = haar(b0), haar(b2)
    hyp = (
        r0 + r1 < r2
        and delta * h2 < (1 - delta) * h0
        and haar(w0) > (1 - delta) * h0
        and haar(w2) > (1 - delta) * h2
    )
    details = (
        ("haar_b0", h0),
        ("haar_b2", h2),
        ("haar_w0", haar(w0)),
        ("haar_w2", haar(w2)),
    )
    if not hyp:
        return BallProductVerdict(False, None, details)
    products = product_set(w0, w2)
    concl = all(e in products for e in b1)
    return BallProductVerdict(True, concl, details)
