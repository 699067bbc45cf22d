"""Finite weighted model spaces with partial group actions.

A model space is a finite point set carrying a uniform weight and an action
table per generator.  A word acts by left-to-right composition of generator
actions: (g1*g2).p is evaluated as g1.(g2.p).  Good points and sofic quality
measure how far that convention is from a genuine group action.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .groups import (
    FREE_GROUP,
    INT_LATTICE,
    REAL_LINE,
    GroupElement,
    GroupModel,
    WeightedElementSet,
    generators,
    identity,
    inverse,
    letters,
    multiply,
)

UNDEFINED = -1


@dataclass(frozen=True)
class LocalGSpace:
    """Finite weighted point set with a partial action stored per generator.

    ``tables`` maps each generator and its inverse to a tuple of length n
    whose entry at p is the image point, or UNDEFINED.  All constructors in
    this module produce total tables; partial behaviour is still honoured by
    every consumer, which is what a corrupted-table fixture exercises.
    """

    group: GroupModel
    n: int
    weight: float
    tables: Tuple[Tuple[GroupElement, Tuple[int, ...]], ...]
    label: str = ""

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("model space needs at least one point")
        if not self.weight > 0:
            raise ValueError("point weight must be positive")
        for gen, table in self.tables:
            if len(table) != self.n:
                raise ValueError(f"action table for {gen} has wrong length")
            for q in table:
                if q != UNDEFINED and not (0 <= q < self.n):
                    raise ValueError("action table entry out of range")

    @property
    def volume(self) -> float:
        return self.n * self.weight

    def points(self) -> range:
        return range(self.n)

    def table_for(self, letter: GroupElement) -> Tuple[int, ...]:
        for gen, table in self.tables:
            if gen == letter:
                return table
        raise KeyError(letter)

    def act(self, g: GroupElement, p: int) -> Optional[int]:
        """Apply g to point p; None when any generator step is undefined."""
        if g.group != self.group:
            raise ValueError("element belongs to a different group model")
        q = p
        for letter in reversed(letters(g)):
            q = self.table_for(letter)[q]
            if q == UNDEFINED:
                return None
        return q

    def act_table(self, g: GroupElement) -> Tuple[int, ...]:
        """Composed action table of g over all points (UNDEFINED marks gaps)."""
        return _composed_table(self, g)


@functools.lru_cache(maxsize=4096)
def _composed_table(space: LocalGSpace, g: GroupElement) -> Tuple[int, ...]:
    current = list(range(space.n))
    for letter in reversed(letters(g)):
        table = space.table_for(letter)
        current = [UNDEFINED if q == UNDEFINED else table[q] for q in current]
    return tuple(current)


def _with_inverses(
    group: GroupModel, gen_tables: Dict[GroupElement, Sequence[int]]
) -> Tuple[Tuple[GroupElement, Tuple[int, ...]], ...]:
    """Extend generator tables with inverse tables (inverting defined entries)."""
    out = {}
    for gen, table in gen_tables.items():
        out[gen] = tuple(table)
        inv = [UNDEFINED] * len(table)
        for p, q in enumerate(table):
            if q != UNDEFINED:
                inv[q] = p
        out[inverse(gen)] = tuple(inv)
    return tuple(sorted(out.items(), key=lambda kv: repr(kv[0])))


def cyclic_quotient(n: int) -> LocalGSpace:
    """Z acting on Z/nZ by k.p = p + k mod n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    group = GroupModel(INT_LATTICE, dim=1)
    (gen,) = generators(group)
    table = tuple((p + 1) % n for p in range(n))
    return LocalGSpace(group, n, 1.0, _with_inverses(group, {gen: table}),
                       label=f"cyclic({n})")


def torus_quotient(dims: Sequence[int]) -> LocalGSpace:
    """Z^d acting componentwise on a product of cyclic groups."""
    dims = tuple(int(m) for m in dims)
    if not dims or any(m < 1 for m in dims):
        raise ValueError("all torus dimensions must be >= 1")
    d = len(dims)
    group = GroupModel(INT_LATTICE, dim=d)
    n = 1
    for m in dims:
        n *= m

    def encode(coords: Sequence[int]) -> int:
        p = 0
        for c, m in zip(coords, dims):
            p = p * m + (c % m)
        return p

    def decode(p: int) -> list:
        coords = []
        for m in reversed(dims):
            coords.append(p % m)
            p //= m
        return list(reversed(coords))

    gen_tables: Dict[GroupElement, Sequence[int]] = {}
    for i, gen in enumerate(generators(group)):
        table = []
        for p in range(n):
            coords = decode(p)
            coords[i] += 1
            table.append(encode(coords))
        gen_tables[gen] = table
    return LocalGSpace(group, n, 1.0, _with_inverses(group, gen_tables),
                       label=f"torus{dims}")


def schreier_space(*perms: Sequence[int]) -> LocalGSpace:
    """Free-group partial action from one permutation per generator."""
    if not perms:
        raise ValueError("at least one permutation is required")
    n = len(perms[0])
    for perm in perms:
        if sorted(perm) != list(range(n)):
            raise ValueError("inputs must be permutations of 0..n-1 of equal length")
    group = GroupModel(FREE_GROUP, rank=len(perms))
    gen_tables: Dict[GroupElement, Sequence[int]] = {}
    for gen, perm in zip(generators(group), perms):
        gen_tables[gen] = tuple(perm)
    return LocalGSpace(group, n, 1.0, _with_inverses(group, gen_tables),
                       label=f"schreier(n={n},rank={len(perms)})")


def circle_space(length: float, h: float) -> LocalGSpace:
    """Grid circle R/(length Z): cells of width h, translation action."""
    if not h > 0:
        raise ValueError("cell width must be positive")
    cells = length / h
    n = round(cells)
    if n < 1 or abs(cells - n) > 1e-9:
        raise ValueError("length must be a positive integer multiple of h")
    group = GroupModel(REAL_LINE, step=h)
    (gen,) = generators(group)
    table = tuple((p + 1) % n for p in range(n))
    return LocalGSpace(group, n, h, _with_inverses(group, {gen: table}),
                       label=f"circle(L={length},h={h})")


@dataclass(frozen=True)
class SoficApproximation:
    """Increasing sequence of model spaces with quality certificates."""

    spaces: Tuple[LocalGSpace, ...]
    u_radii: Tuple[float, ...]
    epsilons: Tuple[float, ...]

    def __post_init__(self) -> None:
        k = len(self.spaces)
        if len(self.u_radii) != k or len(self.epsilons) != k:
            raise ValueError("certificate lists must match the space list")
        if any(b < a for a, b in zip(self.u_radii, self.u_radii[1:])):
            raise ValueError("U radii must be nondecreasing")
        if any(b > a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilons must be nonincreasing")


def good_points(space: LocalGSpace, u: WeightedElementSet) -> Tuple[int, ...]:
    """Points where U-words compose correctly and act injectively.

    A point p qualifies when (i) for all g, h in U with g*h in U, the
    compositions g.(h.p) and (g*h).p are both defined and equal, and (ii)
    g -> g.p is defined and injective on U.
    """
    if len(u) == 0:
        return tuple(space.points())
    if u.group != space.group:
        raise ValueError("U belongs to a different group model")
    elems = list(u.elements)
    tables = {g: space.act_table(g) for g in elems}
    index = {g: i for i, g in enumerate(elems)}
    pair_checks = []
    for g in elems:
        for h in elems:
            gh = multiply(g, h)
            if gh in index:
                pair_checks.append((tables[g], tables[h], tables[gh]))

    good = []
    for p in space.points():
        images = [tables[g][p] for g in elems]
        if UNDEFINED in images or len(set(images)) != len(images):
            continue
        ok = True
        for tg, th, tgh in pair_checks:
            hp = th[p]
            if hp == UNDEFINED or tg[hp] == UNDEFINED or tgh[p] == UNDEFINED:
                ok = False
                break
            if tg[hp] != tgh[p]:
                ok = False
                break
        if ok:
            good.append(p)
    return tuple(good)


def sofic_quality(space: LocalGSpace, u: WeightedElementSet) -> float:
    """Volume fraction of good points; the model is (U, eps)-sofic iff >= 1 - eps."""
    return len(good_points(space, u)) / space.n


def check_local_mp(space: LocalGSpace, g: GroupElement, points: Iterable[int]) -> bool:
    """True iff g preserves the volume of the given point set.

    Requires g.p to be defined on all of the set; a False return indicates a
    malformed (non-injective) action table.
    """
    pts = list(points)
    table = space.act_table(g)
    image = set()
    for p in pts:
        q = table[p]
        if q == UNDEFINED:
            raise ValueError(f"action of {g} undefined at point {p}")
        image.add(q)
    return len(image) * space.weight == len(set(pts)) * space.weight


def is_atomless_flag(space: LocalGSpace) -> bool:
    """Finite models always carry atoms; recorded for report provenance."""
    return False


def identity_acts_trivially(space: LocalGSpace) -> bool:
    e = identity(space.group)
    return all(space.act(e, p) == p for p in space.points())
