"""Target shift systems: alphabets, patterns, SFTs, metrics and measures.

Configurations are never materialized as infinite objects; every operation
works on patterns over finite windows.  The global shift convention is
(g.x)(h) = x(g^{-1} h), and the observable pseudo-metric compares
configurations at the identity coordinate only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .groups import (
    INT_LATTICE,
    GroupElement,
    GroupModel,
    WeightedElementSet,
    identity,
    inverse,
)

PatternKey = Tuple[int, ...]
Distribution = Dict[object, float]


@dataclass(frozen=True)
class Alphabet:
    """Finite symbol set; symbols are addressed by index everywhere."""

    symbols: Tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.symbols) < 1:
            raise ValueError("alphabet needs at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, name: str) -> int:
        return self.symbols.index(name)


@dataclass(frozen=True)
class Pattern:
    """Symbols pinned on a finite window of group elements."""

    offsets: Tuple[GroupElement, ...]
    symbols: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.offsets) != len(self.symbols):
            raise ValueError("offsets and symbols length mismatch")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("pattern window elements must be distinct")

    def lookup(self, offset: GroupElement) -> Optional[int]:
        for o, s in zip(self.offsets, self.symbols):
            if o == offset:
                return s
        return None


def lattice_offsets(group: GroupModel, values: Sequence[int]) -> Tuple[GroupElement, ...]:
    """Convenience: integers -> Z-lattice elements (dim 1)."""
    if group.kind != INT_LATTICE or group.dim != 1:
        raise ValueError("lattice_offsets expects the rank-1 integer lattice")
    return tuple(GroupElement(group, (int(v),)) for v in values)


@dataclass(frozen=True)
class ShiftSystem:
    """Full shift or SFT over a finite alphabet, given by forbidden patterns."""

    group: GroupModel
    alphabet: Alphabet
    forbidden: Tuple[Pattern, ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for pat in self.forbidden:
            for off in pat.offsets:
                if off.group != self.group:
                    raise ValueError("forbidden pattern offset in wrong group")
            for s in pat.symbols:
                if not (0 <= s < len(self.alphabet)):
                    raise ValueError("forbidden pattern symbol out of range")
            key = (pat.offsets, pat.symbols)
            if key in seen:
                raise ValueError("duplicate forbidden pattern")
            seen.add(key)
        if self.is_nearest_neighbor() and not self.is_full_shift():
            t = transition_matrix(self)
            if not _has_admissible_cycle(t):
                raise ValueError("shift system is empty (no admissible configuration)")

    def is_full_shift(self) -> bool:
        return len(self.forbidden) == 0

    def is_z_system(self) -> bool:
        return self.group.kind == INT_LATTICE and self.group.dim == 1

    def is_nearest_neighbor(self) -> bool:
        """Every forbidden window is a single cell or two adjacent Z-cells."""
        if not self.is_z_system():
            return False
        for pat in self.forbidden:
            vals = sorted(o.word[0] for o in pat.offsets)
            if len(vals) == 1:
                continue
            if len(vals) == 2 and vals[1] - vals[0] == 1:
                continue
            return False
        return True


def full_shift(group: GroupModel, alphabet: Alphabet) -> ShiftSystem:
    return ShiftSystem(group, alphabet)


def nearest_neighbor_sft(
    group: GroupModel, alphabet: Alphabet, forbidden_pairs: Iterable[Tuple[int, int]]
) -> ShiftSystem:
    """Z-SFT forbidding x(0)=a, x(1)=b for each pair (a, b)."""
    window = lattice_offsets(group, (0, 1))
    pats = tuple(Pattern(window, (a, b)) for a, b in forbidden_pairs)
    return ShiftSystem(group, alphabet, pats)


def transition_matrix(system: ShiftSystem) -> Tuple[Tuple[int, ...], ...]:
    """0/1 matrix of allowed x(k) -> x(k+1) transitions of a Z-SFT.

    Single-cell forbidden patterns remove the symbol entirely.
    """
    if not system.is_nearest_neighbor():
        raise ValueError("transition matrix needs a nearest-neighbor Z-system")
    m = len(system.alphabet)
    t = [[1] * m for _ in range(m)]
    killed = set()
    for pat in system.forbidden:
        pairs = sorted(zip((o.word[0] for o in pat.offsets), pat.symbols))
        if len(pairs) == 1:
            killed.add(pairs[0][1])
        else:
            (_, a), (_, b) = pairs
            t[a][b] = 0
    for s in killed:
        for j in range(m):
            t[s][j] = 0
            t[j][s] = 0
    return tuple(tuple(row) for row in t)


def _has_admissible_cycle(t: Sequence[Sequence[int]]) -> bool:
    alive = set(range(len(t)))
    changed = True
    while changed:
        changed = False
        for s in list(alive):
            if not any(t[s][j] for j in alive) or not any(t[j][s] for j in alive):
                alive.discard(s)
                changed = True
    return bool(alive)


@dataclass(frozen=True)
class ObservableMetric:
    """Discrete pseudo-metric on configurations: compare the identity cell."""

    def distance(self, sym_x: int, sym_y: int) -> float:
        return 0.0 if sym_x == sym_y else 1.0


@dataclass(frozen=True)
class MollifiedMetric:
    """Averaged observable metric rho_f over a positive normalized weight f.

    The weighted set stores the combined mass f(g) * haar(g) per element;
    total mass must be 1, all masses strictly positive.
    """

    f: WeightedElementSet
    base: ObservableMetric = ObservableMetric()

    def __post_init__(self) -> None:
        if len(self.f) == 0:
            raise ValueError("mollifier support must be nonempty")
        if any(w <= 0 for w in self.f.weights):
            raise ValueError("mollifier weights must be strictly positive")
        if abs(self.f.total_weight() - 1.0) > 1e-9:
            raise ValueError("mollifier must be normalized to total mass 1")

    def probe_window(self) -> Tuple[GroupElement, ...]:
        """Coordinates read by rho_f: inverses of the support of f."""
        return tuple(inverse(g) for g in self.f.elements)

    def distance(self, x: Pattern, y: Pattern) -> float:
        total = 0.0
        for g, mass in zip(self.f.elements, self.f.weights):
            coord = inverse(g)
            sx, sy = x.lookup(coord), y.lookup(coord)
            if sx is None or sy is None:
                raise ValueError("pattern does not cover the mollifier support")
            total += mass * self.base.distance(sx, sy)
        return total


def mollify(f: WeightedElementSet) -> MollifiedMetric:
    """Build rho_f from a normalized strictly positive weight function."""
    return MollifiedMetric(f)


@dataclass(frozen=True)
class InvariantMeasureSpec:
    """Bernoulli or (Z-only) stationary Markov measure on the shift."""

    alphabet: Alphabet
    kind: str
    probs: Tuple[float, ...] = ()
    transitions: Tuple[Tuple[float, ...], ...] = ()
    stationary: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        m = len(self.alphabet)
        if self.kind == "bernoulli":
            if len(self.probs) != m:
                raise ValueError("bernoulli vector length mismatch")
            if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-9:
                raise ValueError("bernoulli vector must be a probability vector")
        elif self.kind == "markov":
            if len(self.transitions) != m or any(len(r) != m for r in self.transitions):
                raise ValueError("transition matrix shape mismatch")
            for row in self.transitions:
                if any(p < 0 for p in row) or abs(sum(row) - 1.0) > 1e-9:
                    raise ValueError("transition rows must be probability vectors")
            if len(self.stationary) != m or abs(sum(self.stationary) - 1.0) > 1e-9:
                raise ValueError("stationary vector must be a probability vector")
            for i in range(m):
                got = sum(self.stationary[j] * self.transitions[j][i] for j in range(m))
                if abs(got - self.stationary[i]) > 1e-8:
                    raise ValueError("stationary vector is not P-invariant")
        else:
            raise ValueError(f"unknown measure kind: {self.kind!r}")


def bernoulli_measure(alphabet: Alphabet, probs: Sequence[float]) -> InvariantMeasureSpec:
    return InvariantMeasureSpec(alphabet, "bernoulli", probs=tuple(float(p) for p in probs))


def markov_measure(
    alphabet: Alphabet,
    transitions: Sequence[Sequence[float]],
    stationary: Optional[Sequence[float]] = None,
    system: Optional[ShiftSystem] = None,
) -> InvariantMeasureSpec:
    """Stationary Markov measure; stationary vector solved if omitted.

    When a system is supplied, the chain must vanish on its forbidden
    transitions.
    """
    p = tuple(tuple(float(x) for x in row) for row in transitions)
    if stationary is None:
        mat = np.array(p, dtype=float)
        vals, vecs = np.linalg.eig(mat.T)
        idx = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, idx])
        pi = np.abs(pi)
        pi = pi / pi.sum()
        stationary = tuple(float(x) for x in pi)
    else:
        stationary = tuple(float(x) for x in stationary)
    if system is not None:
        t = transition_matrix(system)
        for a in range(len(alphabet)):
            for b in range(len(alphabet)):
                if t[a][b] == 0 and p[a][b] > 0:
                    raise ValueError("Markov chain charges a forbidden transition")
    return InvariantMeasureSpec(alphabet, "markov", transitions=p, stationary=stationary)


def parry_measure(system: ShiftSystem) -> InvariantMeasureSpec:
    """Measure of maximal entropy of an irreducible nearest-neighbor Z-SFT,
    built from the Perron eigendata of the transition matrix."""
    t = np.array(transition_matrix(system), dtype=float)
    vals, vecs = np.linalg.eig(t)
    idx = int(np.argmax(np.real(vals)))
    lam = float(np.real(vals[idx]))
    if lam <= 0:
        raise ValueError("transition matrix has no positive Perron eigenvalue")
    v = np.abs(np.real(vecs[:, idx]))
    wvals, wvecs = np.linalg.eig(t.T)
    widx = int(np.argmax(np.real(wvals)))
    u = np.abs(np.real(wvecs[:, widx]))
    m = len(system.alphabet)
    p = [[t[a][b] * v[b] / (lam * v[a]) if v[a] > 0 else 0.0 for b in range(m)]
         for a in range(m)]
    for row in p:
        s = sum(row)
        if s > 0:
            for b in range(m):
                row[b] /= s
    pi = u * v
    pi = pi / pi.sum()
    return InvariantMeasureSpec(
        system.alphabet, "markov",
        transitions=tuple(tuple(row) for row in p),
        stationary=tuple(float(x) for x in pi),
    )


def pattern_probability(mu: InvariantMeasureSpec, pattern: Pattern) -> float:
    """Exact cylinder probability of the pattern under mu.

    Markov measures only support interval windows of consecutive Z-cells.
    """
    if not pattern.offsets:
        return 1.0
    if mu.kind == "bernoulli":
        prob = 1.0
        for s in pattern.symbols:
            prob *= mu.probs[s]
        return prob
    pairs = sorted(
        zip((o.word[0] for o in pattern.offsets), pattern.symbols), key=lambda kv: kv[0]
    )
    vals = [v for v, _ in pairs]
    if any(b - a != 1 for a, b in zip(vals, vals[1:])):
        raise ValueError("Markov cylinder probabilities need an interval window")
    syms = [s for _, s in pairs]
    prob = mu.stationary[syms[0]]
    for a, b in zip(syms, syms[1:]):
        prob *= mu.transitions[a][b]
    return prob


def marginal(
    mu: InvariantMeasureSpec, window: Tuple[GroupElement, ...]
) -> Dict[PatternKey, float]:
    """Distribution of the window coordinates under mu, keyed by symbol tuples."""
    m = len(mu.alphabet)
    out: Dict[PatternKey, float] = {}
    for syms in itertools.product(range(m), repeat=len(window)):
        out[syms] = pattern_probability(mu, Pattern(window, syms))
    return out


def relabel_system(system: ShiftSystem, perm: Sequence[int]) -> ShiftSystem:
    """Apply an alphabet permutation to every forbidden pattern."""
    pats = tuple(
        Pattern(p.offsets, tuple(perm[s] for s in p.symbols)) for p in system.forbidden
    )
    return ShiftSystem(system.group, system.alphabet, pats)


def relabel_measure(mu: InvariantMeasureSpec, perm: Sequence[int]) -> InvariantMeasureSpec:
    """Push mu forward through an alphabet permutation."""
    m = len(mu.alphabet)
    inv = [0] * m
    for i, j in enumerate(perm):
        inv[j] = i
    if mu.kind == "bernoulli":
        return bernoulli_measure(mu.alphabet, tuple(mu.probs[inv[i]] for i in range(m)))
    p = tuple(
        tuple(mu.transitions[inv[i]][inv[j]] for j in range(m)) for i in range(m)
    )
    pi = tuple(mu.stationary[inv[i]] for i in range(m))
    return InvariantMeasureSpec(mu.alphabet, "markov", transitions=p, stationary=pi)


def tv_distance(d1: Mapping[object, float], d2: Mapping[object, float]) -> float:
    """Half l1-distance between finite distributions over a shared universe."""
    shapes = set()
    for d in (d1, d2):
        for k in d:
            shapes.add(len(k) if isinstance(k, tuple) else None)
    if len(shapes) > 1:
        raise ValueError("distributions live over mismatched pattern universes")
    keys = set(d1) | set(d2)
    return 0.5 * sum(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in keys)


def shannon_entropy(probs: Iterable[float]) -> float:
    """Shannon entropy in nats; zero-mass cells contribute nothing."""
    h = 0.0
    for p in probs:
        if p > 0:
            h -= p * math.log(p)
    return h
