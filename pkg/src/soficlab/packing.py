"""Packing numbers and exact microstate counting.

Separation uses the strict convention (rho > eps separates), spanning the
strict rho < eps, and covers are by sets of diameter < eps, so the chain
cov(2 eps) <= span(eps) <= sep(eps) <= cov(eps) holds at generic eps.

Microstate counting runs a deterministic DFS over labelings in a fixed
traversal order with prefix pruning on the defect budget; exchangeable
instances (full shift with a single-cell marginal constraint) instead use an
additive Pascal recurrence so large models stay exact without enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .groups import FREE_GROUP, GroupElement, identity
from .microstates import (
    AVERAGED,
    MEASURE_PRESERVING,
    SFT_SOFT,
    SFT_STRICT,
    MapSpaceSpec,
    MeasureConstraint,
    Microstate,
    domain_defect,
    quantize_counts,
)
from .models import UNDEFINED, LocalGSpace
from .shifts import ShiftSystem, transition_matrix

EXACT_FAMILY_CAP = 4096
EXACT_COVER_CAP = 16
DFS_NODE_LIMIT = 20_000_000


class SizeLimitError(RuntimeError):
    """Raised when an exact engine is asked for more than its guarded size."""


@dataclass
class FiniteMetricFamily:
    """Finite list of elements with a pairwise pseudo-metric."""

    elements: Tuple[object, ...]
    dist: Callable[[object, object], float]
    _cache: Dict[Tuple[int, int], float] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def d(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        key = (i, j) if i < j else (j, i)
        if key not in self._cache:
            self._cache[key] = self.dist(self.elements[key[0]], self.elements[key[1]])
        return self._cache[key]


def _check_family_cap(family: FiniteMetricFamily, cap: int = EXACT_FAMILY_CAP) -> None:
    if len(family) > cap:
        raise SizeLimitError(
            f"family has {len(family)} elements; exact engines are capped at {cap}"
        )


def _masks(family: FiniteMetricFamily, pred: Callable[[float], bool]) -> List[int]:
    """Adjacency bitmasks: j is set in row i iff pred(d(i, j)), i != j."""
    n = len(family)
    rows = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if pred(family.d(i, j)):
                rows[i] |= 1 << j
                rows[j] |= 1 << i
    return rows


def _max_independent(adj: List[int], cand: int, best: int = 0) -> int:
    if cand == 0:
        return 0
    if bin(cand).count("1") <= best:
        return best - 1 if best else 0
    v = (cand & -cand).bit_length() - 1
    with_v = 1 + _max_independent(adj, cand & ~adj[v] & ~(1 << v), max(best - 1, 0))
    without = _max_independent(adj, cand & ~(1 << v), max(best, with_v))
    return max(with_v, without)


def sep_exact(family: FiniteMetricFamily, eps: float) -> int:
    """Maximum cardinality of a subset with all pairwise distances > eps."""
    _check_family_cap(family)
    if len(family) == 0:
        return 0
    adj = _masks(family, lambda d: d <= eps)
    return _max_independent(adj, (1 << len(family)) - 1)


def span_exact(family: FiniteMetricFamily, eps: float) -> int:
    """Minimum cardinality of a subset within distance < eps of every element."""
    _check_family_cap(family)
    n = len(family)
    if n == 0:
        return 0
    balls = []
    for y in range(n):
        mask = 1 << y
        for x in range(n):
            if x != y and family.d(x, y) < eps:
                mask |= 1 << x
        balls.append(mask)
    full = (1 << n) - 1
    memo: Dict[int, int] = {0: 0}

    def cover(uncovered: int) -> int:
        if uncovered in memo:
            return memo[uncovered]
        x = (uncovered & -uncovered).bit_length() - 1
        best = n + 1
        for y in range(n):
            if balls[y] >> x & 1:
                best = min(best, 1 + cover(uncovered & ~balls[y]))
        memo[uncovered] = best
        return best

    result = cover(full)
    if result > n:
        raise ValueError("no spanning set exists at this eps (isolated element)")
    return result


def cov_exact(family: FiniteMetricFamily, eps: float) -> int:
    """Minimum number of sets of diameter < eps covering the family.

    Computed as the chromatic number of the conflict graph (edge iff
    distance >= eps) by the inclusion-exclusion counting method, which keeps
    the route independent of the packing branch-and-bound.
    """
    _check_family_cap(family)
    n = len(family)
    if n == 0:
        return 0
    if n > EXACT_COVER_CAP:
        raise SizeLimitError(f"exact covers are limited to {EXACT_COVER_CAP} elements")
    adj = _masks(family, lambda d: d >= eps)
    size = 1 << n
    ind = [0] * size
    ind[0] = 1
    for s in range(1, size):
        v = (s & -s).bit_length() - 1
        rest = s & ~(1 << v)
        ind[s] = ind[rest] + ind[rest & ~adj[v]]
    for k in range(1, n + 1):
        total = 0
        for s in range(size):
            term = ind[s] ** k
            if (n - bin(s).count("1")) % 2:
                total -= term
            else:
                total += term
        if total > 0:
            return k
    return n


def greedy_sep_lower(family: FiniteMetricFamily, eps: float) -> int:
    """Greedy maximal packing size: a lower bound for sep_exact."""
    kept: List[int] = []
    for i in range(len(family)):
        if all(family.d(i, j) > eps for j in kept):
            kept.append(i)
    return len(kept)


def greedy_cov_upper(family: FiniteMetricFamily, eps: float) -> int:
    """Greedy cover by half-radius balls: an upper bound for cov_exact."""
    n = len(family)
    uncovered = set(range(n))
    sets = 0
    while uncovered:
        x = min(uncovered)
        ball = {y for y in uncovered if family.d(x, y) < eps / 2}
        ball.add(x)
        uncovered -= ball
        sets += 1
    return sets


def _int_mat_mul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> List[List[int]]:
    m = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(m)) for j in range(m)] for i in range(m)]


def transfer_matrix_count(system: ShiftSystem, n: int) -> int:
    """Periodic-point oracle: trace of the n-th power of the transition matrix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = [list(row) for row in transition_matrix(system)]
    m = len(t)
    result = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    power = t
    k = n
    while k:
        if k & 1:
            result = _int_mat_mul(result, power)
        k >>= 1
        if k:
            power = _int_mat_mul(power, power)
    return sum(result[i][i] for i in range(m))


@dataclass
class CountResult:
    """Exact count or bounds, with engine provenance and oracle cross-checks."""

    count: Optional[int]
    lower: int
    upper: Optional[int]
    engine: str
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.upper is not None and self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def exact(self) -> bool:
        return self.count is not None

    def to_json_dict(self) -> Dict[str, object]:
        return {
            "count": self.count,
            "lower": self.lower,
            "upper": self.upper,
            "engine": self.engine,
            "meta": self.meta,
        }


def traversal_order(space: LocalGSpace) -> Tuple[int, ...]:
    """Deterministic point order: natural for quotients, BFS for Schreier."""
    if space.group.kind != FREE_GROUP:
        return tuple(space.points())
    order: List[int] = []
    seen = [False] * space.n
    for seed in space.points():
        if seen[seed]:
            continue
        queue = [seed]
        seen[seed] = True
        while queue:
            p = queue.pop(0)
            order.append(p)
            for _, table in space.tables:
                q = table[p]
                if q != UNDEFINED and not seen[q]:
                    seen[q] = True
                    queue.append(q)
    return tuple(order)


def equivariance_budget(space: LocalGSpace, spec: MapSpaceSpec) -> float:
    """Labeling-independent part of the defect budget over U.

    Under the identity-cell observable the equivariance defect of every
    labeling equals the undefined-domain mass of g, so the max (or Haar mean)
    over U is a constant of the model.
    """
    values = [domain_defect(space, g) for g in spec.u]
    if not values:
        return 0.0
    if spec.mode == AVERAGED:
        total = spec.u.total_weight()
        return sum(w * v for w, v in zip(spec.u.weights, values)) / total if total else 0.0
    return max(values)


def _window_instances(space: LocalGSpace, window: Tuple[GroupElement, ...]):
    """Per point: probe points of the window orbit, or None when undefined."""
    from .groups import inverse

    tables = [space.act_table(inverse(h)) for h in window]
    inst = []
    for p in space.points():
        pts = tuple(t[p] for t in tables)
        inst.append(None if UNDEFINED in pts else pts)
    return inst


def _pattern_instances(space: LocalGSpace, system: ShiftSystem):
    """(point, probe points, symbols) triples plus label-independent defects."""
    from .groups import inverse

    base_defective = set()
    triples = []
    for pat in system.forbidden:
        tables = [space.act_table(inverse(o)) for o in pat.offsets]
        for p in space.points():
            pts = tuple(t[p] for t in tables)
            if UNDEFINED in pts:
                base_defective.add(p)
            else:
                triples.append((p, pts, pat.symbols))
    return triples, base_defective


@dataclass
class _UnionConstraint:
    window: Tuple[GroupElement, ...]
    mp: bool
    quotas: Optional[Dict[Tuple[int, ...], int]]
    boxes: Tuple[Tuple[Dict[Tuple[int, ...], float], float], ...]


def _prepare_constraint(
    spec: MapSpaceSpec, boxes: Optional[Sequence[MeasureConstraint]], n: int
) -> Optional[_UnionConstraint]:
    cons_list = list(boxes) if boxes is not None else (
        [spec.constraint] if spec.constraint is not None else []
    )
    if not cons_list:
        return None
    window = cons_list[0].window
    if any(c.window != window for c in cons_list):
        raise ValueError("all constraint boxes must share one window")
    if spec.mode == MEASURE_PRESERVING:
        if len(cons_list) != 1:
            raise ValueError("measure-preserving mode takes a single target")
        target = cons_list[0].target_dict()
        keys = sorted(target)
        quota = quantize_counts([target[k] for k in keys], n)
        return _UnionConstraint(window, True, dict(zip(keys, quota)), ())
    packed = tuple((c.target_dict(), c.eta) for c in cons_list)
    return _UnionConstraint(window, False, None, packed)


def _leaf_accepts(
    uc: _UnionConstraint, counts: Dict[Tuple[int, ...], int], bucket: int, n: int
) -> bool:
    if uc.mp:
        if bucket:
            return False
        if any(k not in uc.quotas for k in counts):
            return False
        return all(counts.get(k, 0) == q for k, q in uc.quotas.items())
    for target, eta in uc.boxes:
        keys = set(counts) | set(target)
        tv = 0.5 * sum(abs(counts.get(k, 0) / n - target.get(k, 0.0)) for k in keys)
        if tv + 0.5 * bucket / n <= eta + 1e-12:
            return True
    return False


def _prefix_feasible(
    uc: _UnionConstraint, counts: Dict[Tuple[int, ...], int], remaining: int,
    bucket: int, n: int,
) -> bool:
    """Admissible feasibility bound; determined counts can only grow."""
    if uc.mp:
        over = any(counts.get(k, 0) > q for k, q in uc.quotas.items())
        if over or any(k not in uc.quotas for k in counts):
            return False
        deficit = sum(max(0, q - counts.get(k, 0)) for k, q in uc.quotas.items())
        return deficit <= remaining
    for target, eta in uc.boxes:
        surplus = sum(max(0, counts.get(k, 0) - n * t) for k, t in target.items())
        surplus += sum(c for k, c in counts.items() if k not in target)
        deficit = sum(
            max(0.0, n * t - counts.get(k, 0) - remaining) for k, t in target.items()
        )
        lb = 0.5 * (surplus + deficit + bucket) / n
        if lb <= eta + 1e-12:
            return True
    return False


def count_microstates(
    space: LocalGSpace,
    spec: MapSpaceSpec,
    system: ShiftSystem,
    *,
    boxes: Optional[Sequence[MeasureConstraint]] = None,
    node_limit: int = DFS_NODE_LIMIT,
    collect: Optional[List[Microstate]] = None,
    collect_limit: int = 1 << 20,
) -> CountResult:
    """Exact number of labelings of the model inside the map space.

    The defect budget combines the labeling-independent equivariance part
    with the forbidden-pattern density (soft engine) or bans violations
    outright (strict engine); an optional union of marginal boxes restricts
    the empirical window distribution.  Pass ``collect`` to also materialize
    the accepted labelings.
    """
    n = space.n
    m = len(system.alphabet)
    meta: Dict[str, object] = {"n": n, "volume": space.volume}

    budget_base = equivariance_budget(space, spec)
    meta["equivariance_budget"] = budget_base
    uc = _prepare_constraint(spec, boxes, n)

    if budget_base > spec.delta:
        meta["reason"] = "equivariance budget exceeds delta"
        return CountResult(0, 0, 0, "infeasible", meta)

    if spec.sft_mode == SFT_STRICT:
        viol_budget = 0
    else:
        viol_budget = int((spec.delta - budget_base) * n + 1e-9)

    pattern_triples, base_defective = _pattern_instances(space, system)
    if len(base_defective) > viol_budget:
        meta["reason"] = "undefined forbidden windows exceed the budget"
        return CountResult(0, 0, 0, "infeasible", meta)

    # Exchangeable fast path: no adjacency constraints, single-cell marginal.
    single_cell = uc is not None and uc.window == (identity(space.group),)
    if system.is_full_shift() and collect is None and (uc is None or single_cell):
        count = _count_exchangeable(n, m, uc)
        meta["reason"] = "exchangeable"
        result = CountResult(count, count, count, "pascal" if uc else "closed-form", meta)
        _crosscheck(result, space, spec, system, uc)
        return result

    count = _dfs_count(
        space, system, m, viol_budget, base_defective, pattern_triples, uc,
        node_limit, collect, collect_limit,
    )
    result = CountResult(count, count, count, "dfs", meta)
    _crosscheck(result, space, spec, system, uc)
    return result


def _count_exchangeable(n: int, m: int, uc: Optional[_UnionConstraint]) -> int:
    if uc is None:
        return m ** n
    # Pascal table built by addition only.
    binom = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        binom[i][0] = 1
        for j in range(1, i + 1):
            binom[i][j] = binom[i - 1][j - 1] + binom[i - 1][j]
    keys = [(s,) for s in range(m)]
    total = 0
    for combo in _compositions(n, m):
        counts = dict(zip(keys, combo))
        if not _leaf_accepts(uc, counts, 0, n):
            continue
        ways = 1
        rem = n
        for c in combo:
            ways *= binom[rem][c]
            rem -= c
        total += ways
    return total


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _dfs_count(
    space: LocalGSpace,
    system: ShiftSystem,
    m: int,
    viol_budget: int,
    base_defective: set,
    pattern_triples,
    uc: Optional[_UnionConstraint],
    node_limit: int,
    collect: Optional[List[Microstate]],
    collect_limit: int,
) -> int:
    n = space.n
    order = traversal_order(space)
    pos_of = [0] * n
    for i, p in enumerate(order):
        pos_of[p] = i

    pattern_at: List[List[Tuple[int, Tuple[int, ...], Tuple[int, ...]]]] = [
        [] for _ in range(n)
    ]
    for p, pts, syms in pattern_triples:
        if p in base_defective:
            continue
        trig = max(pos_of[q] for q in pts)
        pattern_at[trig].append((p, pts, syms))

    window_at: List[List[Tuple[int, ...]]] = [[] for _ in range(n)]
    bucket = 0
    if uc is not None:
        for pts in _window_instances(space, uc.window):
            if pts is None:
                bucket += 1
            else:
                window_at[max(pos_of[q] for q in pts)].append(pts)
        if uc.mp and bucket:
            return 0

    labels = [0] * n
    defective = [False] * n
    for p in base_defective:
        defective[p] = True
    counts: Dict[Tuple[int, ...], int] = {}
    state = {"viol": len(base_defective), "nodes": 0, "accepted": 0, "window_done": 0}
    total_windows = n - bucket

    def recurse(i: int) -> None:
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            raise SizeLimitError("DFS node limit exceeded")
        if i == n:
            if uc is None or _leaf_accepts(uc, counts, bucket, n):
                state["accepted"] += 1
                if collect is not None:
                    if len(collect) >= collect_limit:
                        raise SizeLimitError("collection limit exceeded")
                    collect.append(Microstate(space, tuple(labels)))
            return
        point = order[i]
        for sym in range(m):
            labels[point] = sym
            newly_defective = []
            for p, pts, syms in pattern_at[i]:
                if defective[p]:
                    continue
                if all(labels[q] == s for q, s in zip(pts, syms)):
                    defective[p] = True
                    newly_defective.append(p)
            state["viol"] += len(newly_defective)

            touched_keys = []
            for pts in window_at[i]:
                key = tuple(labels[q] for q in pts)
                counts[key] = counts.get(key, 0) + 1
                touched_keys.append(key)
            state["window_done"] += len(window_at[i])

            ok = state["viol"] <= viol_budget
            if ok and uc is not None:
                remaining = total_windows - state["window_done"]
                ok = _prefix_feasible(uc, counts, remaining, bucket, n)
            if ok:
                recurse(i + 1)

            for key in touched_keys:
                counts[key] -= 1
                if counts[key] == 0:
                    del counts[key]
            state["window_done"] -= len(window_at[i])
            for p in newly_defective:
                defective[p] = False
            state["viol"] -= len(newly_defective)

    recurse(0)
    return state["accepted"]


def _crosscheck(
    result: CountResult,
    space: LocalGSpace,
    spec: MapSpaceSpec,
    system: ShiftSystem,
    uc: Optional[_UnionConstraint],
) -> None:
    """Record (and enforce) the periodic-point oracle on cyclic strict runs."""
    if uc is not None or not space.label.startswith("cyclic"):
        return
    if spec.sft_mode != SFT_STRICT or not system.is_nearest_neighbor():
        return
    expected = transfer_matrix_count(system, space.n)
    match = result.count == expected
    checks = result.meta.setdefault("crosschecks", [])
    checks.append({"oracle": "transfer_matrix", "value": expected, "match": match})
    if not match:
        raise RuntimeError(
            f"count {result.count} disagrees with transfer-matrix oracle {expected}"
        )


def enumerate_microstates(
    space: LocalGSpace,
    spec: MapSpaceSpec,
    system: ShiftSystem,
    *,
    limit: int = 100_000,
    boxes: Optional[Sequence[MeasureConstraint]] = None,
) -> List[Microstate]:
    """Materialize every accepted labeling (guarded by ``limit``)."""
    out: List[Microstate] = []
    count_microstates(
        space, spec, system, boxes=boxes, collect=out, collect_limit=limit
    )
    return out
