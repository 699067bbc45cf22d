"""Entropy estimates over finite schedules, plus the structural scans.

The iterated inf/limsup/limit structure of the entropy definitions is
replaced by finite parameter schedules and a fixed extrapolation rule: every
(size, U, delta, eta, epsilon, engine) cell is retained, the limsup proxy is
the cell at the largest model, and the final estimate takes the infimum over
(U, delta, eta) at the smallest epsilon.  Empty map spaces are explicit
empty cells, never sentinel floats.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .groups import (
    FREE_GROUP,
    INT_LATTICE,
    REAL_LINE,
    GroupElement,
    GroupModel,
    WeightedElementSet,
    ball,
    identity,
)
from .microstates import (
    AVERAGED,
    MEASURE_PRESERVING,
    STRICT,
    MapSpaceSpec,
    MeasureConstraint,
    Microstate,
    empirical_measure,
    is_member,
    quantize_counts,
    rho_M_distance,
)
from .models import UNDEFINED, LocalGSpace, circle_space, cyclic_quotient, schreier_space, sofic_quality, torus_quotient
from .packing import (
    FiniteMetricFamily,
    count_microstates,
    enumerate_microstates,
    greedy_sep_lower,
    sep_exact,
)
from .shifts import (
    Alphabet,
    InvariantMeasureSpec,
    ShiftSystem,
    bernoulli_measure,
    marginal,
    markov_measure,
    transition_matrix,
    tv_distance,
)

ENGINE_STRICT = "strict"
ENGINE_SOFT = "soft"

SEP_ENUM_CAP = 4096
SEP_EXACT_CAP = 512


@dataclass(frozen=True)
class Schedule:
    """Finite stand-in for the limit structure of the entropy definitions.

    Sizes increase, U radii do not decrease, deltas and epsilons decrease,
    etas (measure modes only) do not increase.  Epsilons at or below the
    model resolution 1/n make the separation count coincide with the plain
    microstate count; larger epsilons require enumerable map spaces.
    """

    sizes: Tuple[int, ...]
    u_radii: Tuple[float, ...]
    deltas: Tuple[float, ...]
    epsilons: Tuple[float, ...]
    etas: Tuple[float, ...] = ()
    window: Tuple[GroupElement, ...] = ()
    model_seed: int = 0

    def __post_init__(self) -> None:
        if not self.sizes or any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing and nonempty")
        if any(n < 1 for n in self.sizes):
            raise ValueError("sizes must be positive")
        if not self.u_radii or any(r <= 0 for r in self.u_radii):
            raise ValueError("U radii must be positive")
        if any(b < a for a, b in zip(self.u_radii, self.u_radii[1:])):
            raise ValueError("U radii must be nondecreasing")
        if not self.deltas or any(d <= 0 for d in self.deltas):
            raise ValueError("deltas must be positive")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("deltas must be strictly decreasing")
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        if any(e < 0 for e in self.etas):
            raise ValueError("etas must be nonnegative")
        if any(b >= a for a, b in zip(self.etas, self.etas[1:])):
            raise ValueError("etas must be strictly decreasing")


@dataclass(frozen=True)
class EntropyCell:
    """One (size, U, delta, eta, epsilon, engine) log-count density."""

    size: int
    u_radius: float
    delta: float
    epsilon: float
    eta: Optional[float]
    engine: str
    value: Optional[float]
    count: Optional[int]
    count_engine: str

    @property
    def empty(self) -> bool:
        return self.value is None

    def to_json_dict(self) -> Dict[str, object]:
        return {
            "size": self.size,
            "u_radius": self.u_radius,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "engine": self.engine,
            "value": self.value,
            "count": self.count,
            "count_engine": self.count_engine,
            "empty": self.empty,
        }


@dataclass
class EntropyReport:
    """Full cell table with the extrapolated estimate and diagnostics."""

    kind: str
    cells: Tuple[EntropyCell, ...]
    final: Dict[str, Optional[float]]
    final_empty: Dict[str, bool]
    limsup_proxy: Tuple[Dict[str, object], ...]
    diagnostics: Dict[str, object]
    provenance: Tuple[Dict[str, object], ...]
    atomless: bool = False
    quantization_error: Dict[int, float] = field(default_factory=dict)

    def final_value(self, engine: str = ENGINE_STRICT) -> Optional[float]:
        return self.final.get(engine)

    def to_json_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "cells": [c.to_json_dict() for c in self.cells],
            "final": self.final,
            "final_empty": self.final_empty,
            "limsup_proxy": list(self.limsup_proxy),
            "diagnostics": self.diagnostics,
            "provenance": list(self.provenance),
            "atomless": self.atomless,
            "quantization_error": {str(k): v for k, v in self.quantization_error.items()},
        }

    def to_csv_rows(self) -> List[str]:
        rows = ["n,U_radius,delta,epsilon,eta,engine,log_count_density,empty"]
        for c in self.cells:
            eta = "" if c.eta is None else repr(c.eta)
            val = "" if c.value is None else repr(c.value)
            rows.append(
                f"{c.size},{repr(c.u_radius)},{repr(c.delta)},{repr(c.epsilon)},"
                f"{eta},{c.engine},{val},{str(c.empty).lower()}"
            )
        return rows


@dataclass(frozen=True)
class DefaultModelBuilder:
    """Canonical model family per group kind; size is the point count
    (per axis for lattices of dimension above one).  Top-level and frozen so
    parallel workers can receive it."""

    group: GroupModel
    seed: int = 0

    def __call__(self, size: int) -> LocalGSpace:
        group = self.group
        if group.kind == INT_LATTICE and group.dim == 1:
            return cyclic_quotient(size)
        if group.kind == INT_LATTICE:
            return torus_quotient((size,) * group.dim)
        if group.kind == REAL_LINE:
            return circle_space(size * group.step, group.step)
        if group.kind == FREE_GROUP:
            rng = random.Random((self.seed, size))
            perms = []
            for _ in range(group.rank):
                perm = list(range(size))
                rng.shuffle(perm)
                perms.append(perm)
            return schreier_space(*perms)
        raise ValueError(f"no default model family for group kind {group.kind!r}")


def default_model_builder(group: GroupModel, seed: int = 0) -> DefaultModelBuilder:
    return DefaultModelBuilder(group, seed)


def _resolution(space: LocalGSpace) -> float:
    return 1.0 / space.n


def _sep_value(
    space: LocalGSpace,
    spec: MapSpaceSpec,
    system: ShiftSystem,
    eps: float,
    boxes: Optional[Sequence[MeasureConstraint]],
) -> Tuple[int, str]:
    """Separation count at eps >= resolution by materializing the map space."""
    states = enumerate_microstates(space, spec, system, limit=SEP_ENUM_CAP, boxes=boxes)
    family = FiniteMetricFamily(tuple(states), rho_M_distance)
    if len(family) <= SEP_EXACT_CAP:
        return sep_exact(family, eps), "sep-exact"
    return greedy_sep_lower(family, eps), "sep-greedy-lower"


@dataclass(frozen=True)
class _NoConstraint:
    def __call__(self, size: int, eta: Optional[float]) -> None:
        return None


@dataclass(frozen=True)
class _TVConstraintFactory:
    window: Tuple[GroupElement, ...]
    target: Tuple[Tuple[Tuple[int, ...], float], ...]

    def __call__(self, size: int, eta: Optional[float]) -> MeasureConstraint:
        return MeasureConstraint(self.window, self.target, 0.0 if eta is None else eta)


@dataclass(frozen=True)
class _BoxesFactory:
    boxes: Tuple[MeasureConstraint, ...]

    def __call__(self, size: int, eta: Optional[float]) -> Tuple[MeasureConstraint, ...]:
        return self.boxes


@dataclass(frozen=True)
class _Job:
    size: int
    u_radius: float
    delta: float
    eta: Optional[float]
    engine: str


def _job_key(job: _Job) -> Tuple:
    return (job.size, job.u_radius, job.delta,
            -1.0 if job.eta is None else job.eta, job.engine)


class _CellComputer:
    """Evaluates one job (all epsilons share its count)."""

    def __init__(
        self,
        system: ShiftSystem,
        schedule: Schedule,
        mode: str,
        model_builder: Callable[[int], LocalGSpace],
        constraint_for: Callable[[int, Optional[float]], Optional[object]],
    ) -> None:
        self.system = system
        self.schedule = schedule
        self.mode = mode
        self.model_builder = model_builder
        self.constraint_for = constraint_for

    def __call__(self, job: _Job) -> Tuple[_Job, List[EntropyCell], List[Dict[str, object]]]:
        space = self.model_builder(job.size)
        group = self.system.group
        u = ball(group, job.u_radius)
        payload = self.constraint_for(job.size, job.eta)
        boxes: Optional[Sequence[MeasureConstraint]] = None
        constraint: Optional[MeasureConstraint] = None
        if isinstance(payload, MeasureConstraint):
            constraint = payload
        elif payload is not None:
            boxes = tuple(payload)
        spec = MapSpaceSpec(u, job.delta, mode=self.mode, sft_mode=job.engine,
                            constraint=constraint)
        result = count_microstates(space, spec, self.system, boxes=boxes)
        count = result.count
        cells: List[EntropyCell] = []
        vol = space.volume
        res = _resolution(space)
        for eps in self.schedule.epsilons:
            if count == 0:
                cells.append(EntropyCell(job.size, job.u_radius, job.delta, eps,
                                         job.eta, job.engine, None, 0, result.engine))
                continue
            if eps < res:
                sep_count, engine_tag = count, result.engine
            else:
                sep_count, engine_tag = _sep_value(space, spec, self.system, eps, boxes)
            value = math.log(sep_count) / vol if sep_count > 0 else None
            cells.append(EntropyCell(job.size, job.u_radius, job.delta, eps,
                                     job.eta, job.engine,
                                     value, sep_count, engine_tag))
        prov = []
        for check in result.meta.get("crosschecks", []):
            prov.append({
                "size": job.size, "u_radius": job.u_radius, "delta": job.delta,
                "engine": job.engine, **check,
            })
        return job, cells, prov


def pmap(fn: Callable, items: Sequence, workers: int = 1) -> List:
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _assemble_report(
    kind: str,
    schedule: Schedule,
    engines: Sequence[str],
    etas_axis: Sequence[Optional[float]],
    results: Sequence[Tuple[_Job, List[EntropyCell], List[Dict[str, object]]]],
    atomless: bool = False,
    quantization_error: Optional[Dict[int, float]] = None,
) -> EntropyReport:
    results = sorted(results, key=lambda r: _job_key(r[0]))
    cells: List[EntropyCell] = []
    provenance: List[Dict[str, object]] = []
    for _, job_cells, prov in results:
        cells.extend(job_cells)
        provenance.extend(prov)

    max_size = max(schedule.sizes)
    min_eps = min(schedule.epsilons)

    proxies: List[Dict[str, object]] = []
    for c in cells:
        if c.size == max_size:
            proxies.append({
                "u_radius": c.u_radius, "delta": c.delta, "eta": c.eta,
                "epsilon": c.epsilon, "engine": c.engine,
                "value": c.value, "empty": c.empty,
            })

    final: Dict[str, Optional[float]] = {}
    final_empty: Dict[str, bool] = {}
    for engine in engines:
        slice_cells = [c for c in cells
                       if c.size == max_size and c.epsilon == min_eps and c.engine == engine]
        if any(c.empty for c in slice_cells) or not slice_cells:
            final[engine] = None
            final_empty[engine] = True
        else:
            final[engine] = min(c.value for c in slice_cells)
            final_empty[engine] = False

    diagnostics = _diagnostics(cells, final, final_empty)
    return EntropyReport(
        kind=kind,
        cells=tuple(cells),
        final=final,
        final_empty=final_empty,
        limsup_proxy=tuple(proxies),
        diagnostics=diagnostics,
        provenance=tuple(provenance),
        atomless=atomless,
        quantization_error=quantization_error or {},
    )


def _diagnostics(cells, final, final_empty) -> Dict[str, object]:
    """Cell-wise monotonicity checks; counts of None are treated as -inf."""
    def val(c: EntropyCell) -> float:
        return -math.inf if c.value is None else c.value

    by_key: Dict[Tuple, EntropyCell] = {}
    for c in cells:
        by_key[(c.size, c.u_radius, c.delta, c.eta, c.epsilon, c.engine)] = c

    delta_ok = True
    u_ok = True
    eta_ok = True
    eps_ok = True
    for (size, r, d, eta, eps, eng), c in by_key.items():
        for (size2, r2, d2, eta2, eps2, eng2), c2 in by_key.items():
            if (size, eng) != (size2, eng2):
                continue
            if (r, eta, eps) == (r2, eta2, eps2) and d2 < d and val(c2) > val(c) + 1e-12:
                delta_ok = False
            if (d, eta, eps) == (d2, eta2, eps2) and r2 > r and val(c2) > val(c) + 1e-12:
                u_ok = False
            if (r, d, eps) == (r2, d2, eps2) and eta is not None and eta2 is not None \
                    and eta2 < eta and val(c2) > val(c) + 1e-12:
                eta_ok = False
            if (r, d, eta) == (r2, d2, eta2) and eps2 < eps and val(c2) < val(c) - 1e-12:
                eps_ok = False
    finals_below = True
    for eng, v in final.items():
        if final_empty.get(eng):
            continue
        for c in cells:
            if c.engine == eng and not c.empty and c.size == max(x.size for x in cells):
                if c.epsilon == min(x.epsilon for x in cells) and v > c.value + 1e-12:
                    finals_below = False
    return {
        "delta_monotone": delta_ok,
        "u_monotone": u_ok,
        "eta_monotone": eta_ok,
        "epsilon_monotone": eps_ok,
        "final_below_proxies": finals_below,
    }


def _run_estimate(
    kind: str,
    system: ShiftSystem,
    schedule: Schedule,
    mode: str,
    engines: Sequence[str],
    etas_axis: Sequence[Optional[float]],
    constraint_for: Callable[[int, Optional[float]], Optional[object]],
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
    atomless: bool = False,
    quantization_error: Optional[Dict[int, float]] = None,
) -> EntropyReport:
    builder = model_builder or default_model_builder(system.group, schedule.model_seed)
    computer = _CellComputer(system, schedule, mode, builder, constraint_for)
    jobs = [
        _Job(size, r, d, eta, engine)
        for size in schedule.sizes
        for r in schedule.u_radii
        for d in schedule.deltas
        for eta in etas_axis
        for engine in engines
    ]
    jobs.sort(key=_job_key)
    results = pmap(computer, jobs, workers)
    return _assemble_report(kind, schedule, engines, etas_axis, results,
                            atomless=atomless, quantization_error=quantization_error)


def h_top_estimate(
    system: ShiftSystem,
    schedule: Schedule,
    *,
    engines: Sequence[str] = (ENGINE_STRICT, ENGINE_SOFT),
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
) -> EntropyReport:
    """Topological estimate: log sep-counts of near-equivariant labelings."""
    return _run_estimate(
        "top", system, schedule, STRICT, engines, (None,),
        _NoConstraint(), workers, model_builder,
    )


def h_avg_estimate(
    system: ShiftSystem,
    schedule: Schedule,
    *,
    engines: Sequence[str] = (ENGINE_STRICT, ENGINE_SOFT),
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
) -> EntropyReport:
    """Topological estimate with the Haar-averaged equivariance criterion."""
    return _run_estimate(
        "avg", system, schedule, AVERAGED, engines, (None,),
        _NoConstraint(), workers, model_builder,
    )


def _window_or_default(system: ShiftSystem, schedule: Schedule) -> Tuple[GroupElement, ...]:
    return schedule.window if schedule.window else (identity(system.group),)


def h_meas_estimate(
    system: ShiftSystem,
    mu: InvariantMeasureSpec,
    schedule: Schedule,
    *,
    engines: Sequence[str] = (ENGINE_STRICT,),
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
) -> EntropyReport:
    """Measure estimate: counts restricted to TV-balls around mu's marginal."""
    if not schedule.etas:
        raise ValueError("measure estimates need an eta schedule")
    window = _window_or_default(system, schedule)
    target = marginal(mu, window)
    factory = _TVConstraintFactory(window, tuple(sorted(target.items())))
    return _run_estimate(
        "measure", system, schedule, STRICT, engines, tuple(schedule.etas),
        factory, workers, model_builder,
    )


def h_meas_mp_estimate(
    system: ShiftSystem,
    mu: InvariantMeasureSpec,
    schedule: Schedule,
    *,
    engines: Sequence[str] = (ENGINE_STRICT,),
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
) -> EntropyReport:
    """Measure estimate through exactly measure-preserving microstates.

    Finite models are atomic, so the target marginal is quantized by largest
    remainder at each size; the induced TV error is recorded per size.
    """
    window = _window_or_default(system, schedule)
    target = marginal(mu, window)
    keys = sorted(target)
    qerr: Dict[int, float] = {}
    for size in schedule.sizes:
        builder = model_builder or default_model_builder(system.group, schedule.model_seed)
        n = builder(size).n
        quota = quantize_counts([target[k] for k in keys], n)
        qerr[size] = tv_distance(target, {k: q / n for k, q in zip(keys, quota)})

    factory = _TVConstraintFactory(window, tuple(sorted(target.items())))
    return _run_estimate(
        "mp", system, schedule, MEASURE_PRESERVING, engines, (None,),
        factory, workers, model_builder,
        quantization_error=qerr,
    )


def h_rel_A_estimate(
    system: ShiftSystem,
    boxes: Sequence[MeasureConstraint],
    schedule: Schedule,
    *,
    engines: Sequence[str] = (ENGINE_STRICT,),
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
) -> EntropyReport:
    """Estimate relative to a closed constraint set realized as a union of
    TV-boxes on one window marginal."""
    if not boxes:
        raise ValueError("at least one marginal box is required")
    return _run_estimate(
        "relA", system, schedule, STRICT, engines, (None,),
        _BoxesFactory(tuple(boxes)), workers, model_builder,
    )


@dataclass
class EquidistributionResult:
    max_tv: float
    per_generator: Dict[str, float]
    samples_used: int
    sofic_quality: float
    sampler: str


def equidistribution_check(
    space: LocalGSpace,
    system: ShiftSystem,
    spec: MapSpaceSpec,
    window: Tuple[GroupElement, ...],
    sample_count: int,
    seed: int,
) -> EquidistributionResult:
    """Largest generator-shift TV non-invariance over sampled members.

    Sampling rejects uniform labelings first and falls back to DFS
    enumeration when acceptance is rare; both stages are seed-deterministic.
    """
    if spec.mode != STRICT:
        raise ValueError("equidistribution check expects a strict-mode spec")
    from .groups import generators

    m = len(system.alphabet)
    rng = random.Random(seed)
    samples: List[Microstate] = []
    attempts = 0
    cap = max(50 * sample_count, 1000)
    sampler = "rejection"
    while len(samples) < sample_count and attempts < cap:
        labels = tuple(rng.randrange(m) for _ in range(space.n))
        micro = Microstate(space, labels)
        attempts += 1
        if is_member(micro, spec, system):
            samples.append(micro)
    if len(samples) < sample_count:
        sampler = "dfs"
        pool = enumerate_microstates(space, spec, system, limit=SEP_ENUM_CAP)
        if not pool:
            raise ValueError("no accepted microstates exist for this spec")
        k = min(sample_count, len(pool))
        samples = rng.sample(pool, k)

    gens = generators(space.group)
    per_gen = {repr(g): 0.0 for g in gens}
    for micro in samples:
        emp = empirical_measure(micro, window)
        for g in gens:
            table = space.act_table(g)
            shifted_counts: Dict[object, int] = {}
            for p in space.points():
                q = table[p]
                if q == UNDEFINED:
                    key: object = None
                else:
                    key = _name_key(micro, q, window)
                shifted_counts[key] = shifted_counts.get(key, 0) + 1
            shifted = {k: c / space.n for k, c in shifted_counts.items()}
            tv = _bucketed_tv(emp, shifted)
            key_g = repr(g)
            per_gen[key_g] = max(per_gen[key_g], tv)
    quality = sofic_quality(space, spec.u)
    max_tv = max(per_gen.values()) if per_gen else 0.0
    return EquidistributionResult(max_tv, per_gen, len(samples), quality, sampler)


def _name_key(micro: Microstate, p: int, window: Tuple[GroupElement, ...]):
    from .microstates import pullback_name

    name = pullback_name(micro, p, window)
    return None if any(s is None for s in name) else name


def _bucketed_tv(d1: Dict[object, float], d2: Dict[object, float]) -> float:
    keys = set(d1) | set(d2)
    return 0.5 * sum(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class FamilyMember:
    label: str
    params: Tuple[Tuple[str, float], ...]
    measure: InvariantMeasureSpec


@dataclass
class VariationalScanResult:
    measures: Tuple[Tuple[str, Optional[float]], ...]
    sup_value: Optional[float]
    argmax_label: Optional[str]
    argmax_params: Dict[str, float]
    h_top: Optional[float]
    gap: Optional[float]

    def to_json_dict(self) -> Dict[str, object]:
        return {
            "measures": [list(m) for m in self.measures],
            "sup_value": self.sup_value,
            "argmax_label": self.argmax_label,
            "argmax_params": self.argmax_params,
            "h_top": self.h_top,
            "gap": self.gap,
        }


def bernoulli_family(alphabet: Alphabet, step: float) -> Tuple[FamilyMember, ...]:
    """Grid of binary Bernoulli measures with weight step granularity."""
    if len(alphabet) != 2:
        raise ValueError("the Bernoulli grid is defined for binary alphabets")
    steps = round(1.0 / step)
    members = []
    for k in range(1, steps):
        p = k / steps
        mu = bernoulli_measure(alphabet, (p, 1.0 - p))
        members.append(FamilyMember(f"bernoulli(p={p:.4f})", (("p", p),), mu))
    return tuple(members)


def markov_family(system: ShiftSystem, step: float) -> Tuple[FamilyMember, ...]:
    """Grid of stationary chains supported on the allowed transitions.

    Rows with two allowed targets carry one grid parameter; rows with one
    allowed target are forced.  Only two-symbol systems are supported.
    """
    t = transition_matrix(system)
    m = len(t)
    if m != 2:
        raise ValueError("the Markov grid is defined for two-symbol systems")
    steps = round(1.0 / step)
    grid = [k / steps for k in range(1, steps)]

    free_rows = [a for a in range(2) if sum(t[a]) == 2]
    forced_rows = {a: t[a].index(1) for a in range(2) if sum(t[a]) == 1}
    if len(free_rows) + len(forced_rows) < 2:
        raise ValueError("some symbol has no allowed outgoing transition")

    def build(params: Dict[int, float]) -> Tuple[Tuple[float, ...], ...]:
        # a grid parameter is the switch probability p(a -> 1-a)
        rows = []
        for a in range(2):
            row = [0.0, 0.0]
            if a in params:
                row[1 - a] = params[a]
                row[a] = 1.0 - params[a]
            else:
                row[forced_rows[a]] = 1.0
            rows.append(tuple(row))
        return tuple(rows)

    members = []
    if len(free_rows) == 1:
        a = free_rows[0]
        for p in grid:
            trans = build({a: p})
            mu = markov_measure(system.alphabet, trans, system=system)
            name = f"markov(p({a}->{1 - a})={p:.4f})"
            members.append(FamilyMember(name, ((f"p({a}->{1-a})", p),), mu))
    else:
        for p in grid:
            for q in grid:
                trans = build({0: p, 1: q})
                mu = markov_measure(system.alphabet, trans, system=system)
                name = f"markov(p(0->1)={p:.4f},p(1->0)={q:.4f})"
                members.append(FamilyMember(
                    name, (("p(0->1)", p), ("p(1->0)", q)), mu))
    return tuple(members)


@dataclass(frozen=True)
class _MemberEvaluator:
    system: ShiftSystem
    schedule: Schedule
    model_builder: Optional[Callable[[int], LocalGSpace]]

    def __call__(self, member: FamilyMember) -> Optional[float]:
        rep = h_meas_estimate(self.system, member.measure, self.schedule,
                              model_builder=self.model_builder)
        return rep.final_value(ENGINE_STRICT)


def variational_scan(
    system: ShiftSystem,
    family: Sequence[FamilyMember],
    schedule: Schedule,
    *,
    workers: int = 1,
    model_builder: Optional[Callable[[int], LocalGSpace]] = None,
) -> VariationalScanResult:
    """Compare sup of measure estimates over a family with the topological one."""
    top = h_top_estimate(system, schedule, engines=(ENGINE_STRICT,),
                         workers=workers, model_builder=model_builder)
    h_top = top.final_value(ENGINE_STRICT)

    finals = pmap(_MemberEvaluator(system, schedule, model_builder),
                  list(family), workers)
    measures = tuple((member.label, value) for member, value in zip(family, finals))

    sup_value: Optional[float] = None
    argmax: Optional[FamilyMember] = None
    for member, value in zip(family, finals):
        if value is None:
            continue
        if sup_value is None or value > sup_value:
            sup_value = value
            argmax = member
    gap = None
    if h_top is not None and sup_value is not None:
        gap = h_top - sup_value
    return VariationalScanResult(
        measures=measures,
        sup_value=sup_value,
        argmax_label=argmax.label if argmax else None,
        argmax_params=dict(argmax.params) if argmax else {},
        h_top=h_top,
        gap=gap,
    )
