"""Microstates: labelings of a model space seen as maps into a shift system.

A labeling w induces the pullback-name map p -> x_p with x_p(h) = w(h^{-1}.p).
All defect, membership and empirical-measure functionals act on that
representation.  Undefined domain always counts at full distance, since the
observable metric is 1-bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

from .groups import GroupElement, WeightedElementSet, identity, inverse
from .models import UNDEFINED, LocalGSpace
from .shifts import MollifiedMetric, Pattern, PatternKey, ShiftSystem

STRICT = "strict"
AVERAGED = "averaged"
MEASURE_PRESERVING = "measure_preserving"

SFT_STRICT = "strict"
SFT_SOFT = "soft"

UNDEF_BUCKET = None


@dataclass(frozen=True)
class Microstate:
    """A full labeling of a model space by alphabet indices."""

    space: LocalGSpace
    labels: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != self.space.n:
            raise ValueError("every point must be labeled")


@dataclass(frozen=True)
class MeasureConstraint:
    """Target window marginal with a total-variation radius.

    ``target`` is stored as a sorted tuple of (symbol-tuple, probability)
    pairs so constraints stay hashable.
    """

    window: Tuple[GroupElement, ...]
    target: Tuple[Tuple[PatternKey, float], ...]
    eta: float = 0.0

    def __post_init__(self) -> None:
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")

    @staticmethod
    def from_mapping(
        window: Tuple[GroupElement, ...], target: Mapping[PatternKey, float], eta: float = 0.0
    ) -> "MeasureConstraint":
        items = tuple(sorted(target.items()))
        return MeasureConstraint(window, items, eta)

    def target_dict(self) -> Dict[PatternKey, float]:
        return dict(self.target)


@dataclass(frozen=True)
class MapSpaceSpec:
    """Membership parameters for microstate map spaces.

    mode selects how equivariance defects aggregate over U (max, Haar mean,
    or max plus an exact measure match); sft_mode selects whether forbidden
    patterns are banned outright or folded into the defect budget.
    """

    u: WeightedElementSet
    delta: float
    mode: str = STRICT
    sft_mode: str = SFT_STRICT
    constraint: Optional[MeasureConstraint] = None

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.mode not in (STRICT, AVERAGED, MEASURE_PRESERVING):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.sft_mode not in (SFT_STRICT, SFT_SOFT):
            raise ValueError(f"unknown sft mode {self.sft_mode!r}")
        if len(self.u) and self.u.group is not None:
            if identity(self.u.group) not in self.u:
                raise ValueError("U must contain the identity")
        if self.mode == MEASURE_PRESERVING and self.constraint is None:
            raise ValueError("measure-preserving mode needs a constraint")


def pullback_name(micro: Microstate, p: int, window: Tuple[GroupElement, ...]):
    """Name of p over the window: w(h^{-1}.p) per coordinate, None where undefined."""
    out = []
    for h in window:
        q = micro.space.act_table(inverse(h))[p]
        out.append(None if q == UNDEFINED else micro.labels[q])
    return tuple(out)


def domain_defect(space: LocalGSpace, g: GroupElement) -> float:
    """Volume fraction of points where g does not act."""
    table = space.act_table(g)
    return sum(1 for q in table if q == UNDEFINED) / space.n


def equivariance_defect(micro: Microstate, g: GroupElement) -> float:
    """Quasi-metric discrepancy between g-then-map and map-then-g.

    The undefined part of the domain is charged in full; on the defined part
    the identity-coordinate observable compares (g.x_p)(e) = x_p(g^{-1})
    against x_{g.p}(e).  For pullback names both reduce to the label at g.p,
    so the mismatch term vanishes wherever the composition is defined.
    """
    space = micro.space
    table_g = space.act_table(g)
    table_name = space.act_table(inverse(inverse(g)))
    bad = 0
    mismatch = 0
    for p in space.points():
        q = table_g[p]
        if q == UNDEFINED:
            bad += 1
            continue
        lhs_pt = table_name[p]
        if lhs_pt == UNDEFINED or micro.labels[lhs_pt] != micro.labels[q]:
            mismatch += 1
    return (bad + mismatch) / space.n


def _pattern_tables(space: LocalGSpace, system: ShiftSystem):
    """Per forbidden pattern: composed tables of the probe coordinates."""
    out = []
    for pat in system.forbidden:
        tables = tuple(space.act_table(inverse(o)) for o in pat.offsets)
        out.append((tables, pat.symbols))
    return out


def defective_points(micro: Microstate, system: ShiftSystem) -> Tuple[int, ...]:
    """Points whose pullback name contains a forbidden pattern.

    Points where a forbidden window cannot be fully evaluated also count.
    """
    space = micro.space
    labels = micro.labels
    bad = []
    pats = _pattern_tables(space, system)
    for p in space.points():
        for tables, syms in pats:
            undefined = False
            matched = True
            for t, s in zip(tables, syms):
                q = t[p]
                if q == UNDEFINED:
                    undefined = True
                    break
                if labels[q] != s:
                    matched = False
                    break
            if undefined or matched:
                bad.append(p)
                break
    return tuple(bad)


def sft_defect(micro: Microstate, system: ShiftSystem) -> float:
    """Volume fraction of points at which some forbidden pattern occurs."""
    if system.is_full_shift():
        return 0.0
    return len(defective_points(micro, system)) / micro.space.n


def empirical_measure(
    micro: Microstate, window: Tuple[GroupElement, ...]
) -> Dict[object, float]:
    """bvol-weighted distribution of pullback window patterns.

    Points whose window orbit is undefined land in the None bucket, so the
    masses always sum to 1.
    """
    space = micro.space
    tables = [space.act_table(inverse(h)) for h in window]
    counts: Dict[object, int] = {}
    for p in space.points():
        key: object = UNDEF_BUCKET
        syms = []
        for t in tables:
            q = t[p]
            if q == UNDEFINED:
                syms = None
                break
            syms.append(micro.labels[q])
        if syms is not None:
            key = tuple(syms)
        counts[key] = counts.get(key, 0) + 1
    return {k: c / space.n for k, c in counts.items()}


def empirical_counts(
    micro: Microstate, window: Tuple[GroupElement, ...]
) -> Dict[object, int]:
    """Integer point counts behind empirical_measure."""
    space = micro.space
    dist = empirical_measure(micro, window)
    return {k: round(v * space.n) for k, v in dist.items()}


def rho_M_distance(a: Microstate, b: Microstate) -> float:
    """Normalized weighted Hamming distance between labelings on one model."""
    if a.space != b.space:
        raise ValueError("microstates live on different model spaces")
    diff = sum(1 for x, y in zip(a.labels, b.labels) if x != y)
    return diff / a.space.n


def rho_f_model_distance(a: Microstate, b: Microstate, metric: MollifiedMetric) -> float:
    """Model-space distance induced by rho_f on pullback names."""
    if a.space != b.space:
        raise ValueError("microstates live on different model spaces")
    space = a.space
    coords = [space.act_table(inverse(inverse(g))) for g in metric.f.elements]
    total = 0.0
    for p in space.points():
        acc = 0.0
        for t, mass in zip(coords, metric.f.weights):
            q = t[p]
            if q == UNDEFINED or a.labels[q] != b.labels[q]:
                acc += mass
        total += acc
    return total / space.n


def quantize_counts(probs: Sequence[float], n: int) -> Tuple[int, ...]:
    """Largest-remainder rounding of n * probs to integers summing to n."""
    if any(p < 0 for p in probs):
        raise ValueError("probabilities must be nonnegative")
    if abs(sum(probs) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    raw = [p * n for p in probs]
    counts = [math.floor(x) for x in raw]
    missing = n - sum(counts)
    order = sorted(range(len(probs)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:missing]:
        counts[i] += 1
    return tuple(counts)


def transport_to_target(micro: Microstate, target: Sequence[float]) -> Microstate:
    """Minimal relabeling whose single-cell marginal equals the quantized target.

    Surplus points are relabeled in traversal order to symbols still below
    quota, so the relabel count is exactly n * TV(current, quantized counts).
    """
    n = micro.space.n
    if any(s >= len(target) for s in micro.labels):
        raise ValueError("target vector shorter than the label range")
    quota = list(quantize_counts(target, n))
    kept = [0] * len(target)
    labels = list(micro.labels)
    to_fix = []
    for p in range(n):
        s = labels[p]
        if kept[s] < quota[s]:
            kept[s] += 1
        else:
            to_fix.append(p)
    deficits = []
    for s, q in enumerate(quota):
        deficits.extend([s] * (q - kept[s]))
    for p, s in zip(to_fix, deficits):
        labels[p] = s
    return Microstate(micro.space, tuple(labels))


def perturbation_stability_bound(
    u: WeightedElementSet, kappa: float, eps: float, system: ShiftSystem
) -> float:
    """Defect inflation sqrt(eps) + eps + kappa after an eps-relabeling.

    With the discrete identity-cell observable the modulus-of-continuity
    contribution over U is zero, so neither U nor the system enters the
    numeric value; both stay in the signature for metric variants.
    """
    if kappa < 0 or eps < 0:
        raise ValueError("kappa and eps must be nonnegative")
    return math.sqrt(eps) + eps + kappa


def _sft_term(micro: Microstate, spec: MapSpaceSpec, system: ShiftSystem) -> Optional[float]:
    """SFT contribution to the defect budget; None signals hard rejection."""
    defect = sft_defect(micro, system)
    if spec.sft_mode == SFT_STRICT:
        return None if defect > 0 else 0.0
    return defect


def is_member(micro: Microstate, spec: MapSpaceSpec, system: ShiftSystem) -> bool:
    """Membership of the induced map in the spec's map space."""
    sft_term = _sft_term(micro, spec, system)
    if sft_term is None:
        return False
    eq = [equivariance_defect(micro, g) for g in spec.u]
    if spec.mode == AVERAGED:
        total_w = spec.u.total_weight()
        mean = (
            sum(w * (e + sft_term) for w, e in zip(spec.u.weights, eq)) / total_w
            if total_w > 0
            else 0.0
        )
        if mean > spec.delta:
            return False
    else:
        worst = max((e + sft_term for e in eq), default=sft_term)
        if worst > spec.delta:
            return False

    cons = spec.constraint
    if cons is None:
        return True
    emp = empirical_measure(micro, cons.window)
    if spec.mode == MEASURE_PRESERVING:
        if UNDEF_BUCKET in emp:
            return False
        n = micro.space.n
        keys = sorted(cons.target_dict())
        quota = quantize_counts([cons.target_dict()[k] for k in keys], n)
        counts = {k: round(emp.get(k, 0.0) * n) for k in keys}
        extra = set(emp) - set(keys)
        if extra:
            return False
        return all(counts[k] == q for k, q in zip(keys, quota))
    from .shifts import tv_distance

    target = cons.target_dict()
    emp_no_bucket = {k: v for k, v in emp.items() if k is not UNDEF_BUCKET}
    bucket = emp.get(UNDEF_BUCKET, 0.0)
    return tv_distance(emp_no_bucket, target) + 0.5 * bucket <= cons.eta
