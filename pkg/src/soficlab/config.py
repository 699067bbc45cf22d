"""Experiment configuration: one TOML file drives every CLI command.

Flags stay for paths, seed, worker count and mode; everything else lives in
nested tables.  Semantic problems raise ConfigError with the offending key
path so diagnostics stay anchored.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .entropy import Schedule
from .groups import (
    FREE_GROUP,
    INT_LATTICE,
    REAL_LINE,
    GroupElement,
    GroupModel,
)
from .microstates import MeasureConstraint
from .models import LocalGSpace, circle_space, cyclic_quotient, schreier_space, torus_quotient
from .shifts import (
    Alphabet,
    InvariantMeasureSpec,
    Pattern,
    ShiftSystem,
    bernoulli_measure,
    markov_measure,
)


class ConfigError(ValueError):
    """Invalid configuration; the message names the key path."""


def _get(table: Dict, key: str, path: str, expected=None, default=None, required=True):
    if key not in table:
        if not required:
            return default
        raise ConfigError(f"missing key {path}.{key}")
    value = table[key]
    if expected is not None and not isinstance(value, expected):
        raise ConfigError(
            f"{path}.{key} has type {type(value).__name__}, expected {expected}"
        )
    return value


def _parse_group(table: Dict) -> GroupModel:
    kind = _get(table, "kind", "group", str)
    try:
        if kind in ("int_lattice", "int-lattice", "lattice", "Z"):
            return GroupModel(INT_LATTICE, dim=int(table.get("dim", 1)))
        if kind in ("free_group", "free-group", "free"):
            return GroupModel(FREE_GROUP, rank=int(table.get("rank", 2)))
        if kind in ("real_line", "real-line", "R"):
            return GroupModel(REAL_LINE, step=float(_get(table, "step", "group")))
    except ValueError as exc:
        raise ConfigError(f"group: {exc}") from exc
    raise ConfigError(f"group.kind {kind!r} is not one of int_lattice/free_group/real_line")


def _parse_offset(group: GroupModel, value, path: str) -> GroupElement:
    try:
        if group.kind == INT_LATTICE:
            if group.dim == 1 and isinstance(value, int):
                return GroupElement(group, (value,))
            return GroupElement(group, tuple(int(v) for v in value))
        if group.kind == REAL_LINE:
            k = float(value) / group.step
            if abs(k - round(k)) > 1e-9:
                raise ConfigError(f"{path}: offset {value} is not on the step grid")
            return GroupElement(group, (round(k),))
        return GroupElement(group, tuple(int(v) for v in value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad offset {value!r} ({exc})") from exc


def _parse_system(table: Dict, group: GroupModel) -> ShiftSystem:
    names = _get(table, "alphabet", "system", list)
    alphabet = Alphabet(tuple(str(s) for s in names))
    patterns: List[Pattern] = []
    for i, pat in enumerate(table.get("forbidden", [])):
        path = f"system.forbidden[{i}]"
        offsets = tuple(
            _parse_offset(group, v, path) for v in _get(pat, "offsets", path, list)
        )
        syms = []
        for s in _get(pat, "symbols", path, list):
            name = str(s)
            if name not in alphabet.symbols:
                raise ConfigError(f"{path}: symbol {name!r} not in the alphabet")
            syms.append(alphabet.index(name))
        patterns.append(Pattern(offsets, tuple(syms)))
    try:
        return ShiftSystem(group, alphabet, tuple(patterns))
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc


def _parse_measure(
    table: Optional[Dict], alphabet: Alphabet, system: ShiftSystem
) -> Optional[InvariantMeasureSpec]:
    if table is None:
        return None
    kind = _get(table, "kind", "measure", str)
    try:
        if kind == "bernoulli":
            probs = _get(table, "probs", "measure", list)
            return bernoulli_measure(alphabet, [float(p) for p in probs])
        if kind == "markov":
            trans = _get(table, "transitions", "measure", list)
            stationary = table.get("stationary")
            return markov_measure(alphabet, trans, stationary, system=system)
    except ValueError as exc:
        raise ConfigError(f"measure: {exc}") from exc
    raise ConfigError(f"measure.kind {kind!r} must be bernoulli or markov")


def _parse_schedule(table: Dict, group: GroupModel) -> Schedule:
    window = tuple(
        _parse_offset(group, v, "schedule.window") for v in table.get("window", [])
    )
    try:
        return Schedule(
            sizes=tuple(int(v) for v in _get(table, "sizes", "schedule", list)),
            u_radii=tuple(float(v) for v in _get(table, "u_radii", "schedule", list)),
            deltas=tuple(float(v) for v in _get(table, "deltas", "schedule", list)),
            epsilons=tuple(float(v) for v in _get(table, "epsilons", "schedule", list)),
            etas=tuple(float(v) for v in table.get("etas", [])),
            window=window,
            model_seed=int(table.get("model_seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from exc


@dataclass
class ExperimentConfig:
    path: Path
    raw: Dict
    config_hash: str
    seed: int
    group: GroupModel
    system: ShiftSystem
    measure: Optional[InvariantMeasureSpec]
    schedule: Schedule
    model_block: Dict
    spec_block: Dict
    scan_block: Dict = field(default_factory=dict)
    boxes: Tuple[MeasureConstraint, ...] = ()
    output_dir: Path = Path("out")
    workers: int = 1


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = tomllib.loads(blob.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    group = _parse_group(_get(raw, "group", "", dict))
    system = _parse_system(_get(raw, "system", "", dict), group)
    measure = _parse_measure(raw.get("measure"), system.alphabet, system)
    schedule = _parse_schedule(_get(raw, "schedule", "", dict), group)
    model_block = raw.get("model", {})
    spec_block = raw.get("spec", {})
    scan_block = raw.get("scan", {})

    boxes: List[MeasureConstraint] = []
    rel = raw.get("rel_a", {})
    if rel:
        window = tuple(
            _parse_offset(group, v, "rel_a.window") for v in rel.get("window", [0])
        ) if group.kind == INT_LATTICE else ()
        if not window:
            from .groups import identity
            window = (identity(group),)
        targets = _get(rel, "targets", "rel_a", list)
        etas = _get(rel, "etas", "rel_a", list)
        if len(targets) != len(etas):
            raise ConfigError("rel_a.targets and rel_a.etas must have equal length")
        m = len(system.alphabet)
        if len(window) != 1:
            raise ConfigError("rel_a boxes currently take single-cell windows")
        for t, eta in zip(targets, etas):
            if len(t) != m:
                raise ConfigError("rel_a target length must match the alphabet")
            target = {(s,): float(p) for s, p in enumerate(t)}
            boxes.append(MeasureConstraint.from_mapping(window, target, float(eta)))

    out_dir = Path(raw.get("output", {}).get("dir", "out"))
    return ExperimentConfig(
        path=path,
        raw=raw,
        config_hash=hashlib.sha256(blob).hexdigest(),
        seed=int(raw.get("seed", 0)),
        group=group,
        system=system,
        measure=measure,
        schedule=schedule,
        model_block=model_block,
        spec_block=spec_block,
        scan_block=scan_block,
        boxes=tuple(boxes),
        output_dir=out_dir,
    )


class ConfigModelBuilder:
    """Picklable size -> model callable bound to a config's model block."""

    def __init__(self, cfg: "ExperimentConfig") -> None:
        self.cfg = cfg

    def __call__(self, size: int) -> LocalGSpace:
        return build_model(self.cfg, size)


def build_model(cfg: ExperimentConfig, size: Optional[int] = None) -> LocalGSpace:
    """Model space from the config's model block (size overrides its n)."""
    block = cfg.model_block
    kind = block.get("kind")
    if kind is None:
        raise ConfigError("missing key model.kind")
    try:
        if kind == "cyclic":
            return cyclic_quotient(size or int(_get(block, "n", "model")))
        if kind == "torus":
            dims = _get(block, "dims", "model", list)
            return torus_quotient([int(v) for v in dims])
        if kind == "schreier":
            n = size or int(_get(block, "n", "model"))
            import random as _random

            rng = _random.Random((int(block.get("perm_seed", cfg.seed)), n))
            perms = []
            for _ in range(cfg.group.rank):
                perm = list(range(n))
                rng.shuffle(perm)
                perms.append(perm)
            return schreier_space(*perms)
        if kind == "circle":
            h = float(_get(block, "h", "model"))
            if abs(h - cfg.group.step) > 1e-12:
                raise ConfigError("model.h must match group.step")
            if size is not None:
                return circle_space(size * h, h)
            return circle_space(float(_get(block, "L", "model")), h)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    raise ConfigError(f"model.kind {kind!r} is not one of cyclic/torus/schreier/circle")
