"""Command-line entry point: build-model, estimate, verify, scan-variational.

Reports are written deterministically (sorted keys, no timestamps), so a
config plus seed pins the output bytes regardless of worker count.  The run
manifest carries timings and is the only file allowed to vary.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from . import __version__
from .config import ConfigError, ConfigModelBuilder, ExperimentConfig, build_model, load_config
from .entropy import (
    ENGINE_SOFT,
    ENGINE_STRICT,
    EntropyReport,
    Schedule,
    bernoulli_family,
    equidistribution_check,
    h_avg_estimate,
    h_meas_estimate,
    h_meas_mp_estimate,
    h_rel_A_estimate,
    h_top_estimate,
    markov_family,
    variational_scan,
)
from .groups import GroupElement, ball, check_ball_product, identity, weighted_set
from .microstates import (
    MapSpaceSpec,
    Microstate,
    empirical_counts,
    is_member,
    quantize_counts,
    rho_M_distance,
    transport_to_target,
)
from .models import LocalGSpace, check_local_mp, cyclic_quotient, sofic_quality
from .packing import (
    FiniteMetricFamily,
    cov_exact,
    count_microstates,
    sep_exact,
    span_exact,
    transfer_matrix_count,
)
from .shifts import (
    Alphabet,
    marginal,
    nearest_neighbor_sft,
    relabel_measure,
    relabel_system,
    tv_distance,
)

MODES = ("top", "avg", "measure", "mp", "relA")


def _workers(args: argparse.Namespace) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    env = os.environ.get("SOFICLAB_WORKERS")
    return max(1, int(env)) if env else 1


def _write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def report_json_bytes(payload: Dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _emit_report(
    cfg: ExperimentConfig, out_dir: Path, mode: str, report: EntropyReport,
    timings: Dict[str, float], workers: int,
) -> None:
    payload = {
        "artifact": "soficlab",
        "version": __version__,
        "config_hash": cfg.config_hash,
        "mode": mode,
        "report": report.to_json_dict(),
    }
    _write_bytes(out_dir / f"report_{mode}.json", report_json_bytes(payload))
    csv_text = "\n".join(report.to_csv_rows()) + "\n"
    _write_bytes(out_dir / f"report_{mode}.csv", csv_text.encode("utf-8"))
    manifest = {
        "artifact": "soficlab",
        "version": __version__,
        "config_hash": cfg.config_hash,
        "mode": mode,
        "workers": workers,
        "timings_s": timings,
        "oracle_checks": list(report.provenance),
    }
    _write_bytes(out_dir / f"manifest_{mode}.json", report_json_bytes(manifest))


def cmd_build_model(cfg: ExperimentConfig, out_dir: Path) -> int:
    space = build_model(cfg)
    quality = {}
    for r in cfg.schedule.u_radii:
        quality[repr(float(r))] = sofic_quality(space, ball(cfg.group, r))
    summary = {
        "label": space.label,
        "n": space.n,
        "volume": space.volume,
        "atomless": False,
        "sofic_quality": quality,
    }
    blob = report_json_bytes({"config_hash": cfg.config_hash, "model": summary})
    _write_bytes(out_dir / "model.json", blob)
    sys.stdout.write(blob.decode("utf-8"))
    return 0


def cmd_estimate(cfg: ExperimentConfig, out_dir: Path, mode: str, workers: int) -> int:
    builder = ConfigModelBuilder(cfg)
    t0 = time.perf_counter()
    if mode == "top":
        report = h_top_estimate(cfg.system, cfg.schedule, workers=workers,
                                model_builder=builder)
    elif mode == "avg":
        report = h_avg_estimate(cfg.system, cfg.schedule, workers=workers,
                                model_builder=builder)
    elif mode == "measure":
        if cfg.measure is None:
            raise ConfigError("estimate --mode measure needs a [measure] block")
        report = h_meas_estimate(cfg.system, cfg.measure, cfg.schedule,
                                 workers=workers, model_builder=builder)
    elif mode == "mp":
        if cfg.measure is None:
            raise ConfigError("estimate --mode mp needs a [measure] block")
        report = h_meas_mp_estimate(cfg.system, cfg.measure, cfg.schedule,
                                    workers=workers, model_builder=builder)
    elif mode == "relA":
        if not cfg.boxes:
            raise ConfigError("estimate --mode relA needs a [rel_a] block")
        report = h_rel_A_estimate(cfg.system, cfg.boxes, cfg.schedule,
                                  workers=workers, model_builder=builder)
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    timings = {"estimate": time.perf_counter() - t0}
    _emit_report(cfg, out_dir, mode, report, timings, workers)
    finals = {k: v for k, v in report.final.items()}
    sys.stdout.write(json.dumps({"mode": mode, "final": finals}, sort_keys=True) + "\n")
    return 0


def cmd_scan_variational(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    kind = cfg.scan_block.get("family", "bernoulli")
    step = float(cfg.scan_block.get("step", 0.05))
    if kind == "bernoulli":
        family = bernoulli_family(cfg.system.alphabet, step)
    elif kind == "markov":
        family = markov_family(cfg.system, step)
    else:
        raise ConfigError(f"scan.family {kind!r} must be bernoulli or markov")
    builder = ConfigModelBuilder(cfg)
    t0 = time.perf_counter()
    result = variational_scan(cfg.system, family, cfg.schedule, workers=workers,
                              model_builder=builder)
    payload = {
        "artifact": "soficlab",
        "version": __version__,
        "config_hash": cfg.config_hash,
        "scan": result.to_json_dict(),
    }
    _write_bytes(out_dir / "scan.json", report_json_bytes(payload))
    manifest = {
        "config_hash": cfg.config_hash,
        "timings_s": {"scan": time.perf_counter() - t0},
        "workers": workers,
    }
    _write_bytes(out_dir / "manifest_scan.json", report_json_bytes(manifest))
    sys.stdout.write(json.dumps({"gap": result.gap, "argmax": result.argmax_label},
                                sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# verification suite


CheckResult = Tuple[str, bool, str]


def _corrupt(space: LocalGSpace) -> LocalGSpace:
    """Break injectivity of the first generator table (fault fixture)."""
    gen, table = space.tables[0]
    broken = list(table)
    if space.n >= 2:
        broken[1] = broken[0]
    tables = ((gen, tuple(broken)),) + space.tables[1:]
    return LocalGSpace(space.group, space.n, space.weight, tables,
                       label=space.label + "+fault")


def _check_ball_product_suite(rng: random.Random, trials: int) -> CheckResult:
    from .groups import GroupModel, INT_LATTICE

    z = GroupModel(INT_LATTICE, dim=1)
    hyp_true = 0
    bad = 0
    cases = 0
    for _ in range(trials):
        r2 = rng.randint(3, 8)
        r1 = rng.randint(2, r2 - 1)
        r0 = rng.randint(1, r1 - 1)
        delta = rng.choice((0.05, 0.1, 0.2, 0.3))
        b0 = list(ball(z, r0))
        b2 = list(ball(z, r2))
        w0 = [g for g in b0 if rng.random() > delta / 2]
        w2 = [g for g in b2 if rng.random() > delta / 2]
        if identity(z) not in w0:
            w0.append(identity(z))
        if identity(z) not in w2:
            w2.append(identity(z))
        verdict = check_ball_product(
            z, r0, r1, r2, delta, weighted_set(w0, z), weighted_set(w2, z)
        )
        cases += 1
        if verdict.hypotheses_hold:
            hyp_true += 1
            if not verdict.conclusion_holds:
                bad += 1
    ok = bad == 0
    return ("ball_product", ok,
            f"{cases} instances, {hyp_true} with hypotheses, {bad} violations")


def _check_chain_inequality(rng: random.Random, trials: int) -> CheckResult:
    bad = 0
    for _ in range(trials):
        n = rng.randint(2, 10)
        pts = tuple((rng.random(), rng.random()) for _ in range(n))
        fam = FiniteMetricFamily(
            pts, lambda a, b: math.dist(a, b))
        eps = rng.uniform(0.05, 0.7)
        if cov_exact(fam, 2 * eps) <= span_exact(fam, eps) <= sep_exact(fam, eps) \
                <= cov_exact(fam, eps):
            continue
        bad += 1
    return ("chain_inequality", bad == 0, f"{trials} families, {bad} violations")


def _check_map_subset_mapavg(cfg: ExperimentConfig) -> CheckResult:
    from .groups import GroupModel, INT_LATTICE
    import itertools

    z = GroupModel(INT_LATTICE, dim=1)
    system = nearest_neighbor_sft(z, Alphabet(("0", "1")), [(1, 1)])
    space = cyclic_quotient(8)
    u = ball(z, 1)
    delta = float(cfg.spec_block.get("delta", 0.1))
    strict = MapSpaceSpec(u, delta, mode="strict", sft_mode="soft")
    avg = MapSpaceSpec(u, delta, mode="averaged", sft_mode="soft")
    bad = 0
    for labels in itertools.product(range(2), repeat=8):
        micro = Microstate(space, labels)
        if is_member(micro, strict, system) and not is_member(micro, avg, system):
            bad += 1
    return ("map_subset_mapavg", bad == 0, f"2^8 labelings, {bad} violations")


def _check_transport(rng: random.Random, trials: int) -> CheckResult:
    bad = 0
    for _ in range(trials):
        n = rng.randint(4, 24)
        m = rng.randint(2, 4)
        space = cyclic_quotient(n)
        labels = tuple(rng.randrange(m) for _ in range(n))
        probs = [rng.random() for _ in range(m)]
        s = sum(probs)
        probs = [p / s for p in probs]
        micro = Microstate(space, labels)
        moved = transport_to_target(micro, probs)
        quota = quantize_counts(probs, n)
        counts = empirical_counts(moved, (identity(space.group),))
        got = tuple(counts.get((sym,), 0) for sym in range(m))
        before = [0] * m
        for s_ in labels:
            before[s_] += 1
        relabels = round(rho_M_distance(micro, moved) * n)
        min_moves = sum(max(0, b - q) for b, q in zip(before, quota))
        if got != quota or relabels != min_moves:
            bad += 1
    return ("transport_exact", bad == 0, f"{trials} trials, {bad} violations")


def _check_local_mp(cfg: ExperimentConfig, rng: random.Random,
                    inject_fault: bool) -> CheckResult:
    space = build_model(cfg)
    if inject_fault:
        space = _corrupt(space)
    bad = 0
    checked = 0
    for gen, _ in space.tables:
        for _ in range(5):
            k = rng.randint(1, space.n)
            pts = rng.sample(range(space.n), k)
            try:
                ok = check_local_mp(space, gen, pts)
            except ValueError:
                continue
            checked += 1
            if not ok:
                bad += 1
    return ("local_measure_preservation", bad == 0,
            f"{checked} (g, K) pairs, {bad} violations")


def _check_relabel_invariance(cfg: ExperimentConfig) -> CheckResult:
    sched = Schedule(
        sizes=cfg.schedule.sizes[:1],
        u_radii=cfg.schedule.u_radii[:1],
        deltas=cfg.schedule.deltas[:1],
        epsilons=cfg.schedule.epsilons[:1],
    )
    m = len(cfg.system.alphabet)
    perm = list(range(m))
    perm[0], perm[-1] = perm[-1], perm[0]
    builder = ConfigModelBuilder(cfg)
    rep1 = h_top_estimate(cfg.system, sched, model_builder=builder)
    rep2 = h_top_estimate(relabel_system(cfg.system, perm), sched, model_builder=builder)
    b1 = report_json_bytes(rep1.to_json_dict())
    b2 = report_json_bytes(rep2.to_json_dict())
    return ("relabel_invariance", b1 == b2,
            "reports identical" if b1 == b2 else "reports differ")


def _check_equidistribution(cfg: ExperimentConfig, rng: random.Random) -> CheckResult:
    space = build_model(cfg)
    u = ball(cfg.group, cfg.schedule.u_radii[0])
    delta = cfg.schedule.deltas[0]
    spec = MapSpaceSpec(u, delta, mode="strict", sft_mode="soft")
    window = cfg.schedule.window or (identity(cfg.group),)
    try:
        res = equidistribution_check(space, cfg.system, spec, window,
                                     sample_count=20, seed=rng.randint(0, 2 ** 31))
    except ValueError as exc:
        return ("equidistribution", False, str(exc))
    bound = delta + (1 - res.sofic_quality) + 0.02
    ok = res.max_tv <= bound + 1e-12
    return ("equidistribution", ok,
            f"max TV {res.max_tv:.4f} vs bound {bound:.4f} ({res.sampler})")


def _check_strict_count_oracle(cfg: ExperimentConfig) -> CheckResult:
    if not cfg.system.is_nearest_neighbor():
        return ("strict_count_vs_transfer_matrix", True, "skipped (not a Z nn-SFT)")
    u = ball(cfg.group, cfg.schedule.u_radii[0])
    bad = 0
    sizes = [n for n in cfg.schedule.sizes if n <= 14] or [8]
    for n in sizes:
        space = cyclic_quotient(n)
        spec = MapSpaceSpec(u, cfg.schedule.deltas[0])
        got = count_microstates(space, spec, cfg.system).count
        want = transfer_matrix_count(cfg.system, n)
        if got != want:
            bad += 1
    return ("strict_count_vs_transfer_matrix", bad == 0,
            f"sizes {sizes}, {bad} mismatches")


def run_verification_suite(
    cfg: ExperimentConfig, *, inject_fault: bool = False, trials: int = 200
) -> List[CheckResult]:
    rng = random.Random(cfg.seed)
    checks: List[CheckResult] = []
    checks.append(_check_ball_product_suite(rng, trials))
    checks.append(_check_chain_inequality(rng, max(20, trials // 4)))
    checks.append(_check_map_subset_mapavg(cfg))
    checks.append(_check_transport(rng, max(50, trials // 2)))
    checks.append(_check_local_mp(cfg, rng, inject_fault))
    checks.append(_check_relabel_invariance(cfg))
    checks.append(_check_equidistribution(cfg, rng))
    checks.append(_check_strict_count_oracle(cfg))
    return checks


def cmd_verify(cfg: ExperimentConfig, inject_fault: bool, trials: int) -> int:
    checks = run_verification_suite(cfg, inject_fault=inject_fault, trials=trials)
    width = max(len(name) for name, _, _ in checks)
    failures = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        sys.stdout.write(f"{status}  {name.ljust(width)}  {detail}\n")
        if not ok:
            failures += 1
    sys.stdout.write(f"{len(checks) - failures}/{len(checks)} checks passed\n")
    return 0 if failures == 0 else 1


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="soficlab",
        description="Desk-scale sofic entropy laboratory",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    p_build = sub.add_parser("build-model", help="model summary and sofic quality")
    add_common(p_build)

    p_est = sub.add_parser("estimate", help="entropy estimate reports")
    add_common(p_est)
    p_est.add_argument("--mode", choices=MODES, default="top")

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    add_common(p_ver)
    p_ver.add_argument("--trials", type=int, default=200)
    p_ver.add_argument("--inject-fault", action="store_true",
                       help="corrupt the model action table (expected to fail)")

    p_scan = sub.add_parser("scan-variational", help="measure-family scan")
    add_common(p_scan)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out_dir = args.out if args.out is not None else cfg.output_dir
        workers = _workers(args)
        if args.command == "build-model":
            return cmd_build_model(cfg, out_dir)
        if args.command == "estimate":
            return cmd_estimate(cfg, out_dir, args.mode, workers)
        if args.command == "verify":
            return cmd_verify(cfg, args.inject_fault, args.trials)
        if args.command == "scan-variational":
            return cmd_scan_variational(cfg, out_dir, workers)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
