"""Command-line pipeline: ingestion, certification, diagnostics, sweeps, oracles.

Commands produce machine-readable reports (schema ``cluster-certify/1``);
non-finite numbers are encoded as the strings "inf", "-inf", "nan".  Exit
codes: 0 success, 2 precondition or usage error, 3 a checked inequality was
violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import certificates as cert
from . import phase as phase_mod
from . import tracking as tracking_mod
from .geometry import Benchmark, Instance, summarize_geometry
from .losses import LossSpec
from .partitions import Partition, hamming_distance, misclassification_rate
from .solvers import (LloydConfig, brute_force_opt, derive_benchmark,
                      displacement, exact_1d_dp, gaps, lloyd)

SCHEMA_VERSION = "cluster-certify/1"
EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_VIOLATION = 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None
    loss: str
    tau: float | None
    weights: str | None
    k: int | None
    restarts: int
    seed: int
    alpha: float
    radius_mode: str
    out: str | None
    labels_out: str | None
    assert_on: bool

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("--restarts must be at least 1")
        if self.k is not None and self.k < 1:
            raise ValueError("--k must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("--alpha must lie in (0, 1)")
        if self.loss == "huber" and (self.tau is None or self.tau <= 0):
            raise ValueError("--loss huber requires --tau > 0")


# ---------------------------------------------------------------------------
# JSON encoding with explicit non-finite handling
# ---------------------------------------------------------------------------

def sanitize(obj):
    """Recursively convert to JSON-safe values; non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def desanitize(obj):
    """Inverse of ``sanitize``: restore non-finite floats from their strings."""
    if isinstance(obj, dict):
        return {k: desanitize(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [desanitize(v) for v in obj]
    if obj == "inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    if obj == "nan":
        return math.nan
    return obj


def write_report(report, out_path):
    text = json.dumps(sanitize(report), indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def ingest_csv(path, loss: LossSpec | None = None):
    """Parse a header CSV with coordinate columns x1..xd and an optional
    1-based ``label`` column into an Instance.

    With labels present, anchors come from a ``<stem>.anchors.json`` sidecar
    when one exists, otherwise they are derived for the given loss (centroids,
    1-d medians, or in-cluster medoids).
    """
    path = Path(path)
    if not path.exists():
        raise ValueError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    coord_cols = [i for i, h in enumerate(header) if h.startswith("x")]
    if not coord_cols:
        raise ValueError(f"{path}: no coordinate columns x1..xd in header")
    label_col = header.index("label") if "label" in header else None
    points, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}: row {lineno} has {len(row)} fields, "
                             f"expected {len(header)}")
        try:
            points.append([float(row[i]) for i in coord_cols])
        except ValueError:
            raise ValueError(f"{path}: row {lineno} has a non-numeric coordinate")
        if label_col is not None:
            try:
                labels.append(int(row[label_col]))
            except ValueError:
                raise ValueError(f"{path}: row {lineno} has a non-integer label")
    if not points:
        raise ValueError(f"{path}: no data rows")
    pts = np.asarray(points, dtype=float)
    if label_col is None:
        return Instance(points=pts)
    lab = np.asarray(labels, dtype=np.int64)
    partition = Partition(lab, int(lab.max()))
    sidecar = path.with_suffix(".anchors.json")
    if sidecar.exists():
        payload = json.loads(sidecar.read_text())
        anchors = np.asarray(payload["anchors"] if isinstance(payload, dict)
                             else payload, dtype=float)
        bench = Benchmark(partition=partition, anchors=anchors)
    else:
        bench = derive_benchmark(pts, partition, loss or LossSpec.squared())
    return Instance(points=pts, benchmark=bench)


def _loss_from_config(cfg: RunConfig):
    if cfg.loss == "huber":
        return LossSpec.huber(cfg.tau)
    return LossSpec(cfg.loss)


def _load_weights(path, n):
    values = [float(line) for line in Path(path).read_text().split()]
    if len(values) != n:
        raise ValueError(f"weights file has {len(values)} entries for n={n}")
    if any(w <= 0 for w in values):
        raise ValueError("weights must be positive")
    return values


def _write_labels(partition: Partition, path):
    Path(path).write_text("\n".join(str(l) for l in partition.labels) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _exact_opt_or_best_known(inst, k, loss, config):
    if inst.dim == 1 and loss.kind in ("squared", "linear"):
        return exact_1d_dp(inst.points, k, loss)
    if inst.n <= 12:
        return brute_force_opt(inst.points, k, loss)
    best = lloyd(inst.points, k, loss, config)
    return best


def cmd_certify(cfg: RunConfig):
    started = time.perf_counter()
    loss = _loss_from_config(cfg)
    inst = ingest_csv(cfg.input, loss)
    if inst.benchmark is None:
        raise ValueError("certify requires a label column (benchmark partition)")
    k = cfg.k or inst.benchmark.k
    if k != inst.benchmark.k:
        raise ValueError(f"--k {cfg.k} conflicts with benchmark k={inst.benchmark.k}")
    geom = summarize_geometry(inst)
    solver_cfg = LloydConfig(restarts=cfg.restarts, seed=cfg.seed)
    opt = _exact_opt_or_best_known(inst, k, loss, solver_cfg)
    candidate = lloyd(inst.points, k, loss, solver_cfg)
    gap = gaps(inst.points, candidate, inst.benchmark, loss, opt)
    disp = displacement(candidate.prototypes, inst.benchmark.anchors)
    global_cert = cert.global_bound(
        loss, gamma=geom.gamma, d_eff=geom.d_eff, eta=disp.eta,
        delta=gap.delta, delta_approx=gap.delta_approx,
        opt_value=gap.opt_value, n=inst.n)
    kappa = cert.condition_number(loss, max(geom.gamma, 0.0), geom.d_eff)
    p_measured, _ = misclassification_rate(candidate.partition,
                                           inst.benchmark.partition)
    core_sweep = []
    if geom.d_eff > 0:
        for s in np.linspace(0.0, 0.9 * geom.d_eff, 10):
            c = cert.local_core_bound(
                loss, gamma=geom.gamma, d_eff=geom.d_eff, eta=disp.eta,
                delta=gap.delta, delta_approx=gap.delta_approx,
                opt_value=gap.opt_value, n=inst.n, s=float(s))
            core_sweep.append({"s": float(s), "bound": c.bound_total,
                               "bound_capped": c.bound_total_capped,
                               "vacuous": c.vacuous,
                               "zero_error_certified": c.zero_error_certified})
    tube = _tube_across_restarts(inst, candidate, loss, geom, gap)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "certify",
        "config": asdict(cfg),
        "geometry": asdict(geom),
        "solve": _solve_summary(candidate),
        "opt": {"value": gap.opt_value, "kind": gap.opt_kind},
        "gaps": asdict(gap),
        "displacement": {"eta": disp.eta, "permutation": list(disp.permutation)},
        "condition_number": asdict(kappa),
        "certificate": _cert_summary(global_cert),
        "condition_number_form": cert.condition_number_bound(
            kappa, gap.delta, gap.delta_approx,
            global_cert.bound_displacement_term
            if not global_cert.vacuous else math.inf),
        "measured_p": p_measured,
        "core_sweep": core_sweep,
        "tube_across_restarts": tube,
    }
    if loss.kind == "squared":
        centroid_anchored = _anchors_are_centroids(inst)
        report["eta_control"] = {
            "c_qg": 1.0,
            "anchors_are_centroids": centroid_anchored,
            "bound": cert.eta_bound_kmeans(geom.d_eff, geom.balance,
                                           gap.delta, gap.delta_approx),
            "measured_eta": disp.eta,
        }
    if cfg.weights:
        weights = _load_weights(cfg.weights, inst.n)
        per_point = [LossSpec(loss.kind, tau=loss.tau, weight=w) for w in weights]
        het, envelope = cert.heterogeneous_bound(
            per_point, gamma=geom.gamma, d_eff=geom.d_eff, eta=disp.eta,
            delta=gap.delta, delta_approx=gap.delta_approx,
            opt_value=gap.opt_value, n=inst.n)
        report["heterogeneous"] = {"certificate": _cert_summary(het),
                                   "envelope": asdict(envelope)}
    violations = []
    if cfg.assert_on and opt.exact and not global_cert.vacuous:
        if p_measured > global_cert.bound_total + 1e-12:
            violations.append({"check": "global-bound", "p": p_measured,
                               "bound": global_cert.bound_total})
        violations.extend(v for v in tube["violations"])
    report["violations"] = violations
    report["timing"] = {"seconds": time.perf_counter() - started}
    if cfg.labels_out:
        _write_labels(candidate.partition, cfg.labels_out)
    write_report(report, cfg.out)
    return EXIT_VIOLATION if violations else EXIT_OK


def _anchors_are_centroids(inst, rtol=1e-9):
    bench = inst.benchmark
    for j in range(1, bench.k + 1):
        members = inst.points[bench.partition.indices_of(j)]
        centroid = members.mean(axis=0)
        scale = 1.0 + float(np.abs(members).max())
        if np.linalg.norm(centroid - bench.anchors[j - 1]) > rtol * scale:
            return False
    return True


def _tube_across_restarts(inst, candidate, loss, geom, gap):
    """Pairwise label distance among restart solutions vs the tube bound."""
    out = {"pairs": [], "violations": []}
    parts = candidate.restart_partitions
    protos = candidate.restart_prototypes
    objs = candidate.per_restart_objectives
    if not parts or len(parts) < 2:
        return out
    anchors = inst.benchmark.anchors
    etas = [displacement(p, anchors).eta for p in protos]
    deltas = [max(o / gap.opt_value - 1.0, 0.0) if gap.opt_value > 0 else
              (0.0 if o == 0.0 else math.inf) for o in objs]
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            bound = cert.hamming_tube_bound(
                loss, gamma=geom.gamma, d_eff=geom.d_eff,
                opt_value=gap.opt_value, n=inst.n,
                delta=max(deltas[i], deltas[j]),
                delta_approx=gap.delta_approx, eta1=etas[i], eta2=etas[j])
            measured = hamming_distance(Partition(parts[i], candidate.partition.k),
                                        Partition(parts[j], candidate.partition.k))
            entry = {"pair": [i, j], "measured": measured, "bound": bound}
            out["pairs"].append(entry)
            if gap.opt_kind == "exact-oracle" and math.isfinite(bound) \
                    and measured > bound + 1e-12:
                out["violations"].append({"check": "hamming-tube", **entry})
    return out


def cmd_diagnose(cfg: RunConfig):
    started = time.perf_counter()
    loss = _loss_from_config(cfg)
    inst = ingest_csv(cfg.input, loss)
    if cfg.k is None and inst.benchmark is None:
        raise ValueError("diagnose needs --k or a label column")
    k = cfg.k or inst.benchmark.k
    solve = lloyd(inst.points, k, loss,
                  LloydConfig(restarts=cfg.restarts, seed=cfg.seed))
    radius_mode = "max" if cfg.radius_mode == "max" else "quantile"
    main = cert.diagnose(inst.points, solve, loss, alpha=cfg.alpha,
                         radius_mode=radius_mode)
    sensitivity = {str(a): asdict(cert.diagnose(inst.points, solve, loss,
                                                alpha=a, radius_mode=radius_mode))
                   for a in (0.1, 0.2)}
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "diagnose",
        "config": asdict(cfg),
        "solve": _solve_summary(solve),
        "diagnostic": asdict(main),
        "alpha_sensitivity": sensitivity,
    }
    if inst.benchmark is not None and inst.benchmark.k == k:
        p, _ = misclassification_rate(solve.partition, inst.benchmark.partition)
        report["measured_p"] = p
    report["timing"] = {"seconds": time.perf_counter() - started}
    if cfg.labels_out:
        _write_labels(solve.partition, cfg.labels_out)
    write_report(report, cfg.out)
    return EXIT_OK


def default_phase_grid():
    ratios = [round(2.1 + 0.1 * i, 10) for i in range(80)]
    balances = [round(0.1 + 0.025 * i, 10) for i in range(17)]
    return ratios, balances


def cmd_phase(cfg: RunConfig, layout="collinear-1d", n=40):
    started = time.perf_counter()
    losses = ([LossSpec(cfg.loss)] if cfg.loss in ("squared", "linear")
              else [LossSpec.squared(), LossSpec.linear()])
    ratios, balances = default_phase_grid()
    cells, violations = phase_mod.phase_sweep(ratios, balances, losses,
                                              layout=layout, n=n)
    out_path = cfg.out or "phase_cells.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ratio", "c_b", "loss", "recovered",
                         "sufficient_kmeans", "sufficient_kmedian",
                         "margin_of_victory"])
        for c in cells:
            writer.writerow([c.ratio, c.balance, c.loss_kind, int(c.recovered),
                             int(c.sufficient_kmeans), int(c.sufficient_kmedian),
                             c.margin_of_victory])
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "phase",
        "config": asdict(cfg),
        "cells": len(cells),
        "recovered": sum(c.recovered for c in cells),
        "sufficient_cells": sum(
            (c.sufficient_kmeans if c.loss_kind == "squared"
             else c.sufficient_kmedian) for c in cells),
        "violations": len(violations),
        "csv": str(out_path),
        "timing": {"seconds": time.perf_counter() - started},
    }
    print(json.dumps(sanitize(summary), indent=2, sort_keys=True))
    if cfg.assert_on and violations:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_track(cfg: RunConfig):
    started = time.perf_counter()
    if cfg.input == "builtin:slow-drift":
        scenario = tracking_mod.slow_drift_scenario(restarts=cfg.restarts)
    elif cfg.input == "builtin:spike":
        scenario = tracking_mod.drift_spike_scenario(restarts=cfg.restarts)
    else:
        scenario = tracking_mod.load_scenario(cfg.input)
    logs = tracking_mod.run_tracking(scenario)
    out_path = cfg.out or "tracking_steps.csv"
    fields = list(asdict(logs[0]).keys())
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for log in logs:
            writer.writerow([asdict(log)[f] for f in fields])
    failures = [log.t for log in logs if not log.vacuous and not log.within_bound]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "track",
        "config": asdict(cfg),
        "steps": len(logs),
        "vacuous_steps": sum(log.vacuous for log in logs),
        "bound_failures": failures,
        "csv": str(out_path),
        "timing": {"seconds": time.perf_counter() - started},
    }
    print(json.dumps(sanitize(summary), indent=2, sort_keys=True))
    if cfg.assert_on and failures:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_oracle(cfg: RunConfig):
    """Desk-scale verification suite: enumerated bound soundness plus the
    closed-form lemma oracles, with pass/fail counts."""
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    checks = []

    def run_instances(count, loss, check_fn, name):
        summary = {"name": name, "instances": 0, "checked": 0, "violations": 0}
        for _ in range(count):
            inst = _random_separable_instance(rng, loss)
            result = check_fn(inst)
            summary["instances"] += 1
            summary["checked"] += result.checked
            summary["violations"] += len(result.violations)
        checks.append(summary)

    for loss in (LossSpec.squared(), LossSpec.linear()):
        run_instances(10, loss,
                      lambda inst, l=loss: cert.check_global_soundness(inst, l),
                      f"global-bound-{loss.kind}")
    run_instances(4, LossSpec.squared(),
                  lambda inst: cert.check_tube_soundness(inst, LossSpec.squared()),
                  "hamming-tube")
    run_instances(6, LossSpec.squared(),
                  lambda inst: cert.check_eta_control_kmeans(inst),
                  "eta-control-kmeans")

    merge = {"name": "merge-penalty", "checked": 0, "violations": 0}
    for _ in range(200):
        u1, gap = rng.uniform(-3, 3), rng.uniform(0.1, 4)
        D = rng.uniform(0.1, 2)
        u2 = u1 + 2 * D + gap
        A = rng.uniform(u1 - D, u1 + D, size=rng.integers(0, 7))
        B = rng.uniform(u2 - D, u2 + D, size=rng.integers(0, 7))
        res = phase_mod.merge_penalty_oracle(A, B, u1, u2, D)
        merge["checked"] += 1
        merge["violations"] += 0 if res.holds else 1
    checks.append(merge)

    mixing = {"name": "mixing-coefficient", "checked": 0, "violations": 0}
    for n1 in range(1, 13):
        for n2 in range(n1, 13):
            for m1 in range(n1 + 1):
                for m2 in range(n2 + 1):
                    if m1 + m2 > (n1 + n2) / 2:
                        continue
                    res = phase_mod.mixing_coefficient_check(n1, n2, m1, m2)
                    mixing["checked"] += 1
                    mixing["violations"] += 0 if res.holds else 1
    checks.append(mixing)

    total_violations = sum(c["violations"] for c in checks)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "oracle",
        "config": asdict(cfg),
        "checks": checks,
        "total_violations": total_violations,
        "timing": {"seconds": time.perf_counter() - started},
    }
    write_report(report, cfg.out)
    return EXIT_VIOLATION if total_violations else EXIT_OK


def _random_separable_instance(rng, loss):
    dims = (1,) if loss.kind == "linear" else (1, 2, 3)
    return phase_mod.random_separable_instance(rng, loss, dims=dims)


# ---------------------------------------------------------------------------
# report helpers and entry point
# ---------------------------------------------------------------------------

def _solve_summary(result):
    return {
        "objective": result.objective,
        "labels": [int(l) for l in result.partition.labels],
        "k": result.partition.k,
        "prototypes": result.prototypes.tolist(),
        "restarts_used": result.restarts_used,
        "per_restart_objectives": list(result.per_restart_objectives),
        "seed": result.seed,
        "note": result.note,
    }


def _cert_summary(c):
    return {
        "kappa": asdict(c.kappa),
        "delta": c.delta,
        "delta_approx": c.delta_approx,
        "eta": c.eta,
        "l_g": c.l_g,
        "opt_per_point": c.opt_per_point,
        "increment_effective": c.increment_effective,
        "bound_optimization_term": c.bound_optimization_term,
        "bound_displacement_term": c.bound_displacement_term,
        "bound_total": c.bound_total,
        "bound_total_capped": c.bound_total_capped,
        "vacuous": c.vacuous,
        "depth_s": c.depth_s,
        "zero_error_certified": c.zero_error_certified,
    }


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cluster-certify",
        description="Stability certificates for prototype clustering")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("certify", "exact-oracle certificates against a labeled benchmark"),
            ("diagnose", "data-driven certificate from a multi-start solve"),
            ("phase", "exact-recovery sweep over separation and balance"),
            ("track", "warm-started drift run with per-step certificates"),
            ("oracle", "desk-scale verification suite")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", help="input CSV (or scenario JSON for track)")
        p.add_argument("--loss", choices=["squared", "linear", "huber"],
                       default="squared")
        p.add_argument("--tau", type=float, default=None,
                       help="huber threshold")
        p.add_argument("--weights", default=None,
                       help="per-point weights file (one positive real per line)")
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--restarts", type=int, default=16)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--alpha", type=float, default=0.2,
                       help="diagnostic margin guard in (0,1)")
        p.add_argument("--radius", choices=["max", "q95"], default="max")
        p.add_argument("--out", default=None, help="report/CSV output path")
        p.add_argument("--labels-out", default=None,
                       help="write solution labels, one per line")
        p.add_argument("--assert", dest="assert_on", choices=["on", "off"],
                       default="on")
    return parser


def config_from_args(args):
    return RunConfig(command=args.command, input=args.input, loss=args.loss,
                     tau=args.tau, weights=args.weights, k=args.k,
                     restarts=args.restarts, seed=args.seed, alpha=args.alpha,
                     radius_mode="max" if args.radius == "max" else "q95",
                     out=args.out, labels_out=args.labels_out,
                     assert_on=args.assert_on == "on")


COMMANDS = {
    "certify": cmd_certify,
    "diagnose": cmd_diagnose,
    "phase": cmd_phase,
    "track": cmd_track,
    "oracle": cmd_oracle,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = config_from_args(args)
        if cfg.command in ("certify", "diagnose") and not cfg.input:
            raise ValueError(f"{cfg.command} requires --input")
        if cfg.command == "track" and not cfg.input:
            raise ValueError("track requires --input (path or builtin:slow-drift)")
        code = COMMANDS[cfg.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    elapsed = time.perf_counter() - started
    if code == EXIT_OK:
        print(f"done in {elapsed:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
