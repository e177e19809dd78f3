"""Benchmark geometry: radius, separation, margin, balance, and core/belt split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .partitions import Partition


@dataclass(frozen=True)
class Benchmark:
    """A reference partition together with one anchor point per cluster."""

    partition: Partition
    anchors: np.ndarray

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        if anchors.shape[0] != self.partition.k:
            raise ValueError("one anchor per cluster required")
        if not np.all(np.isfinite(anchors)):
            raise ValueError("anchors must be finite")
        if self.partition.has_empty:
            raise ValueError("benchmark clusters must all be nonempty")
        anchors.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)

    @property
    def k(self):
        return self.partition.k


@dataclass(frozen=True)
class Instance:
    """n points in d-dimensional Euclidean space, optionally with a benchmark."""

    points: np.ndarray
    benchmark: Benchmark | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must form a nonempty n x d matrix")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.benchmark is not None:
            if self.benchmark.partition.n != pts.shape[0]:
                raise ValueError("benchmark labels must cover every point")
            if self.benchmark.anchors.shape[1] != pts.shape[1]:
                raise ValueError("anchor dimension must match the data")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class GeometrySummary:
    """(d_eff, delta0, gamma, balance) of a benchmark configuration.

    ``gamma = delta0 - 2 * d_eff`` holds exactly as computed; ``balance`` is
    the smallest cluster proportion.
    """

    d_eff: float
    delta0: float
    gamma: float
    balance: float


@dataclass(frozen=True)
class MarginCheck:
    separable: bool
    holds: bool
    worst_slack: float
    gamma: float


@dataclass(frozen=True)
class CoreBelt:
    depth_s: float
    core_indices: np.ndarray
    belt_indices: np.ndarray


def _anchor_distances(inst: Instance):
    """(per-point distance to own anchor, full point-to-anchor matrix)."""
    bench = _require_benchmark(inst)
    dists = cdist(inst.points, bench.anchors)
    own = dists[np.arange(inst.n), bench.partition.labels - 1]
    return own, dists


def _require_benchmark(inst: Instance):
    if inst.benchmark is None:
        raise ValueError("operation requires an instance with a benchmark")
    return inst.benchmark


def summarize_geometry(inst: Instance):
    """Effective radius, anchor separation, margin, and balance of the benchmark."""
    bench = _require_benchmark(inst)
    if bench.k < 2:
        raise ValueError("anchor separation needs at least two clusters")
    own, _ = _anchor_distances(inst)
    d_eff = float(own.max())
    pair = cdist(bench.anchors, bench.anchors)
    delta0 = float(pair[np.triu_indices(bench.k, k=1)].min())
    gamma = delta0 - 2.0 * d_eff
    balance = float(bench.partition.cluster_sizes.min()) / inst.n
    return GeometrySummary(d_eff=d_eff, delta0=delta0, gamma=gamma, balance=balance)


def benchmark_margin_check(inst: Instance, atol=1e-12):
    """Verify d(x_i, wrong anchor) >= d(x_i, own anchor) + gamma for all points.

    The inequality is a consequence of the definitions, so on any valid
    benchmark the worst slack is nonnegative up to rounding; a materially
    negative slack flags an inconsistent user-supplied benchmark.  A
    nonpositive margin is reported as inseparable, not as an error.
    """
    geom = summarize_geometry(inst)
    own, dists = _anchor_distances(inst)
    bench = inst.benchmark
    masked = dists.copy()
    masked[np.arange(inst.n), bench.partition.labels - 1] = np.inf
    nearest_other = masked.min(axis=1)
    worst = float((nearest_other - own - geom.gamma).min())
    separable = geom.gamma > 0
    return MarginCheck(separable=separable, holds=bool(separable and worst >= -atol),
                       worst_slack=worst, gamma=geom.gamma)


def core_belt(inst: Instance, s):
    """Split indices into the depth-s core (d <= d_eff - s) and the boundary belt."""
    s = float(s)
    if s < 0:
        raise ValueError("depth s must be nonnegative")
    geom = summarize_geometry(inst)
    if s > geom.d_eff:
        raise ValueError(f"depth s={s} exceeds the effective radius {geom.d_eff}")
    own, _ = _anchor_distances(inst)
    in_core = own <= geom.d_eff - s
    return CoreBelt(depth_s=s,
                    core_indices=np.flatnonzero(in_core),
                    belt_indices=np.flatnonzero(~in_core))


def enhanced_margin_check(inst: Instance, s, atol=1e-12):
    """Check the depth-boosted margin: core points satisfy
    d(x_i, wrong anchor) >= d(x_i, own anchor) + gamma + 2s."""
    geom = summarize_geometry(inst)
    cb = core_belt(inst, s)
    if cb.core_indices.size == 0:
        return True
    own, dists = _anchor_distances(inst)
    bench = inst.benchmark
    masked = dists.copy()
    masked[np.arange(inst.n), bench.partition.labels - 1] = np.inf
    gap = masked.min(axis=1) - own
    required = geom.gamma + 2.0 * s
    return bool(np.all(gap[cb.core_indices] >= required - atol))
