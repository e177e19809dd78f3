"""Two-ball generators, exact-recovery thresholds, sweeps, and lemma oracles.

The model: two clusters inside disjoint balls of radius D whose centers sit a
distance Delta apart.  Closed-form separation thresholds guarantee that the
reference split is the unique profiled optimum; adversarial point-mass layouts
show the thresholds' scaling in the balance coefficient is not improvable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Benchmark, Instance
from .losses import LossSpec
from .partitions import Partition, misclassification_rate
from .solvers import (brute_force_opt, contiguous_two_split_costs,
                      iter_partitions, profile_partition)

LAYOUTS = ("collinear-1d", "pointmass-adversarial", "uniform-in-ball")


@dataclass(frozen=True)
class TwoBallConfig:
    """Sizes, radius, separation, and point layout of a two-ball instance."""

    n1: int
    n2: int
    D: float
    Delta: float
    layout: str = "collinear-1d"
    dim: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("cluster sizes must be positive")
        if self.D <= 0 or self.Delta <= 0:
            raise ValueError("radius and separation must be positive")
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}")
        if self.layout == "pointmass-adversarial" and self.n2 % 2:
            raise ValueError("point-mass layout needs an even heavy cluster")
        if self.layout != "uniform-in-ball" and self.dim != 1:
            raise ValueError("1-d layouts require dim=1")

    @property
    def ratio(self):
        return self.Delta / self.D

    @property
    def balance(self):
        return min(self.n1, self.n2) / (self.n1 + self.n2)


@dataclass(frozen=True)
class PhaseCell:
    ratio: float
    balance: float
    loss_kind: str
    recovered: bool
    sufficient_kmeans: bool
    sufficient_kmedian: bool
    margin_of_victory: float


@dataclass(frozen=True)
class RecoveryResult:
    recovered: bool
    opt_partition: Partition
    opt_value: float
    margin_of_victory: float


@dataclass(frozen=True)
class MergePenaltyCheck:
    lhs: float
    rhs: float
    gamma: float
    holds: bool


@dataclass(frozen=True)
class MixingCheck:
    psi: float
    lower: float
    holds: bool


def generate_two_ball(cfg: TwoBallConfig):
    """Materialize a two-ball instance with its reference labels and anchors.

    collinear-1d: evenly spread points filling each interval [c - D, c + D];
    pointmass-adversarial: n1 points at 0, two masses of n2/2 at Delta -+ D;
    uniform-in-ball: rejection-sampled points inside d-dimensional balls whose
    centers are a seeded random direction apart.
    """
    n = cfg.n1 + cfg.n2
    labels = np.repeat([1, 2], [cfg.n1, cfg.n2])
    if cfg.layout == "collinear-1d":
        anchors = np.array([[0.0], [cfg.Delta]])
        points = np.concatenate([_even_fill(0.0, cfg.D, cfg.n1),
                                 _even_fill(cfg.Delta, cfg.D, cfg.n2)])[:, None]
    elif cfg.layout == "pointmass-adversarial":
        anchors = np.array([[0.0], [cfg.Delta]])
        half = cfg.n2 // 2
        points = np.concatenate([np.zeros(cfg.n1),
                                 np.full(half, cfg.Delta - cfg.D),
                                 np.full(half, cfg.Delta + cfg.D)])[:, None]
    else:
        rng = np.random.default_rng(cfg.seed)
        direction = rng.standard_normal(cfg.dim)
        direction /= np.linalg.norm(direction)
        anchors = np.vstack([np.zeros(cfg.dim), cfg.Delta * direction])
        points = np.vstack([
            anchors[0] + _sample_ball(rng, cfg.n1, cfg.dim, cfg.D),
            anchors[1] + _sample_ball(rng, cfg.n2, cfg.dim, cfg.D),
        ])
    bench = Benchmark(partition=Partition(labels, 2), anchors=anchors)
    return Instance(points=points, benchmark=bench)


def _even_fill(center, D, count):
    if count == 1:
        return np.array([center])
    return np.linspace(center - D, center + D, count)


def _sample_ball(rng, count, dim, radius):
    out = np.empty((count, dim))
    got = 0
    while got < count:
        cand = rng.uniform(-radius, radius, size=(2 * (count - got) + 8, dim))
        keep = cand[np.linalg.norm(cand, axis=1) <= radius]
        take = min(keep.shape[0], count - got)
        out[got:got + take] = keep[:take]
        got += take
    return out


def threshold_kmeans(c_b):
    """Separation ratio above which squared loss recovers the reference split."""
    _check_balance(c_b)
    return 2.0 + 2.0 / math.sqrt(c_b)


def threshold_kmedian_1d(c_b):
    """Separation ratio above which collinear linear loss recovers the split."""
    _check_balance(c_b)
    return 2.0 + 1.0 / c_b


def _check_balance(c_b):
    if not 0 < c_b <= 0.5:
        raise ValueError("balance coefficient must lie in (0, 1/2]")


def exact_recovery_check(inst: Instance, loss: LossSpec, solver="dp"):
    """Does the exact profiled optimum equal the reference split, uniquely?

    ``margin_of_victory`` is the value of the best partition different from
    the reference (up to label swap) minus the optimum; recovery demands the
    reference to win strictly.  The 1-d solver scores every contiguous split
    of the sorted data (profiled optima are contiguous there); the brute
    solver scores every partition.
    """
    bench = inst.benchmark
    if bench is None:
        raise ValueError("recovery check requires a benchmarked instance")
    if bench.k != 2:
        raise ValueError("recovery check supports two clusters")
    if solver == "dp":
        return _recovery_dp_1d(inst, loss)
    if solver == "brute":
        return _recovery_brute(inst, loss)
    raise ValueError("solver must be 'dp' or 'brute'")


def _recovery_dp_1d(inst: Instance, loss: LossSpec):
    if inst.dim != 1:
        raise ValueError("dp recovery check requires 1-d data")
    x = inst.points[:, 0]
    order = np.argsort(x, kind="stable")
    costs = contiguous_two_split_costs(x[order], loss)
    best_t = int(np.argmin(costs))
    opt_value = float(costs[best_t])
    labels_sorted = np.where(np.arange(inst.n) <= best_t, 1, 2)
    labels = np.empty(inst.n, dtype=np.int64)
    labels[order] = labels_sorted
    opt_part = Partition(labels, 2)
    star_sorted = inst.benchmark.partition.labels[order]
    star_t = _contiguous_split_index(star_sorted)
    if star_t is None:
        # reference split is not an interval split of the line; it cannot be
        # the profiled optimum, and every split competes against it
        margin = float(costs.min()) - opt_value
        return RecoveryResult(False, opt_part, opt_value, margin)
    others = np.delete(costs, star_t)
    margin = float(others.min()) - opt_value if others.size else math.inf
    rate, _ = misclassification_rate(opt_part, inst.benchmark.partition)
    recovered = rate == 0.0 and margin > 0
    return RecoveryResult(recovered, opt_part, opt_value, margin)


def _contiguous_split_index(star_sorted):
    """Split position if sorted reference labels form two runs, else None."""
    changes = np.flatnonzero(np.diff(star_sorted) != 0)
    if changes.size != 1:
        return None
    return int(changes[0])


def _recovery_brute(inst: Instance, loss: LossSpec):
    pts = inst.points
    star = inst.benchmark.partition
    best_val, best_part = math.inf, None
    best_other = math.inf
    for labels in iter_partitions(inst.n, 2):
        _, value = profile_partition(pts, labels, 2, loss)
        part = Partition(labels, 2)
        rate, _ = misclassification_rate(part, star)
        if value < best_val:
            best_val, best_part = value, part
        if rate > 0 and value < best_other:
            best_other = value
    rate, _ = misclassification_rate(best_part, star)
    margin = best_other - best_val
    recovered = rate == 0.0 and margin > 0
    return RecoveryResult(recovered, best_part, float(best_val), float(margin))


def phase_sweep(ratios, balances, losses, layout="collinear-1d", n=40,
                solver="dp"):
    """Scan the (ratio, balance) grid with exact recovery checks.

    Returns (cells, violations): a violation is any cell whose ratio clears
    its loss's sufficient threshold yet fails recovery; there must be none.
    Realized balances use integer cluster sizes n1 = round(c_b * n).
    """
    cells, violations = [], []
    for loss in losses:
        for c_b in balances:
            n1 = int(round(c_b * n))
            n2 = n - n1
            if n1 < 1 or n2 < n1:
                continue
            if layout == "pointmass-adversarial" and n2 % 2:
                continue
            realized = n1 / n
            for ratio in ratios:
                cfg = TwoBallConfig(n1=n1, n2=n2, D=1.0, Delta=float(ratio),
                                    layout=layout)
                inst = generate_two_ball(cfg)
                result = exact_recovery_check(inst, loss, solver=solver)
                cell = PhaseCell(
                    ratio=float(ratio), balance=realized, loss_kind=loss.kind,
                    recovered=result.recovered,
                    sufficient_kmeans=float(ratio) > threshold_kmeans(realized),
                    sufficient_kmedian=float(ratio) > threshold_kmedian_1d(realized),
                    margin_of_victory=result.margin_of_victory)
                cells.append(cell)
                sufficient = (cell.sufficient_kmeans if loss.kind == "squared"
                              else cell.sufficient_kmedian)
                if sufficient and not cell.recovered:
                    violations.append(cell)
    return cells, violations


def random_separable_instance(rng, loss: LossSpec, n_range=(5, 9),
                              ratio_range=(6.0, 12.0), dims=(1, 2, 3)):
    """Random two-ball instance re-anchored at loss-derived prototypes.

    Rejection-samples until the re-anchored margin is positive, which strong
    separation makes near-certain per draw.
    """
    from .solvers import derive_benchmark

    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        n1 = int(rng.integers(2, n - 1))
        ratio = float(rng.uniform(*ratio_range))
        cfg = TwoBallConfig(n1=n1, n2=n - n1, D=1.0, Delta=ratio,
                            layout="uniform-in-ball",
                            dim=int(rng.choice(dims)),
                            seed=int(rng.integers(0, 2 ** 31)))
        raw = generate_two_ball(cfg)
        bench = derive_benchmark(raw.points, raw.benchmark.partition, loss)
        inst = Instance(points=raw.points, benchmark=bench)
        from .geometry import summarize_geometry
        if summarize_geometry(inst).gamma > 0:
            return inst


def merge_penalty_oracle(A, B, u1, u2, D):
    """Exact check that merging interval-separated 1-d sets costs at least the
    gap times the smaller count:
    phi(A u B) >= phi(A) + phi(B) + gamma * min(|A|, |B|)."""
    A = np.sort(np.asarray(A, dtype=float))
    B = np.sort(np.asarray(B, dtype=float))
    gamma = (u2 - u1) - 2.0 * D
    if gamma <= 0:
        raise ValueError("intervals must be separated: u2 - u1 - 2D > 0")
    if A.size and (A.min() < u1 - D or A.max() > u1 + D):
        raise ValueError("A must lie inside [u1 - D, u1 + D]")
    if B.size and (B.min() < u2 - D or B.max() > u2 + D):
        raise ValueError("B must lie inside [u2 - D, u2 + D]")
    lhs = _abs_deviation_cost(np.concatenate([A, B]))
    rhs = _abs_deviation_cost(A) + _abs_deviation_cost(B) + gamma * min(A.size, B.size)
    return MergePenaltyCheck(lhs=lhs, rhs=rhs, gamma=gamma,
                             holds=bool(lhs >= rhs - 1e-9))


def _abs_deviation_cost(values):
    if values.size == 0:
        return 0.0
    srt = np.sort(values)
    med = srt[(srt.size - 1) // 2]
    return float(np.abs(srt - med).sum())


def mixing_coefficient_check(n1, n2, m1, m2):
    """Exact check of the cross-ball mixing coefficient lower bound:
    Psi(m1, m2) >= (n1 / n) * (m1 + m2), zero-numerator terms dropping out."""
    if n1 > n2:
        raise ValueError("requires n1 <= n2")
    if not (0 <= m1 <= n1 and 0 <= m2 <= n2):
        raise ValueError("misclassification counts out of range")
    if m1 + m2 > (n1 + n2) / 2:
        raise ValueError("requires m1 + m2 <= n/2")
    psi = 0.0
    if (n1 - m1) * m2 > 0:
        psi += (n1 - m1) * m2 / (n1 - m1 + m2)
    if (n2 - m2) * m1 > 0:
        psi += (n2 - m2) * m1 / (n2 - m2 + m1)
    lower = n1 / (n1 + n2) * (m1 + m2)
    return MixingCheck(psi=psi, lower=lower, holds=bool(psi >= lower - 1e-12))
