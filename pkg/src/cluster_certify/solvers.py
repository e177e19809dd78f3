"""Clustering objectives, best responses, solvers, optimality gaps, displacement.

Solvers come in two tiers: heuristics (multi-start Lloyd, PAM swap) and exact
oracles (1-d dynamic programming, full enumeration at desk scale).  The exact
tier is what certificates are anchored to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

from .geometry import Benchmark, Instance
from .losses import LossSpec, eval_loss
from .partitions import Partition

BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class LloydConfig:
    restarts: int = 8
    seed: int = 0
    max_iters: int = 200
    tol: float = 1e-12


@dataclass
class SolveResult:
    """A clustering solution plus provenance needed by downstream certificates."""

    partition: Partition
    prototypes: np.ndarray
    objective: float
    restarts_used: int
    per_restart_objectives: list
    seed: int
    exact: bool = False
    note: str = ""
    medoid_indices: np.ndarray | None = None
    restart_partitions: list = field(default_factory=list)
    restart_prototypes: list = field(default_factory=list)


@dataclass(frozen=True)
class GapReport:
    """Multiplicative gap of a candidate and of the benchmark over the optimum."""

    delta: float
    delta_approx: float
    opt_value: float
    opt_kind: str


@dataclass(frozen=True)
class Displacement:
    """Bottleneck distance between matched prototype tuples."""

    eta: float
    permutation: tuple


# ---------------------------------------------------------------------------
# objective and best responses
# ---------------------------------------------------------------------------

def _as_points(points):
    pts = np.asarray(points, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def objective(points, partition: Partition, prototypes, loss: LossSpec):
    """Sum of g(distance to assigned prototype), accumulated in index order."""
    pts = _as_points(points)
    protos = _as_points(prototypes)
    if protos.shape[1] != pts.shape[1]:
        raise ValueError("prototype dimension must match the data")
    if partition.n != pts.shape[0]:
        raise ValueError("partition size must match the data")
    assigned = protos[partition.labels - 1]
    dists = np.linalg.norm(pts - assigned, axis=1)
    return float(np.add.reduce(eval_loss(loss, dists)))


def best_response_partition(points, prototypes, loss: LossSpec = None, k=None):
    """Nearest-prototype assignment; ties go to the lowest prototype index.

    Optimal for any non-decreasing loss generator, so the loss argument only
    matters for API symmetry.
    """
    pts = _as_points(points)
    protos = _as_points(prototypes)
    dists = cdist(pts, protos)
    labels = np.argmin(dists, axis=1) + 1
    return Partition(labels, k or protos.shape[0])


def best_response_prototypes(points, partition: Partition, loss: LossSpec,
                             feasibility="free"):
    """Loss-minimizing prototype per cluster.

    Free prototypes: centroid (squared), median / geometric median (linear),
    IRLS center (huber).  Medoid feasibility: exhaustive best data point of
    the cluster, any loss.
    """
    pts = _as_points(points)
    if partition.has_empty:
        raise ValueError("cannot place a prototype for an empty cluster")
    protos = np.empty((partition.k, pts.shape[1]))
    for j in range(1, partition.k + 1):
        members = pts[partition.indices_of(j)]
        if feasibility == "medoid":
            protos[j - 1] = members[_best_medoid_of(members, loss)]
        else:
            protos[j - 1] = _fit_prototype(members, loss)
    return protos


def _best_medoid_of(members, loss):
    costs = eval_loss(loss, cdist(members, members)).sum(axis=0)
    return int(np.argmin(costs))


def _fit_prototype(members, loss: LossSpec):
    if loss.kind == "squared":
        return members.mean(axis=0)
    if loss.kind == "linear":
        if members.shape[1] == 1:
            return np.array([_lower_median(members[:, 0])])
        return geometric_median(members)
    if loss.kind == "huber":
        return _huber_center(members, loss.tau)
    raise ValueError("free prototypes are unsupported for tabulated losses; "
                     "use medoid feasibility")


def _lower_median(values):
    """Lower median: deterministic minimizer of the absolute-deviation sum."""
    srt = np.sort(values)
    return float(srt[(srt.size - 1) // 2])


def geometric_median(members, tol=1e-10, max_iters=10_000):
    """Weiszfeld iteration with the standard fixed-point adjustment when the
    iterate lands on a data point."""
    y = members.mean(axis=0)
    scale = 1.0 + float(np.abs(members).max())
    for _ in range(max_iters):
        diff = members - y
        dist = np.linalg.norm(diff, axis=1)
        coincident = dist < 1e-14 * scale
        m = int(coincident.sum())
        if m == members.shape[0]:
            return y
        w = 1.0 / dist[~coincident]
        t_point = (w[:, None] * members[~coincident]).sum(axis=0) / w.sum()
        if m == 0:
            y_new = t_point
        else:
            r_vec = (diff[~coincident] / dist[~coincident, None]).sum(axis=0)
            r_norm = np.linalg.norm(r_vec)
            if r_norm <= m:
                return y  # subgradient optimality at the data point
            lam = m / r_norm
            y_new = (1.0 - lam) * t_point + lam * y
        if np.linalg.norm(y_new - y) <= tol * (1.0 + np.linalg.norm(y)):
            return y_new
        y = y_new
    return y


def _huber_center(members, tau, tol=1e-12, max_iters=500):
    """Iteratively reweighted mean; monotone for the huber objective."""
    c = members.mean(axis=0)
    for _ in range(max_iters):
        r = np.linalg.norm(members - c, axis=1)
        w = np.where(r <= tau, 1.0, tau / np.maximum(r, 1e-300))
        c_new = (w[:, None] * members).sum(axis=0) / w.sum()
        if np.linalg.norm(c_new - c) <= tol * (1.0 + np.linalg.norm(c)):
            return c_new
        c = c_new
    return c


# ---------------------------------------------------------------------------
# Lloyd with multi-start seeding
# ---------------------------------------------------------------------------

def lloyd(points, k, loss: LossSpec, config: LloydConfig = LloydConfig()):
    """Best-of-R alternation of the two best responses, distance-weighted seeding.

    Deterministic for a fixed (seed, config); per-restart objectives, labels,
    and prototypes are retained for gap proxies and pairwise solution
    comparisons.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if k > n:
        raise ValueError(f"cannot place k={k} clusters on n={n} points")
    if config.restarts < 1:
        raise ValueError("at least one restart required")
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = None
    per_obj, per_labels, per_protos = [], [], []
    for r in range(config.restarts):
        rng = np.random.default_rng(children[r])
        init = _seed_prototypes(pts, k, rng)
        labels, protos, obj, _ = lloyd_single(pts, k, loss, init,
                                              max_iters=config.max_iters,
                                              tol=config.tol)
        per_obj.append(obj)
        per_labels.append(labels)
        per_protos.append(protos)
        if best is None or obj < best[0]:
            best = (obj, labels, protos)
    obj, labels, protos = best
    return SolveResult(partition=Partition(labels, k), prototypes=protos,
                       objective=obj, restarts_used=config.restarts,
                       per_restart_objectives=per_obj, seed=config.seed,
                       restart_partitions=per_labels, restart_prototypes=per_protos)


def lloyd_single(points, k, loss, init_prototypes, max_iters=200, tol=1e-12):
    """One Lloyd run from explicit prototypes; returns the objective trajectory."""
    pts = _as_points(points)
    protos = _as_points(init_prototypes).copy()
    prev = np.inf
    trajectory = []
    labels = None
    for _ in range(max_iters):
        labels = np.argmin(cdist(pts, protos), axis=1) + 1
        labels = _repair_empty(pts, labels, protos, k)
        part = Partition(labels, k)
        protos = best_response_prototypes(pts, part, loss)
        obj = objective(pts, part, protos, loss)
        trajectory.append(obj)
        if prev - obj < tol:
            break
        prev = obj
    return labels, protos, trajectory[-1], trajectory


def _repair_empty(pts, labels, protos, k):
    """Move the point with the largest current loss into each empty cluster."""
    for j in range(1, k + 1):
        if np.any(labels == j):
            continue
        dist_own = np.linalg.norm(pts - protos[labels - 1], axis=1)
        donors = np.flatnonzero(np.bincount(labels - 1, minlength=k)[labels - 1] > 1)
        idx = donors[np.argmax(dist_own[donors])]
        labels[idx] = j
    return labels


def _seed_prototypes(pts, k, rng):
    """Distance-weighted greedy seeding (squared-distance weights)."""
    n = pts.shape[0]
    chosen = [int(rng.integers(n))]
    for _ in range(1, k):
        d2 = np.min(cdist(pts, pts[chosen]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            chosen.append(int(rng.integers(n)))
        else:
            chosen.append(int(rng.choice(n, p=d2 / total)))
    return pts[chosen].copy()


# ---------------------------------------------------------------------------
# PAM-style k-medoids
# ---------------------------------------------------------------------------

def kmedoids_swap(points, k, loss: LossSpec, config: LloydConfig = LloydConfig()):
    """Greedy BUILD then repeated best single swap; prototypes are data points."""
    pts = _as_points(points)
    n = pts.shape[0]
    if k > n:
        raise ValueError(f"cannot place k={k} medoids on n={n} points")
    G = eval_loss(loss, cdist(pts, pts))
    medoids = [int(np.argmin(G.sum(axis=0)))]
    while len(medoids) < k:
        current = G[:, medoids].min(axis=1)
        gains = np.minimum(current[:, None], G).sum(axis=0)
        gains[medoids] = np.inf
        medoids.append(int(np.argmin(gains)))
    cost = G[:, medoids].min(axis=1).sum()
    improved = True
    while improved:
        improved = False
        best_swap, best_cost = None, cost
        others = [i for i in range(n) if i not in medoids]
        for mi, m in enumerate(medoids):
            for o in others:
                trial = medoids.copy()
                trial[mi] = o
                c = G[:, trial].min(axis=1).sum()
                if c < best_cost:
                    best_cost, best_swap = c, (mi, o)
        if best_swap is not None:
            medoids[best_swap[0]] = best_swap[1]
            cost = best_cost
            improved = True
    med = np.asarray(medoids)
    labels = np.argmin(G[:, med], axis=1) + 1
    part = Partition(labels, k)
    protos = pts[med]
    obj = objective(pts, part, protos, loss)
    return SolveResult(partition=part, prototypes=protos, objective=obj,
                       restarts_used=1, per_restart_objectives=[obj],
                       seed=config.seed, medoid_indices=med, note="pam")


# ---------------------------------------------------------------------------
# exact solvers
# ---------------------------------------------------------------------------

def _prefix_sums(x):
    s1 = np.concatenate(([0.0], np.cumsum(x)))
    s2 = np.concatenate(([0.0], np.cumsum(x * x)))
    return s1, s2


def _segment_cost_squared(s1, s2, i, j):
    m = j - i + 1
    s = s1[j + 1] - s1[i]
    return (s2[j + 1] - s2[i]) - s * s / m


def _segment_cost_linear(x, s1, i, j):
    mid = (i + j) // 2
    left = (mid - i + 1) * x[mid] - (s1[mid + 1] - s1[i])
    right = (s1[j + 1] - s1[mid + 1]) - (j - mid) * x[mid]
    return left + right


def exact_1d_dp(points, k, loss: LossSpec):
    """Exact 1-d clustering by dynamic programming over sorted, contiguous runs.

    Contiguity of an optimal solution in sorted order holds for non-decreasing
    losses of distance with free prototypes; squared and linear losses are
    supported, O(k n^2).
    """
    pts = _as_points(points)
    if pts.shape[1] != 1:
        raise ValueError("exact 1-d solver requires one-dimensional data")
    if loss.kind not in ("squared", "linear"):
        raise ValueError("exact 1-d solver supports squared and linear losses")
    n = pts.shape[0]
    if k > n:
        raise ValueError(f"cannot place k={k} clusters on n={n} points")
    order = np.argsort(pts[:, 0], kind="stable")
    x = pts[order, 0]
    s1, s2 = _prefix_sums(x)

    def seg(i, j):
        if loss.kind == "squared":
            return _segment_cost_squared(s1, s2, i, j)
        return _segment_cost_linear(x, s1, i, j)

    NEG = -1
    dp = np.full((k + 1, n), np.inf)
    cut = np.full((k + 1, n), NEG, dtype=int)
    for j in range(n):
        dp[1, j] = seg(0, j)
    for m in range(2, k + 1):
        for j in range(m - 1, n):
            best, arg = np.inf, NEG
            for i in range(m - 1, j + 1):
                c = dp[m - 1, i - 1] + seg(i, j)
                if c < best:
                    best, arg = c, i
            dp[m, j] = best
            cut[m, j] = arg
    labels_sorted = np.empty(n, dtype=np.int64)
    j = n - 1
    for m in range(k, 0, -1):
        i = 0 if m == 1 else cut[m, j]
        labels_sorted[i:j + 1] = m
        j = i - 1
    labels = np.empty(n, dtype=np.int64)
    labels[order] = labels_sorted
    part = Partition(labels, k)
    protos = best_response_prototypes(pts, part, loss)
    obj = objective(pts, part, protos, loss)
    return SolveResult(partition=part, prototypes=protos, objective=obj,
                       restarts_used=1, per_restart_objectives=[obj], seed=0,
                       exact=True, note="exact-oracle")


def contiguous_two_split_costs(x_sorted, loss: LossSpec):
    """Profiled cost of every contiguous two-cluster split of sorted 1-d data.

    Entry t is the cost of {x[0..t]} vs {x[t+1..]}, t = 0..n-2.
    """
    x = np.asarray(x_sorted, dtype=float)
    n = x.size
    s1, s2 = _prefix_sums(x)
    if loss.kind == "squared":
        left = np.array([_segment_cost_squared(s1, s2, 0, t) for t in range(n - 1)])
        right = np.array([_segment_cost_squared(s1, s2, t + 1, n - 1) for t in range(n - 1)])
    elif loss.kind == "linear":
        left = np.array([_segment_cost_linear(x, s1, 0, t) for t in range(n - 1)])
        right = np.array([_segment_cost_linear(x, s1, t + 1, n - 1) for t in range(n - 1)])
    else:
        raise ValueError("split costs support squared and linear losses")
    return loss.weight * (left + right)


def iter_partitions(n, k, exactly_k=False):
    """Yield 1-based label vectors of set partitions of n items into <= k blocks.

    Restricted-growth enumeration: block labels appear in first-use order, so
    each set partition is produced exactly once.
    """
    labels = np.ones(n, dtype=np.int64)

    def rec(i, used):
        if i == n:
            if not exactly_k or used == k:
                yield labels.copy()
            return
        for lab in range(1, min(used + 1, k) + 1):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab))

    yield from rec(1, 1) if n >= 1 else iter(())


def profile_partition(points, labels, k, loss: LossSpec):
    """Profiled value min_theta of a partition, free prototypes.

    Blocks may number fewer than k; prototype slots for empty blocks are padded
    with the first prototype (no objective contribution).
    """
    pts = _as_points(points)
    protos = np.empty((k, pts.shape[1]))
    filled = np.zeros(k, dtype=bool)
    value = 0.0
    for j in range(1, k + 1):
        members = pts[labels == j]
        if members.shape[0] == 0:
            continue
        p = _fit_prototype(members, loss)
        protos[j - 1] = p
        filled[j - 1] = True
        value += float(np.add.reduce(eval_loss(loss, np.linalg.norm(members - p, axis=1))))
    if not np.any(filled):
        raise ValueError("partition has no populated block")
    protos[~filled] = protos[filled][0]
    return protos, value


def brute_force_opt(points, k, loss: LossSpec, feasibility="free",
                    max_n=BRUTE_FORCE_MAX_N):
    """Exact optimum by enumeration; the desk-scale oracle.

    Free prototypes: all set partitions into <= k blocks, each profiled.
    Medoid feasibility: all k-subsets of data points, nearest-prototype
    assignment.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n > max_n:
        raise ValueError(
            f"brute-force enumeration refused for n={n} > {max_n}; "
            "use an exact 1-d solver or a heuristic with best-known gaps")
    if k > n:
        raise ValueError(f"cannot place k={k} clusters on n={n} points")
    if feasibility == "medoid":
        return _brute_force_medoid(pts, n, k, loss)
    best_val, best_labels, best_protos = np.inf, None, None
    for labels in iter_partitions(n, k):
        protos, value = profile_partition(pts, labels, k, loss)
        if value < best_val:
            best_val, best_labels, best_protos = value, labels, protos
    note = ("exact-up-to-profiling-tolerance"
            if loss.kind in ("linear", "huber") and pts.shape[1] > 1
            else "exact-oracle")
    part = Partition(best_labels, k)
    return SolveResult(partition=part, prototypes=best_protos,
                       objective=float(best_val), restarts_used=1,
                       per_restart_objectives=[float(best_val)], seed=0,
                       exact=True, note=note)


def _brute_force_medoid(pts, n, k, loss):
    G = eval_loss(loss, cdist(pts, pts))
    best_val, best_subset = np.inf, None
    for subset in combinations(range(n), k):
        value = G[:, subset].min(axis=1).sum()
        if value < best_val:
            best_val, best_subset = value, subset
    med = np.asarray(best_subset)
    labels = np.argmin(G[:, med], axis=1) + 1
    part = Partition(labels, k)
    return SolveResult(partition=part, prototypes=pts[med],
                       objective=float(best_val), restarts_used=1,
                       per_restart_objectives=[float(best_val)], seed=0,
                       exact=True, note="exact-oracle", medoid_indices=med)


def medoid_profile_values(points, k, loss: LossSpec, max_n=BRUTE_FORCE_MAX_N):
    """Profiled value of every k-subset of prototypes; (subsets, values)."""
    pts = _as_points(points)
    n = pts.shape[0]
    if n > max_n:
        raise ValueError(f"medoid enumeration refused for n={n} > {max_n}")
    G = eval_loss(loss, cdist(pts, pts))
    subsets = list(combinations(range(n), k))
    values = np.array([G[:, s].min(axis=1).sum() for s in subsets])
    return subsets, values


# ---------------------------------------------------------------------------
# gaps and displacement
# ---------------------------------------------------------------------------

def gaps(points, candidate: SolveResult, benchmark: Benchmark, loss: LossSpec,
         opt: SolveResult):
    """Multiplicative gap of the candidate and of the benchmark over ``opt``."""
    bench_value = objective(points, benchmark.partition, benchmark.anchors, loss)
    opt_value = opt.objective
    opt_kind = "exact-oracle" if opt.exact else "best-known"
    delta = _relative_gap(candidate.objective, opt_value, opt.exact, "candidate")
    delta_approx = _relative_gap(bench_value, opt_value, opt.exact, "benchmark")
    return GapReport(delta=delta, delta_approx=delta_approx,
                     opt_value=opt_value, opt_kind=opt_kind)


def _relative_gap(value, opt_value, opt_exact, who):
    if opt_value == 0.0:
        return 0.0 if value == 0.0 else np.inf
    raw = value / opt_value - 1.0
    if raw < 0:
        if opt_exact and raw < -1e-9:
            raise RuntimeError(
                f"{who} objective {value} undercuts the exact optimum {opt_value}")
        raw = 0.0
    return raw


def displacement(hat_prototypes, star_prototypes):
    """min over matchings of the max prototype-to-anchor distance.

    Exact: brute force for k <= 8, otherwise a bottleneck search (binary
    search over realized distances with perfect-matching feasibility).
    """
    hat = _as_points(hat_prototypes)
    star = _as_points(star_prototypes)
    if hat.shape != star.shape:
        raise ValueError("prototype tuples must share k and dimension")
    dists = cdist(hat, star)
    k = hat.shape[0]
    if k <= 8:
        best_eta, best_perm = np.inf, None
        for perm in permutations(range(k)):
            eta = max(dists[j, perm[j]] for j in range(k))
            if eta < best_eta:
                best_eta, best_perm = eta, perm
        return Displacement(eta=float(best_eta), permutation=best_perm)
    return _bottleneck_displacement(dists)


def _bottleneck_displacement(dists):
    k = dists.shape[0]
    levels = np.unique(dists)
    lo, hi = 0, levels.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _has_perfect_matching(dists <= levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    eta = levels[lo]
    match = maximum_bipartite_matching(csr_matrix(dists <= eta), perm_type="column")
    return Displacement(eta=float(eta), permutation=tuple(int(c) for c in match))


def _has_perfect_matching(adj):
    match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
    return bool(np.all(match >= 0))


def hausdorff_drift(a, b):
    """Two-sided Hausdorff distance between equal-size prototype sets."""
    pa = _as_points(a)
    pb = _as_points(b)
    if pa.shape != pb.shape:
        raise ValueError("prototype sets must share k and dimension")
    d = cdist(pa, pb)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def derive_benchmark(points, partition: Partition, loss: LossSpec):
    """Anchors for a reference partition: centroids (squared), 1-d medians
    (linear in one dimension), otherwise the loss-minimizing data point."""
    pts = _as_points(points)
    if loss.kind == "squared" or (loss.kind == "linear" and pts.shape[1] == 1):
        anchors = best_response_prototypes(pts, partition, loss)
    else:
        anchors = best_response_prototypes(pts, partition, loss, feasibility="medoid")
    return Benchmark(partition=partition, anchors=anchors)
