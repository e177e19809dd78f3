"""Condition numbers, misclassification certificates, and diagnostic reports.

The central inequality bounds the misclassification rate of any near-optimal
solution by an optimization term plus a prototype-displacement term, both
scaled by the inverse margin-crossing increment.  Everything here is exact
arithmetic on instance geometry; the enumeration-based check_* oracles verify
the inequalities against ground truth at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Instance, summarize_geometry
from .losses import LossSpec, eval_loss, increment, lipschitz_bound
from .partitions import Partition, align, misclassification_rate
from .solvers import (SolveResult, brute_force_opt, displacement,
                      iter_partitions, medoid_profile_values, objective,
                      profile_partition)


@dataclass(frozen=True)
class ConditionNumber:
    """Within-cluster loss scale over the margin-crossing increment."""

    value: float
    gamma_used: float
    d_eff_used: float
    increment_used: float

    @property
    def finite(self):
        return math.isfinite(self.value)


@dataclass
class Certificate:
    """All ingredients of a stability bound and the bound itself.

    ``bound_total`` is the raw value; presentation layers cap it at 1.
    ``vacuous`` marks certificates with no content (displacement at least the
    margin, or a flat loss over the relevant range).
    """

    kappa: ConditionNumber
    delta: float
    delta_approx: float
    eta: float
    l_g: float
    opt_per_point: float
    increment_effective: float
    bound_optimization_term: float
    bound_displacement_term: float
    bound_total: float
    vacuous: bool
    depth_s: float | None = None
    zero_error_certified: bool | None = None

    @property
    def bound_total_capped(self):
        return min(self.bound_total, 1.0)


@dataclass(frozen=True)
class DiagnosticReport:
    """Data-driven certificate built from observable proxies of one solve."""

    d_hat: float
    delta_hat_sep: float
    gamma_hat: float
    alpha: float
    kappa_hat: float
    delta_hat_gap: float
    p_cert: float
    radius_mode: str


@dataclass(frozen=True)
class EnvelopeSummary:
    """Worst-case increment/scale/Lipschitz envelopes of a loss family."""

    lower_increment: float
    upper_scale: float
    upper_lipschitz: float


@dataclass(frozen=True)
class EtaZeroReport:
    eta_zero: bool
    delta_min: float
    opt_value: float
    star_value: float
    unique: bool


@dataclass(frozen=True)
class TreeLevel:
    kappa: float
    delta: float
    gamma: float = math.nan
    d_eff: float = math.nan


@dataclass(frozen=True)
class TreeBoundReport:
    total: float
    kappa_max: float
    geometrically_consistent: bool | None


@dataclass(frozen=True)
class DownstreamFunctional:
    """A partition summary that moves at most ``lipschitz_constant`` per unit
    of label-invariant Hamming distance (L1 on the output)."""

    name: str
    lipschitz_constant: float
    evaluator: object


@dataclass(frozen=True)
class DownstreamCheck:
    lhs: float
    rhs: float
    holds: bool


def lipschitz_domain(gamma, d_eff):
    """Distance range reached by near-optimal assignments: radius + separation."""
    return d_eff + (gamma + 2.0 * d_eff)


def condition_number(loss: LossSpec, gamma, d_eff):
    """g(d_eff) over the increment at margin gamma; infinite when the margin
    buys no loss increase."""
    gamma = float(gamma)
    d_eff = float(d_eff)
    if gamma < 0 or d_eff < 0:
        raise ValueError("gamma and d_eff must be nonnegative")
    if gamma == 0:
        return ConditionNumber(math.inf, gamma, d_eff, 0.0)
    inc = increment(loss, gamma, d_eff)
    if inc <= 0:
        return ConditionNumber(math.inf, gamma, d_eff, inc)
    if loss.kind == "squared":
        value = (d_eff / gamma) ** 2
    elif loss.kind == "linear":
        value = d_eff / gamma
    else:
        value = eval_loss(loss, d_eff) / inc
    return ConditionNumber(value, gamma, d_eff, inc)


def _bound_terms(inc, l_g, opt_value, n, delta, delta_approx, eta):
    opt_term = (opt_value / (n * inc)) * (delta + delta_approx)
    disp_term = l_g * eta / inc
    return opt_term, disp_term, opt_term + disp_term


def _vacuous(kappa, delta, delta_approx, eta, l_g, opt_per_point, inc, **extra):
    return Certificate(kappa=kappa, delta=delta, delta_approx=delta_approx,
                       eta=eta, l_g=l_g, opt_per_point=opt_per_point,
                       increment_effective=inc,
                       bound_optimization_term=math.inf,
                       bound_displacement_term=math.inf,
                       bound_total=math.inf, vacuous=True, **extra)


def global_bound(loss: LossSpec, *, gamma, d_eff, eta, delta, delta_approx,
                 opt_value, n):
    """Misclassification bound for one near-optimal solution.

    optimization term  = opt_value / (n * increment(gamma - eta; d_eff)) * (delta + delta_approx)
    displacement term  = L_g * eta / increment(gamma - eta; d_eff)
    """
    _check_bound_inputs(gamma=gamma, d_eff=d_eff, eta=eta, delta=delta,
                        delta_approx=delta_approx, opt_value=opt_value, n=n)
    kappa = condition_number(loss, max(gamma, 0.0), d_eff)
    l_g = lipschitz_bound(loss, lipschitz_domain(max(gamma, 0.0), d_eff))
    opt_pp = opt_value / n
    if eta >= gamma:
        return _vacuous(kappa, delta, delta_approx, eta, l_g, opt_pp, 0.0)
    inc = increment(loss, gamma - eta, d_eff)
    if inc <= 0:
        return _vacuous(kappa, delta, delta_approx, eta, l_g, opt_pp, inc)
    opt_term, disp_term, total = _bound_terms(inc, l_g, opt_value, n,
                                              delta, delta_approx, eta)
    return Certificate(kappa=kappa, delta=delta, delta_approx=delta_approx,
                       eta=eta, l_g=l_g, opt_per_point=opt_pp,
                       increment_effective=inc,
                       bound_optimization_term=opt_term,
                       bound_displacement_term=disp_term,
                       bound_total=total, vacuous=False)


def condition_number_bound(kappa: ConditionNumber, delta, delta_approx,
                           displacement_term=0.0):
    """Condition-number form: kappa * (delta + delta_approx) + displacement term.

    The constant absorbed by the informal version is made explicit as 1,
    which is sound because the average optimal loss never exceeds g(d_eff).
    """
    if not kappa.finite:
        return math.inf
    return kappa.value * (delta + delta_approx) + displacement_term


def local_core_bound(loss: LossSpec, *, gamma, d_eff, eta, delta, delta_approx,
                     opt_value, n, s):
    """Core-restricted bound at depth s: the margin grows to gamma - eta + 2s
    while the radius shrinks to d_eff - s.  Certifies a zero-error core when
    the bound drops strictly below 1/n."""
    s = float(s)
    if s < 0 or s >= d_eff:
        raise ValueError(f"core depth s={s} must lie in [0, d_eff)")
    _check_bound_inputs(gamma=gamma, d_eff=d_eff, eta=eta, delta=delta,
                        delta_approx=delta_approx, opt_value=opt_value, n=n)
    kappa = condition_number(loss, max(gamma, 0.0), d_eff)
    l_g = lipschitz_bound(loss, lipschitz_domain(max(gamma, 0.0), d_eff))
    opt_pp = opt_value / n
    if eta >= gamma:
        return _vacuous(kappa, delta, delta_approx, eta, l_g, opt_pp, 0.0,
                        depth_s=s, zero_error_certified=False)
    inc = increment(loss, gamma - eta + 2.0 * s, d_eff - s)
    if inc <= 0:
        return _vacuous(kappa, delta, delta_approx, eta, l_g, opt_pp, inc,
                        depth_s=s, zero_error_certified=False)
    opt_term, disp_term, total = _bound_terms(inc, l_g, opt_value, n,
                                              delta, delta_approx, eta)
    return Certificate(kappa=kappa, delta=delta, delta_approx=delta_approx,
                       eta=eta, l_g=l_g, opt_per_point=opt_pp,
                       increment_effective=inc,
                       bound_optimization_term=opt_term,
                       bound_displacement_term=disp_term,
                       bound_total=total, vacuous=False, depth_s=s,
                       zero_error_certified=bool(total < 1.0 / n))


def eta_bound_kmeans(d_eff, c_b, delta, delta_approx, c_qg=1.0):
    """Displacement control for squared loss with quadratic local growth:
    eta <= d_eff * sqrt((delta + delta_approx) / (c_qg * c_b)).

    ``c_qg = 1`` holds globally when the anchors are the cluster centroids.
    """
    if c_b <= 0 or c_qg <= 0:
        raise ValueError("c_b and c_qg must be positive")
    return d_eff * math.sqrt((delta + delta_approx) / (c_qg * c_b))


def eta_zero_medoids(points, k, loss: LossSpec, star_indices, delta,
                     delta_approx, max_n=12, value_tol=0.0):
    """Discrete displacement control for data-restricted prototypes.

    Enumerates the profiled value of every k-subset of candidate prototypes;
    ``delta_min`` is the smallest value separation from the reference subset.
    When (delta + delta_approx) * OPT < delta_min, any near-optimal subset has
    the reference value; it equals the reference subset only under uniqueness,
    which is reported rather than assumed.
    """
    subsets, values = medoid_profile_values(points, k, loss, max_n=max_n)
    star = tuple(sorted(int(i) for i in star_indices))
    try:
        star_pos = subsets.index(star)
    except ValueError:
        raise ValueError("reference prototypes must be a k-subset of the data")
    star_value = float(values[star_pos])
    diffs = np.abs(values - star_value)
    distinct = diffs > value_tol
    delta_min = float(diffs[distinct].min()) if np.any(distinct) else math.inf
    opt_value = float(values.min())
    at_star_value = np.flatnonzero(~distinct)
    unique = at_star_value.size == 1
    eta_zero = (delta + delta_approx) * opt_value < delta_min
    return EtaZeroReport(eta_zero=bool(eta_zero), delta_min=delta_min,
                         opt_value=opt_value, star_value=star_value,
                         unique=bool(unique))


def hamming_tube_bound(loss: LossSpec, *, gamma, d_eff, opt_value, n, delta,
                       delta_approx, eta1, eta2):
    """Bound on the pairwise label distance of two near-optimal solutions:
    twice the optimization term at the worse displacement, plus the combined
    displacement leakage."""
    eta_max = max(eta1, eta2)
    if eta_max >= gamma:
        return math.inf
    inc = increment(loss, gamma - eta_max, d_eff)
    if inc <= 0:
        return math.inf
    l_g = lipschitz_bound(loss, lipschitz_domain(max(gamma, 0.0), d_eff))
    return (2.0 * opt_value / (n * inc)) * (delta + delta_approx) \
        + l_g * (eta1 + eta2) / inc


def heterogeneous_bound(per_point_losses, *, gamma, d_eff, eta, delta,
                        delta_approx, opt_value, n):
    """Stability under per-point losses via worst-case envelopes.

    The increment envelope is the pointwise minimum increment, the scale and
    Lipschitz envelopes are pointwise maxima; with identical losses this
    reduces bit-for-bit to the homogeneous bound.
    """
    if not per_point_losses:
        raise ValueError("need at least one per-point loss")
    _check_bound_inputs(gamma=gamma, d_eff=d_eff, eta=eta, delta=delta,
                        delta_approx=delta_approx, opt_value=opt_value, n=n)
    domain = lipschitz_domain(max(gamma, 0.0), d_eff)
    upper_scale = max(eval_loss(g, d_eff) for g in per_point_losses)
    upper_lip = max(lipschitz_bound(g, domain) for g in per_point_losses)
    opt_pp = opt_value / n
    if eta >= gamma:
        envelope = EnvelopeSummary(0.0, upper_scale, upper_lip)
        kappa = ConditionNumber(math.inf, gamma - eta, d_eff, 0.0)
        return _vacuous(kappa, delta, delta_approx, eta, upper_lip, opt_pp, 0.0), envelope
    lower_inc = min(increment(g, gamma - eta, d_eff) for g in per_point_losses)
    envelope = EnvelopeSummary(lower_inc, upper_scale, upper_lip)
    if lower_inc <= 0:
        kappa = ConditionNumber(math.inf, gamma - eta, d_eff, lower_inc)
        return _vacuous(kappa, delta, delta_approx, eta, upper_lip, opt_pp,
                        lower_inc), envelope
    kappa = ConditionNumber(upper_scale / lower_inc, gamma - eta, d_eff, lower_inc)
    opt_term, disp_term, total = _bound_terms(lower_inc, upper_lip, opt_value,
                                              n, delta, delta_approx, eta)
    cert = Certificate(kappa=kappa, delta=delta, delta_approx=delta_approx,
                       eta=eta, l_g=upper_lip, opt_per_point=opt_pp,
                       increment_effective=lower_inc,
                       bound_optimization_term=opt_term,
                       bound_displacement_term=disp_term,
                       bound_total=total, vacuous=False)
    return cert, envelope


def tree_bound(levels, rho=None):
    """Additive certificate for level-wise clustering: sum of kappa_l * delta_l.

    With ``rho`` supplied, also reports whether every level satisfied
    gamma_l >= rho * d_eff_l (scale-consistent geometry).
    """
    levels = list(levels)
    if not levels:
        return TreeBoundReport(total=0.0, kappa_max=0.0, geometrically_consistent=None)
    total = sum(lv.kappa * lv.delta for lv in levels)
    kappa_max = max(lv.kappa for lv in levels)
    consistent = None
    if rho is not None:
        consistent = all(lv.gamma >= rho * lv.d_eff for lv in levels)
    return TreeBoundReport(total=total, kappa_max=kappa_max,
                           geometrically_consistent=consistent)


def tracking_bound(loss: LossSpec, *, gamma_t, d_t, eta_alg, eta_drift,
                   delta_t, opt_per_point):
    """Per-step bound under benchmark drift, using the additive displacement
    eta_alg + eta_drift and the step geometry (gamma_t, d_t)."""
    eta_t = eta_alg + eta_drift
    opt_pp = float(opt_per_point)
    if eta_t >= gamma_t:
        kappa = ConditionNumber(math.inf, gamma_t - eta_t, d_t, 0.0)
        l_g = lipschitz_bound(loss, lipschitz_domain(max(gamma_t, 0.0), d_t))
        return _vacuous(kappa, delta_t, 0.0, eta_t, l_g, opt_pp, 0.0)
    inc = increment(loss, gamma_t - eta_t, d_t)
    l_g = lipschitz_bound(loss, lipschitz_domain(max(gamma_t, 0.0), d_t))
    if inc <= 0:
        kappa = ConditionNumber(math.inf, gamma_t - eta_t, d_t, inc)
        return _vacuous(kappa, delta_t, 0.0, eta_t, l_g, opt_pp, inc)
    kappa_t = ConditionNumber(eval_loss(loss, d_t) / inc, gamma_t - eta_t, d_t, inc)
    opt_term = kappa_t.value * delta_t
    disp_term = l_g * eta_t / inc
    return Certificate(kappa=kappa_t, delta=delta_t, delta_approx=0.0,
                       eta=eta_t, l_g=l_g, opt_per_point=opt_pp,
                       increment_effective=inc,
                       bound_optimization_term=opt_term,
                       bound_displacement_term=disp_term,
                       bound_total=opt_term + disp_term, vacuous=False)


def diagnose(points, solve: SolveResult, loss: LossSpec, *, alpha=0.2,
             radius_mode="max", quantile=0.95):
    """Data-driven certificate from observable proxies of a multi-start solve.

    Radius and separation are read off the candidate solution, the margin is
    shrunk by the guard ``alpha``, and the gap proxy is the candidate's excess
    over the best restart.  The product kappa_hat * delta_hat is the
    certificate; it is conservative, not a proven bound, because the restart
    minimum may overestimate the true optimum.
    """
    if not 0 < alpha < 1:
        raise ValueError("guard alpha must lie in (0, 1)")
    if len(solve.per_restart_objectives) < 2:
        raise ValueError("gap proxy needs at least two restarts")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    protos = solve.prototypes
    labels = solve.partition.labels
    dists = np.linalg.norm(pts - protos[labels - 1], axis=1)
    if radius_mode == "max":
        d_hat = float(dists.max())
        mode = "max"
    elif radius_mode == "quantile":
        per_cluster = [np.quantile(dists[labels == j], quantile)
                       for j in range(1, solve.partition.k + 1)
                       if np.any(labels == j)]
        d_hat = float(max(per_cluster))
        mode = f"quantile({quantile})"
    else:
        raise ValueError("radius_mode must be 'max' or 'quantile'")
    pair = cdist(protos, protos)
    k = protos.shape[0]
    sep = float(pair[np.triu_indices(k, k=1)].min()) if k > 1 else math.inf
    gamma_hat = max(sep - 2.0 * d_hat, 0.0)
    if gamma_hat == 0.0:
        kappa_hat = math.inf
    else:
        inc = increment(loss, (1.0 - alpha) * gamma_hat, d_hat)
        kappa_hat = math.inf if inc <= 0 else eval_loss(loss, d_hat) / inc
    best = min(solve.per_restart_objectives)
    if solve.objective == best:
        delta_hat = 0.0
    elif best == 0.0:
        delta_hat = math.inf
    else:
        delta_hat = (solve.objective - best) / best
    p_cert = kappa_hat * delta_hat if math.isfinite(kappa_hat) else math.inf
    return DiagnosticReport(d_hat=d_hat, delta_hat_sep=sep, gamma_hat=gamma_hat,
                            alpha=alpha, kappa_hat=kappa_hat,
                            delta_hat_gap=delta_hat, p_cert=p_cert,
                            radius_mode=mode)


def cluster_size_functional():
    """Cluster-size proportion vector; moves by at most 2 per unit of
    label-invariant Hamming distance."""
    def sizes(partition: Partition):
        return partition.cluster_sizes / partition.n
    return DownstreamFunctional(name="cluster-size-proportions",
                                lipschitz_constant=2.0, evaluator=sizes)


def downstream_check(functional: DownstreamFunctional, hat: Partition,
                     star: Partition, atol=1e-12):
    """Verify |T(hat) - T(star)|_1 <= L_T * hamming(hat, star) after aligning
    labels by the optimal matching."""
    aligned = align(hat, star)
    t_hat = np.atleast_1d(np.asarray(functional.evaluator(aligned), dtype=float))
    t_star = np.atleast_1d(np.asarray(functional.evaluator(star), dtype=float))
    lhs = float(np.abs(t_hat - t_star).sum())
    rate, _ = misclassification_rate(hat, star)
    rhs = functional.lipschitz_constant * rate
    return DownstreamCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + atol))


def _check_bound_inputs(**kwargs):
    for name, value in kwargs.items():
        if name == "gamma":
            continue  # may legitimately be nonpositive (inseparable -> vacuous)
        if value < 0:
            raise ValueError(f"{name} must be nonnegative, got {value}")


# ---------------------------------------------------------------------------
# enumeration-based soundness oracles (desk scale)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnumeratedSolution:
    """One profiled partition measured against the benchmark."""

    partition: Partition
    prototypes: np.ndarray
    value: float
    delta: float
    eta: float
    p: float


@dataclass
class SoundnessCheck:
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def enumerate_solutions(inst: Instance, loss: LossSpec, opt_value=None):
    """Profile every partition with exactly k populated blocks and measure its
    exact gap, displacement, and misclassification against the benchmark.

    Returns (solutions, opt_value, delta_approx).  Partitions with fewer
    populated blocks carry no well-defined k-prototype profiling and are
    covered by the enumeration through their refinements.
    """
    bench = inst.benchmark
    if bench is None:
        raise ValueError("enumeration requires a benchmarked instance")
    k = bench.k
    pts = inst.points
    if opt_value is None:
        opt_value = brute_force_opt(pts, k, loss).objective
    bench_value = objective(pts, bench.partition, bench.anchors, loss)
    delta_approx = _safe_gap(bench_value, opt_value)
    solutions = []
    for labels in iter_partitions(inst.n, k, exactly_k=True):
        protos, value = profile_partition(pts, labels, k, loss)
        part = Partition(labels, k)
        delta = _safe_gap(value, opt_value)
        eta = displacement(protos, bench.anchors).eta
        p, _ = misclassification_rate(part, bench.partition)
        solutions.append(EnumeratedSolution(partition=part, prototypes=protos,
                                            value=value, delta=delta, eta=eta, p=p))
    return solutions, opt_value, delta_approx


def _safe_gap(value, opt_value):
    if opt_value == 0.0:
        return 0.0 if value == 0.0 else math.inf
    return max(value / opt_value - 1.0, 0.0)


def check_global_soundness(inst: Instance, loss: LossSpec, rtol=1e-9):
    """Every enumerated solution with displacement below the margin must obey
    the global misclassification bound."""
    geom = summarize_geometry(inst)
    sols, opt_value, delta_approx = enumerate_solutions(inst, loss)
    report = SoundnessCheck(name="global-bound")
    for sol in sols:
        if not sol.eta < geom.gamma:
            continue
        cert = global_bound(loss, gamma=geom.gamma, d_eff=geom.d_eff,
                            eta=sol.eta, delta=sol.delta,
                            delta_approx=delta_approx,
                            opt_value=opt_value, n=inst.n)
        if cert.vacuous:
            continue
        report.checked += 1
        if sol.p > cert.bound_total * (1 + rtol) + 1e-15:
            report.violations.append({"p": sol.p, "bound": cert.bound_total,
                                      "delta": sol.delta, "eta": sol.eta})
    return report


def check_tube_soundness(inst: Instance, loss: LossSpec, delta_cap=0.25,
                         rtol=1e-9):
    """All near-optimal pairs must stay within the pairwise label-distance tube."""
    from .partitions import hamming_distance

    geom = summarize_geometry(inst)
    sols, opt_value, delta_approx = enumerate_solutions(inst, loss)
    near = [s for s in sols if s.delta <= delta_cap]
    report = SoundnessCheck(name="hamming-tube")
    for i in range(len(near)):
        for j in range(i + 1, len(near)):
            a, b = near[i], near[j]
            if max(a.eta, b.eta) >= geom.gamma:
                continue
            bound = hamming_tube_bound(loss, gamma=geom.gamma, d_eff=geom.d_eff,
                                       opt_value=opt_value, n=inst.n,
                                       delta=max(a.delta, b.delta),
                                       delta_approx=delta_approx,
                                       eta1=a.eta, eta2=b.eta)
            if not math.isfinite(bound):
                continue
            report.checked += 1
            measured = hamming_distance(a.partition, b.partition)
            if measured > bound * (1 + rtol) + 1e-15:
                report.violations.append({"d_ham": measured, "bound": bound})
    return report


def check_eta_control_kmeans(inst: Instance, delta_cap=0.5, rtol=1e-9):
    """On centroid-anchored instances, every near-optimal solution's measured
    displacement must obey the square-root gap bound with c_qg = 1."""
    loss = LossSpec.squared()
    geom = summarize_geometry(inst)
    sols, _, delta_approx = enumerate_solutions(inst, loss)
    report = SoundnessCheck(name="eta-control-kmeans")
    for sol in sols:
        if sol.delta > delta_cap:
            continue
        bound = eta_bound_kmeans(geom.d_eff, geom.balance, sol.delta,
                                 delta_approx, c_qg=1.0)
        report.checked += 1
        if sol.eta > bound * (1 + rtol) + 1e-15:
            report.violations.append({"eta": sol.eta, "bound": bound,
                                      "delta": sol.delta})
    return report


def check_core_soundness(inst: Instance, loss: LossSpec, s_grid, rtol=1e-9):
    """Core misclassification of every enumerated solution must obey the local
    bound at each depth, and certified zero-error cores must be error free."""
    from .geometry import core_belt

    geom = summarize_geometry(inst)
    sols, opt_value, delta_approx = enumerate_solutions(inst, loss)
    bench = inst.benchmark
    report = SoundnessCheck(name="core-bound")
    for s in s_grid:
        core_idx = core_belt(inst, s).core_indices
        for sol in sols:
            if not sol.eta < geom.gamma:
                continue
            cert = local_core_bound(loss, gamma=geom.gamma, d_eff=geom.d_eff,
                                    eta=sol.eta, delta=sol.delta,
                                    delta_approx=delta_approx,
                                    opt_value=opt_value, n=inst.n, s=s)
            if cert.vacuous:
                continue
            aligned = align(sol.partition, bench.partition)
            wrong = aligned.labels != bench.partition.labels
            p_core = float(wrong[core_idx].sum()) / inst.n
            report.checked += 1
            if p_core > cert.bound_total * (1 + rtol) + 1e-15:
                report.violations.append({"s": s, "p_core": p_core,
                                          "bound": cert.bound_total})
            if cert.zero_error_certified and p_core > 0:
                report.violations.append({"s": s, "zero_error_broken": p_core})
    return report
