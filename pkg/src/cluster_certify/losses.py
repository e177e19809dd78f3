"""Admissible loss generators, margin-crossing increments, and Lipschitz envelopes.

A loss generator g maps a distance r >= 0 to a cost, with g(0) = 0 and g
non-decreasing. The central quantity is the uniform increment

    increment(g, gamma, D) = inf over r in [0, D] of g(r + gamma) - g(r),

the smallest extra cost paid when a point at distance at most D from its
prototype is pushed at least gamma farther away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("squared", "linear", "huber", "tabulated")

#: grid resolution for the numeric increment of tabulated losses
DEFAULT_GRID_RESOLUTION = 4096


@dataclass(frozen=True)
class LossSpec:
    """A loss generator: squared, linear, huber(tau) or a tabulated curve.

    ``weight`` scales the whole generator (used for per-point weighted
    objectives); all derived quantities scale linearly with it.
    """

    kind: str
    tau: float | None = None
    weight: float = 1.0
    grid_r: np.ndarray | None = field(default=None, repr=False)
    grid_g: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {KINDS}")
        if not np.isfinite(self.weight) or self.weight <= 0:
            raise ValueError("weight must be a positive finite real")
        if self.kind == "huber":
            if self.tau is None or not np.isfinite(self.tau) or self.tau <= 0:
                raise ValueError("huber loss requires tau > 0")
        if self.kind == "tabulated":
            r = np.asarray(self.grid_r, dtype=float)
            g = np.asarray(self.grid_g, dtype=float)
            if r.ndim != 1 or r.shape != g.shape or r.size < 2:
                raise ValueError("tabulated loss requires matching 1-d grids with >= 2 points")
            if r[0] != 0.0 or g[0] != 0.0:
                raise ValueError("tabulated grid must start at (0, 0)")
            if np.any(np.diff(r) <= 0):
                raise ValueError("tabulated r-grid must be strictly increasing")
            if np.any(np.diff(g) < 0):
                raise ValueError("tabulated values must be non-decreasing")
            object.__setattr__(self, "grid_r", r)
            object.__setattr__(self, "grid_g", g)

    # -- constructors ------------------------------------------------------

    @classmethod
    def squared(cls, weight=1.0):
        return cls("squared", weight=weight)

    @classmethod
    def linear(cls, weight=1.0):
        return cls("linear", weight=weight)

    @classmethod
    def huber(cls, tau, weight=1.0):
        return cls("huber", tau=float(tau), weight=weight)

    @classmethod
    def tabulated(cls, grid_r, grid_g, weight=1.0):
        return cls("tabulated", grid_r=np.asarray(grid_r, float),
                   grid_g=np.asarray(grid_g, float), weight=weight)


def eval_loss(spec: LossSpec, r):
    """Evaluate g(r). Accepts scalars or arrays; r must be >= 0."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("loss argument r must be nonnegative")
    if spec.kind == "squared":
        out = arr * arr
    elif spec.kind == "linear":
        out = arr.copy()
    elif spec.kind == "huber":
        tau = spec.tau
        out = np.where(arr <= tau, 0.5 * arr * arr, tau * arr - 0.5 * tau * tau)
    else:
        if np.any(arr > spec.grid_r[-1]):
            raise ValueError(
                f"tabulated loss evaluated at r above grid max {spec.grid_r[-1]}")
        out = np.interp(arr, spec.grid_r, spec.grid_g)
    out = spec.weight * out
    return float(out) if np.isscalar(r) or arr.ndim == 0 else out


def increment(spec: LossSpec, gamma, D, resolution=DEFAULT_GRID_RESOLUTION):
    """Uniform increment inf_{0<=r<=D} g(r+gamma) - g(r).

    Closed forms: squared -> gamma^2, linear -> gamma, huber -> g_tau(gamma)
    (convexity puts the infimum at r = 0).  Tabulated losses fall back to a
    grid infimum over ``resolution`` evenly spaced r values including both
    endpoints.
    """
    gamma = float(gamma)
    D = float(D)
    if not np.isfinite(gamma) or gamma < 0:
        raise ValueError("margin shift gamma must be nonnegative and finite")
    if not np.isfinite(D) or D < 0:
        raise ValueError("radius cap D must be nonnegative and finite")
    if spec.kind == "squared":
        return spec.weight * gamma * gamma
    if spec.kind == "linear":
        return spec.weight * gamma
    if spec.kind == "huber":
        tau = spec.tau
        base = 0.5 * gamma * gamma if gamma <= tau else tau * gamma - 0.5 * tau * tau
        return spec.weight * base
    # tabulated: numeric infimum; requires D + gamma inside the grid
    if D + gamma > spec.grid_r[-1]:
        raise ValueError("tabulated increment needs D + gamma within the grid range")
    r = np.linspace(0.0, D, int(resolution)) if D > 0 else np.array([0.0])
    vals = np.interp(r + gamma, spec.grid_r, spec.grid_g) - np.interp(r, spec.grid_r, spec.grid_g)
    return spec.weight * float(vals.min())


def lipschitz_bound(spec: LossSpec, domain_max):
    """A valid Lipschitz constant for g on [0, domain_max]."""
    domain_max = float(domain_max)
    if not np.isfinite(domain_max) or domain_max < 0:
        raise ValueError("domain_max must be nonnegative and finite")
    if spec.kind == "squared":
        base = 2.0 * domain_max
    elif spec.kind == "linear":
        base = 1.0
    elif spec.kind == "huber":
        base = min(spec.tau, domain_max)
    else:
        if domain_max > spec.grid_r[-1]:
            raise ValueError("domain_max above tabulated grid range")
        r, g = spec.grid_r, spec.grid_g
        slopes = np.diff(g) / np.diff(r)
        # only segments intersecting [0, domain_max] matter
        live = r[:-1] < domain_max
        base = float(slopes[live].max()) if np.any(live) else 0.0
    return spec.weight * base


def increment_grid_infimum(spec: LossSpec, gamma, D, resolution=10_000):
    """Brute-force grid infimum of the increment; numeric oracle for tests."""
    gamma = float(gamma)
    D = float(D)
    if gamma < 0 or D < 0:
        raise ValueError("gamma and D must be nonnegative")
    r = np.linspace(0.0, D, int(resolution)) if D > 0 else np.array([0.0])
    return float(np.min(eval_loss(spec, r + gamma) - eval_loss(spec, r)))
