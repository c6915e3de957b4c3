"""Reachable-set polytopes and Hit-and-run uniform sampling.

The sampler exists to feed the forward pass: build the componentwise-max
relaxation of a union of stage constraint sets, then draw nearly uniform
points from it with many short Hit-and-run chains.  Degenerate
(lower-dimensional) regions are handled by pinning flat coordinates and
walking in the remaining ones, with a perturbed-Chebyshev fallback when even
that leaves no volume.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._rng import stream
from .lp import (InfeasibleRegionError, LinearProgram, LpNumericError, Polytope,
                 UnboundedRegionError, chebyshev_center, chebyshev_center_signed,
                 solve_lp)
from . import kernels

FEAS_TOL = 1e-9      # emitted samples satisfy Qx <= c + FEAS_TOL
FLAT_TOL = 1e-9      # chebyshev radius / coordinate width below this is flat


class DegenerateRegionError(Exception):
    """Region is not full-dimensional where full dimension was required."""


@dataclass(frozen=True)
class HitAndRunConfig:
    chains: int = 100
    border_points_per_start: int = 10
    burn_in: Optional[int] = None  # None: d^2 for the dimension walked
    seed: int = 0

    def __post_init__(self):
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.border_points_per_start < 1:
            raise ValueError("border_points_per_start must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


@dataclass(frozen=True)
class SampleInfo:
    """How a batch of samples was produced.

    mode: "walk" (full-dimensional Hit-and-run), "reduced" (flat coordinates
    pinned, walk in the rest), "point" (every coordinate pinned) or
    "chebyshev" (perturbed-center fallback).  pinned maps coordinate index to
    its pinned value; dim is the dimension actually walked.
    """

    mode: str
    dim: int
    pinned: Tuple[Tuple[int, float], ...] = ()


def reachable_polytope(Q, W, c, xs, zs):
    """Componentwise-max relaxation of union_{i,j} {x : Qx <= c(z_j) - W(z_j) x_i}.

    W and c are callables of the disturbance.  The result contains every
    member set; with fixed recourse it equals the convex hull of their union.
    """
    Q = np.asarray(Q, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if len(zs) < 1 or xs.shape[0] < 1:
        raise ValueError("need at least one state and one disturbance")
    rhs = np.full(Q.shape[0], -np.inf)
    for z in zs:
        cz = np.asarray(c(z), dtype=np.float64)
        Wz = np.asarray(W(z), dtype=np.float64)
        cand = cz[None, :] - xs @ Wz.T  # (n_x, rows)
        np.maximum(rhs, cand.max(axis=0), out=rhs)
    return Polytope(Q, rhs)


def random_border_point(region, rng, center=None):
    """Ray-shoot from the Chebyshev center along a random direction.

    Returns the boundary point where the ray exits.  Raises
    UnboundedRegionError when the ray never exits (unbounded region).
    """
    if center is None:
        center, _ = chebyshev_center(region)
    Q, c = region.Q, region.c
    d = region.dim
    while True:
        u = rng.standard_normal(d)
        norm = np.linalg.norm(u)
        if norm > 1e-12:
            break
    u /= norm
    qd = Q @ u
    slack = c - Q @ center
    pos = qd > 1e-13
    if not np.any(pos):
        raise UnboundedRegionError("border ray never exits the region")
    t = np.min(slack[pos] / qd[pos])
    return center + t * u


def _chain_quota(count, chains):
    # round-robin interleave: chain k supplies positions k, k+chains, ...
    return [len(range(k, count, chains)) for k in range(chains)]


def _walk_chain(region, start, quota, burn, rng):
    Q, c = region.Q, region.c
    d = region.dim
    need = burn + quota
    out = np.empty((need, d))
    x = np.ascontiguousarray(start, dtype=np.float64).copy()
    emitted = 0
    while emitted < need:
        block = max(need - emitted, 8)
        dirs = np.ascontiguousarray(rng.standard_normal((block, d)))
        unifs = np.ascontiguousarray(rng.random(block))
        got, _ = kernels.hit_and_run_walk(Q, c, x, dirs, unifs,
                                          need - emitted, out[emitted:])
        emitted += got
    return out[burn:]


def hit_and_run(region, count, config=None):
    """Draw `count` near-uniform points from a bounded full-dimensional region.

    Runs config.chains independent chains, each started at the average of
    config.border_points_per_start random border points, burned in for d^2
    steps (or config.burn_in), then interleaved round-robin into the output.
    Deterministic given config.seed.
    """
    if config is None:
        config = HitAndRunConfig()
    if count < 1:
        raise ValueError("count must be >= 1")
    center, radius = chebyshev_center(region)
    if radius <= FLAT_TOL:
        raise DegenerateRegionError("region is not full-dimensional "
                                    "(chebyshev radius %g)" % radius)
    Q, c = region.Q, region.c
    d = region.dim
    burn = config.burn_in if config.burn_in is not None else d * d
    quotas = _chain_quota(count, config.chains)
    samples = np.empty((count, d))
    for k, quota in enumerate(quotas):
        if quota == 0:
            break
        brng = stream(config.seed, "har-border", k)
        pts = [random_border_point(region, brng, center=center)
               for _ in range(config.border_points_per_start)]
        start = np.mean(pts, axis=0)
        # borders of a full-dimensional body average to an interior point;
        # guard the fp corner case by stepping toward the center
        for _ in range(64):
            if np.all(Q @ start - c < 0):
                break
            start = 0.5 * (start + center)
        else:
            raise DegenerateRegionError("could not find interior start point")
        wrng = stream(config.seed, "har-walk", k)
        chain = _walk_chain(region, start, quota, burn, wrng)
        samples[k::config.chains] = chain
    resid = (Q @ samples.T).T - c
    assert np.max(resid) <= FEAS_TOL, "hit-and-run emitted infeasible point"
    return samples


def _coordinate_bounds(region, maxiter=20000):
    """Per-coordinate [min, max] over the region via 2d LPs."""
    Q, c = region.Q, region.c
    d = region.dim
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        obj = np.zeros(d)
        obj[i] = 1.0
        rmin = solve_lp(LinearProgram(obj, Q, c), maxiter=maxiter)
        rmax = solve_lp(LinearProgram(-obj, Q, c), maxiter=maxiter)
        for r, name in ((rmin, "min"), (rmax, "max")):
            if r.status == "unbounded":
                raise UnboundedRegionError("coordinate %d unbounded (%s)" % (i, name))
            if r.status == "infeasible":
                raise InfeasibleRegionError("region empty during bounds probe")
            if r.status != "optimal":
                raise LpNumericError("bounds probe failed: %s" % r.status)
        lo[i] = rmin.value
        hi[i] = -rmax.value
    return lo, hi


def _reduce_pinned(region, pinned_idx, pinned_vals):
    """Substitute pinned coordinates; drop rows that become vacuous."""
    Q, c = region.Q, region.c
    keep = np.setdiff1d(np.arange(region.dim), pinned_idx)
    c_red = c - Q[:, pinned_idx] @ pinned_vals
    Q_red = Q[:, keep]
    nonvac = np.abs(Q_red).max(axis=1) > 1e-12
    vac_rhs = c_red[~nonvac]
    if vac_rhs.size and np.min(vac_rhs) < -1e-7:
        raise InfeasibleRegionError("pinned coordinates violate a constraint")
    return Polytope(Q_red[nonvac], c_red[nonvac]), keep


def sample_uniform(region, count, config=None):
    """Uniform-ish samples from a bounded region of any dimension.

    Full-dimensional regions go straight to hit_and_run.  Otherwise flat
    coordinates (width <= 1e-9) are pinned at their midpoints and the walk
    runs in the remaining coordinates; if the region is still flat (a tilted
    lower-dimensional set), falls back to perturbed Chebyshev centers.
    Returns (samples, SampleInfo).
    """
    if config is None:
        config = HitAndRunConfig()
    ctr, rho = chebyshev_center_signed(region)
    if ctr is None or rho < -FLAT_TOL:
        raise InfeasibleRegionError("region is empty")
    d = region.dim
    if rho > FLAT_TOL:
        return hit_and_run(region, count, config), SampleInfo("walk", d)

    lo, hi = _coordinate_bounds(region)
    flat = (hi - lo) <= FLAT_TOL
    pinned_idx = np.flatnonzero(flat)
    pinned_vals = 0.5 * (lo[flat] + hi[flat])
    pinned = tuple((int(i), float(v)) for i, v in zip(pinned_idx, pinned_vals))

    if pinned_idx.size == d:
        samples = np.tile(pinned_vals, (count, 1))
        return samples, SampleInfo("point", 0, pinned)

    if pinned_idx.size:
        reduced, keep = _reduce_pinned(region, pinned_idx, pinned_vals)
        _, rho_red = chebyshev_center_signed(reduced)
        if rho_red > FLAT_TOL:
            sub = hit_and_run(reduced, count, config)
            samples = np.empty((count, d))
            samples[:, keep] = sub
            samples[:, pinned_idx] = pinned_vals
            resid = (region.Q @ samples.T).T - region.c
            assert np.max(resid) <= 1e-6, "embedded sample violates region"
            return samples, SampleInfo("reduced", int(keep.size), pinned)

    # tilted flat set: spread points with randomly tilted Chebyshev solves
    samples = np.empty((count, d))
    for i in range(count):
        g = stream(config.seed, "cheb-fallback", i).standard_normal(d)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            g /= norm
        x, r = chebyshev_center_signed(region, perturb=-1e-3 * g)
        if x is None or r < -FLAT_TOL:
            raise InfeasibleRegionError("region is empty")
        samples[i] = x
    return samples, SampleInfo("chebyshev", 0, pinned)
