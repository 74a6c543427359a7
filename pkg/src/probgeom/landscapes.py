"""Parametric families, distance landscapes, and convexity probes.

The two-atom family reproduces the classic spurious-local-minimum
landscape; the segment family drives the displacement-convexity
counterexample; mixture convexity and the almost-convexity bound are
checked by direct transport solves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .kernels import energy_distance, energy_distance_sq
from .measures import (DiscreteMeasure, GroundMetric, segment_grid, two_atom,
                       uniform_circle_grid)
from .geodesics import displacement_curve, mixture_at
from .transport import wasserstein


@dataclass(frozen=True)
class TwoAtomFamily:
    """theta in [-1, 1]^2 -> (delta_theta + delta_{-theta}) / 2."""

    bound: float = 1.0

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(np.abs(theta) <= self.bound + 1e-12))

    def eval(self, theta) -> DiscreteMeasure:
        if not self.contains(theta):
            raise ValueError(f"theta {theta} outside [-{self.bound}, {self.bound}]^2")
        return two_atom(theta)


@dataclass(frozen=True)
class SegmentFamily:
    """(ell, theta) -> uniform grid on a centered segment at angle theta.

    ell in [0, 1] is the half-length; theta in [0, pi).  Degenerate ell = 0
    collapses every atom onto the origin.
    """

    m: int = 50

    def contains(self, params) -> bool:
        ell, theta = params
        return 0.0 <= ell <= 1.0 and 0.0 <= theta < np.pi

    def eval(self, params) -> DiscreteMeasure:
        if not self.contains(params):
            raise ValueError(f"params {params} outside the segment family domain")
        ell, theta = params
        direction = np.array([np.cos(theta), np.sin(theta)])
        return segment_grid(np.zeros(2), direction, ell, self.m)


def family_eval(family, params) -> DiscreteMeasure:
    return family.eval(params)


@dataclass(frozen=True)
class LandscapeGrid:
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray          # shape (len(axis1), len(axis2))
    distance: str               # "w1" | "ed_sq"

    def value_at(self, i: int, j: int) -> float:
        return float(self.values[i, j])


def _distance_eval(distance: str):
    euclid = GroundMetric.euclidean()
    if distance == "w1":
        return lambda q, p: wasserstein(q, p, euclid, 1.0)
    if distance == "ed_sq":
        return lambda q, p: energy_distance_sq(q, p, euclid)
    raise ValueError(f"unknown landscape distance {distance!r}")


def grid_scan(family: TwoAtomFamily, target: DiscreteMeasure, distance: str,
              axis1: Sequence[float], axis2: Sequence[float]) -> LandscapeGrid:
    """Distance landscape over the theta grid (axis1 x axis2)."""
    axis1 = np.asarray(list(axis1), dtype=float)
    axis2 = np.asarray(list(axis2), dtype=float)
    if axis1.size == 0 or axis2.size == 0:
        raise ValueError("empty landscape grid")
    dist = _distance_eval(distance)
    values = np.empty((len(axis1), len(axis2)))
    for i, t1 in enumerate(axis1):
        for j, t2 in enumerate(axis2):
            values[i, j] = dist(target, family.eval((t1, t2)))
    return LandscapeGrid(axis1=axis1, axis2=axis2, values=values, distance=distance)


def landscape_axes(pitch: float, bound: float = 1.0):
    """Symmetric grid [-bound, bound] with the given pitch (inclusive ends)."""
    count = int(round(2 * bound / pitch)) + 1
    return np.linspace(-bound, bound, count)


@dataclass(frozen=True)
class LocalMinReport:
    is_local_min: bool
    margin: float


def local_min_check(grid: LandscapeGrid, i: int, j: int) -> LocalMinReport:
    """Strict 4-neighbor local minimality of a grid point within the domain."""
    if not (0 <= i < len(grid.axis1) and 0 <= j < len(grid.axis2)):
        raise ValueError("point off the grid")
    center = grid.values[i, j]
    margin = np.inf
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        a, b = i + di, j + dj
        if 0 <= a < len(grid.axis1) and 0 <= b < len(grid.axis2):
            margin = min(margin, float(grid.values[a, b] - center))
    return LocalMinReport(is_local_min=bool(margin > 0.0), margin=float(margin))


def grid_index_of(grid: LandscapeGrid, theta) -> tuple:
    i = int(np.argmin(np.abs(grid.axis1 - theta[0])))
    j = int(np.argmin(np.abs(grid.axis2 - theta[1])))
    return i, j


@dataclass(frozen=True)
class ConvexityReport:
    max_violation: float
    rows: tuple


def mixture_convexity_check(target: DiscreteMeasure, p0: DiscreteMeasure,
                            p1: DiscreteMeasure, distance: str = "w1",
                            t_grid: Sequence[float] = (0.25, 0.5, 0.75)) -> ConvexityReport:
    """Convexity of t -> D(target, (1-t) p0 + t p1) for an IPM distance D.

    ``distance`` is "w1" or "ed" (the square-root energy distance, which is
    the IPM form; the squared form is not mixture convex in general).
    """
    euclid = GroundMetric.euclidean()
    if distance == "w1":
        def dist(a, b):
            return wasserstein(a, b, euclid, 1.0)
    elif distance == "ed":
        def dist(a, b):
            return energy_distance(a, b, euclid)
    else:
        raise ValueError(f"unknown distance {distance!r}")
    d0 = dist(target, p0)
    d1 = dist(target, p1)
    rows = []
    worst = -np.inf
    for t in t_grid:
        dt = dist(target, mixture_at(p0, p1, t))
        violation = dt - ((1.0 - t) * d0 + t * d1)
        rows.append((float(t), float(violation)))
        worst = max(worst, violation)
    return ConvexityReport(max_violation=float(worst), rows=tuple(rows))


@dataclass(frozen=True)
class DisplacementProbeReport:
    interior_excess: float
    discretization_bound: float
    endpoint_value: float
    rows: tuple


def displacement_convexity_probe(ell: float = 0.7,
                                 theta0: float = np.deg2rad(10.0),
                                 theta1: float = np.deg2rad(60.0),
                                 segment_m: int = 64,
                                 circle_m: int = 256,
                                 t_grid: Sequence[float] = (0.5,)) -> DisplacementProbeReport:
    """W1 from a circle to a rotating-segment displacement curve.

    Reports min over interior t of W1(Q, c(t)) - max(W1(Q, c(0)), W1(Q, c(1)))
    together with the half-pitch discretization bound of the two segment
    grids being compared (the circle grid is shared by the compared terms
    and cancels).  A positive excess above the bound falsifies displacement
    convexity of W1 for the underlying continuum measures.
    """
    if not 0.0 < theta0 <= theta1 < np.pi / 2:
        raise ValueError("need 0 < theta0 <= theta1 < pi/2")
    if not 0.0 <= ell <= 1.0:
        raise ValueError("ell must lie in [0, 1]")
    euclid = GroundMetric.euclidean()
    circle = uniform_circle_grid(circle_m)
    family = SegmentFamily(m=segment_m)
    p0 = family.eval((ell, theta0))
    p1 = family.eval((ell, theta1))
    curve = displacement_curve(p0, p1, euclid, p=1.0)
    w0 = wasserstein(circle, p0, euclid, 1.0)
    w1_ = wasserstein(circle, p1, euclid, 1.0)
    endpoint = max(w0, w1_)
    rows = []
    excess = np.inf
    for t in t_grid:
        if not 0.0 < t < 1.0:
            raise ValueError("t_grid must be interior points")
        wt = wasserstein(circle, curve.at(t), euclid, 1.0)
        rows.append((float(t), float(wt)))
        excess = min(excess, wt - endpoint)
    # the interior segment shrinks by cos((theta1-theta0)/2) at the midpoint
    pitch0 = 2.0 * ell / segment_m
    pitch_mid = pitch0 * np.cos((theta1 - theta0) / 2.0)
    bound = 0.5 * pitch0 + 0.5 * pitch_mid
    return DisplacementProbeReport(interior_excess=float(excess),
                                   discretization_bound=float(bound),
                                   endpoint_value=float(endpoint),
                                   rows=tuple(rows))


def expected_diameter(q: DiscreteMeasure) -> float:
    """2 min_{u0} E_{u~q} |u - u0| over candidate origins (atoms and mean)."""
    candidates = np.vstack([q.atoms, q.mean()[None, :]])
    diff = q.atoms[:, None, :] - candidates[None, :, :]
    dists = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    per_candidate = q.weights @ dists
    return 2.0 * float(per_candidate.min())


@dataclass(frozen=True)
class AlmostConvexityReport:
    max_excess_over_bound: float
    K_bound: float
    rows: tuple


def almost_convexity_check(target: DiscreteMeasure, p0: DiscreteMeasure,
                           p1: DiscreteMeasure,
                           t_grid: Sequence[float] = (0.25, 0.5, 0.75)) -> AlmostConvexityReport:
    """Relaxed convexity of W1 along a displacement curve.

    Checks W1(Q, c(t)) <= (1-t) W1(Q, p0) + t W1(Q, p1) + 2 t (1-t) K with
    K bounded by the expected diameter of the target; the excess over this
    bound must be nonpositive up to solver tolerance.
    """
    euclid = GroundMetric.euclidean()
    curve = displacement_curve(p0, p1, euclid, p=1.0)
    k_bound = expected_diameter(target)
    d0 = wasserstein(target, p0, euclid, 1.0)
    d1 = wasserstein(target, p1, euclid, 1.0)
    rows = []
    worst = -np.inf
    for t in t_grid:
        dt = wasserstein(target, curve.at(t), euclid, 1.0)
        excess = dt - ((1.0 - t) * d0 + t * d1 + 2.0 * t * (1.0 - t) * k_bound)
        rows.append((float(t), float(excess)))
        worst = max(worst, excess)
    return AlmostConvexityReport(max_excess_over_bound=float(worst),
                                 K_bound=float(k_bound), rows=tuple(rows))


def level_set_components(grid: LandscapeGrid, level: float) -> int:
    """Number of 4-connected components of {value <= level} on the grid."""
    mask = grid.values <= level
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    _, count = ndimage.label(mask, structure=structure)
    return int(count)


def two_atom_w1_oracle(target_theta, theta) -> float:
    """Closed-form W1 between two-atom measures: best of the two matchings."""
    q = np.asarray(target_theta, dtype=float)
    t = np.asarray(theta, dtype=float)
    return float(min(np.linalg.norm(q - t), np.linalg.norm(q + t)))


def two_atom_ed_sq_oracle(target_theta, theta) -> float:
    """Closed-form squared energy distance between two-atom measures."""
    q = np.asarray(target_theta, dtype=float)
    t = np.asarray(theta, dtype=float)
    return float(np.linalg.norm(q - t) + np.linalg.norm(q + t)
                 - np.linalg.norm(q) - np.linalg.norm(t))
