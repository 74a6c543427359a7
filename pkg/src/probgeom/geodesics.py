"""Curves in measure space: mixtures, displacement interpolations, hybrids.

A curve evaluates to a discrete measure at each t in [0, 1].  Verification
predicates (constant speed, four-point alignment) work through exact
transport solves, so they certify rather than assume the geodesic property.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .kernels import energy_distance
from .measures import DiscreteMeasure, GroundMetric, merge_duplicate_atoms
from .transport import TransportPlan, solve_exact_ot, wasserstein

PLAN_MASS_TOL = 1e-15


def _merged(atoms, weights) -> DiscreteMeasure:
    measure = DiscreteMeasure(np.asarray(atoms, dtype=float), np.asarray(weights))
    merged = merge_duplicate_atoms(measure)
    keep = merged.weights > 0.0
    if keep.all():
        return merged
    w = merged.weights[keep]
    return DiscreteMeasure(merged.atoms[keep], w / w.sum())


@dataclass(frozen=True)
class Curve:
    """Parametrized family t -> measure joining p0 to p1."""

    kind: str
    p0: DiscreteMeasure
    p1: DiscreteMeasure
    xs: Optional[np.ndarray] = None       # plan-entry source points
    ys: Optional[np.ndarray] = None       # plan-entry target points
    masses: Optional[np.ndarray] = None   # plan-entry masses
    schedule: Optional[tuple] = None      # per-entry rules (hybrid only)

    def at(self, t: float) -> DiscreteMeasure:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t={t} outside [0, 1]")
        if self.kind == "mixture":
            atoms = np.vstack([self.p0.atoms, self.p1.atoms])
            weights = np.concatenate([(1.0 - t) * self.p0.weights,
                                      t * self.p1.weights])
            return _merged(atoms, weights)
        if self.kind == "displacement":
            atoms = (1.0 - t) * self.xs + t * self.ys
            return _merged(atoms, self.masses)
        atoms = []
        weights = []
        for (x, y, mass), rule in zip(zip(self.xs, self.ys, self.masses),
                                      self.schedule):
            if rule == "displace":
                atoms.append(((1.0 - t) * x + t * y)[None, :])
                weights.append(np.array([mass]))
            elif rule == "mixture":
                atoms.append(np.stack([x, y]))
                weights.append(np.array([(1.0 - t) * mass, t * mass]))
            else:
                _, k = rule
                # caterpillar smear: the mass spreads uniformly over the
                # leading [back, front] part of the segment, front moving at
                # speed 2 in the first half, back catching up in the second;
                # the average speed is 1 at every time, so W1 speed is exact
                front = min(2.0 * t, 1.0)
                back = max(0.0, 2.0 * t - 1.0)
                s = back + (front - back) * (np.arange(k) + 0.5) / k
                atoms.append(x[None, :] + s[:, None] * (y - x)[None, :])
                weights.append(np.full(k, mass / k))
        return _merged(np.vstack(atoms), np.concatenate(weights))


def mixture_curve(p0: DiscreteMeasure, p1: DiscreteMeasure) -> Curve:
    if p0.dim != p1.dim:
        raise ValueError(f"dimension mismatch: {p0.dim} vs {p1.dim}")
    return Curve(kind="mixture", p0=p0, p1=p1)


def mixture_at(p0: DiscreteMeasure, p1: DiscreteMeasure, t: float) -> DiscreteMeasure:
    """The mixture (1-t) p0 + t p1 as a merged discrete measure."""
    return mixture_curve(p0, p1).at(t)


def _plan_entries(plan: TransportPlan):
    ii, jj = np.nonzero(plan.coupling > PLAN_MASS_TOL)
    xs = plan.source.atoms[ii]
    ys = plan.target.atoms[jj]
    masses = plan.coupling[ii, jj]
    return xs, ys, masses / masses.sum()


def displacement_curve(p0: DiscreteMeasure, p1: DiscreteMeasure,
                       metric: Optional[GroundMetric] = None,
                       p: float = 1.0) -> Curve:
    """Straight-line interpolation of an optimal transport plan.

    Requires the Euclidean metric: each plan entry's grain travels the
    segment from its source atom to its target atom at constant speed.
    """
    if metric is None:
        metric = GroundMetric.euclidean()
    if metric.kind != "euclidean_power" or metric.beta != 1.0:
        raise ValueError("displacement curves require the Euclidean metric")
    plan, _ = solve_exact_ot(p0, p1, metric, p)
    xs, ys, masses = _plan_entries(plan)
    return Curve(kind="displacement", p0=p0, p1=p1, xs=xs, ys=ys, masses=masses)


ScheduleRule = Union[str, tuple]


def hybrid_curve(p0: DiscreteMeasure, p1: DiscreteMeasure,
                 metric: Optional[GroundMetric] = None,
                 schedule: Sequence[ScheduleRule] = (),
                 p: float = 1.0) -> Curve:
    """Curve built on an optimal plan with one rule per positive plan entry.

    Rules: "displace", "mixture", or ("smear", k).  Entries are ordered
    row-major by (source atom, target atom) index.  On a W1-optimal plan
    every schedule yields a W1 geodesic.
    """
    if metric is None:
        metric = GroundMetric.euclidean()
    if metric.kind != "euclidean_power" or metric.beta != 1.0:
        raise ValueError("hybrid curves require the Euclidean metric")
    schedule = tuple(schedule)
    if len(schedule) == 0:
        raise ValueError("empty schedule")
    plan, _ = solve_exact_ot(p0, p1, metric, p)
    xs, ys, masses = _plan_entries(plan)
    if len(schedule) != len(masses):
        raise ValueError(f"schedule length {len(schedule)} != "
                         f"{len(masses)} positive plan entries")
    for rule in schedule:
        if rule in ("displace", "mixture"):
            continue
        if (isinstance(rule, tuple) and len(rule) == 2 and rule[0] == "smear"
                and int(rule[1]) >= 1):
            continue
        raise ValueError(f"unknown schedule rule {rule!r}")
    schedule = tuple(r if isinstance(r, str) else ("smear", int(r[1]))
                     for r in schedule)
    return Curve(kind="hybrid", p0=p0, p1=p1, xs=xs, ys=ys, masses=masses,
                 schedule=schedule)


@dataclass(frozen=True)
class TripleCoupling:
    """Sparse coupling on three atom lists with prescribed pairwise marginals."""

    i: np.ndarray
    j: np.ndarray
    k: np.ndarray
    mass: np.ndarray
    n_atoms: tuple

    def marginal_12(self, shape=None):
        out = np.zeros((self.n_atoms[0], self.n_atoms[1]))
        np.add.at(out, (self.i, self.j), self.mass)
        return out

    def marginal_23(self, shape=None):
        out = np.zeros((self.n_atoms[1], self.n_atoms[2]))
        np.add.at(out, (self.j, self.k), self.mass)
        return out


def glue_plans(plan12: TransportPlan, plan23: TransportPlan) -> TripleCoupling:
    """Composite coupling with mass(i,j,k) = pi12(i,j) pi23(j,k) / mu2(j).

    The middle marginals of the two plans must agree within 1e-9 on the
    same atom list; 0/0 is treated as 0.
    """
    if not np.array_equal(plan12.target.atoms, plan23.source.atoms):
        raise ValueError("gluing needs a shared middle atom list")
    mu2_a = plan12.coupling.sum(axis=0)
    mu2_b = plan23.coupling.sum(axis=1)
    if np.abs(mu2_a - mu2_b).max() > 1e-9:
        raise ValueError("middle marginals disagree beyond 1e-9")
    ii, jj, kk, mm = [], [], [], []
    for j in np.where(mu2_a > PLAN_MASS_TOL)[0]:
        col = plan12.coupling[:, j]
        row = plan23.coupling[j, :]
        src = np.where(col > PLAN_MASS_TOL)[0]
        dst = np.where(row > PLAN_MASS_TOL)[0]
        if len(src) == 0 or len(dst) == 0:
            continue
        block = np.outer(col[src], row[dst]) / mu2_a[j]
        gi, gk = np.meshgrid(src, dst, indexing="ij")
        ii.append(gi.ravel())
        jj.append(np.full(gi.size, j))
        kk.append(gk.ravel())
        mm.append(block.ravel())
    return TripleCoupling(
        i=np.concatenate(ii), j=np.concatenate(jj), k=np.concatenate(kk),
        mass=np.concatenate(mm),
        n_atoms=(plan12.source.n_atoms, plan12.target.n_atoms,
                 plan23.target.n_atoms),
    )


@dataclass(frozen=True)
class SpeedReport:
    rows: tuple            # (t, t_prime, violation)
    max_violation: float
    base_distance: float


def constant_speed_check(curve: Curve, metric: Optional[GroundMetric] = None,
                         p: float = 1.0, grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
                         distance: str = "wasserstein") -> SpeedReport:
    """Max deviation from D(c(t), c(t')) = |t - t'| D(p0, p1) over grid pairs.

    ``distance`` is "wasserstein" (uses metric and p) or "energy" (the IPM
    form, square root of the squared energy distance).
    """
    if metric is None:
        metric = GroundMetric.euclidean()
    if distance == "wasserstein":
        def dist(a, b):
            return wasserstein(a, b, metric, p)
    elif distance == "energy":
        def dist(a, b):
            return energy_distance(a, b, metric)
    else:
        raise ValueError(f"unknown distance {distance!r}")
    grid = sorted(set(float(t) for t in grid))
    base = dist(curve.p0, curve.p1)
    evals = {t: curve.at(t) for t in grid}
    rows = []
    worst = 0.0
    for a_idx in range(len(grid)):
        for b_idx in range(a_idx + 1, len(grid)):
            t, t2 = grid[a_idx], grid[b_idx]
            v = abs(dist(evals[t], evals[t2]) - (t2 - t) * base)
            rows.append((t, t2, v))
            worst = max(worst, v)
    return SpeedReport(rows=tuple(rows), max_violation=worst, base_distance=base)


@dataclass(frozen=True)
class AlignmentReport:
    max_defect: float
    quadruples: int


def w1_alignment_check(p0: DiscreteMeasure, pt: DiscreteMeasure,
                       pt2: DiscreteMeasure, p1: DiscreteMeasure,
                       metric: Optional[GroundMetric] = None) -> AlignmentReport:
    """Four-point alignment test for membership in a W1 geodesic.

    Glues W1-optimal plans p0->pt->pt2->p1 into a coupling on quadruples
    (x, u, v, z) and reports the largest violation of
    d(x,u) + d(u,v) + d(v,z) = d(x,z) over the support.  Near-zero defect
    certifies the three interior legs sit on shortest paths.
    """
    if metric is None:
        metric = GroundMetric.euclidean()
    if not metric.is_metric:
        raise ValueError("alignment check needs a true metric (Euclidean or L1)")
    plan_a, _ = solve_exact_ot(p0, pt, metric, 1.0)
    plan_b, _ = solve_exact_ot(pt, pt2, metric, 1.0)
    plan_c, _ = solve_exact_ot(pt2, p1, metric, 1.0)
    triple = glue_plans(plan_a, plan_b)
    d_xu = metric.pairwise(p0.atoms, pt.atoms)
    d_uv = metric.pairwise(pt.atoms, pt2.atoms)
    d_vz = metric.pairwise(pt2.atoms, p1.atoms)
    d_xz = metric.pairwise(p0.atoms, p1.atoms)
    mu3 = plan_c.coupling.sum(axis=1)
    worst = 0.0
    count = 0
    for i, j, k, mass in zip(triple.i, triple.j, triple.k, triple.mass):
        if mass <= PLAN_MASS_TOL or mu3[k] <= PLAN_MASS_TOL:
            continue
        row = plan_c.coupling[k]
        for el in np.where(row > PLAN_MASS_TOL)[0]:
            q_mass = mass * row[el] / mu3[k]
            if q_mass <= PLAN_MASS_TOL:
                continue
            defect = abs(d_xu[i, j] + d_uv[j, k] + d_vz[k, el] - d_xz[i, el])
            worst = max(worst, defect)
            count += 1
    return AlignmentReport(max_defect=worst, quadruples=count)
