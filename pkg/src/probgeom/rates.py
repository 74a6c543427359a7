"""Statistical-rate experiments: sample complexity, bias, and tightness.

All experiments draw from counter-keyed random streams so trials can run
in any order (or in parallel) and still reproduce bit-identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .kernels import ed_bias_exact, energy_distance_sq
from .measures import (DiscreteMeasure, GroundMetric, RngStream, dirac,
                       sample_from, sample_uniform_sphere)
from .transport import solve_exact_ot, wasserstein

_EUCLID = GroundMetric.euclidean()


def _gauss_atom_target(dim: int, master_seed: int, n_atoms: int = 8) -> DiscreteMeasure:
    """Deterministic discrete target: seeded Gaussian cloud, equal weights."""
    g = RngStream(master_seed, 1).child(dim, 0, 0)
    atoms = g.normal(size=(n_atoms, dim))
    return DiscreteMeasure(atoms, np.full(n_atoms, 1.0 / n_atoms))


def _w1_trial(args):
    dim, n, trial, master_seed, ref_size = args
    stream = RngStream(master_seed, 0)
    reference = sample_uniform_sphere(dim, ref_size, stream.child(dim, 0, 0))
    q_n = sample_uniform_sphere(dim, n, stream.child(dim, n, trial + 1))
    return (dim, n, trial, wasserstein(q_n, reference, _EUCLID, 1.0))


def _ed_trial(args):
    dim, n, trial, master_seed = args
    stream = RngStream(master_seed, 1)
    target = _gauss_atom_target(dim, master_seed)
    q_n = sample_from(target, n, stream.child(dim, n, trial + 1))
    return (dim, n, trial, energy_distance_sq(q_n, target, _EUCLID))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float


def fit_loglog_slope(ns: Sequence[int], means: Sequence[float]) -> SlopeFit:
    """Least squares on (log n, log mean) with the usual slope standard error."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(means, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(((x - x.mean()) ** 2).sum())
    return SlopeFit(slope=float(coef[0]), stderr=math.sqrt(s2 / sxx),
                    intercept=float(coef[1]))


@dataclass(frozen=True)
class RateReport:
    distance: str
    rows: tuple                   # (dim, n, trial, value)
    means: dict                   # (dim, n) -> mean value
    std_errors: dict              # (dim, n) -> standard error of the mean
    slopes: dict                  # dim -> SlopeFit
    expected_means: dict          # (dim, n) -> exact expectation (ED only)


def rate_sweep(distance: str, dims: Sequence[int], ns: Sequence[int],
               trials: int, rng: RngStream, reference_factor: int = 8,
               threads: int = 1) -> RateReport:
    """Convergence-rate sweep of W1 or squared ED on empirical measures.

    W1 samples the uniform sphere per dim and measures the distance to an
    independent frozen reference sample of size reference_factor * max(ns).
    ED_sq samples a fixed discrete target and measures the exact squared
    energy distance back to it, whose expectation is ed_bias_exact / n.
    """
    ns = sorted(int(n) for n in ns)
    if len(ns) == 0 or len(dims) == 0:
        raise ValueError("empty sweep")
    if sorted(set(ns)) != ns:
        raise ValueError("ns must be strictly increasing")
    master = rng.master_seed
    tasks = []
    if distance == "w1":
        ref_size = reference_factor * max(ns)
        for dim in dims:
            for n in ns:
                for trial in range(trials):
                    tasks.append((dim, n, trial, master, ref_size))
        worker = _w1_trial
    elif distance == "ed_sq":
        for dim in dims:
            for n in ns:
                for trial in range(trials):
                    tasks.append((dim, n, trial, master))
        worker = _ed_trial
    else:
        raise ValueError(f"unknown rate distance {distance!r}")

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(worker, tasks, chunksize=1))
    else:
        rows = [worker(t) for t in tasks]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))

    means: dict = {}
    ses: dict = {}
    for dim in dims:
        for n in ns:
            vals = np.array([r[3] for r in rows if r[0] == dim and r[1] == n])
            means[(dim, n)] = float(vals.mean())
            ses[(dim, n)] = float(vals.std(ddof=1) / math.sqrt(len(vals))) \
                if len(vals) > 1 else 0.0
    slopes = {dim: fit_loglog_slope(ns, [means[(dim, n)] for n in ns])
              for dim in dims}
    expected: dict = {}
    if distance == "ed_sq":
        for dim in dims:
            bias = ed_bias_exact(_gauss_atom_target(dim, master), _EUCLID)
            for n in ns:
                expected[(dim, n)] = bias / n
    return RateReport(distance=distance, rows=tuple(rows), means=means,
                      std_errors=ses, slopes=slopes, expected_means=expected)


@dataclass(frozen=True)
class SphereReport:
    dim: int
    n: int
    probes: int
    mean_nearest: float
    w1_to_dirac_empirical: float
    w1_to_dirac_target: float


def sphere_experiment(dim: int = 128, n: int = 1024, probes: int = 1024,
                      rng: Optional[RngStream] = None) -> SphereReport:
    """High-dimensional sphere pathology of the empirical W1 distance.

    Fresh sphere points stay ~sqrt(2) away from every one of n samples when
    dim >> log n, while the Dirac at the origin sits at W1 distance exactly
    1 from both the sphere measure and its empirical approximation.
    """
    rng = rng if rng is not None else RngStream(0)
    q_n = sample_uniform_sphere(dim, n, rng.child(0))
    fresh = sample_uniform_sphere(dim, probes, rng.child(1))
    diff = fresh.atoms[:, None, :] - q_n.atoms[None, :, :]
    nearest = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min(axis=1)
    origin = dirac(np.zeros(dim))
    w1_emp = wasserstein(q_n, origin, _EUCLID, 1.0)
    return SphereReport(dim=dim, n=n, probes=probes,
                        mean_nearest=float(nearest.mean()),
                        w1_to_dirac_empirical=w1_emp,
                        w1_to_dirac_target=1.0)


@dataclass(frozen=True)
class InequalityReport:
    rows: tuple                  # (trial, ed_sq, w1, ratio); ratio is nan for
    max_ratio: float             # degenerate (w1 ~ 0) pairs, which are skipped
    tightness_gap_at_diracs: float
    degenerate: int


PairGenerator = Union[str, Callable[[np.random.Generator], tuple]]


def _random_pair(g: np.random.Generator, atoms: int = 6, dim: int = 2):
    q = DiscreteMeasure(g.normal(size=(atoms, dim)), np.full(atoms, 1.0 / atoms))
    p = DiscreteMeasure(g.normal(size=(atoms, dim)), np.full(atoms, 1.0 / atoms))
    return q, p


def _dirac_pair(g: np.random.Generator, dim: int = 3):
    return dirac(g.normal(size=dim)), dirac(g.normal(size=dim))


def inequality_sweep(pair_generator: PairGenerator, trials: int,
                     rng: RngStream) -> InequalityReport:
    """Sweep of the squared-ED vs 2 W1 upper bound.

    ``pair_generator`` is "random" (6-atom clouds), "dirac", or a callable
    returning a measure pair from a generator.  Ratios are ED^2 / (2 W1);
    pairs with W1 below 1e-15 are reported as degenerate and skipped.
    """
    if pair_generator == "random":
        gen = _random_pair
    elif pair_generator == "dirac":
        gen = _dirac_pair
    else:
        gen = pair_generator
    rows = []
    max_ratio = -np.inf
    dirac_gap = 0.0
    degenerate = 0
    any_dirac = False
    for trial in range(trials):
        q, p = gen(rng.child(trial))
        ed2 = energy_distance_sq(q, p, _EUCLID)
        w1 = wasserstein(q, p, _EUCLID, 1.0)
        if w1 <= 1e-15:
            rows.append((trial, ed2, w1, math.nan))
            degenerate += 1
            continue
        ratio = ed2 / (2.0 * w1)
        rows.append((trial, ed2, w1, ratio))
        max_ratio = max(max_ratio, ratio)
        if q.n_atoms == 1 and p.n_atoms == 1:
            any_dirac = True
            dirac_gap = max(dirac_gap, abs(ratio - 1.0))
    return InequalityReport(rows=tuple(rows), max_ratio=float(max_ratio),
                            tightness_gap_at_diracs=(dirac_gap if any_dirac else math.nan),
                            degenerate=degenerate)


@dataclass(frozen=True)
class MinibatchReport:
    batch_size: int
    batches: int
    mean_minibatch_w1: float
    se_minibatch_w1: float
    true_w1: float
    ed_minibatch_mean: float
    ed_minibatch_se: float
    true_ed_sq: float


def _ed_sq_u_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Unbiased estimator of the squared energy distance from two k-samples.

    Cross term uses the full double sum; within terms exclude the diagonal,
    which removes the 1/k bias of the V-statistic.  Needs k >= 2.
    """
    k = len(x)
    dxy = np.sqrt(((x[:, None, :] - y[None, :, :]) ** 2).sum(-1))
    dxx = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    dyy = np.sqrt(((y[:, None, :] - y[None, :, :]) ** 2).sum(-1))
    cross = dxy.mean()
    within_x = dxx.sum() / (k * (k - 1))
    within_y = dyy.sum() / (k * (k - 1))
    return 2.0 * cross - within_x - within_y


def minibatch_bias_experiment(q: DiscreteMeasure, p: DiscreteMeasure,
                              batch_size: int, batches: int,
                              rng: RngStream) -> MinibatchReport:
    """Bias of minibatch W1 against the unbiased pairwise ED estimator.

    Empirical W1 between k-sample minibatches overestimates W1(q, p); for
    k = 1 it degenerates to the mean ground distance.  The ED U-statistic
    is unbiased for ED^2 (reported as nan when k < 2).
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if batch_size > 512:
        raise ValueError("batch_size capped at 512")
    if batches < 1:
        raise ValueError("batches must be >= 1")
    w1_vals = np.empty(batches)
    ed_vals = np.empty(batches) if batch_size >= 2 else None
    for b in range(batches):
        g = rng.child(b)
        qb = sample_from(q, batch_size, g)
        pb = sample_from(p, batch_size, g)
        w1_vals[b] = wasserstein(qb, pb, _EUCLID, 1.0)
        if ed_vals is not None:
            ed_vals[b] = _ed_sq_u_statistic(qb.atoms, pb.atoms)
    true_w1 = wasserstein(q, p, _EUCLID, 1.0)
    true_ed = energy_distance_sq(q, p, _EUCLID)
    se_w1 = float(w1_vals.std(ddof=1) / math.sqrt(batches)) if batches > 1 else 0.0
    if ed_vals is not None:
        ed_mean = float(ed_vals.mean())
        ed_se = float(ed_vals.std(ddof=1) / math.sqrt(batches)) if batches > 1 else 0.0
    else:
        ed_mean = math.nan
        ed_se = math.nan
    return MinibatchReport(batch_size=batch_size, batches=batches,
                           mean_minibatch_w1=float(w1_vals.mean()),
                           se_minibatch_w1=se_w1, true_w1=true_w1,
                           ed_minibatch_mean=ed_mean, ed_minibatch_se=ed_se,
                           true_ed_sq=true_ed)


def enumerate_ed_expectation(q: DiscreteMeasure, p: DiscreteMeasure,
                             n: int, metric: Optional[GroundMetric] = None) -> float:
    """Exact E[ED(Q_n, p)^2] by enumerating all n-tuples of q's atoms.

    Independent oracle for the finite-sample bias identity; exponential in
    n, so keep n tiny.
    """
    if metric is None:
        metric = _EUCLID
    total = 0.0
    idx = np.zeros(n, dtype=int)
    k = q.n_atoms
    while True:
        prob = float(np.prod(q.weights[idx]))
        if prob > 0.0:
            emp = DiscreteMeasure(q.atoms[idx], np.full(n, 1.0 / n))
            total += prob * energy_distance_sq(emp, p, metric)
        pos = n - 1
        while pos >= 0 and idx[pos] == k - 1:
            idx[pos] = 0
            pos -= 1
        if pos < 0:
            return total
        idx[pos] += 1
