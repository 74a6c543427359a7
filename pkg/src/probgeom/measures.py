"""Discrete probability measures, ground metrics, and seeded samplers.

A measure is a finite list of atoms in R^dim with nonnegative weights
summing to one.  Ground metrics cover the Euclidean power family
``|x - y|^beta`` for ``0 < beta <= 2`` and the L1 distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_SUM_TOL = 1e-12
INPUT_SUM_TOL = 1e-9

_EUCLIDEAN_POWER = "euclidean_power"
_L1 = "l1"


@dataclass(frozen=True)
class GroundMetric:
    """Descriptor of the sample-space distance d(x, y)."""

    kind: str
    beta: float = 1.0

    @classmethod
    def euclidean(cls) -> "GroundMetric":
        return cls(_EUCLIDEAN_POWER, 1.0)

    @classmethod
    def l1(cls) -> "GroundMetric":
        return cls(_L1, 1.0)

    @classmethod
    def euclidean_power(cls, beta: float, allow_indefinite: bool = False) -> "GroundMetric":
        """|x-y|^beta kernel.  beta outside (0, 2] needs ``allow_indefinite``."""
        if not allow_indefinite and not 0.0 < beta <= 2.0:
            raise ValueError(f"beta must lie in (0, 2], got {beta}")
        if beta <= 0.0:
            raise ValueError(f"beta must be positive, got {beta}")
        return cls(_EUCLIDEAN_POWER, float(beta))

    @property
    def is_metric(self) -> bool:
        """True when the triangle inequality is guaranteed (Euclidean, L1)."""
        return self.kind == _L1 or (self.kind == _EUCLIDEAN_POWER and self.beta == 1.0)

    @property
    def is_negative_definite(self) -> bool:
        return self.kind == _L1 or 0.0 < self.beta <= 2.0

    def distance(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
        if self.kind == _L1:
            return float(np.abs(x - y).sum())
        base = float(np.linalg.norm(x - y))
        return base if self.beta == 1.0 else base ** self.beta

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Distance matrix between the rows of X and Y."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        diff = X[:, None, :] - Y[None, :, :]
        if self.kind == _L1:
            return np.abs(diff).sum(axis=2)
        D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        return D if self.beta == 1.0 else D ** self.beta

    def describe(self) -> str:
        if self.kind == _L1:
            return "l1"
        if self.beta == 1.0:
            return "euclidean"
        return f"euclidean^{self.beta:g}"


def ground_distance(metric: GroundMetric, x, y) -> float:
    """Distance between two points under the given ground metric."""
    return metric.distance(x, y)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure: atoms (n, dim), weights (n,)."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 2:
            atoms = np.atleast_2d(atoms)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError("atoms and weights must have equal length")
        if atoms.shape[0] == 0:
            raise ValueError("a measure needs at least one atom")
        if atoms.shape[1] < 1:
            raise ValueError("atoms must have dimension >= 1")
        if np.any(weights < 0.0):
            raise ValueError("negative weight")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms and weights must be finite")
        atoms = atoms.copy()
        weights = weights.copy()
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def __repr__(self):
        return f"DiscreteMeasure(n_atoms={self.n_atoms}, dim={self.dim})"


def make_discrete(points, weights) -> DiscreteMeasure:
    """Validated constructor: renormalizes weights whose sum is within 1e-9 of 1."""
    atoms = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float)
    if atoms.shape[0] != w.shape[0]:
        raise ValueError("points and weights must have equal length")
    if np.any(w < 0.0):
        raise ValueError("negative weight")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("zero total weight")
    if abs(total - 1.0) > INPUT_SUM_TOL:
        raise ValueError(f"weights sum to {total!r}, beyond the 1e-9 tolerance")
    return DiscreteMeasure(atoms, w / total)


def dirac(point) -> DiscreteMeasure:
    return DiscreteMeasure(np.atleast_2d(np.asarray(point, dtype=float)), np.array([1.0]))


def merge_duplicate_atoms(measure: DiscreteMeasure) -> DiscreteMeasure:
    """Merge atoms that coincide exactly; drops zero-weight duplicates' slack."""
    uniq, inverse = np.unique(measure.atoms, axis=0, return_inverse=True)
    w = np.bincount(inverse, weights=measure.weights, minlength=len(uniq))
    return DiscreteMeasure(uniq, w)


def measures_close(a: DiscreteMeasure, b: DiscreteMeasure, tol: float = 1e-12) -> bool:
    """Equality up to atom reordering, duplicate merging, and weight tolerance."""
    if a.dim != b.dim:
        return False
    am = merge_duplicate_atoms(a)
    bm = merge_duplicate_atoms(b)
    keep_a = am.weights > 0.0
    keep_b = bm.weights > 0.0
    atoms_a, w_a = am.atoms[keep_a], am.weights[keep_a]
    atoms_b, w_b = bm.atoms[keep_b], bm.weights[keep_b]
    if atoms_a.shape != atoms_b.shape:
        return False
    return bool(np.array_equal(atoms_a, atoms_b) and np.abs(w_a - w_b).max() <= tol)


def common_support(q: DiscreteMeasure, p: DiscreteMeasure):
    """Union of atom sets matched by exact coordinate equality.

    Returns (atoms, q_weights, p_weights) on the union support.
    """
    if q.dim != p.dim:
        raise ValueError(f"dimension mismatch: {q.dim} vs {p.dim}")
    stacked = np.vstack([q.atoms, p.atoms])
    uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
    qw = np.zeros(len(uniq))
    pw = np.zeros(len(uniq))
    np.add.at(qw, inverse[: q.n_atoms], q.weights)
    np.add.at(pw, inverse[q.n_atoms :], p.weights)
    return uniq, qw, pw


# ---------------------------------------------------------------------------
# reference measures used by the experiments


def uniform_circle_grid(m: int) -> DiscreteMeasure:
    """m equally spaced unit-circle atoms at angles 2*pi*k/m, equal weights."""
    if m < 1:
        raise ValueError("m must be >= 1")
    ang = 2.0 * np.pi * np.arange(m) / m
    atoms = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return DiscreteMeasure(atoms, np.full(m, 1.0 / m))


def segment_grid(center, direction, half_length: float, m: int) -> DiscreteMeasure:
    """Midpoint discretization of the uniform measure on a segment.

    The segment runs from center - half_length*direction to
    center + half_length*direction; ``direction`` must be a unit vector.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    center = np.asarray(center, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    offsets = half_length * (-1.0 + (2.0 * np.arange(m) + 1.0) / m)
    atoms = center[None, :] + offsets[:, None] * direction[None, :]
    return DiscreteMeasure(atoms, np.full(m, 1.0 / m))


def vertical_segment_grid(theta: float, m: int) -> DiscreteMeasure:
    """Midpoint grid of the uniform measure on {(theta, t): t in [0, 1]}."""
    if m < 1:
        raise ValueError("m must be >= 1")
    t = (np.arange(m) + 0.5) / m
    atoms = np.stack([np.full(m, float(theta)), t], axis=1)
    return DiscreteMeasure(atoms, np.full(m, 1.0 / m))


def two_atom(theta) -> DiscreteMeasure:
    """The two-point measure (delta_theta + delta_{-theta}) / 2."""
    theta = np.asarray(theta, dtype=float)
    return DiscreteMeasure(np.stack([theta, -theta]), np.array([0.5, 0.5]))


# ---------------------------------------------------------------------------
# seeded sampling


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (master_seed, stream_index).

    Identical keys give identical draws; distinct indices give independent
    streams, so parallel trials are reproducible regardless of scheduling.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        )

    def child(self, *keys: int) -> np.random.Generator:
        """Independent generator for a nested index tuple (e.g. dim, n, trial)."""
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, *keys))
        )


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def sample_uniform_sphere(dim: int, n: int, rng) -> DiscreteMeasure:
    """n equal-weight draws from the uniform measure on the unit sphere."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if dim < 2:
        raise ValueError("sphere sampling needs dim >= 2")
    g = _as_generator(rng)
    x = g.normal(size=(n, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return DiscreteMeasure(x, np.full(n, 1.0 / n))


def sample_uniform_circle(n: int, rng) -> DiscreteMeasure:
    if n < 1:
        raise ValueError("n must be >= 1")
    g = _as_generator(rng)
    ang = g.uniform(0.0, 2.0 * np.pi, size=n)
    atoms = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return DiscreteMeasure(atoms, np.full(n, 1.0 / n))


def sample_uniform_segment(start, end, n: int, rng) -> DiscreteMeasure:
    if n < 1:
        raise ValueError("n must be >= 1")
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    g = _as_generator(rng)
    t = g.uniform(size=n)
    atoms = start[None, :] + t[:, None] * (end - start)[None, :]
    return DiscreteMeasure(atoms, np.full(n, 1.0 / n))


def sample_from(measure: DiscreteMeasure, n: int, rng) -> DiscreteMeasure:
    """Empirical measure of n independent draws from a discrete measure."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = _as_generator(rng)
    idx = g.choice(measure.n_atoms, size=n, p=measure.weights)
    return DiscreteMeasure(measure.atoms[idx], np.full(n, 1.0 / n))
