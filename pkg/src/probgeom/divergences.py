"""f-divergences and Total Variation on exactly shared supports.

Atoms are matched by exact coordinate equality: these criteria compare
probability values and are blind to the sample-space geometry, which is
precisely the pathology the segment example demonstrates.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .measures import DiscreteMeasure, common_support


class FDivergenceKind(enum.Enum):
    TOTAL_VARIATION = "tv"
    KULLBACK_LEIBLER = "kl"
    REVERSE_KL = "reverse-kl"
    GAN_JENSEN_SHANNON = "gan-js"


def generator_eval(kind: FDivergenceKind, t: float) -> float:
    """The convex generator f(t) of the divergence, t > 0 (t = 0 as a limit)."""
    if t < 0.0:
        raise ValueError("generator domain is t >= 0")
    if kind is FDivergenceKind.TOTAL_VARIATION:
        return 0.5 * abs(t - 1.0)
    if kind is FDivergenceKind.KULLBACK_LEIBLER:
        return t * math.log(t) if t > 0.0 else 0.0
    if kind is FDivergenceKind.REVERSE_KL:
        if t == 0.0:
            return math.inf
        return -math.log(t)
    # GAN criterion generator, taken verbatim: t log t - (t+1) log(t+1).
    # Note f(1) = -2 log 2, so this kind is the shifted GAN objective, not a
    # nonnegative divergence; it is 0 exactly for disjoint supports.
    tlogt = t * math.log(t) if t > 0.0 else 0.0
    return tlogt - (t + 1.0) * math.log(t + 1.0)


_CONJUGATE_DOMAINS = {
    FDivergenceKind.TOTAL_VARIATION: (-0.5, 0.5),
    FDivergenceKind.KULLBACK_LEIBLER: (-math.inf, math.inf),
    FDivergenceKind.REVERSE_KL: (-math.inf, 0.0),
    FDivergenceKind.GAN_JENSEN_SHANNON: (-math.inf, 0.0),
}


def conjugate_domain(kind: FDivergenceKind) -> tuple[float, float]:
    """(lo, hi) of dom(f*); open at 0 for the log-based kinds."""
    return _CONJUGATE_DOMAINS[kind]


def conjugate_eval(kind: FDivergenceKind, u: float) -> float:
    """Closed-form convex conjugate f*(u); raises outside its domain."""
    lo, hi = _CONJUGATE_DOMAINS[kind]
    if kind is FDivergenceKind.TOTAL_VARIATION:
        if not lo <= u <= hi:
            raise ValueError(f"u={u} outside dom(f*) = [-1/2, 1/2]")
        return u
    if kind is FDivergenceKind.KULLBACK_LEIBLER:
        return math.exp(u - 1.0)
    if u >= 0.0:
        raise ValueError(f"u={u} outside dom(f*) = (-inf, 0)")
    if kind is FDivergenceKind.REVERSE_KL:
        return -1.0 - math.log(-u)
    return -math.log(1.0 - math.exp(u))


def f_divergence(kind: FDivergenceKind, q: DiscreteMeasure, p: DiscreteMeasure) -> float:
    """D_f(q, p) over the union support; may be +inf.

    Conventions: 0 * f(0/0) = 0; mass of q where p vanishes contributes the
    limit of f(t)/t, which is +inf for KL and 1/2 per unit mass for TV.
    """
    _, qw, pw = common_support(q, p)
    if kind is FDivergenceKind.TOTAL_VARIATION:
        return 0.5 * float(np.abs(qw - pw).sum())
    if kind is FDivergenceKind.KULLBACK_LEIBLER:
        if np.any((qw > 0.0) & (pw == 0.0)):
            return math.inf
        mask = qw > 0.0
        return float((qw[mask] * np.log(qw[mask] / pw[mask])).sum())
    if kind is FDivergenceKind.REVERSE_KL:
        if np.any((pw > 0.0) & (qw == 0.0)):
            return math.inf
        mask = pw > 0.0
        return float((pw[mask] * np.log(pw[mask] / qw[mask])).sum())
    # GAN criterion: sum over the union of q log(q/(q+p)) + p log(p/(q+p)),
    # plus the constant from the (t+1)log(t+1) term; equals 2 JS(q, p) - log 4.
    total = 0.0
    for qi, pi in zip(qw, pw):
        s = qi + pi
        if s == 0.0:
            continue
        if qi > 0.0:
            total += qi * math.log(qi / s)
        if pi > 0.0:
            total += pi * math.log(pi / s)
    return total


def total_variation(q: DiscreteMeasure, p: DiscreteMeasure) -> float:
    return f_divergence(FDivergenceKind.TOTAL_VARIATION, q, p)
