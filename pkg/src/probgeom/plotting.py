"""Figure rendering for experiment reports (written next to the CSV)."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_landscape(rows, path, distance="value"):
    """Filled contour of a (theta1, theta2, value) grid."""
    t1 = sorted(set(r[0] for r in rows))
    t2 = sorted(set(r[1] for r in rows))
    vals = np.full((len(t1), len(t2)), np.nan)
    i1 = {v: i for i, v in enumerate(t1)}
    i2 = {v: i for i, v in enumerate(t2)}
    for a, b, v in rows:
        vals[i1[a], i2[b]] = v
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    cs = ax.contourf(t1, t2, vals.T, levels=24, cmap="viridis")
    ax.contour(t1, t2, vals.T, levels=12, colors="k", linewidths=0.3)
    fig.colorbar(cs, ax=ax, label=distance)
    ax.set_xlabel(r"$\theta_1$")
    ax.set_ylabel(r"$\theta_2$")
    ax.set_title(f"{distance} landscape")
    _save(fig, path)


def plot_rates(rows, slopes, path):
    """Log-log scatter of per-trial values with the fitted slope lines."""
    dims = sorted(set(r[0] for r in rows))
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    for dim in dims:
        ns = sorted(set(r[1] for r in rows if r[0] == dim))
        means = [np.mean([r[3] for r in rows if r[0] == dim and r[1] == n])
                 for n in ns]
        ax.plot(ns, means, "o", label=f"dim={dim} (slope {slopes[dim].slope:+.3f})")
        fit = np.exp(slopes[dim].intercept) * np.asarray(ns, float) ** slopes[dim].slope
        ax.plot(ns, fit, "--", alpha=0.6)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean value")
    ax.legend()
    ax.set_title("empirical convergence rate")
    _save(fig, path)


def plot_geodesic_check(rows, path, tolerance=1e-9):
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    gaps = [abs(b - a) for a, b, _ in rows]
    viols = [v for _, _, v in rows]
    ax.semilogy([g for g, v in zip(gaps, viols)],
                [max(v, 1e-18) for v in viols], "o")
    ax.axhline(tolerance, color="r", ls="--", label=f"tolerance {tolerance:g}")
    ax.set_xlabel("|t - t'|")
    ax.set_ylabel("constant-speed violation")
    ax.legend()
    _save(fig, path)


def plot_inequality(rows, path):
    fig, ax = plt.subplots(figsize=(4.8, 4.4))
    ed = [r[1] for r in rows if np.isfinite(r[3])]
    w1 = [2.0 * r[2] for r in rows if np.isfinite(r[3])]
    ax.plot(w1, ed, ".", ms=4, alpha=0.7)
    lim = max(max(w1, default=1.0), max(ed, default=1.0))
    ax.plot([0, lim], [0, lim], "r--", label="equality")
    ax.set_xlabel(r"$2\,W_1$")
    ax.set_ylabel("squared energy distance")
    ax.legend()
    _save(fig, path)


def plot_convexity(rows, path):
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    labels = [f"{r[0]}:{r[1]}" for r in rows]
    vals = [r[2] for r in rows]
    ax.barh(range(len(rows)), vals)
    ax.set_yticks(range(len(rows)), labels, fontsize=7)
    ax.set_xlabel("value")
    ax.set_title("convexity probes")
    _save(fig, path)


def plot_sphere(report, path):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    names = ["mean nearest", "W1(Q_n, dirac)", "W1(Q, dirac)"]
    vals = [report.mean_nearest, report.w1_to_dirac_empirical,
            report.w1_to_dirac_target]
    ax.bar(names, vals)
    ax.axhline(1.2, color="r", ls="--", lw=1, label="1.2")
    ax.set_title(f"sphere pathology (dim={report.dim}, n={report.n})")
    ax.legend()
    _save(fig, path)


def plot_minibatch(report, path):
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    names = ["minibatch W1", "true W1", "minibatch ED^2", "true ED^2"]
    vals = [report.mean_minibatch_w1, report.true_w1,
            report.ed_minibatch_mean, report.true_ed_sq]
    vals = [0.0 if not np.isfinite(v) else v for v in vals]
    ax.bar(names, vals, color=["C0", "C1", "C0", "C1"])
    ax.set_title(f"minibatch estimators (k={report.batch_size})")
    fig.autofmt_xdate(rotation=20)
    _save(fig, path)
