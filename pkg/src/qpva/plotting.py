"""Figures for flow reports, written to files (no display)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .flows import casimir, g_coeffs, second_integral  # noqa: E402

RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "qpva",
}


def _save(fig, path):
    # fixed metadata keeps repeated runs byte-identical
    meta = {"Software": None} if path.endswith(".png") else {"Date": None, "Creator": None}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def plot_trajectory(traj, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for k in range(3):
            ax.plot(traj.t, traj.u[:, k].real, label=f"u{k + 1}")
        ax.set_xlabel("t")
        ax.set_title("trajectory")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_conservation(traj, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for name, v in (("S", traj.S), ("J", traj.J)):
            d = np.abs(v - v[0]) / max(abs(v[0]), 1e-300)
            ax.semilogy(traj.t, np.maximum(d, 1e-18), label=f"|{name}(t) - {name}(0)| / |{name}(0)|")
        ax.set_xlabel("t")
        ax.set_title("relative drift of the integrals")
        ax.legend(loc="lower right")
        return _save(fig, path)


def plot_residual(report, path, title):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        r = np.where(np.isfinite(report.per_sample), report.per_sample, np.nan)
        ax.semilogy(report.times, np.maximum(r, 1e-18))
        ax.set_xlabel("t")
        ax.set_title(title)
        return _save(fig, path)


def plot_curve(traj, path):
    """Real points of y² = g(x) with the orbit (x, y) = (u2, 3(u1² − u3²)) on top."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        S0, J0 = complex(casimir(traj.u[0])), complex(second_integral(traj.u[0]))
        c = g_coeffs(S0, J0).real
        x = traj.u[:, 1].real
        lo, hi = x.min(), x.max()
        pad = 0.1 * (hi - lo + 1e-9)
        xs = np.linspace(lo - pad, hi + pad, 800)
        gx = np.polyval(c, xs)
        ok = gx >= 0
        ys = np.sqrt(np.where(ok, gx, np.nan))
        ax.plot(xs, ys, color="0.6", label="y^2 = g(x)")
        ax.plot(xs, -ys, color="0.6")
        y = 3 * (traj.u[:, 0] ** 2 - traj.u[:, 2] ** 2)
        ax.plot(x, y.real, lw=0.6, label="orbit")
        ax.axvline(1.0, ls=":", color="k", lw=0.6)
        ax.set_xlabel("x = u2")
        ax.set_ylabel("y")
        ax.set_title("spectral curve")
        ax.legend(loc="upper right")
        return _save(fig, path)


def flow_figures(traj, outdir, residuals=None, prefix="flow"):
    """Write the standard set of figures; returns the list of paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = [plot_trajectory(traj, os.path.join(outdir, f"{prefix}_trajectory.png")),
             plot_conservation(traj, os.path.join(outdir, f"{prefix}_drift.png")),
             plot_curve(traj, os.path.join(outdir, f"{prefix}_curve.png"))]
    for name, rep in sorted((residuals or {}).items()):
        paths.append(plot_residual(rep, os.path.join(outdir, f"{prefix}_{name}.png"), f"{name} residual"))
    return paths
