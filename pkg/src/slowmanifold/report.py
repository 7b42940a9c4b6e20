"""Figure rendering for the CLI report paths.

Each sweep CSV gets a companion PNG next to it.  CSV stays the machine
contract; these figures are for eyeballing runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_compare(rows, path: str | Path) -> Path:
    """Distance and bound ratio against k0, one series per epsilon."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    eps_values = sorted({r.epsilon for r in rows if r.status == "ok"})
    for eps in eps_values:
        pts = [(r.k0, r.lhs, r.ratio) for r in rows if r.status == "ok" and r.epsilon == eps]
        if not pts:
            continue
        k0s = sorted({p[0] for p in pts})
        mean_lhs = [np.mean([p[1] for p in pts if p[0] == k]) for k in k0s]
        mean_ratio = [np.mean([p[2] for p in pts if p[0] == k]) for k in k0s]
        ax1.semilogy(k0s, mean_lhs, "o-", label=f"eps={eps:g}")
        ax2.semilogy(k0s, mean_ratio, "s-", label=f"eps={eps:g}")
    ax1.set_xlabel("k0")
    ax1.set_ylabel("graph distance")
    ax2.set_xlabel("k0")
    ax2.set_ylabel("distance / bound")
    ax1.legend(fontsize=8)
    ax2.legend(fontsize=8)
    fig.suptitle("direct vs Galerkin slow-manifold graphs")
    return _save(fig, Path(path))


def plot_scaling(points, fits, path: str | Path) -> Path:
    """Measured distances and bound terms on log-log axes with fitted slopes."""
    sweeps = sorted({(p.sweep, p.n, p.m) for p in points if p.status == "ok"})
    ncols = max(1, len(sweeps))
    fig, axes = plt.subplots(1, ncols, figsize=(4.2 * ncols, 3.6), squeeze=False)
    for ax, key in zip(axes[0], sweeps):
        sweep, n, m = key
        pts = [p for p in points if p.status == "ok" and (p.sweep, p.n, p.m) == key]
        xs = [p.x for p in pts]
        ax.loglog(xs, [p.lhs_mean for p in pts], "o", label="measured")
        ax.loglog(xs, [p.bound for p in pts], "x--", label="bound terms")
        fit = next((f for f in fits if (f.sweep, f.n, f.m) == key), None)
        if fit is not None and xs:
            x0 = np.asarray(sorted(xs), dtype=float)
            y0 = pts[0].lhs_mean * (x0 / pts[0].x) ** fit.slope
            ax.loglog(x0, y0, "-", alpha=0.6,
                      label=f"slope {fit.slope:.2f} (bound {fit.slope_bound:.2f})")
        ax.set_xlabel(sweep)
        ax.set_ylabel("distance")
        ax.set_title(f"n={n}, m={m}")
        ax.legend(fontsize=7)
    return _save(fig, Path(path))


def plot_resonance(rset, path: str | Path) -> Path:
    """Resonance values with the safe bound marked."""
    from .manifolds import safe_epsilon_bound

    fig, ax = plt.subplots(figsize=(6.5, 2.8))
    vals = rset.values()
    ax.stem(vals, [len(e.witnesses) for e in rset.entries])
    ax.axvline(safe_epsilon_bound(rset.k0), color="tab:red", ls="--",
               label="safe epsilon bound")
    ax.set_xscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("# witnesses")
    ax.set_title(f"resonance set, k0 = {rset.k0}")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def plot_trajectory(traj, path: str | Path, split=None) -> Path:
    """Mode-norm history of a simulated trajectory."""
    from .spectral import sobolev_norm

    fig, ax = plt.subplots(figsize=(6.5, 3.2))
    ts = [st.t for st in traj]
    ax.semilogy(ts, [max(sobolev_norm(st.u, 0.0), 1e-300) for st in traj], label="|u|_{L2}")
    ax.semilogy(ts, [max(sobolev_norm(st.v, 0.0), 1e-300) for st in traj], label="|v|_{L2}")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(fontsize=8)
    ax.set_title("trajectory")
    return _save(fig, Path(path))


def plot_distance(rows, path: str | Path) -> Path:
    """Distance to the critical manifold against epsilon."""
    fig, ax = plt.subplots(figsize=(6.5, 3.2))
    k0s = sorted({r.k0 for r in rows if r.status == "ok"})
    for k0 in k0s:
        pts = sorted((r.epsilon, r.distance) for r in rows
                     if r.status == "ok" and r.k0 == k0)
        eps_vals = sorted({p[0] for p in pts})
        means = [np.mean([d for e, d in pts if e == ev]) for ev in eps_vals]
        ax.loglog(eps_vals, means, "o-", label=f"k0={k0}")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("distance to critical manifold")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def plot_slow_error(rows, path: str | Path) -> Path:
    """Reduced-subsystem error and the initial-layer term over time."""
    fig, ax = plt.subplots(figsize=(6.5, 3.2))
    ts = [r.t for r in rows]
    ax.semilogy(ts, [max(r.error, 1e-300) for r in rows], label="error")
    ax.semilogy(ts, [max(r.layer_term, 1e-300) for r in rows], "--",
                label="initial-layer term")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))
