"""Figure rendering for command-line reports.

All matplotlib use lives here (with the non-interactive Agg backend) so the
numerical modules stay free of plotting dependencies.  Each function writes
one PNG next to the delimited output it illustrates.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_PATROL_COLORS = ["tab:red", "tab:purple", "tab:orange", "tab:brown",
                  "tab:pink", "tab:olive"]
_TRAJ_COLORS = ["tab:blue", "tab:green", "tab:cyan", "darkslategray",
                "navy", "seagreen"]


def _draw_domain(ax, sc):
    grid = sc.grid
    c = grid.coords()
    ax.contourf(c, c, sc.phi.values.T, levels=[-10.0, 0.0], colors=["0.55"])
    ax.contour(c, c, sc.phi.values.T, levels=[0.0], colors="k", linewidths=0.8)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")


def _draw_patrols(ax, sc):
    ts = np.linspace(0.0, sc.time.T, 600)
    for i, patrol in enumerate(sc.patrols):
        pos, _ = patrol.states(ts)
        color = _PATROL_COLORS[i % len(_PATROL_COLORS)]
        ax.plot(pos[:, 0], pos[:, 1], "--", color=color, lw=1.2,
                label=f"patrol {i + 1}")
        p0, h0 = patrol.states(np.array([0.0]))
        ax.plot(*p0[0], "o", color=color, ms=5)
        ax.annotate("", xy=p0[0] + 0.04 * h0[0], xytext=p0[0],
                    arrowprops=dict(arrowstyle="->", color=color))


def render_solution(sc, solution, dest) -> None:
    """Equilibrium overview: domain, patrols, supported trajectories."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    _draw_domain(ax, sc)
    _draw_patrols(ax, sc)
    for a, st in enumerate(solution.trajectories):
        col = _TRAJ_COLORS[a % len(_TRAJ_COLORS)]
        w = solution.policy.theta[a]
        pts = st.path.points
        ax.plot(pts[:, 0], pts[:, 1], color=col, lw=1.0 + 3.0 * w,
                label=f"trajectory {a + 1} (θ={w:.3f})")
    ax.plot(*sc.start_xy, "ks", ms=7)
    ax.plot(*sc.target_xy, "k*", ms=12)
    lam = ", ".join(f"{v:.3f}" for v in solution.lam_star)
    ax.set_title(f"value {solution.value:.4f}   λ* = ({lam})")
    ax.legend(loc="upper right", fontsize=7)
    fig.savefig(dest, dpi=160, bbox_inches="tight")
    plt.close(fig)


def render_ascent(history, dest) -> None:
    """Observer value per ascent iteration."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    its = [h.iteration for h in history]
    vals = [h.value for h in history]
    ax.plot(its, vals, "-o", ms=2.5, lw=0.9)
    best = np.maximum.accumulate(vals)
    ax.plot(its, best, "-", color="tab:red", lw=1.0, alpha=0.7, label="best so far")
    ax.set_xlabel("iteration")
    ax.set_ylabel("G(λ)")
    ax.legend(fontsize=8)
    fig.savefig(dest, dpi=160, bbox_inches="tight")
    plt.close(fig)


def render_best_response(sc, resp, dest) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    _draw_domain(ax, sc)
    _draw_patrols(ax, sc)
    pts = resp.path.points
    ax.plot(pts[:, 0], pts[:, 1], color="tab:blue", lw=2.0, label="best response")
    ax.plot(*sc.start_xy, "ks", ms=7)
    ax.plot(*sc.target_xy, "k*", ms=12)
    lam = ", ".join(f"{v:.3f}" for v in resp.lam)
    ax.set_title(f"λ = ({lam})   value {resp.value:.4f}")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(dest, dpi=160, bbox_inches="tight")
    plt.close(fig)


def render_tradeoff(points, pair, dest) -> None:
    """Swept cost pairs (J_i, J_j) with the value isoline of each mixture."""
    plt = _plt()
    i, j = pair
    fig, ax = plt.subplots(figsize=(5.4, 5.4))
    xs = [p.costs[i] for p in points]
    ys = [p.costs[j] for p in points]
    ax.plot(xs, ys, "o-", ms=4, lw=0.8, color="tab:blue")
    for p in points:
        # support line lam_i x + lam_j y = value of each swept mixture
        li, lj = p.lam[i], p.lam[j]
        if li > 1e-9 and lj > 1e-9:
            xx = np.array([min(xs) * 0.8, max(xs) * 1.1])
            ax.plot(xx, (p.value - li * xx) / lj, color="0.8", lw=0.5, zorder=0)
    ax.set_xlabel(f"cost against patrol {i + 1}")
    ax.set_ylabel(f"cost against patrol {j + 1}")
    ax.set_title("attainable-cost trade-off")
    fig.savefig(dest, dpi=160, bbox_inches="tight")
    plt.close(fig)


def render_visibility(sc, field, k, dest) -> None:
    """One visibility slice: mask, observer position and heading."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    mask = field.visibility.mask(field.patrol_index, k)
    ax.imshow(mask.T[::-1], extent=(0, 1, 0, 1), cmap="Blues", alpha=0.7,
              interpolation="nearest")
    _draw_domain(ax, sc)
    z = field.positions[k]
    hd = field.headings[k]
    ax.plot(*z, "ro", ms=6)
    ax.annotate("", xy=z + 0.06 * hd, xytext=z,
                arrowprops=dict(arrowstyle="->", color="r"))
    ax.set_title(f"patrol {field.patrol_index + 1}, slice {k} (t = {k * sc.time.dt:.3f})")
    fig.savefig(dest, dpi=160, bbox_inches="tight")
    plt.close(fig)
