"""Optional figures next to the delimited outputs; needs the ``plot`` extra (matplotlib)."""

from __future__ import annotations

from typing import Sequence


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("figures need matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: str):
    fmt = path.rsplit(".", 1)[-1].lower() if "." in path else "png"
    meta = {"Software": None} if fmt == "png" else {"Creator": None} if fmt in ("svg", "pdf") else None
    fig.savefig(path, format=fmt, metadata=meta)


def plot_fiber_extrema(rows: Sequence[tuple], path: str, title: str = ""):
    """Minimal and maximal top coordinate over each horizontal fiber.

    Two horizontal coordinates give a pair of heat maps; otherwise both extrema
    are drawn against the fiber index.
    """
    plt = _pyplot()
    if rows and len(rows[0][0]) == 2:
        xs = sorted({h[0] for h, _, _ in rows})
        ys = sorted({h[1] for h, _, _ in rows})
        xi = {x: i for i, x in enumerate(xs)}
        yi = {y: i for i, y in enumerate(ys)}
        import numpy as np
        grids = [np.full((len(ys), len(xs)), np.nan) for _ in range(2)]
        for h, lo, hi in rows:
            grids[0][yi[h[1]], xi[h[0]]] = float(lo)
            grids[1][yi[h[1]], xi[h[0]]] = float(hi)
        fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
        extent = [float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1])]
        for ax, grid, label in zip(axes, grids, ("minimum", "maximum")):
            im = ax.imshow(grid, origin="lower", extent=extent, aspect="auto", cmap="viridis")
            ax.set_title(f"{label} of top coordinate")
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
            fig.colorbar(im, ax=ax)
    else:
        fig, ax = plt.subplots(figsize=(8, 4))
        idx = range(len(rows))
        ax.plot(idx, [float(lo) for _, lo, _ in rows], label="minimum")
        ax.plot(idx, [float(hi) for _, _, hi in rows], label="maximum")
        ax.set_xlabel("fiber")
        ax.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_profile(rows: Sequence[dict], x: str, y: str, path: str, group: str | None = None, title: str = ""):
    """Line plot of numeric columns, one line per value of ``group``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = sorted({r[group] for r in rows}) if group else [None]
    for k in keys:
        sel = [r for r in rows if group is None or r[group] == k]
        sel = [r for r in sel if r.get(y) is not None]
        ax.plot([float(r[x]) for r in sel], [float(r[y]) for r in sel], marker="o", label=str(k) if group else y)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
