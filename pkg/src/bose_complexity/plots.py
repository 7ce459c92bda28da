"""Optional PNG figures rendered from experiment results."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
    # fixed metadata keeps PNG bytes reproducible
    "svg.hashsalt": "bose-complexity",
}
_PNG_META = {"Software": None}
# distances between normalized states never exceed 2, so larger bounds carry no information
TRIVIAL_DISTANCE = 2.0


def _column(result, name):
    i = result.header.index(name)
    return [r[i] for r in result.rows]


def _floats(values):
    return np.array([np.nan if v == "" else float(v) for v in values])


def _save(fig, path):
    fig.savefig(path, format="png", metadata=_PNG_META)
    plt.close(fig)


def _hhkl(result, path):
    t = _floats(_column(result, "t"))
    err = _floats(_column(result, "error_measured"))
    bound = np.minimum(_floats(_column(result, "error_bound")), TRIVIAL_DISTANCE)
    fig, ax = plt.subplots()
    ax.semilogy(t[1:], np.maximum(err[1:], 1e-16), "o-", label="measured")
    ax.semilogy(t[1:], np.maximum(bound[1:], 1e-16), "--", label="bound (clamped at 2)")
    ax.set_xlabel("t")
    ax.set_ylabel("state error")
    ax.legend()
    _save(fig, path)


def _truncation(result, path):
    t = _floats(_column(result, "t"))
    dist = _floats(_column(result, "distance"))
    bound = np.minimum(_floats(_column(result, "trunc_bound")), TRIVIAL_DISTANCE)
    fig, ax = plt.subplots()
    ax.plot(t, dist, "o-", label="distance")
    ax.plot(t, bound, "--", label="bound (clamped at 2)")
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, path)


_VERDICT_CODE = {"Easy": 0, "Unknown": 1, "Hard": 2}


def _phase(result, path):
    alpha = _floats(_column(result, "alpha"))
    gamma = _floats(_column(result, "gamma"))
    code = np.array([_VERDICT_CODE[v] for v in _column(result, "verdict")])
    a_vals, g_vals = np.unique(alpha), np.unique(gamma)
    grid = code.reshape(len(a_vals), len(g_vals))
    # vertical axis is 1/sqrt(alpha); alpha = 0 sits one step above the largest finite value
    with np.errstate(divide="ignore"):
        y = 1.0 / np.sqrt(a_vals)
    finite = y[np.isfinite(y)]
    if not np.all(np.isfinite(y)):
        step = np.min(np.abs(np.diff(np.sort(finite)))) if finite.size > 1 else 1.0
        y[~np.isfinite(y)] = (finite.max() if finite.size else 0.0) + step
    order = np.argsort(y)
    y, grid = y[order], grid[order]
    fig, ax = plt.subplots()
    cmap = matplotlib.colors.ListedColormap(["#f2d13c", "#dddddd", "#c23b9a"])
    ax.pcolormesh(g_vals, y, grid, cmap=cmap, vmin=0, vmax=2, shading="nearest")
    unknown = np.ma.masked_where(grid != 1, grid)
    ax.pcolor(g_vals, y, unknown, hatch="//", alpha=0.0, shading="nearest")
    ax.set_xlabel("gamma")
    ax.set_ylabel("1/sqrt(alpha)")
    ax.set_title("easy / unknown (hatched) / hard")
    _save(fig, path)


def _columns(result, path):
    times = _floats(_column(result, "time"))
    fig, ax = plt.subplots()
    ax.hist(times, bins=30)
    m = result.rows[0][2]
    c = result.meta.get("c", 0.2475)
    ax.axvline(math.sqrt(math.log(m) / (c * m)), color="k", ls="--", label="threshold")
    ax.set_xlabel("column time")
    ax.legend()
    _save(fig, path)


def _haar(result, path):
    fig, ax = plt.subplots()
    series = _floats(_column(result, "series"))
    emp = _floats(_column(result, "empirical"))
    sig = _floats(_column(result, "sigma"))
    idx = np.arange(len(series))
    ax.errorbar(idx, emp, yerr=4 * sig, fmt="o", label="Monte Carlo (4 sigma)")
    ax.plot(idx, series, "x", label="series")
    ax.set_xticks(idx, [f"m={r[0]}\n{r[1]}" for r in result.rows])
    ax.legend()
    _save(fig, path)


RENDERERS = {
    "hhkl_vs_exact": _hhkl,
    "truncation_check": _truncation,
    "phase_grid": _phase,
    "column_synthesis": _columns,
    "haar_stats": _haar,
}


def render(experiment: str, result, path) -> bool:
    """Write a PNG for ``result``; returns False when the experiment has no figure."""
    renderer = RENDERERS.get(experiment)
    if renderer is None or result.kind != "csv" or not result.rows:
        return False
    with plt.rc_context(STYLE):
        renderer(result, path)
    return True
