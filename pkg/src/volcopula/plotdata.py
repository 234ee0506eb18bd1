"""Plot-ready tables for copula diagnostics (no charting, data only).

Every function returns a list of column-name/array pairs ready for CSV
emission: decile contour polylines, tail-concentration curves, Kendall
distribution tables, pseudo-observation scatters, and histograms.
"""

from __future__ import annotations

import numpy as np

from .copulas import kendall_K, tail_concentration
from .occupation import EmpiricalCopulaGrid

__all__ = ["emit_plot_data", "PLOT_KINDS"]


def decile_contours(grid: EmpiricalCopulaGrid, levels=None):
    """Contour polylines of the copula surface: for each level and u, the
    smallest v (linearly interpolated) where the surface reaches the level."""
    levels = np.arange(0.1, 1.0, 0.1) if levels is None else np.asarray(levels)
    lev_col, u_col, v_col = [], [], []
    for lev in levels:
        for i, u in enumerate(grid.u):
            row = grid.values[i]
            j = int(np.searchsorted(row, lev, side="left"))
            if j >= row.size:
                continue
            if j == 0 or row[j] == lev:
                v = grid.v[j]
            else:
                frac = (lev - row[j - 1]) / (row[j] - row[j - 1])
                v = grid.v[j - 1] + frac * (grid.v[j] - grid.v[j - 1])
            lev_col.append(lev)
            u_col.append(u)
            v_col.append(v)
    return [("level", np.array(lev_col)), ("u", np.array(u_col)), ("v", np.array(v_col))]


def tail_concentration_table(cdf, z_grid=None):
    """(z, L, U, T) rows with T(z) = min(L, U), for any copula CDF evaluator."""
    z = np.arange(0.01, 1.0, 0.01) if z_grid is None else np.asarray(z_grid)
    lower, upper = tail_concentration(cdf, z)
    return [
        ("z", z),
        ("lower", lower),
        ("upper", upper),
        ("aggregate", np.minimum(lower, upper)),
    ]


def kendall_table(target, z_grid=None):
    """(z, K(z), z) rows; the last column is the 45-degree lower bound."""
    z = np.arange(0.01, 1.0, 0.01) if z_grid is None else np.asarray(z_grid)
    k = kendall_K(target, z)
    return [("z", z), ("K", np.asarray(k)), ("lower_bound", z)]


def pseudo_scatter(grid: EmpiricalCopulaGrid, size: int = 500, seed: int = 0):
    """A random subsample of the pseudo-observations, for scatter plots."""
    obs = grid.pseudo
    rng = np.random.default_rng(seed)
    take = min(size, len(obs))
    idx = rng.choice(len(obs), size=take, replace=False, p=obs.weights / obs.weights.sum())
    return [("u", obs.u[idx]), ("v", obs.v[idx])]


def histogram_table(values, bins: int = 50):
    """Relative-frequency histogram rows (bin_left, bin_right, rel_freq)."""
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return [
        ("bin_left", edges[:-1]),
        ("bin_right", edges[1:]),
        ("rel_freq", counts / counts.sum()),
    ]


PLOT_KINDS = {
    "decile-contours": decile_contours,
    "tail-concentration": tail_concentration_table,
    "kendall-function": kendall_table,
    "pseudo-scatter": pseudo_scatter,
    "histogram": histogram_table,
}


def emit_plot_data(result, kind: str, **kwargs):
    """Dispatch to a table builder by kind; unknown kinds list the options."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; supported: {sorted(PLOT_KINDS)}")
    return PLOT_KINDS[kind](result, **kwargs)
