"""Occupation-time distribution, quantiles and empirical copula of paired
variance paths.

A :class:`VolPairSeries` is a piecewise-constant bivariate path: one variance
level per block and asset, weighted by block duration.  All estimators here
are exact block-weighted sums, so the time integrals they stand for carry no
quadrature error.  Everything is rank-based past the marginal transform and
therefore invariant (bit-exactly) under strictly increasing transformations
of either coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .copulas import PseudoObservations

__all__ = [
    "VolPairSeries",
    "EmpiricalCopulaGrid",
    "joint_cdf",
    "marginal_quantile",
    "pseudo_observations",
    "empirical_copula",
    "rmse_vs_target",
    "interior_grid",
    "inference_grid",
    "voronoi_weights",
]


@dataclass(frozen=True)
class VolPairSeries:
    """Paired block values with duration weights summing to span.

    Values are variance levels or any strictly increasing transform of them
    (log variance is common); everything downstream is rank-based.
    """

    vx: np.ndarray
    vy: np.ndarray
    weights: np.ndarray = field(default=None)
    span: float = field(default=None)

    def __post_init__(self):
        vx = np.asarray(self.vx, dtype=float)
        vy = np.asarray(self.vy, dtype=float)
        if vx.ndim != 1 or vx.shape != vy.shape or vx.size == 0:
            raise ValueError("paired series must be equal-length nonempty vectors")
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise ValueError("variance levels must be finite")
        w = self.weights
        if w is None:
            w = np.full(vx.size, 1.0 / vx.size)
        else:
            w = np.asarray(w, dtype=float)
            if w.shape != vx.shape or np.any(w <= 0):
                raise ValueError("weights must be positive and match the values")
        object.__setattr__(self, "vx", vx)
        object.__setattr__(self, "vy", vy)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "span", float(w.sum()) if self.span is None else float(self.span))

    def __len__(self):
        return self.vx.size

    @property
    def equal_weighted(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


def joint_cdf(series: VolPairSeries, x: float, y: float) -> float:
    """Fraction of time both coordinates sit at or below (x, y); +inf marginalizes.

    Negative thresholds are rejected for variance-level (nonnegative) series;
    log-transformed series accept any real threshold.
    """
    if (x < 0 or y < 0) and series.vx.min() >= 0 and series.vy.min() >= 0:
        raise ValueError("thresholds must be nonnegative for variance-level series")
    mask = (series.vx <= x) & (series.vy <= y)
    if series.equal_weighted:
        return float(np.count_nonzero(mask)) / len(series)
    return float(series.weights[mask].sum()) / series.span


def _sorted_group_cdf(values, weights, span):
    """Sorted unique values and their right-continuous cumulative fractions.

    Equal weights take the exact-rank route (k/n), so equal-weight
    pseudo-observations are the multiset {1/n, ..., 1} with no float drift.
    """
    order = np.argsort(values, kind="stable")
    sv = values[order]
    last = np.flatnonzero(np.append(sv[1:] != sv[:-1], True))
    if np.all(weights == weights[0]):
        frac = (last + 1) / values.size
    else:
        cw = np.cumsum(weights[order])
        cw[-1] = span  # pin the top so the maximum maps to exactly 1
        frac = cw[last] / span
    return sv[last], frac, order, last


def marginal_cdf_at_values(values, weights, span):
    """Right-continuous weighted CDF evaluated at each input value."""
    uniq, frac, order, last = _sorted_group_cdf(values, weights, span)
    sizes = np.diff(np.concatenate(([-1], last)))
    out = np.empty(values.size)
    out[order] = np.repeat(frac, sizes)
    return out

def marginal_quantile(series: VolPairSeries, coord: str, u) -> float | np.ndarray:
    """Generalized inverse of a marginal occupation CDF.

    Smallest attained level whose CDF reaches ``u``; levels above the attained
    range return +inf (the empty-infimum convention).
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("quantile levels must lie in [0, 1]")
    values = series.vx if coord == "x" else series.vy
    uniq, frac, _, _ = _sorted_group_cdf(values, series.weights, series.span)
    idx = np.searchsorted(frac, u_arr, side="left")
    out = np.where(idx < uniq.size, uniq[np.minimum(idx, uniq.size - 1)], np.inf)
    return out if u_arr.ndim else float(out)


def pseudo_observations(series: VolPairSeries) -> PseudoObservations:
    """Map each block's pair through the two marginal occupation CDFs."""
    pu = marginal_cdf_at_values(series.vx, series.weights, series.span)
    pv = marginal_cdf_at_values(series.vy, series.weights, series.span)
    return PseudoObservations(pu, pv, weights=series.weights, span=series.span)


def interior_grid(m: int = 99) -> np.ndarray:
    """m equally spaced interior levels k/(m+1), k = 1..m."""
    return np.arange(1, m + 1) / (m + 1)


def inference_grid() -> np.ndarray:
    return np.array([0.10, 0.25, 0.50, 0.75, 0.90])


def voronoi_weights(grid: np.ndarray) -> np.ndarray:
    """Lengths of the cells of [0, 1] closest to each grid point; sum to 1."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or np.any(np.diff(g) <= 0) or g[0] <= 0 or g[-1] > 1:
        raise ValueError("grid must be strictly increasing inside (0, 1]")
    mids = 0.5 * (g[1:] + g[:-1])
    edges = np.concatenate(([0.0], mids, [1.0]))
    return np.diff(edges)


@dataclass(frozen=True)
class EmpiricalCopulaGrid:
    """Empirical copula values on a rectangular grid, plus the pseudo-observations."""

    u: np.ndarray
    v: np.ndarray
    values: np.ndarray  # (len(u), len(v))
    pseudo: PseudoObservations
    span: float

    def evaluate(self, u, v):
        """Exact empirical copula at arbitrary (u, v), from the pseudo-observations."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        obs = self.pseudo
        scalar = not (u.ndim or v.ndim)
        uu, vv = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
        out = np.empty(uu.shape)
        flat_u, flat_v, flat_o = uu.ravel(), vv.ravel(), out.ravel()
        for k in range(flat_u.size):
            inside = (obs.u <= flat_u[k]) & (obs.v <= flat_v[k])
            flat_o[k] = obs.weights[inside].sum() / obs.span
        return float(out.ravel()[0]) if scalar else out

    def cdf(self, u, v):
        return self.evaluate(u, v)

    def quadrature_weights(self) -> np.ndarray:
        return np.outer(voronoi_weights(self.u), voronoi_weights(self.v))


def empirical_copula(series: VolPairSeries, u_grid=None, v_grid=None) -> EmpiricalCopulaGrid:
    """Empirical copula of a paired variance path on a rectangular grid.

    Both the realized variant (block estimates in, where it estimates the
    latent copula) and the oracle variant (true simulated variances in) are
    this same computation; only the input series differs.
    """
    u_grid = interior_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    v_grid = u_grid if v_grid is None else np.asarray(v_grid, dtype=float)
    obs = pseudo_observations(series)
    values = _grid_counts(obs, u_grid, v_grid)
    return EmpiricalCopulaGrid(u_grid, v_grid, values, obs, series.span)


def _grid_counts(obs: PseudoObservations, u_grid, v_grid):
    # searchsorted index <= i exactly encodes pseudo-value <= grid[i], so the
    # cumulative bin table reproduces the brute-force indicator sums.
    mu, mv = u_grid.size, v_grid.size
    iu = np.searchsorted(u_grid, obs.u, side="left")
    iv = np.searchsorted(v_grid, obs.v, side="left")
    flat = iu * (mv + 1) + iv
    equal = np.all(obs.weights == obs.weights[0])
    if equal:
        table = np.bincount(flat, minlength=(mu + 1) * (mv + 1)).astype(float)
        table = table.reshape(mu + 1, mv + 1)
        return table.cumsum(axis=0).cumsum(axis=1)[:mu, :mv] / len(obs)
    table = np.bincount(flat, weights=obs.weights, minlength=(mu + 1) * (mv + 1))
    table = table.reshape(mu + 1, mv + 1)
    cum = table.cumsum(axis=0).cumsum(axis=1)
    # normalize by the accumulated total, so a grid point covering every block
    # reads exactly one
    return cum[:mu, :mv] / cum[-1, -1]


def rmse_vs_target(grid: EmpiricalCopulaGrid, target) -> float:
    """Root of the quadrature-weighted squared distance between the grid and a target.

    ``target`` may be a copula model, a callable C(u, v), another grid on the
    same lattice, or a plain array of matching shape.
    """
    if isinstance(target, EmpiricalCopulaGrid):
        if not (np.array_equal(target.u, grid.u) and np.array_equal(target.v, grid.v)):
            raise ValueError("grids do not match")
        tv = target.values
    elif isinstance(target, np.ndarray):
        if target.shape != grid.values.shape:
            raise ValueError("target array does not match the grid shape")
        tv = target
    else:
        evaluate = target.cdf if hasattr(target, "cdf") else target
        uu, vv = np.meshgrid(grid.u, grid.v, indexing="ij")
        tv = np.asarray(evaluate(uu, vv), dtype=float)
    w2d = grid.quadrature_weights()
    return float(np.sqrt(np.sum(w2d * (grid.values - tv) ** 2)))
