"""Long-run covariance estimation, confidence bands and goodness-of-fit tests
for the occupation copula of paired spot-variance paths.

The centered copula error, scaled by the square root of the span, is
asymptotically Gaussian with a long-run covariance that contracts the lagged
joint-occupation covariance with the copula's partial derivatives.  This
module estimates every ingredient from one path:

* the lagged occupation covariance, integrated over lags up to span**xi on
  the block grid (the integrand is piecewise linear in the lag for
  block-constant paths, so the trapezoid rule evaluates the lag integral
  exactly);
* the copula density and partial derivatives, by compactly supported kernel
  smoothing of the pseudo-observations;
* Monte Carlo functionals of the fitted Gaussian limit: supremum quantiles
  for uniform bands and positive-eigenvalue chi-square mixtures for the
  goodness-of-fit null distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .copulas import CopulaModel, PseudoObservations, fit_mle
from .occupation import (
    EmpiricalCopulaGrid,
    VolPairSeries,
    empirical_copula,
    inference_grid,
    marginal_quantile,
    pseudo_observations,
)

__all__ = [
    "GridCovariance",
    "BandResult",
    "GofResult",
    "default_bandwidth",
    "epanechnikov",
    "avar_G",
    "zvec_covariance",
    "avar_C",
    "kernel_copula_density",
    "copula_partial_u",
    "copula_partial_v",
    "pointwise_ci",
    "uniform_band",
    "gof_statistic",
    "gof_test",
    "grid_points",
]


def default_bandwidth(span: float) -> float:
    """Kernel bandwidth for the partial-derivative smoother.

    span^(-1/6) keeps the smoothing error negligible against the 1/sqrt(span)
    sampling error as the span grows; the [0.05, 0.2] clamp stops the window
    from drowning the unit square on short samples or collapsing on huge ones.
    """
    return min(0.2, max(0.05, float(span) ** (-1.0 / 6.0)))


def epanechnikov(x, y):
    """Product Epanechnikov kernel on [-1, 1]^2; Lipschitz, integrates to one."""
    kx = np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - np.asarray(x) ** 2), 0.0)
    ky = np.where(np.abs(y) <= 1.0, 0.75 * (1.0 - np.asarray(y) ** 2), 0.0)
    return kx * ky


def _epan1(x):
    return np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)


@dataclass
class GridCovariance:
    """Covariance matrix of the limit process at a list of evaluation points."""

    points: np.ndarray  # (m, 2) or (m, 4) argument tuples
    matrix: np.ndarray  # (m, m), symmetric
    xi: float
    h: float | None
    provenance: str  # "avar_G" | "Gamma" | "avar_C"

    @property
    def nonpositive_diagonal(self) -> int:
        """HAC-type estimates may go nonpositive; consumers must check."""
        return int(np.count_nonzero(np.diag(self.matrix) <= 0.0))


# -- lagged occupation covariance ------------------------------------------------


def _lag_plan(series: VolPairSeries, xi: float) -> tuple[float, int]:
    if not 0.0 < xi < 1.0 / 3.0:
        raise ValueError("lag-window exponent must lie in (0, 1/3)")
    n_blocks = len(series)
    if n_blocks < 3:
        raise ValueError("need at least three blocks for a lag window")
    d = series.span / n_blocks
    n_lags = int(math.floor(series.span**xi / d))
    return d, max(1, min(n_lags, n_blocks - 2))


def _lag_cov(A, Bm, w, span, d, n_lags, diagonal_only=False):
    """2 x integral over [0, n_lags*d] of the centered lagged co-occupation.

    ``A`` and ``Bm`` hold one indicator series per row, one block per column,
    in time order; ``d`` is the mean block duration, so index lags stand in
    for time lags.  The lag integrand of block-constant paths is piecewise
    linear between block lags, making the trapezoid rule over lags 0..n_lags
    the exact lag integral.  The lagged means use the fixed leading window of
    ``n_blocks - n_lags`` blocks; the centering products use full-sample
    occupation means.
    """
    n_s = A.shape[1] - n_lags
    w_s = w[:n_s]
    w_tot = w_s.sum()
    Aw = A[:, :n_s] * w_s
    mean_a = A @ w / span
    mean_b = Bm @ w / span
    if diagonal_only:
        prod = mean_a * mean_b
        acc = np.zeros(A.shape[0])
    else:
        prod = np.outer(mean_a, mean_b)
        acc = np.zeros((A.shape[0], Bm.shape[0]))
    for lag in range(n_lags + 1):
        if diagonal_only:
            h_lag = (Aw * Bm[:, lag : lag + n_s]).sum(axis=1) / w_tot
        else:
            h_lag = Aw @ Bm[:, lag : lag + n_s].T / w_tot
        acc += (0.5 if lag in (0, n_lags) else 1.0) * (h_lag - prod)
    return 2.0 * d * acc


def _joint_indicators(series: VolPairSeries, xs, ys) -> np.ndarray:
    return (
        (series.vx[None, :] <= np.asarray(xs, dtype=float)[:, None])
        & (series.vy[None, :] <= np.asarray(ys, dtype=float)[:, None])
    ).astype(float)


def avar_G(series: VolPairSeries, points, xi: float = 0.15) -> np.ndarray:
    """Long-run covariance of the occupation CDF at threshold quadruples.

    ``points`` is an (m, 4) array of (x, y, x', y') arguments; +inf
    marginalizes a coordinate.  Each value integrates the lagged joint
    occupation minus the product of occupation levels over lags in
    [0, span**xi], averaged over both argument orders so the result is
    symmetric under swapping (x, y) with (x', y').
    """
    quads = np.atleast_2d(np.asarray(points, dtype=float))
    if quads.shape[1] != 4:
        raise ValueError("points must be quadruples (x, y, x', y')")
    if np.any(quads < 0) and series.vx.min() >= 0 and series.vy.min() >= 0:
        raise ValueError("thresholds must be nonnegative for variance-level series")
    d, n_lags = _lag_plan(series, xi)
    A = _joint_indicators(series, quads[:, 0], quads[:, 1])
    B = _joint_indicators(series, quads[:, 2], quads[:, 3])
    w = series.weights
    fwd = _lag_cov(A, B, w, series.span, d, n_lags, diagonal_only=True)
    rev = _lag_cov(B, A, w, series.span, d, n_lags, diagonal_only=True)
    out = 0.5 * (fwd + rev)
    return out if np.asarray(points).ndim > 1 else float(out[0])


def grid_points(u_grid, v_grid) -> np.ndarray:
    """Row-major (u_i, v_j) pairs matching ``EmpiricalCopulaGrid.values.ravel()``."""
    uu, vv = np.meshgrid(u_grid, v_grid, indexing="ij")
    return np.column_stack([uu.ravel(), vv.ravel()])


def zvec_covariance(series: VolPairSeries, points, xi: float = 0.15) -> GridCovariance:
    """Covariance of the stacked limit components at quantile-mapped points.

    For each point (u, v) the three components are the occupation errors at
    (Qx(u), Qy(v)), (Qx(u), +inf) and (+inf, Qy(v)).  Rows/columns are laid
    out as [joint_0..m-1, margx_0..m-1, margy_0..m-1].
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    qx = np.asarray(marginal_quantile(series, "x", pts[:, 0]))
    qy = np.asarray(marginal_quantile(series, "y", pts[:, 1]))
    inf = np.full(pts.shape[0], np.inf)
    A = np.vstack(
        [
            _joint_indicators(series, qx, qy),
            _joint_indicators(series, qx, inf),
            _joint_indicators(series, inf, qy),
        ]
    )
    d, n_lags = _lag_plan(series, xi)
    M = _lag_cov(A, A, series.weights, series.span, d, n_lags)
    M = 0.5 * (M + M.T)
    return GridCovariance(points=pts, matrix=M, xi=xi, h=None, provenance="Gamma")


def avar_C(
    series: VolPairSeries,
    points,
    xi: float = 0.15,
    h: float | None = None,
    kernel=None,
    step: float = 0.01,
) -> GridCovariance:
    """Plug-in long-run covariance of the copula process at evaluation points.

    Contracts the stacked occupation covariance with [1, -dC/du, -dC/dv] at
    each point, the partial derivatives being kernel-smoothed estimates from
    the pseudo-observations.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = pts.shape[0]
    if h is None:
        h = default_bandwidth(series.span)
    gamma = zvec_covariance(series, pts, xi)
    obs = pseudo_observations(series)
    du = copula_partial_u(obs, pts[:, 0], pts[:, 1], h, kernel=kernel, step=step)
    dv = copula_partial_v(obs, pts[:, 0], pts[:, 1], h, kernel=kernel, step=step)
    G = np.zeros((m, 3 * m))
    G[np.arange(m), np.arange(m)] = 1.0
    G[np.arange(m), m + np.arange(m)] = -np.atleast_1d(du)
    G[np.arange(m), 2 * m + np.arange(m)] = -np.atleast_1d(dv)
    cov = G @ gamma.matrix @ G.T
    cov = 0.5 * (cov + cov.T)
    return GridCovariance(points=pts, matrix=cov, xi=xi, h=h, provenance="avar_C")


# -- kernel estimators ------------------------------------------------------------


def _check_h(h: float):
    if not 0.0 < h < 0.5:
        raise ValueError("kernel bandwidth must lie in (0, 0.5)")


def kernel_copula_density(obs: PseudoObservations, u, v, h: float, kernel=None):
    """Kernel estimate of the copula density at (u, v) from pseudo-observations."""
    _check_h(h)
    kern = epanechnikov if kernel is None else kernel
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty(np.broadcast(u_arr, v_arr).shape)
    u_b, v_b = np.broadcast_arrays(u_arr, v_arr)
    for k in range(out.size):
        vals = kern((obs.u - u_b.ravel()[k]) / h, (obs.v - v_b.ravel()[k]) / h)
        out.ravel()[k] = float(np.dot(obs.weights, vals)) / (obs.span * h * h)
    return out if np.ndim(u) or np.ndim(v) else float(out.ravel()[0])


def _partial_batch(obs, fixed, other, h, kernel, step, swap):
    """Shared smoother: integral of the kernel density over [0, other] at
    ``fixed`` in the non-integrated coordinate; midpoint rule at ~``step``."""
    kern_generic = kernel is not None
    a = obs.v if swap else obs.u  # coordinate matched to `fixed`
    b = obs.u if swap else obs.v  # coordinate integrated over
    out = np.empty(fixed.size)
    inner_cache: dict[float, np.ndarray] = {}
    for k in range(fixed.size):
        up = other[k]
        if up not in inner_cache:
            n_mid = max(1, math.ceil(up / step))
            hw = up / n_mid
            mids = (np.arange(n_mid) + 0.5) * hw
            if kern_generic:
                inner_cache[up] = (mids, hw)
            else:
                inner_cache[up] = hw * _epan1((b[:, None] - mids[None, :]) / h).sum(axis=1)
        if kern_generic:
            mids, hw = inner_cache[up]
            if swap:
                kv = kernel((b[:, None] - mids[None, :]) / h, (a[:, None] - fixed[k]) / h)
            else:
                kv = kernel((a[:, None] - fixed[k]) / h, (b[:, None] - mids[None, :]) / h)
            integrand = hw * kv.sum(axis=1)
        else:
            integrand = _epan1((a - fixed[k]) / h) * inner_cache[up]
        out[k] = np.dot(obs.weights, integrand) / (obs.span * h * h)
    return np.clip(out, 0.0, 1.0)


def copula_partial_u(obs: PseudoObservations, u, v, h: float, kernel=None, step: float = 0.01):
    """Smoothed dC/du at (u, v): the kernel density integrated over [0, v].

    Output is clipped to [0, 1], the range of a copula partial derivative.
    """
    _check_h(h)
    u_arr, v_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))
    )
    out = _partial_batch(obs, u_arr.ravel(), v_arr.ravel(), h, kernel, step, swap=False)
    out = out.reshape(u_arr.shape)
    return out if np.ndim(u) or np.ndim(v) else float(out.ravel()[0])


def copula_partial_v(obs: PseudoObservations, u, v, h: float, kernel=None, step: float = 0.01):
    """Smoothed dC/dv at (u, v): the kernel density integrated over [0, u]."""
    _check_h(h)
    u_arr, v_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))
    )
    out = _partial_batch(obs, v_arr.ravel(), u_arr.ravel(), h, kernel, step, swap=True)
    out = out.reshape(u_arr.shape)
    return out if np.ndim(u) or np.ndim(v) else float(out.ravel()[0])


# -- pointwise and uniform inference ------------------------------------------------


def pointwise_ci(c_hat: float, avar: float, span: float, level: float) -> tuple[float, float]:
    """Normal confidence interval c_hat +- z sqrt(avar/span), clipped to [0, 1]."""
    if not 0.0 <= level < 1.0:
        raise ValueError("confidence level must lie in [0, 1)")
    if avar <= 0:
        raise ValueError(
            "nonpositive variance estimate; widen the lag window (larger xi) "
            "or move the evaluation point"
        )
    z = 0.0 if level == 0.0 else float(ndtri(0.5 + 0.5 * level))
    half = z * math.sqrt(avar / span)
    return max(c_hat - half, 0.0), min(c_hat + half, 1.0)


def _psd_repair(matrix: np.ndarray) -> np.ndarray:
    """Nearest-PSD projection (clip negative eigenvalues) plus a tiny ridge."""
    eigval, eigvec = np.linalg.eigh(0.5 * (matrix + matrix.T))
    fixed = (eigvec * np.maximum(eigval, 0.0)) @ eigvec.T
    return fixed + 1e-12 * np.eye(matrix.shape[0])


@dataclass
class BandResult:
    """A uniform confidence band over the grid: values +- quantile/sqrt(span)."""

    u: np.ndarray
    v: np.ndarray
    values: np.ndarray
    half_width: float
    lower: np.ndarray
    upper: np.ndarray
    level: float
    n_draws: int
    seed: int
    sup_quantile: float

    def covers(self, target) -> bool:
        evaluate = target.cdf if hasattr(target, "cdf") else target
        uu, vv = np.meshgrid(self.u, self.v, indexing="ij")
        tv = np.asarray(evaluate(uu, vv), dtype=float)
        return bool(np.all(np.abs(self.values - tv) <= self.half_width))


def uniform_band(
    grid: EmpiricalCopulaGrid,
    cov: GridCovariance,
    level: float = 0.95,
    n_draws: int = 5000,
    seed: int = 0,
) -> BandResult:
    """Simultaneous confidence band from the simulated Gaussian supremum.

    Draws ``n_draws`` Gaussian vectors with the (PSD-repaired) plug-in
    covariance, takes each draw's largest absolute coordinate, and uses the
    ceil(level x n_draws) order statistic as the sup quantile.
    """
    if n_draws < 1000:
        raise ValueError("need at least 1000 Monte Carlo draws for the sup quantile")
    m2 = grid.values.size
    if cov.matrix.shape != (m2, m2):
        raise ValueError("covariance matrix does not match the grid")
    try:
        chol = np.linalg.cholesky(_psd_repair(cov.matrix))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ValueError("covariance not factorizable even after PSD repair") from exc
    rng = np.random.default_rng(seed)
    draws = chol @ rng.standard_normal((m2, n_draws))
    sups = np.sort(np.max(np.abs(draws), axis=0))
    q = float(sups[math.ceil(level * n_draws) - 1])
    half = q / math.sqrt(grid.span)
    return BandResult(
        u=grid.u,
        v=grid.v,
        values=grid.values,
        half_width=half,
        lower=np.clip(grid.values - half, 0.0, 1.0),
        upper=np.clip(grid.values + half, 0.0, 1.0),
        level=level,
        n_draws=n_draws,
        seed=seed,
        sup_quantile=q,
    )


# -- goodness of fit -----------------------------------------------------------------


def _null_values(null, u_grid, v_grid):
    if isinstance(null, np.ndarray):
        if null.shape != (len(u_grid), len(v_grid)):
            raise ValueError("null value array does not match the grid")
        return null
    evaluate = null.cdf if hasattr(null, "cdf") else null
    uu, vv = np.meshgrid(u_grid, v_grid, indexing="ij")
    return np.asarray(evaluate(uu, vv), dtype=float)


def gof_statistic(grid: EmpiricalCopulaGrid, null, weights: np.ndarray | None = None) -> float:
    """span x weighted squared distance between the grid estimate and the null."""
    w = grid.quadrature_weights() if weights is None else np.asarray(weights, dtype=float)
    if abs(float(w.sum()) - 1.0) > 1e-10:
        raise ValueError("quadrature weights must sum to one")
    c0 = _null_values(null, grid.u, grid.v)
    return float(grid.span * np.sum(w * (grid.values - c0) ** 2))


@dataclass
class GofResult:
    statistic: float
    p_value: float
    eigenvalues: np.ndarray  # positive eigenvalues retained in the mixture
    null_description: str
    n_draws: int
    seed: int
    fitted_param: float | None = None

    def reject(self, level: float) -> bool:
        return self.p_value < level


def _restrict_span(series: VolPairSeries, span_cap: float) -> VolPairSeries:
    ends = np.cumsum(series.weights)
    keep = int(np.searchsorted(ends, span_cap, side="right"))
    keep = max(keep, 3)
    return VolPairSeries(
        series.vx[:keep], series.vy[:keep], weights=series.weights[:keep], span=float(ends[keep - 1])
    )


def gof_test(
    series: VolPairSeries,
    null,
    u_grid=None,
    v_grid=None,
    xi: float = 0.15,
    h: float | None = None,
    n_draws: int = 5000,
    seed: int = 0,
    composite: bool = False,
    split_eta: float | None = None,
) -> GofResult:
    """Test whether the occupation copula equals a null copula.

    The statistic is the span-scaled weighted squared grid distance; its null
    law is the positive-eigenvalue chi-square mixture implied by the plug-in
    covariance, simulated with ``n_draws`` draws.  With ``composite=True`` the
    null family's parameter is first fitted by maximum likelihood on the
    pseudo-observations (optionally only the leading span**split_eta portion
    of the path enters the copula estimate, removing the first-order effect
    of parameter estimation).
    """
    u_grid = inference_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    v_grid = u_grid if v_grid is None else np.asarray(v_grid, dtype=float)

    fitted = None
    if composite:
        if not isinstance(null, CopulaModel):
            raise ValueError("composite testing needs a parametric null family")
        obs_full = pseudo_observations(series)
        fitted, _ = fit_mle(obs_full, null.family)
        null = CopulaModel(null.family, fitted)
        if split_eta is not None:
            if not 0.0 < split_eta < 1.0:
                raise ValueError("split exponent must lie in (0, 1)")
            series = _restrict_span(series, series.span**split_eta)

    grid = empirical_copula(series, u_grid, v_grid)
    w2d = grid.quadrature_weights()
    stat = gof_statistic(grid, null, w2d)

    cov = avar_C(series, grid_points(u_grid, v_grid), xi=xi, h=h)
    sqrt_w = np.sqrt(w2d.ravel())
    mixture = sqrt_w[:, None] * cov.matrix * sqrt_w[None, :]
    eigs = np.linalg.eigvalsh(0.5 * (mixture + mixture.T))
    pis = eigs[eigs > 0]
    if pis.size == 0:
        raise ValueError("degenerate covariance: no positive eigenvalues")
    rng = np.random.default_rng(seed)
    draws = rng.chisquare(1.0, size=(n_draws, pis.size)) @ pis
    p_value = float(np.mean(draws >= stat))

    desc = null.describe() if isinstance(null, CopulaModel) else "custom null"
    if composite:
        desc = f"composite {desc}"
    return GofResult(
        statistic=stat,
        p_value=p_value,
        eigenvalues=pis[::-1].copy(),
        null_description=desc,
        n_draws=n_draws,
        seed=seed,
        fitted_param=fitted,
    )
