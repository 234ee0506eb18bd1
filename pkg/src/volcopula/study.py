"""Monte Carlo studies at desk scale: copula-estimation RMSE curves,
studentized-pivot calibration, goodness-of-fit size/power and uniform-band
coverage.

Every study spawns one reproducible substream per replication, so results do
not depend on scheduling; replications can run in worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .copulas import CopulaModel, gumbel
from .inference import avar_C, gof_test, grid_points, uniform_band
from .occupation import empirical_copula, inference_grid, interior_grid, rmse_vs_target
from .simulate import SimConfig, observe, simulate, true_variance_series
from .spotvol import spot_pair_from_panel

__all__ = ["rmse_study", "pivot_study", "gof_study", "band_study", "DESK_INNER"]

DESK_INNER = 780  # inner steps/day for desk-scale studies; a multiple of 39/78/390


def _rep_seeds(seed: int, m: int):
    return np.random.SeedSequence(seed).spawn(m)


def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _base_config(span, n_obs, n_inner, copula, seed) -> SimConfig:
    return SimConfig(days=span, n_obs=n_obs, n_inner=n_inner, copula=copula, seed=seed)


# -- RMSE curves -----------------------------------------------------------------


def _rmse_one(args):
    seed, span, obs_freqs, n_inner, copula, grid_m, oracle_stride = args
    cfg = _base_config(span, max(obs_freqs), n_inner, copula, seed)
    path = simulate(cfg)
    grid = interior_grid(grid_m)
    oracle = empirical_copula(true_variance_series(path, stride=oracle_stride), grid, grid)
    out = {"oracle": rmse_vs_target(oracle, copula)}
    for n in obs_freqs:
        series = spot_pair_from_panel(observe(path, n))
        out[n] = rmse_vs_target(empirical_copula(series, grid, grid), copula)
    return out


def rmse_study(
    m_reps: int,
    spans=(125, 500, 2000),
    obs_freqs=(39, 78, 390),
    copula: CopulaModel | None = None,
    seed: int = 0,
    n_inner: int = DESK_INNER,
    grid_m: int = 99,
    oracle_stride: int = 2,
    jobs: int = 1,
):
    """Mean RMSE toward the limit copula, per span, for the oracle estimator
    (true variances) and the return-based estimator at each frequency."""
    copula = gumbel(2.0) if copula is None else copula
    rows = []
    for span in spans:
        seeds = _rep_seeds(seed, m_reps)
        args = [(s, span, tuple(obs_freqs), n_inner, copula, grid_m, oracle_stride) for s in seeds]
        reps = _pmap(_rmse_one, args, jobs)
        for key in ["oracle", *obs_freqs]:
            vals = np.array([r[key] for r in reps])
            rows.append(
                {
                    "estimator": "oracle" if key == "oracle" else "realized",
                    "n_obs": None if key == "oracle" else key,
                    "span": span,
                    "rmse": float(vals.mean()),
                    "se": float(vals.std(ddof=1) / np.sqrt(m_reps)),
                }
            )
    return rows


# -- studentized pivot --------------------------------------------------------------


def _pivot_one(args):
    seed, span, n_obs, n_inner, copula, points, xi, h = args
    cfg = _base_config(span, n_obs, n_inner, copula, seed)
    series = spot_pair_from_panel(observe(simulate(cfg)))
    grid = empirical_copula(series, points[:, 0], points[:, 1])
    c_hat = np.diag(grid.values)
    avar = np.diag(avar_C(series, points, xi=xi, h=h).matrix)
    return c_hat, avar


def pivot_study(
    m_reps: int,
    span: int = 500,
    n_obs: int = 390,
    points=None,
    copula: CopulaModel | None = None,
    seed: int = 0,
    n_inner: int = DESK_INNER,
    xi: float = 0.15,
    h: float | None = None,
    jobs: int = 1,
):
    """Studentized copula errors sqrt(span)(C_hat - C)/sqrt(avar) per point.

    Returns the per-replication pivot matrix plus mean/sd summaries; entries
    with a nonpositive variance estimate are dropped and counted.
    """
    copula = gumbel(2.0) if copula is None else copula
    pts = np.array([[q, q] for q in (0.25, 0.5, 0.75)]) if points is None else np.asarray(points)
    c_true = np.array([copula.cdf(u, v) for u, v in pts])
    seeds = _rep_seeds(seed, m_reps)
    args = [(s, span, n_obs, n_inner, copula, pts, xi, h) for s in seeds]
    reps = _pmap(_pivot_one, args, jobs)
    z = np.full((m_reps, pts.shape[0]), np.nan)
    for r, (c_hat, avar) in enumerate(reps):
        ok = avar > 0
        z[r, ok] = np.sqrt(span) * (c_hat[ok] - c_true[ok]) / np.sqrt(avar[ok])
    return {
        "points": pts,
        "z": z,
        "mean": np.nanmean(z, axis=0),
        "sd": np.nanstd(z, axis=0, ddof=1),
        "n_invalid": int(np.isnan(z).sum()),
    }


# -- goodness of fit -----------------------------------------------------------------


def _gof_one(args):
    seed, mc_seed, span, n_obs, n_inner, truth, null, n_draws, xi, h, composite = args
    cfg = _base_config(span, n_obs, n_inner, truth, seed)
    series = spot_pair_from_panel(observe(simulate(cfg)))
    res = gof_test(
        series, null, n_draws=n_draws, seed=mc_seed, xi=xi, h=h, composite=composite
    )
    return res.p_value


def gof_study(
    m_reps: int,
    truth: CopulaModel,
    null: CopulaModel,
    span: int,
    n_obs: int = 78,
    n_draws: int = 5000,
    levels=(0.10, 0.05, 0.01),
    seed: int = 0,
    n_inner: int = DESK_INNER,
    xi: float = 0.15,
    h: float | None = None,
    composite: bool = False,
    jobs: int = 1,
):
    """Rejection rates of the goodness-of-fit test under a given truth/null pair."""
    seeds = _rep_seeds(seed, m_reps)
    args = [
        (s, 7_000_000 + r, span, n_obs, n_inner, truth, null, n_draws, xi, h, composite)
        for r, s in enumerate(seeds)
    ]
    pvals = np.array(_pmap(_gof_one, args, jobs))
    return {
        "truth": truth.describe(),
        "null": null.describe(),
        "span": span,
        "p_values": pvals,
        "rates": {lev: float((pvals < lev).mean()) for lev in levels},
    }


# -- uniform bands -----------------------------------------------------------------


def _band_one(args):
    seed, mc_seed, span, n_obs, n_inner, copula, level, n_draws, xi, h = args
    cfg = _base_config(span, n_obs, n_inner, copula, seed)
    series = spot_pair_from_panel(observe(simulate(cfg)))
    g5 = inference_grid()
    grid = empirical_copula(series, g5, g5)
    cov = avar_C(series, grid_points(g5, g5), xi=xi, h=h)
    band = uniform_band(grid, cov, level=level, n_draws=n_draws, seed=mc_seed)
    return bool(band.covers(copula)), band.half_width


def band_study(
    m_reps: int,
    span: int = 500,
    n_obs: int = 78,
    copula: CopulaModel | None = None,
    level: float = 0.95,
    n_draws: int = 5000,
    seed: int = 0,
    n_inner: int = DESK_INNER,
    xi: float = 0.15,
    h: float | None = None,
    jobs: int = 1,
):
    """Fraction of replications whose uniform band covers the true copula
    at every grid point, plus the average band half-width."""
    copula = gumbel(2.0) if copula is None else copula
    seeds = _rep_seeds(seed, m_reps)
    args = [
        (s, 9_000_000 + r, span, n_obs, n_inner, copula, level, n_draws, xi, h)
        for r, s in enumerate(seeds)
    ]
    reps = _pmap(_band_one, args, jobs)
    covered = np.array([c for c, _ in reps])
    widths = np.array([w for _, w in reps])
    return {
        "coverage": float(covered.mean()),
        "mean_half_width": float(widths.mean()),
        "level": level,
        "span": span,
    }
