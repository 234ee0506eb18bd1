"""Blocked spot-variance estimation from intraday returns with jump truncation.

Each trading day is split into consecutive blocks of ``k_n`` returns; a block's
variance estimate is the average of its squared returns that survive the
truncation threshold ``alpha * delta**varpi``, normalized by block duration.
When ``k_n`` does not divide the day, the leftover interval at the end of the
day is covered by a backward window over the day's last ``k_n`` returns.
Blocks never straddle days.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .occupation import VolPairSeries

__all__ = [
    "SpotVolConfig",
    "SpotVolPath",
    "DEFAULT_BLOCKS",
    "default_block_size",
    "truncation_threshold",
    "default_truncation_scale",
    "spot_variance_path",
    "pair_series",
    "spot_pair_from_panel",
    "validate_rates",
    "RatesReport",
]

# block sizes paired with the standard intraday sampling frequencies
DEFAULT_BLOCKS = {39: 36, 78: 48, 390: 120}


def default_block_size(n: int) -> int:
    """Block size for n returns/day: the standard pairs, else ~6 sqrt(n)."""
    if n in DEFAULT_BLOCKS:
        return DEFAULT_BLOCKS[n]
    return min(n, max(2, round(6.0 * math.sqrt(n))))


@dataclass(frozen=True)
class SpotVolConfig:
    k_n: int
    varpi: float = 0.49
    alpha: float | np.ndarray | None = None  # None: data-driven per day; inf: no truncation
    gamma: float | None = None  # diagnostic block-growth exponent, unused in estimation

    def __post_init__(self):
        if self.k_n < 2:
            raise ValueError("block size must be at least 2")
        if not 0.0 < self.varpi < 0.5:
            raise ValueError("truncation exponent must lie in (0, 1/2)")
        if self.alpha is not None and np.any(np.asarray(self.alpha) <= 0):
            raise ValueError("truncation scale must be positive")


@dataclass
class SpotVolPath:
    """Piecewise-constant block variance estimates for one asset."""

    values: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    truncated_counts: np.ndarray
    k_n: int
    thresholds: np.ndarray  # per day

    @property
    def durations(self) -> np.ndarray:
        return self.ends - self.starts


def truncation_threshold(alpha: float, varpi: float, delta: float) -> float:
    """Return increments larger than alpha * delta**varpi are discarded."""
    if not (alpha > 0):
        raise ValueError("truncation scale must be positive")
    if not 0.0 < varpi < 0.5:
        raise ValueError("truncation exponent must lie in (0, 1/2)")
    if delta <= 0:
        raise ValueError("step size must be positive")
    if np.isinf(alpha):
        return np.inf
    return alpha * delta**varpi


def default_truncation_scale(returns: np.ndarray, delta: float) -> np.ndarray:
    """Per-day truncation scale: 4 x sqrt of a bipower variance proxy.

    The proxy (pi/2 x mean of adjacent absolute-return products / delta) is
    jump-robust, so the resulting threshold tracks the diffusive scale of each
    day independently of any jumps present.
    """
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    absr = np.abs(r)
    bv = (np.pi / 2.0) * np.mean(absr[:, 1:] * absr[:, :-1], axis=1) / delta
    if np.any(bv <= 0):
        raise ValueError(f"day {int(np.argmin(bv))} has a zero bipower proxy")
    return 4.0 * np.sqrt(bv)


def spot_variance_path(returns, cfg: SpotVolConfig, delta: float) -> SpotVolPath:
    """Blocked, truncated spot-variance path from (days, n) return rows.

    A 1-d input is treated as a single day.  Requires at least ``k_n`` returns
    per day; rejects non-finite returns by position.
    """
    r = np.atleast_2d(np.asarray(returns, dtype=float))
    days, n = r.shape
    k = cfg.k_n
    if n < k:
        raise ValueError(f"need at least k_n={k} returns per day, got {n}")
    if not np.all(np.isfinite(r)):
        d, i = np.argwhere(~np.isfinite(r))[0]
        raise ValueError(f"non-finite return at day {d}, index {i}")
    if cfg.alpha is None:
        alpha_by_day = default_truncation_scale(r, delta)
    else:
        alpha_by_day = np.broadcast_to(np.asarray(cfg.alpha, dtype=float), (days,))
    thr_by_day = np.array(
        [truncation_threshold(a, cfg.varpi, delta) for a in alpha_by_day]
    )

    n_full = n // k
    stub = n % k
    per_day = n_full + (1 if stub else 0)
    day_len = n * delta

    values = np.empty(days * per_day)
    starts = np.empty(days * per_day)
    ends = np.empty(days * per_day)
    trunc = np.zeros(days * per_day, dtype=int)
    block_norm = k * delta
    for d in range(days):
        keep = np.abs(r[d]) <= thr_by_day[d]
        kept_sq = np.where(keep, r[d] ** 2, 0.0)
        base = d * per_day
        t0 = d * day_len
        for j in range(n_full):
            sl = slice(j * k, (j + 1) * k)
            values[base + j] = kept_sq[sl].sum() / block_norm
            trunc[base + j] = int(np.count_nonzero(~keep[sl]))
            starts[base + j] = t0 + j * block_norm
            ends[base + j] = t0 + (j + 1) * block_norm
        if stub:
            sl = slice(n - k, n)
            values[base + n_full] = kept_sq[sl].sum() / block_norm
            trunc[base + n_full] = int(np.count_nonzero(~keep[sl]))
            starts[base + n_full] = t0 + n_full * block_norm
            ends[base + n_full] = t0 + day_len
    return SpotVolPath(values, starts, ends, trunc, k, thr_by_day)


def pair_series(px: SpotVolPath, py: SpotVolPath) -> VolPairSeries:
    if px.values.size != py.values.size or not np.array_equal(px.starts, py.starts):
        raise ValueError("the two spot-variance paths have different block layouts")
    return VolPairSeries(px.values, py.values, weights=px.durations, span=float(px.ends[-1]))


def spot_pair_from_panel(panel, cfg: SpotVolConfig | None = None) -> VolPairSeries:
    """Panel-to-series convenience: spot variance for both assets, paired."""
    if cfg is None:
        cfg = SpotVolConfig(k_n=default_block_size(panel.n_per_day))
    rets = panel.returns()
    px = spot_variance_path(rets[0], cfg, panel.delta)
    py = spot_variance_path(rets[1], cfg, panel.delta)
    return pair_series(px, py)


# -- tuning-rate diagnostics ---------------------------------------------------


@dataclass
class RatesReport:
    d_n: float
    d_n_prime: float | None
    terms: dict
    conditions: list  # (name, bool)
    satisfied: bool

    def failing(self) -> list[str]:
        return [name for name, ok in self.conditions if not ok]


def validate_rates(
    r: float,
    r_tilde: float,
    varpi: float,
    gamma: float,
    delta: float,
    span: float,
    iota: float = 0.01,
) -> RatesReport:
    """Check the tuning-exponent conditions and the scaled error-rate bounds.

    Evaluates the four error terms governing the spot-variance recovery error
    at block exponent ``gamma`` (k_n ~ delta^-gamma), and reports whether
    sqrt(span) times the applicable compound rate stays below one.  Purely
    diagnostic; nothing in the estimators depends on it.
    """
    if not 0.0 <= r <= 2.0 or not 0.0 <= r_tilde <= 2.0:
        raise ValueError("jump-activity exponents must lie in [0, 2]")
    if not 0.0 < varpi < 0.5:
        raise ValueError("truncation exponent must lie in (0, 1/2)")
    if not 0.0 < gamma < 1.0:
        raise ValueError("block exponent must lie in (0, 1)")
    if delta <= 0 or span <= 0:
        raise ValueError("step size and span must be positive")

    terms = {
        "truncation": delta ** (gamma - 1.0 + (2.0 - r) * varpi),
        "sampling": delta ** (gamma / 2.0 - iota),
        "smoothing": delta ** ((1.0 - gamma) / 2.0 - iota),
        "vol_jumps": delta ** ((1.0 - gamma) / (1.0 + r_tilde) - iota),
    }
    d_n = terms["sampling"] + terms["smoothing"] + terms["vol_jumps"] + terms["truncation"]
    d_n_prime = None
    if r > 0:
        terms["truncation_active"] = delta ** (gamma / r - (1.0 - varpi) - iota)
        d_n_prime = (
            terms["truncation_active"]
            + terms["sampling"]
            + terms["smoothing"]
            + terms["vol_jumps"]
        )

    conditions = []
    if r > 1:
        conditions.append(("(r-1)/r < varpi", (r - 1.0) / r < varpi))
        conditions.append(("r(1-varpi) < gamma", r * (1.0 - varpi) < gamma))
    else:
        conditions.append(("1-(2-r)varpi < gamma", 1.0 - (2.0 - r) * varpi < gamma))
    if r_tilde > 0:
        conditions.append(("(1-gamma)/(1+r_tilde) > 0", (1.0 - gamma) / (1.0 + r_tilde) > 0))
    scaled = math.sqrt(span) * (d_n_prime if r > 1 else d_n)
    conditions.append(("sqrt(span) x rate < 1", scaled < 1.0))

    return RatesReport(
        d_n=d_n,
        d_n_prime=d_n_prime,
        terms=terms,
        conditions=conditions,
        satisfied=all(ok for _, ok in conditions),
    )
