"""Equidistant two-asset log-price panels and tick-data ingestion.

A panel holds, for each of two assets, T trading days of n+1 log prices on an
equidistant intraday grid (the day is the unit interval, so the grid spacing
is 1/n).  Panels either carry per-day grids with overnight gaps (real data) or
one continuous grid where consecutive days share the boundary point
(simulated data).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

__all__ = ["HighFreqPanel", "ingest_ticks", "write_panel_csv", "read_panel_csv"]

SESSION_SECONDS = 23_400  # 09:30-16:00


@dataclass
class HighFreqPanel:
    """Two-asset equidistant log-price panel over whole trading days."""

    log_prices: np.ndarray  # (2, n_grid_points)
    n_per_day: int  # returns per day
    n_days: int
    labels: tuple[str, str] = ("X", "Y")
    continuous: bool = False  # consecutive days share the boundary grid point
    timestamps: np.ndarray | None = None  # datetime64[ms], one per grid point
    day_keys: list = field(default_factory=list)  # dates or day indices
    dropped_days: int = 0

    def __post_init__(self):
        self.log_prices = np.asarray(self.log_prices, dtype=float)
        if self.log_prices.ndim != 2 or self.log_prices.shape[0] != 2:
            raise ValueError("log_prices must have shape (2, n_points)")
        if self.log_prices.shape[1] != self.grid_length:
            raise ValueError(
                f"expected {self.grid_length} grid points, got {self.log_prices.shape[1]}"
            )
        if not np.all(np.isfinite(self.log_prices)):
            bad = int(np.flatnonzero(~np.isfinite(self.log_prices))[0] % self.log_prices.shape[1])
            raise ValueError(f"non-finite log price at grid index {bad}")
        if self.timestamps is not None and np.any(np.diff(self.timestamps) <= np.timedelta64(0)):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def delta(self) -> float:
        return 1.0 / self.n_per_day

    @property
    def grid_length(self) -> int:
        if self.continuous:
            return self.n_days * self.n_per_day + 1
        return self.n_days * (self.n_per_day + 1)

    def day_slice(self, d: int) -> slice:
        if self.continuous:
            return slice(d * self.n_per_day, (d + 1) * self.n_per_day + 1)
        return slice(d * (self.n_per_day + 1), (d + 1) * (self.n_per_day + 1))

    def returns(self) -> np.ndarray:
        """Within-day log returns, shape (2, n_days, n_per_day)."""
        out = np.empty((2, self.n_days, self.n_per_day))
        for d in range(self.n_days):
            out[:, d, :] = np.diff(self.log_prices[:, self.day_slice(d)], axis=1)
        return out


def _session_grid_ms(session: tuple[str, str], freq_seconds: float) -> np.ndarray:
    start = _parse_clock_ms(session[0])
    end = _parse_clock_ms(session[1])
    step_ms = freq_seconds * 1000.0
    if step_ms != int(step_ms) or (end - start) % int(step_ms):
        raise ValueError("target frequency must divide the session window in whole milliseconds")
    return np.arange(start, end + 1, int(step_ms), dtype=np.int64)


def _parse_clock_ms(text: str) -> int:
    hh, mm = text.split(":")
    return (int(hh) * 3600 + int(mm) * 60) * 1000


def ingest_ticks(
    path,
    session: tuple[str, str] = ("09:30", "16:00"),
    freq_seconds: float = 60.0,
    log_prices: bool = False,
    drop_short_days: bool = False,
    short_day_slack_seconds: float = 1800.0,
) -> HighFreqPanel:
    """Resample a tick CSV onto an equidistant intraday grid by previous tick.

    The file is either long format with columns (timestamp, price, asset) or
    wide format (timestamp, <asset1>, <asset2>).  For every grid time the last
    tick at or before it is used; the leading grid points of a day fall back
    to the day's first in-session tick.  Ticks outside the session window are
    ignored; days without ticks for either asset are dropped (counted and
    logged), as are short days when ``drop_short_days`` is set.
    """
    df = pd.read_csv(path, comment="#", float_precision="round_trip")
    df.columns = [str(c).strip() for c in df.columns]
    cols_lower = [c.lower() for c in df.columns]
    ts = pd.to_datetime(df[df.columns[0]], format="ISO8601", errors="coerce")
    if ts.isna().any():
        raise ValueError(f"unparseable timestamp at line {int(ts.isna().idxmax()) + 2}")

    if "asset" in cols_lower:
        price = pd.to_numeric(df[df.columns[cols_lower.index("price")]], errors="coerce")
        if price.isna().any():
            raise ValueError(f"unparseable price at line {int(price.isna().idxmax()) + 2}")
        asset = df[df.columns[cols_lower.index("asset")]].astype(str)
        labels = tuple(sorted(asset.unique()))
        if len(labels) != 2:
            raise ValueError(f"expected exactly two assets, found {labels}")
        per_asset = {
            lab: (ts[asset == lab].to_numpy(), price[asset == lab].to_numpy())
            for lab in labels
        }
    else:
        if df.shape[1] < 3:
            raise ValueError("wide tick files need a timestamp column and two price columns")
        labels = (df.columns[1], df.columns[2])
        per_asset = {}
        for lab in labels:
            price = pd.to_numeric(df[lab], errors="coerce")
            keep = price.notna() if df[lab].isna().any() else np.ones(len(df), bool)
            bad = price.isna() & df[lab].notna()
            if bad.any():
                raise ValueError(f"unparseable price at line {int(bad.idxmax()) + 2}")
            per_asset[lab] = (ts[keep].to_numpy(), price[keep].to_numpy())

    grid_ms = _session_grid_ms(session, freq_seconds)
    n = grid_ms.size - 1
    start_ms, end_ms = int(grid_ms[0]), int(grid_ms[-1])

    all_days = sorted(set(np.concatenate([t.astype("datetime64[D]") for t, _ in per_asset.values()])))
    day_prices, day_stamps, day_keys = [], [], []
    dropped = 0
    for day in all_days:
        day0_ms = day.astype("datetime64[ms]").astype(np.int64)
        cols = np.empty((2, n + 1))
        ok = True
        for a, lab in enumerate(labels):
            t, p = per_asset[lab]
            tod = t.astype("datetime64[ms]").astype(np.int64) - day0_ms
            sel = (t.astype("datetime64[D]") == day) & (tod >= start_ms) & (tod <= end_ms)
            if not sel.any():
                ok = False
                break
            tod_in, p_in = tod[sel], p[sel]
            order = np.argsort(tod_in, kind="stable")
            tod_in, p_in = tod_in[order], p_in[order]
            if drop_short_days and tod_in[-1] < end_ms - short_day_slack_seconds * 1000.0:
                ok = False
                break
            idx = np.searchsorted(tod_in, grid_ms, side="right") - 1
            cols[a] = p_in[np.maximum(idx, 0)]
        if not ok:
            dropped += 1
            continue
        day_prices.append(cols)
        day_stamps.append(day0_ms + grid_ms)
        day_keys.append(day)
    if dropped:
        logger.warning("dropped %d day(s) without a full tick record", dropped)
    if not day_prices:
        raise ValueError("no usable trading days in the tick file")

    values = np.concatenate(day_prices, axis=1)
    if not log_prices:
        if np.any(values <= 0):
            raise ValueError("prices must be positive to take logs")
        values = np.log(values)
    return HighFreqPanel(
        log_prices=values,
        n_per_day=n,
        n_days=len(day_prices),
        labels=labels,
        continuous=False,
        timestamps=np.concatenate(day_stamps).astype("datetime64[ms]"),
        day_keys=day_keys,
        dropped_days=dropped,
    )


def write_panel_csv(panel: HighFreqPanel, path, log_prices: bool = False, header_comment: str | None = None):
    """Write a wide (timestamp, asset1, asset2) CSV; one row per grid point.

    Boundary points shared by consecutive days of a continuous panel are
    written under both days' session clocks, so the file round-trips through
    :func:`ingest_ticks` day by day.
    """
    rows_idx = []
    for d in range(panel.n_days):
        sl = panel.day_slice(d)
        rows_idx.extend(range(sl.start, sl.stop))
    if panel.timestamps is not None:
        stamps = panel.timestamps[rows_idx]
    else:
        n = panel.n_per_day
        if SESSION_SECONDS * 1000 % n:
            raise ValueError(f"{n} observations/day do not fit a 6.5h session in whole ms")
        step = SESSION_SECONDS * 1000 // n
        day0 = np.datetime64("2020-01-06").astype("datetime64[ms]").astype(np.int64)
        open_ms = _parse_clock_ms("09:30")
        per_day = [
            day0 + d * 86_400_000 + open_ms + step * np.arange(n + 1, dtype=np.int64)
            for d in range(panel.n_days)
        ]
        stamps = np.concatenate(per_day).astype("datetime64[ms]")
    values = panel.log_prices[:, rows_idx]
    if not log_prices:
        values = np.exp(values)
    frame = pd.DataFrame(
        {
            "timestamp": pd.to_datetime(stamps).strftime("%Y-%m-%dT%H:%M:%S.%f").str[:-3],
            panel.labels[0]: values[0],
            panel.labels[1]: values[1],
        }
    )
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        frame.to_csv(fh, index=False)


def read_panel_csv(path, freq_seconds: float = 60.0, log_prices: bool = False) -> HighFreqPanel:
    return ingest_ticks(path, freq_seconds=freq_seconds, log_prices=log_prices)
