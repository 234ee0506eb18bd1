import io

import numpy as np
import pytest

import volcopula as vc
from volcopula.panels import HighFreqPanel, ingest_ticks, write_panel_csv
from volcopula.spotvol import SpotVolConfig, pair_series, spot_variance_path


def tick_csv(rows, header="timestamp,price,asset"):
    return io.StringIO(header + "\n" + "\n".join(rows) + "\n")


class TestIngest:
    def test_previous_tick_definition(self):
        buf = tick_csv(
            [
                "2021-03-01T09:30:00.000,100.0,A",
                "2021-03-01T09:30:45.000,101.0,A",
                "2021-03-01T09:30:00.000,50.0,B",
                "2021-03-01T15:59:00.000,51.0,B",
            ]
        )
        panel = ingest_ticks(buf, freq_seconds=60.0)
        a = np.exp(panel.log_prices[0])
        assert a[0] == pytest.approx(100.0)
        assert a[1] == pytest.approx(101.0)  # last tick at or before 09:31
        assert a[2] == pytest.approx(101.0)
        assert panel.n_per_day == 390

    def test_constant_price_zero_returns(self):
        rows = [f"2021-03-01T{hh:02d}:{mm:02d}:00.000,42.0,A" for hh in (9, 12, 15) for mm in (30, 45)]
        rows += [r.replace(",A", ",B") for r in rows]
        panel = ingest_ticks(tick_csv(rows), freq_seconds=300.0)
        assert np.all(panel.returns() == 0.0)

    def test_poisson_arrivals_match_brute_force(self):
        rng = np.random.default_rng(0)
        t_ms = np.sort(rng.integers(0, 23_400_000, size=300))
        prices = 100.0 + np.cumsum(rng.standard_normal(300)) * 0.01
        base = np.datetime64("2021-03-01T09:30:00.000")
        rows = []
        for tm, p in zip(t_ms, prices):
            stamp = (base + np.timedelta64(int(tm), "ms")).astype(str)
            rows.append(f"{stamp},{float(p)!r},A")
            rows.append(f"{stamp},{float(p)!r},B")
        panel = ingest_ticks(tick_csv(rows), freq_seconds=60.0)
        grid_ms = np.arange(0, 23_400_001, 60_000)
        idx = np.searchsorted(t_ms, grid_ms, side="right") - 1
        expected = np.log(prices[np.maximum(idx, 0)])
        assert np.array_equal(panel.log_prices[0], expected)

    def test_unparseable_price_reports_line(self):
        buf = tick_csv(
            [
                "2021-03-01T09:30:00.000,100.0,A",
                "2021-03-01T09:31:00.000,oops,A",
                "2021-03-01T09:30:00.000,50.0,B",
            ]
        )
        with pytest.raises(ValueError, match="line 3"):
            ingest_ticks(buf)

    def test_out_of_session_ticks_excluded(self):
        buf = tick_csv(
            [
                "2021-03-01T04:00:00.000,1.0,A",
                "2021-03-01T09:30:00.000,100.0,A",
                "2021-03-01T09:30:00.000,50.0,B",
                "2021-03-01T20:00:00.000,9999.0,B",
            ]
        )
        panel = ingest_ticks(buf, freq_seconds=23_400.0)
        assert np.exp(panel.log_prices[0][0]) == pytest.approx(100.0)
        assert np.exp(panel.log_prices[1][-1]) == pytest.approx(50.0)

    def test_day_without_ticks_dropped_and_counted(self):
        buf = tick_csv(
            [
                "2021-03-01T09:30:00.000,100.0,A",
                "2021-03-01T09:30:00.000,50.0,B",
                "2021-03-02T09:30:00.000,101.0,A",  # B missing on day 2
            ]
        )
        panel = ingest_ticks(buf, freq_seconds=23_400.0)
        assert panel.n_days == 1
        assert panel.dropped_days == 1

    def test_short_day_flag(self):
        rows = [
            "2021-03-01T09:30:00.000,100.0,A",
            "2021-03-01T15:59:30.000,101.0,A",
            "2021-03-01T09:30:00.000,50.0,B",
            "2021-03-01T15:59:30.000,51.0,B",
            "2021-03-02T09:30:00.000,100.0,A",
            "2021-03-02T12:00:00.000,101.0,A",  # early close
            "2021-03-02T09:30:00.000,50.0,B",
            "2021-03-02T12:00:00.000,51.0,B",
        ]
        full = ingest_ticks(tick_csv(rows), freq_seconds=23_400.0)
        assert full.n_days == 2
        trimmed = ingest_ticks(tick_csv(rows), freq_seconds=23_400.0, drop_short_days=True)
        assert trimmed.n_days == 1
        assert trimmed.dropped_days == 1

    def test_wide_format(self):
        buf = io.StringIO(
            "timestamp,ES,TY\n"
            "2021-03-01T09:30:00.000,100.0,50.0\n"
            "2021-03-01T16:00:00.000,101.0,51.0\n"
        )
        panel = ingest_ticks(buf, freq_seconds=23_400.0)
        assert panel.labels == ("ES", "TY")
        assert panel.log_prices.shape == (2, 2)


class TestPanelInvariants:
    def test_grid_length_example(self):
        cfg = vc.SimConfig(days=50, n_obs=78, n_inner=780, seed=1)
        panel = vc.observe(vc.simulate(cfg))
        assert panel.grid_length == 50 * 78 + 1

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="index"):
            HighFreqPanel(
                log_prices=np.array([[0.0, np.nan, 0.1], [0.0, 0.1, 0.2]]),
                n_per_day=2,
                n_days=1,
                continuous=True,
            )

    def test_returns_shape(self):
        cfg = vc.SimConfig(days=3, n_obs=39, n_inner=780, seed=2)
        panel = vc.observe(vc.simulate(cfg))
        assert panel.returns().shape == (2, 3, 39)


class TestRoundTrip:
    def test_log_price_export_is_bit_exact(self, tmp_path):
        cfg = vc.SimConfig(days=5, n_obs=78, n_inner=780, seed=3)
        panel = vc.observe(vc.simulate(cfg))
        out = tmp_path / "panel.csv"
        write_panel_csv(panel, out, log_prices=True)
        back = ingest_ticks(out, freq_seconds=300.0, log_prices=True)
        svc = SpotVolConfig(k_n=48)
        direct = pair_series(
            spot_variance_path(panel.returns()[0], svc, panel.delta),
            spot_variance_path(panel.returns()[1], svc, panel.delta),
        )
        reloaded = pair_series(
            spot_variance_path(back.returns()[0], svc, back.delta),
            spot_variance_path(back.returns()[1], svc, back.delta),
        )
        assert np.array_equal(direct.vx, reloaded.vx)
        assert np.array_equal(direct.vy, reloaded.vy)
        assert np.array_equal(direct.weights, reloaded.weights)

    def test_price_level_export_close(self, tmp_path):
        cfg = vc.SimConfig(days=3, n_obs=39, n_inner=780, seed=4)
        panel = vc.observe(vc.simulate(cfg))
        out = tmp_path / "panel.csv"
        write_panel_csv(panel, out, log_prices=False)
        back = ingest_ticks(out, freq_seconds=600.0)
        assert np.allclose(back.returns(), panel.returns(), atol=1e-12)

    def test_comment_header_skipped(self, tmp_path):
        cfg = vc.SimConfig(days=2, n_obs=39, n_inner=780, seed=5)
        panel = vc.observe(vc.simulate(cfg))
        out = tmp_path / "panel.csv"
        write_panel_csv(panel, out, log_prices=True, header_comment="config: {}")
        back = ingest_ticks(out, freq_seconds=600.0, log_prices=True)
        assert back.n_days == 2
