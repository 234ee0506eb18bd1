"""Acceptance suite: one test per criterion, run at the stated scales.

Each test prints one PASS/FAIL line per clause before asserting, so partial
results stay visible when a criterion fails.  Runtime limits are asserted.
"""

import math
import time

import numpy as np

import volcopula as vc
from volcopula.copulas import Family, PseudoObservations
from volcopula.inference import avar_G, epanechnikov, gof_statistic, kernel_copula_density
from volcopula.occupation import VolPairSeries, empirical_copula, inference_grid, pseudo_observations
from volcopula.spotvol import SpotVolConfig, spot_variance_path
from volcopula.study import band_study, gof_study, pivot_study, rmse_study


class Clauses:
    def __init__(self, label):
        self.label = label
        self.failures = []

    def check(self, name, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        print(f"{self.label} [{status}] {name}{': ' + detail if detail else ''}")
        if not ok:
            self.failures.append(f"{name} ({detail})")

    def finish(self, started, limit_seconds):
        elapsed = time.monotonic() - started
        self.check("runtime", elapsed < limit_seconds, f"{elapsed:.1f}s < {limit_seconds}s")
        assert not self.failures, f"{self.label}: failed clauses: {self.failures}"


def test_criterion_1_closed_form_suite():
    t0 = time.monotonic()
    c = Clauses("criterion 1 (closed forms)")
    g = np.linspace(0.01, 0.99, 50)
    uu, vv = np.meshgrid(g, g)
    gap = float(np.max(np.abs(vc.gumbel(1.0).cdf(uu, vv) - uu * vv)))
    c.check("Gumbel(1) equals independence on 50x50", gap < 1e-12, f"max gap {gap:.2e}")
    c.check("tau(Gumbel 2) = 0.5 exactly", vc.gumbel(2.0).kendall_tau() == 0.5)
    c.check("tau(Clayton 2) = 0.5 exactly", vc.clayton(2.0).kendall_tau() == 0.5)
    lam_u = vc.gumbel(1.4786).tail_params()[1]
    ref = 2.0 - 2.0 ** (1.0 / 1.4786)
    c.check(
        "upper tail coefficient at 1.4786",
        abs(lam_u - ref) < 1e-4 and round(lam_u, 2) == 0.40,
        f"{lam_u:.6f} vs {ref:.6f}",
    )
    c.finish(t0, 1.0)


def test_criterion_2_sampler_mle_self_consistency():
    t0 = time.monotonic()
    c = Clauses("criterion 2 (sampler/MLE)")
    u, v = vc.gumbel(2.0).sample(50_000, np.random.default_rng(20260808))
    theta, _ = vc.fit_mle(PseudoObservations(u, v), Family.GUMBEL)
    c.check("refit theta in [1.95, 2.05]", 1.95 <= theta <= 2.05, f"theta={theta:.4f}")
    tau = vc.kendall_tau_sample(u, v)
    c.check("empirical tau within 0.03 of 0.5", abs(tau - 0.5) <= 0.03, f"tau={tau:.4f}")
    c.finish(t0, 30.0)


def test_criterion_3_rmse_convergence():
    t0 = time.monotonic()
    c = Clauses("criterion 3 (RMSE)")
    rows = rmse_study(200, spans=(125, 500, 2000), obs_freqs=(39, 78, 390), seed=31)
    oracle = {r["span"]: r["rmse"] for r in rows if r["estimator"] == "oracle"}
    realized = {
        (r["n_obs"], r["span"]): r["rmse"] for r in rows if r["estimator"] == "realized"
    }
    for t_small, t_big in [(125, 500), (500, 2000)]:
        ratio = oracle[t_small] / oracle[t_big]
        c.check(
            f"oracle RMSE({t_small})/RMSE({t_big}) in [1.5, 2.7]",
            1.5 <= ratio <= 2.7,
            f"ratio={ratio:.2f}",
        )
    seq = [realized[(n, 2000)] for n in (39, 78, 390)]
    c.check(
        "realized RMSE strictly decreasing in n at span 2000",
        seq[0] > seq[1] > seq[2],
        f"{[round(x, 5) for x in seq]}",
    )
    rel = abs(realized[(390, 2000)] - oracle[2000]) / oracle[2000]
    c.check(
        "realized(390) within 25% of oracle at span 2000",
        rel <= 0.25,
        f"realized={realized[(390, 2000)]:.5f} oracle={oracle[2000]:.5f} rel={rel:.2f}",
    )
    c.finish(t0, 20 * 60.0)


def test_criterion_4_studentized_pivot():
    t0 = time.monotonic()
    c = Clauses("criterion 4 (pivot)")
    res = pivot_study(200, span=500, n_obs=390, seed=41)
    for i, (u, v) in enumerate(res["points"]):
        mean, sd = res["mean"][i], res["sd"][i]
        c.check(
            f"|mean Z| <= 0.6 at ({u:g},{v:g})", abs(mean) <= 0.6, f"mean={mean:+.3f}"
        )
        c.check(
            f"sd Z in [0.8, 1.2] at ({u:g},{v:g})", 0.8 <= sd <= 1.2, f"sd={sd:.3f}"
        )
    c.finish(t0, 20 * 60.0)


def test_criterion_5_gof_size_power():
    t0 = time.monotonic()
    c = Clauses("criterion 5 (GoF size/power)")
    null = vc.gumbel(2.0)
    size = gof_study(200, vc.gumbel(2.0), null, span=500, n_obs=78, n_draws=5000, seed=51)
    rate = size["rates"][0.10]
    c.check(
        "size under Gumbel(2), span 500, 10% level in [0.06, 0.19]",
        0.06 <= rate <= 0.19,
        f"rate={rate:.3f}",
    )
    power_ind = gof_study(
        200, vc.independence(), null, span=250, n_obs=78, n_draws=5000, seed=52
    )
    rate_i = power_ind["rates"][0.10]
    c.check("power vs independence, span 250 >= 0.80", rate_i >= 0.80, f"rate={rate_i:.3f}")
    power_cl = gof_study(
        200, vc.clayton(2.0), null, span=2000, n_obs=78, n_draws=5000, seed=53
    )
    rate_c = power_cl["rates"][0.10]
    c.check("power vs Clayton(2), span 2000 >= 0.80", rate_c >= 0.80, f"rate={rate_c:.3f}")
    c.finish(t0, 45 * 60.0)


def test_criterion_6_uniform_band_coverage():
    t0 = time.monotonic()
    c = Clauses("criterion 6 (band coverage)")
    res = band_study(200, span=500, n_obs=78, n_draws=5000, seed=61)
    c.check(
        "95% band covers the true copula at all grid points in >= 88% of runs",
        res["coverage"] >= 0.88,
        f"coverage={res['coverage']:.3f} mean half-width={res['mean_half_width']:.4f}",
    )
    c.finish(t0, 20 * 60.0)


def test_criterion_7_oracle_equivalence():
    t0 = time.monotonic()
    c = Clauses("criterion 7 (oracle equivalence)")
    rng = np.random.default_rng(71)

    exact = True
    for _ in range(20):
        s = VolPairSeries(rng.lognormal(size=10, sigma=2.0), rng.lognormal(size=10, sigma=2.0))
        axis = np.sort(rng.uniform(0.05, 1.0, size=8))
        grid = empirical_copula(s, axis, axis)
        obs = pseudo_observations(s)
        brute = np.array(
            [[np.count_nonzero((obs.u <= u) & (obs.v <= v)) / 10 for v in axis] for u in axis]
        )
        exact &= bool(np.array_equal(grid.values, brute))
    c.check("empirical copula equals brute-force ranks on 20 random series", exact)

    s6 = VolPairSeries(rng.lognormal(size=6), rng.lognormal(size=6), weights=np.ones(6))
    quad = (0.5, 2.0, 1.5, 0.8)
    got = avar_G(s6, [quad], xi=0.30)[0]
    hand = _hand_lag_integral(s6, quad, 0.30)
    c.check("avar lag integral equals hand-computed sum", abs(got - hand) < 1e-12,
            f"|diff|={abs(got - hand):.2e}")

    s = VolPairSeries(rng.lognormal(size=60), rng.lognormal(size=60), weights=np.full(60, 0.5))
    grid = empirical_copula(s, inference_grid(), inference_grid())
    ident = gof_statistic(grid, grid.values) == 0.0
    shifted = gof_statistic(grid, grid.values + 0.02)
    arith = abs(shifted - s.span * 0.02**2) < 1e-10 * max(1.0, shifted)
    c.check("gof statistic identities (zero and uniform shift)", ident and arith)

    obs = PseudoObservations(rng.uniform(size=40), rng.uniform(size=40))
    h = 0.2
    riemann = sum(
        obs.weights[t] * epanechnikov((obs.u[t] - 0.4) / h, (obs.v[t] - 0.6) / h)
        for t in range(40)
    ) / (obs.span * h * h)
    kd = kernel_copula_density(obs, 0.4, 0.6, h)
    c.check("kernel density equals explicit Riemann oracle", abs(kd - riemann) < 1e-12)

    r = np.array([0.01] * 7 + [5.0] + [0.01] * 4)
    sp = spot_variance_path(r, SpotVolConfig(k_n=4, alpha=0.05), delta=1.0)
    hand_ok = (
        abs(sp.values[1] - 3 * 0.01**2 / 4) < 1e-18
        and sp.truncated_counts.tolist() == [0, 1, 0]
    )
    c.check("spot-variance truncation hand example", hand_ok)
    c.finish(t0, 60.0)


def _hand_lag_integral(series, quad, xi):
    n_blocks = len(series)
    span = series.span
    w = series.weights
    d = span / n_blocks
    n_lags = max(1, min(int(math.floor(span**xi / d)), n_blocks - 2))
    x, y, xp, yp = quad
    a = ((series.vx <= x) & (series.vy <= y)).astype(float)
    b = ((series.vx <= xp) & (series.vy <= yp)).astype(float)
    mean_a = float(np.dot(w, a)) / span
    mean_b = float(np.dot(w, b)) / span
    n_s = n_blocks - n_lags
    w_tot = float(w[:n_s].sum())

    def one_order(f, g):
        acc = 0.0
        for lag in range(n_lags + 1):
            h_lag = sum(w[s] * f[s] * g[s + lag] for s in range(n_s)) / w_tot
            acc += (0.5 if lag in (0, n_lags) else 1.0) * (h_lag - mean_a * mean_b)
        return 2.0 * d * acc

    return 0.5 * (one_order(a, b) + one_order(b, a))


def test_criterion_8_invariance_suite():
    t0 = time.monotonic()
    c = Clauses("criterion 8 (invariance)")
    rng = np.random.default_rng(81)

    w = rng.uniform(0.5, 2.0, size=50)
    vals = rng.lognormal(size=50)
    other = rng.lognormal(size=50)
    g1 = empirical_copula(VolPairSeries(vals, other, weights=w))
    g2 = empirical_copula(VolPairSeries(np.log(vals), np.log(other), weights=w))
    c.check("rank invariance under log is bit-exact", np.array_equal(g1.values, g2.values))

    u = rng.uniform(size=10_000)
    v = rng.uniform(size=10_000)
    ok_bounds = True
    for model in (vc.independence(), vc.gumbel(2.0), vc.clayton(2.0), vc.gumbel(1.3)):
        vals_c = model.cdf(u, v)
        ok_bounds &= bool(np.all(vals_c >= np.maximum(u + v - 1, 0) - 1e-12))
        ok_bounds &= bool(np.all(vals_c <= np.minimum(u, v) + 1e-12))
    par_grid = 1.0 + 9.0 * rng.uniform(size=300)
    for p, a, b in zip(par_grid, u[:300], v[:300]):
        val = vc.gumbel(p).cdf(a, b)
        ok_bounds &= max(a + b - 1, 0) - 1e-12 <= val <= min(a, b) + 1e-12
    c.check("Frechet-Hoeffding bounds over randomized inputs", ok_bounds)

    lattice = np.linspace(0.0, 1.0, 50)
    ok_rect = True
    for model in (vc.gumbel(2.0), vc.clayton(2.0)):
        cvals = model.cdf(lattice[:, None], lattice[None, :])
        rect = cvals[1:, 1:] - cvals[1:, :-1] - cvals[:-1, 1:] + cvals[:-1, :-1]
        ok_rect &= bool(rect.min() >= -1e-12)
    c.check("2-increasingness on a 50x50 grid", ok_rect)

    cfg = vc.SimConfig(days=20, n_obs=78, n_inner=780, seed=88)
    p1, p2 = vc.simulate(cfg), vc.simulate(cfg)
    same_sim = np.array_equal(p1.log_price, p2.log_price)
    series = vc.spot_pair_from_panel(vc.observe(p1))
    from volcopula.inference import avar_C, gof_test, grid_points, uniform_band

    r1 = gof_test(series, vc.gumbel(2.0), n_draws=2000, seed=5)
    r2 = gof_test(series, vc.gumbel(2.0), n_draws=2000, seed=5)
    g5 = inference_grid()
    grid = empirical_copula(series, g5, g5)
    cov = avar_C(series, grid_points(g5, g5))
    b1 = uniform_band(grid, cov, n_draws=2000, seed=6)
    b2 = uniform_band(grid, cov, n_draws=2000, seed=6)
    same_mc = (
        r1.p_value == r2.p_value
        and r1.statistic == r2.statistic
        and b1.half_width == b2.half_width
    )
    c.check("same-seed determinism for simulate/gof/band", same_sim and same_mc)
    c.finish(t0, 120.0)
