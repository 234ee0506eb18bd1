"""Command-line interface: simulate, estimate, test, band and study workflows.

Commands read options from flags and/or a key=value config file (flags win),
require an explicit seed for every Monte Carlo step, refuse to overwrite
existing outputs unless asked, and embed the fully resolved configuration in
every summary file.  Exit codes: 0 success, 1 invalid configuration or data,
2 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import plotdata
from .copulas import CopulaModel, Family, clayton, gumbel, independence
from .inference import avar_C, gof_test, grid_points, uniform_band
from .occupation import empirical_copula, inference_grid, pseudo_observations
from .panels import ingest_ticks, write_panel_csv
from .simulate import SimConfig, observe, simulate, true_variance_series
from .spotvol import SpotVolConfig, default_block_size, pair_series, spot_variance_path
from . import study as study_mod

__all__ = ["main", "cli", "load_config"]


def load_config(path) -> dict:
    """Parse a flat key = value config file (strings, numbers, booleans)."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = _parse_value(value.strip("\"'"))
    return out


def _parse_value(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _parse_copula(spec: str) -> CopulaModel:
    name, _, param = spec.partition(":")
    name = name.strip().lower()
    if name in ("independence", "indep"):
        return independence()
    if not param:
        raise ValueError(f"copula {name!r} needs a parameter, e.g. '{name}:2.0'")
    if name == "gumbel":
        return gumbel(float(param))
    if name == "clayton":
        return clayton(float(param))
    raise ValueError(f"unknown copula family {name!r} (gumbel, clayton, independence)")


def _out_path(out_dir: str, name: str, overwrite: bool) -> Path:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and not overwrite:
        raise ValueError(f"{path} exists; pass --overwrite to replace it")
    return path


def _write_table(path: Path, columns, config_echo: str):
    frame = pd.DataFrame(dict(columns))
    with open(path, "w") as fh:
        fh.write(f"# config: {config_echo}\n")
        frame.to_csv(fh, index=False)


def _write_summary(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, default=_jsonify) + "\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    if isinstance(obj, Family):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj)}")


def _resolve(config_file, overrides: dict) -> dict:
    merged = load_config(config_file) if config_file else {}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


def _load_series(cfg: dict):
    """Shared estimation front end: tick CSV -> panel -> spot-variance pair."""
    if "data" not in cfg:
        raise ValueError("missing input:供 --data with a tick/price CSV")
    panel = ingest_ticks(
        cfg["data"],
        freq_seconds=cfg.get("freq_seconds", 60.0),
        log_prices=cfg.get("log_prices", False),
        drop_short_days=cfg.get("drop_short_days", False),
    )
    svc = SpotVolConfig(
        k_n=cfg.get("k_n", default_block_size(panel.n_per_day)),
        varpi=cfg.get("varpi", 0.49),
        alpha=cfg.get("alpha"),
    )
    rets = panel.returns()
    px = spot_variance_path(rets[0], svc, panel.delta)
    py = spot_variance_path(rets[1], svc, panel.delta)
    return panel, svc, pair_series(px, py)


def _cmd(fn):
    """Map validation errors to exit 1 and runtime failures to exit 2."""

    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except (ValueError, FileNotFoundError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except click.ClickException:
            raise
        except Exception as exc:  # pragma: no cover
            click.echo(f"runtime failure: {exc}", err=True)
            sys.exit(2)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def cli():
    """Copula inference for latent spot volatility."""


_common = [
    click.option("--config", "config_file", type=click.Path(exists=True), default=None),
    click.option("--out-dir", default="out"),
    click.option("--overwrite", is_flag=True, default=False),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@cli.command(name="simulate")
@_with_common
@click.option("--days", type=int, default=None)
@click.option("--n-obs", type=int, default=None)
@click.option("--n-inner", type=int, default=None)
@click.option("--copula", "copula_spec", default=None, help="family:param, e.g. gumbel:2")
@click.option("--seed", type=int, default=None)
@click.option("--export-truth", is_flag=True, default=False)
@_cmd
def simulate_cmd(config_file, out_dir, overwrite, days, n_obs, n_inner, copula_spec, seed, export_truth):
    """Simulate a two-asset panel and write it as a price CSV."""
    cfg = _resolve(config_file, {"days": days, "n_obs": n_obs, "n_inner": n_inner,
                                 "copula": copula_spec, "seed": seed})
    if "seed" not in cfg:
        raise ValueError("an explicit --seed is required for simulation")
    if "days" not in cfg:
        raise ValueError("--days is required")
    sim_cfg = SimConfig(
        days=int(cfg["days"]),
        n_obs=int(cfg.get("n_obs", 390)),
        n_inner=int(cfg.get("n_inner", study_mod.DESK_INNER)),
        copula=_parse_copula(str(cfg.get("copula", "gumbel:2"))),
        seed=int(cfg["seed"]),
    )
    path = simulate(sim_cfg)
    panel = observe(path)
    echo = json.dumps(cfg, default=_jsonify)
    out = _out_path(out_dir, "panel.csv", overwrite)
    write_panel_csv(panel, out, log_prices=True, header_comment=f"config: {echo}")
    written = [str(out)]
    if export_truth or cfg.get("export_truth"):
        truth = _out_path(out_dir, "true_variance.csv", overwrite)
        series = true_variance_series(path)
        _write_table(truth, [("t", np.arange(len(series)) * path.delta),
                             ("vx", series.vx), ("vy", series.vy)], echo)
        written.append(str(truth))
    _write_summary(_out_path(out_dir, "simulate_summary.json", overwrite),
                   {"config": cfg, "accept_rate": path.accept_rate, "files": written})
    click.echo(f"wrote {', '.join(written)}")


@cli.command(name="spot-vol")
@_with_common
@click.option("--data", default=None, type=click.Path())
@click.option("--freq-seconds", type=float, default=None)
@click.option("--log-prices", is_flag=True, default=None)
@click.option("--k-n", type=int, default=None)
@click.option("--varpi", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@_cmd
def spotvol_cmd(config_file, out_dir, overwrite, data, freq_seconds, log_prices, k_n, varpi, alpha):
    """Estimate blocked spot variances from a tick/price CSV."""
    cfg = _resolve(config_file, {"data": data, "freq_seconds": freq_seconds,
                                 "log_prices": log_prices, "k_n": k_n, "varpi": varpi,
                                 "alpha": alpha})
    panel, svc, series = _load_series(cfg)
    rets = panel.returns()
    px = spot_variance_path(rets[0], svc, panel.delta)
    py = spot_variance_path(rets[1], svc, panel.delta)
    echo = json.dumps(cfg, default=_jsonify)
    out = _out_path(out_dir, "spot_variance.csv", overwrite)
    _write_table(out, [("block_start", px.starts), ("block_end", px.ends),
                       ("vx", px.values), ("vy", py.values),
                       ("truncated_x", px.truncated_counts),
                       ("truncated_y", py.truncated_counts)], echo)
    _write_summary(_out_path(out_dir, "spot_vol_summary.json", overwrite),
                   {"config": cfg, "n_days": panel.n_days, "k_n": svc.k_n,
                    "n_blocks": len(series), "files": [str(out)]})
    click.echo(f"wrote {out}")


@cli.command(name="copula")
@_with_common
@click.option("--data", default=None, type=click.Path())
@click.option("--freq-seconds", type=float, default=None)
@click.option("--log-prices", is_flag=True, default=None)
@click.option("--k-n", type=int, default=None)
@click.option("--grid-step", type=float, default=None)
@_cmd
def copula_cmd(config_file, out_dir, overwrite, data, freq_seconds, log_prices, k_n, grid_step):
    """Estimate the volatility copula on a percent grid and export it."""
    cfg = _resolve(config_file, {"data": data, "freq_seconds": freq_seconds,
                                 "log_prices": log_prices, "k_n": k_n,
                                 "grid_step": grid_step})
    _, _, series = _load_series(cfg)
    step = float(cfg.get("grid_step", 0.01))
    grid_axis = np.arange(1, int(round(1.0 / step)) + 1) * step
    grid = empirical_copula(series, grid_axis, grid_axis)
    uu, vv = np.meshgrid(grid.u, grid.v, indexing="ij")
    echo = json.dumps(cfg, default=_jsonify)
    out = _out_path(out_dir, "copula_grid.csv", overwrite)
    _write_table(out, [("u", uu.ravel()), ("v", vv.ravel()), ("C", grid.values.ravel())], echo)
    obs = grid.pseudo
    out2 = _out_path(out_dir, "pseudo_obs.csv", overwrite)
    _write_table(out2, [("u", obs.u), ("v", obs.v), ("weight", obs.weights)], echo)
    _write_summary(_out_path(out_dir, "copula_summary.json", overwrite),
                   {"config": cfg, "span": series.span, "n_blocks": len(series),
                    "files": [str(out), str(out2)]})
    click.echo(f"wrote {out}")


@cli.command(name="gof")
@_with_common
@click.option("--data", default=None, type=click.Path())
@click.option("--freq-seconds", type=float, default=None)
@click.option("--log-prices", is_flag=True, default=None)
@click.option("--k-n", type=int, default=None)
@click.option("--null", "null_spec", default=None, help="family:param or family (composite)")
@click.option("--composite", is_flag=True, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--h", "bandwidth", type=float, default=None)
@click.option("--draws", "-B", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_cmd
def gof_cmd(config_file, out_dir, overwrite, data, freq_seconds, log_prices, k_n,
            null_spec, composite, xi, bandwidth, draws, seed):
    """Goodness-of-fit test of the volatility copula against a null copula."""
    cfg = _resolve(config_file, {"data": data, "freq_seconds": freq_seconds,
                                 "log_prices": log_prices, "k_n": k_n, "null": null_spec,
                                 "composite": composite, "xi": xi, "h": bandwidth,
                                 "draws": draws, "seed": seed})
    if "seed" not in cfg:
        raise ValueError("an explicit --seed is required for the Monte Carlo critical values")
    if "null" not in cfg:
        raise ValueError("--null is required, e.g. gumbel:2")
    _, _, series = _load_series(cfg)
    null_spec = str(cfg["null"])
    comp = bool(cfg.get("composite", False))
    null = _parse_copula(null_spec if ":" in null_spec or null_spec.startswith("indep")
                         else f"{null_spec}:1.5")
    res = gof_test(series, null, xi=float(cfg.get("xi", 0.15)), h=cfg.get("h"),
                   n_draws=int(cfg.get("draws", 5000)), seed=int(cfg["seed"]), composite=comp)
    echo = json.dumps(cfg, default=_jsonify)
    eig = _out_path(out_dir, "gof_eigenvalues.csv", overwrite)
    _write_table(eig, [("eigenvalue", res.eigenvalues)], echo)
    _write_summary(_out_path(out_dir, "gof_result.json", overwrite),
                   {"config": cfg, "statistic": res.statistic, "p_value": res.p_value,
                    "null": res.null_description, "fitted_param": res.fitted_param,
                    "n_draws": res.n_draws, "seed": res.seed, "files": [str(eig)]})
    click.echo(f"statistic={res.statistic:.6g} p_value={res.p_value:.4f} null={res.null_description}")


@cli.command(name="band")
@_with_common
@click.option("--data", default=None, type=click.Path())
@click.option("--freq-seconds", type=float, default=None)
@click.option("--log-prices", is_flag=True, default=None)
@click.option("--k-n", type=int, default=None)
@click.option("--level", type=float, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--h", "bandwidth", type=float, default=None)
@click.option("--draws", "-B", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_cmd
def band_cmd(config_file, out_dir, overwrite, data, freq_seconds, log_prices, k_n,
             level, xi, bandwidth, draws, seed):
    """Uniform confidence band for the volatility copula on the 5x5 grid."""
    cfg = _resolve(config_file, {"data": data, "freq_seconds": freq_seconds,
                                 "log_prices": log_prices, "k_n": k_n, "level": level,
                                 "xi": xi, "h": bandwidth, "draws": draws, "seed": seed})
    if "seed" not in cfg:
        raise ValueError("an explicit --seed is required for the sup-quantile draws")
    _, _, series = _load_series(cfg)
    g5 = inference_grid()
    grid = empirical_copula(series, g5, g5)
    cov = avar_C(series, grid_points(g5, g5), xi=float(cfg.get("xi", 0.15)), h=cfg.get("h"))
    band = uniform_band(grid, cov, level=float(cfg.get("level", 0.95)),
                        n_draws=int(cfg.get("draws", 5000)), seed=int(cfg["seed"]))
    uu, vv = np.meshgrid(band.u, band.v, indexing="ij")
    echo = json.dumps(cfg, default=_jsonify)
    out = _out_path(out_dir, "band.csv", overwrite)
    _write_table(out, [("u", uu.ravel()), ("v", vv.ravel()), ("C", band.values.ravel()),
                       ("lower", band.lower.ravel()), ("upper", band.upper.ravel())], echo)
    _write_summary(_out_path(out_dir, "band_summary.json", overwrite),
                   {"config": cfg, "half_width": band.half_width,
                    "sup_quantile": band.sup_quantile, "level": band.level,
                    "n_draws": band.n_draws, "seed": band.seed, "files": [str(out)]})
    click.echo(f"half_width={band.half_width:.6g} level={band.level}")


@cli.command(name="plot-data")
@_with_common
@click.option("--data", default=None, type=click.Path())
@click.option("--freq-seconds", type=float, default=None)
@click.option("--log-prices", is_flag=True, default=None)
@click.option("--k-n", type=int, default=None)
@click.option("--kind", default=None)
@click.option("--family", "family_spec", default=None, help="parametric overlay, family:param")
@_cmd
def plot_data_cmd(config_file, out_dir, overwrite, data, freq_seconds, log_prices, k_n,
                  kind, family_spec):
    """Emit plot-ready tables (contours, tail concentration, Kendall function...)."""
    cfg = _resolve(config_file, {"data": data, "freq_seconds": freq_seconds,
                                 "log_prices": log_prices, "k_n": k_n, "kind": kind,
                                 "family": family_spec})
    if "kind" not in cfg:
        raise ValueError(f"--kind is required; supported: {sorted(plotdata.PLOT_KINDS)}")
    kind = str(cfg["kind"])
    if kind not in plotdata.PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; supported: {sorted(plotdata.PLOT_KINDS)}")
    _, _, series = _load_series(cfg)
    g5 = np.arange(1, 100) / 100
    grid = empirical_copula(series, g5, g5)
    if kind in ("tail-concentration", "kendall-function"):
        target = grid if kind == "tail-concentration" else pseudo_observations(series)
        if cfg.get("family"):
            target = _parse_copula(str(cfg["family"]))
        table = plotdata.emit_plot_data(target, kind)
    elif kind == "histogram":
        table = plotdata.emit_plot_data(np.log(np.maximum(series.vx, 1e-300)), kind)
    else:
        table = plotdata.emit_plot_data(grid, kind)
    echo = json.dumps(cfg, default=_jsonify)
    out = _out_path(out_dir, f"{kind.replace('-', '_')}.csv", overwrite)
    _write_table(out, table, echo)
    click.echo(f"wrote {out}")


@cli.command(name="mc-study")
@_with_common
@click.option("--component", type=click.Choice(["rmse", "pivot", "gof", "band", "all"]),
              default=None)
@click.option("--reps", "-M", type=int, default=None)
@click.option("--spans", default=None, help="comma list of day counts, e.g. 250,500")
@click.option("--n-obs", type=int, default=None)
@click.option("--draws", "-B", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", "--threads", type=int, default=None)
@_cmd
def mc_study_cmd(config_file, out_dir, overwrite, component, reps, spans, n_obs, draws, seed, jobs):
    """Desk-scale Monte Carlo study: RMSE curves, pivot calibration, size/power, bands."""
    cfg = _resolve(config_file, {"component": component, "reps": reps, "spans": spans,
                                 "n_obs": n_obs, "draws": draws, "seed": seed, "jobs": jobs})
    if "seed" not in cfg:
        raise ValueError("an explicit --seed is required for Monte Carlo studies")
    comp = str(cfg.get("component", "all"))
    m_reps = int(cfg.get("reps", 200))
    n_obs = int(cfg.get("n_obs", 78))
    n_draws = int(cfg.get("draws", 5000))
    seed_v = int(cfg["seed"])
    jobs_v = int(cfg.get("jobs", 1))
    spans_v = [int(s) for s in str(cfg.get("spans", "250,500")).split(",")]
    echo = json.dumps(cfg, default=_jsonify)
    summary = {"config": cfg, "files": []}

    if comp in ("rmse", "all"):
        rows = study_mod.rmse_study(m_reps, spans=spans_v, obs_freqs=(n_obs,), seed=seed_v,
                                    jobs=jobs_v)
        out = _out_path(out_dir, "rmse.csv", overwrite)
        _write_table(out, [(k, np.array([r[k] for r in rows], dtype=object))
                           for k in ("estimator", "n_obs", "span", "rmse", "se")], echo)
        summary["files"].append(str(out))
    if comp in ("pivot", "all"):
        piv = study_mod.pivot_study(m_reps, span=max(spans_v), n_obs=n_obs, seed=seed_v,
                                    jobs=jobs_v)
        out = _out_path(out_dir, "pivot.csv", overwrite)
        z = piv["z"]
        cols = [("rep", np.arange(z.shape[0]))]
        cols += [(f"z_{u:g}_{v:g}", z[:, i]) for i, (u, v) in enumerate(piv["points"])]
        _write_table(out, cols, echo)
        qq = _out_path(out_dir, "pivot_qq.csv", overwrite)
        _write_table(qq, _qq_table(z), echo)
        kd = _out_path(out_dir, "pivot_density.csv", overwrite)
        _write_table(kd, _density_table(z), echo)
        summary["pivot_mean"] = piv["mean"]
        summary["pivot_sd"] = piv["sd"]
        summary["files"] += [str(out), str(qq), str(kd)]
    if comp in ("gof", "all"):
        rows = []
        for span in spans_v:
            for truth in (gumbel(2.0), independence(), clayton(2.0), gumbel(1.5)):
                res = study_mod.gof_study(m_reps, truth, gumbel(2.0), span, n_obs=n_obs,
                                          n_draws=n_draws, seed=seed_v, jobs=jobs_v)
                for lev, rate in res["rates"].items():
                    rows.append({"truth": res["truth"], "span": span, "level": lev,
                                 "rejection_rate": rate})
        out = _out_path(out_dir, "size_power.csv", overwrite)
        _write_table(out, [(k, np.array([r[k] for r in rows], dtype=object))
                           for k in ("truth", "span", "level", "rejection_rate")], echo)
        summary["files"].append(str(out))
    if comp in ("band", "all"):
        res = study_mod.band_study(m_reps, span=max(spans_v), n_obs=n_obs, n_draws=n_draws,
                                   seed=seed_v, jobs=jobs_v)
        summary["band"] = res
    _write_summary(_out_path(out_dir, "study_summary.json", overwrite), summary)
    click.echo("study complete")


def _qq_table(z):
    from scipy.special import ndtri

    flat = np.sort(z[np.isfinite(z)])
    probs = (np.arange(flat.size) + 0.5) / flat.size
    return [("theoretical", ndtri(probs)), ("sample", flat)]


def _density_table(z):
    flat = z[np.isfinite(z)]
    sd = flat.std(ddof=1)
    bw = 1.06 * sd * flat.size ** (-0.2)  # Gaussian kernel, Silverman's rule
    xs = np.linspace(flat.min() - 1, flat.max() + 1, 201)
    dens = np.exp(-0.5 * ((xs[:, None] - flat[None, :]) / bw) ** 2).sum(axis=1)
    dens /= flat.size * bw * np.sqrt(2 * np.pi)
    return [("z", xs), ("density", dens)]


def main():
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except SystemExit:
        raise
    except Exception as exc:  # pragma: no cover
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
