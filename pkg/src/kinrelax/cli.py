"""Command-line interface.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure, 4 statistical failure of the Monte Carlo cross-check.
"""
import json
import math
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from . import bounds as bounds_mod
from . import config as config_mod
from . import exports, field as field_mod, montecarlo, pipeline, spectral
from .errors import DomainError, KinrelaxError
from .kernels import get_kernel
from .renewal import solve as renewal_solve

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_STATISTICAL = 4


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _validation_message(exc):
    parts = []
    for e in exc.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "invalid scenario: " + "; ".join(parts)


def _load(scenario):
    try:
        return config_mod.load_config(scenario)
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, _validation_message(exc))
    except (DomainError, OSError, ValueError) as exc:
        _fail(EXIT_VALIDATION, str(exc))


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}", err=True)


def _guard(func):
    """Map package errors to exit codes."""
    import functools

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as exc:
            _fail(EXIT_VALIDATION, _validation_message(exc))
        except DomainError as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except KinrelaxError as exc:
            _fail(EXIT_NUMERIC, str(exc))
        except FloatingPointError as exc:
            _fail(EXIT_NUMERIC, str(exc))

    return wrapper


@click.group()
@click.version_option(package_name="kinrelax")
def main():
    """Wall thermalization of a collisionless gas or grey radiation in the unit ball."""


@main.command()
def schema():
    """Print the JSON schema of scenario files."""
    click.echo(json.dumps(config_mod.schema(), indent=2))


@main.command()
def presets():
    """List the shipped scenario presets."""
    for name in config_mod.preset_names():
        click.echo(name)


@main.command()
@click.option("--variant", type=click.Choice(["gas", "monokinetic"]), default="gas", show_default=True)
@click.option("--t-max", type=float, default=10.0, show_default=True)
@click.option("--points", type=int, default=201, show_default=True)
@click.option("--moments", is_flag=True, help="Print moments 0..3 instead of the table.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@_guard
def kernel(variant, t_max, points, moments, out):
    """Tabulate the exit-time kernel K, its distribution function and tail ratio."""
    k = get_kernel(variant)
    if moments:
        rows = []
        for m in range(4):
            try:
                rows.append((m, k.moment(m)))
            except DomainError:
                rows.append((m, math.inf))
        _emit(exports.table_text(["order", "moment"], rows, {"kernel": variant}), out)
        return
    tau = np.linspace(0.0, t_max, points)
    ratio = np.where(tau > 0, k.tail_ratio(np.maximum(tau, 1e-300)), np.nan) if variant == "gas" else np.full(points, np.nan)
    rows = zip(tau, k.eval(tau), k.cdf(tau), ratio)
    _emit(exports.table_text(["tau", "K", "cdf", "tail_ratio"], rows, {"kernel": variant}), out)


@main.command()
@click.argument("scenario")
@click.option("--horizon", type=float, default=None, help="Override the scenario horizon.")
@click.option("--dt", type=float, default=None, help="Override the scenario step.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@_guard
def solve(scenario, horizon, dt, out):
    """Solve the renewal equation for SCENARIO (a YAML file or a preset name)."""
    cfg = _load(scenario)
    if cfg.problem is config_mod.Problem.BOUNDS:
        raise DomainError("bounds scenarios have no renewal equation")
    f_in = config_mod.build_initial_data(cfg.initial_data)
    k = get_kernel("monokinetic" if f_in.kind == "grey" else "gas")
    sol = renewal_solve(k, f_in, horizon or cfg.horizon, dt or cfg.dt)
    _emit(exports.table_text(*pipeline.solution_table(sol)), out)


@main.command()
@click.option("--depth", type=float, default=3.0, show_default=True, help="Strip depth: search -depth < Re z <= 0.")
@click.option("--bisection/--no-bisection", default=True, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@_guard
def spectrum(depth, bisection, out):
    """Zeros of 1 - Ktilde for the monokinetic kernel and the spectral abscissa."""
    sa = spectral.spectral_abscissa(depth)
    footer = {"alpha": sa.alpha}
    if bisection:
        footer["alpha_bisection"] = spectral.abscissa_by_bisection(hi=depth)[0]
    rows = [(z.real, z.imag, abs(complex(spectral.characteristic(z)))) for z in sa.zeros]
    _emit(exports.table_text(["re", "im", "residual"], rows, {"height": sa.height}, footer), out)


@main.command("field")
@click.argument("scenario")
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@_guard
def field_cmd(scenario, out):
    """Weighted L^p distance to equilibrium over the power-law window, with fitted exponents."""
    cfg = _load(scenario)
    if cfg.problem is not config_mod.Problem.GAS:
        raise DomainError("field curves need a gas scenario")
    f_in = config_mod.build_initial_data(cfg.initial_data)
    sol = renewal_solve(get_kernel("gas"), f_in, cfg.horizon, cfg.dt)
    t0, t1 = cfg.fit_windows.power
    t1 = min(t1, sol.horizon)
    times = np.geomspace(t0, t1, cfg.field_points)
    curves = field_mod.error_curve(sol, f_in, times, cfg.norms)
    meta = {}
    for p in cfg.norms:
        if np.all(curves[p] > 0):
            meta[f"rate_p{p:g}"] = field_mod.power_fit(times, curves[p], (t0, t1)).rate
    cols = ["t"] + [f"lp_error_p{p:g}" for p in cfg.norms]
    _emit(exports.table_text(cols, zip(times, *[curves[p] for p in cfg.norms]), meta), out)


@main.command("bounds")
@click.option("--kind", type=click.Choice([k.value for k in bounds_mod.EnvelopeKind]), default="algebraic_lp",
              show_default=True)
@click.option("--epsilon", type=float, default=0.2, show_default=True)
@click.option("--T", "T", type=float, default=1.0, show_default=True)
@click.option("--R", "R", type=float, default=0.5, show_default=True)
@click.option("--p", type=float, default=2.0, show_default=True)
@click.option("--coupling", type=click.Choice(["auto", "fixed", "inverse_t"]), default="auto", show_default=True)
@click.option("--t-min", type=float, default=1e2, show_default=True)
@click.option("--t-max", type=float, default=1e6, show_default=True)
@click.option("--points", type=int, default=25, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@_guard
def bounds_cmd(kind, epsilon, T, R, p, coupling, t_min, t_max, points, out):
    """Lower-bound envelope sweep: t, envelope, envelope times its growth factor."""
    sc = bounds_mod.LowerBoundScenario(epsilon, T, R, p=p)
    rows = bounds_mod.envelope_sweep(kind, sc, np.geomspace(t_min, t_max, points), coupling=coupling)
    meta = {"kind": kind, "epsilon": epsilon, "T": T, "R": R, "p": p, "coupling": coupling}
    _emit(exports.table_text(["t", "envelope_value", "growth_normalized_value"], rows, meta), out)


@main.command("mc")
@click.argument("scenario")
@click.option("--particles", type=int, default=None, help="Override the particle count.")
@click.option("--seed", type=int, default=None)
@click.option("--horizon", type=float, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None)
@_guard
def mc_cmd(scenario, particles, seed, horizon, workers, out):
    """Monte Carlo wall-flux tally for SCENARIO."""
    cfg = _load(scenario)
    if cfg.problem is config_mod.Problem.BOUNDS:
        raise DomainError("bounds scenarios have no particle simulation")
    f_in = config_mod.build_initial_data(cfg.initial_data)
    mc = cfg.monte_carlo
    n = particles or mc.particle_count
    s = mc.seed if seed is None else seed
    h = horizon or mc.horizon or min(cfg.horizon, 40.0)
    tally = montecarlo.simulate(f_in, n, s, h, mc.bin_width, workers=workers)
    meta = {"normalization": "flux per unit area per unit time; weights sum to the initial mass",
            "particles": n, "seed": s, "unthermalized_mass": tally.unthermalized_mass}
    _emit(exports.table_text(["bin_center", "flux_estimate", "stderr"],
                             zip(tally.bin_centers, tally.counts, tally.stderr), meta), out)


@main.command("run")
@click.argument("scenario")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None)
@click.option("--mc/--no-mc", "mc", default=None, help="Force the Monte Carlo cross-check on or off.")
@click.option("--strict", is_flag=True, help="Exit 4 when any tolerance verdict fails.")
@_guard
def run_cmd(scenario, output_dir, mc, strict):
    """Full pipeline for SCENARIO; writes exports and summary.yaml."""
    cfg = _load(scenario)
    bundle = pipeline.run(cfg, output_dir, monte_carlo=mc)
    for path in bundle.files:
        click.echo(f"wrote {path}")
    for name, ok in bundle.verdicts.items():
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}")
    if bundle.statistical_failure or (strict and not all(bundle.verdicts.values())):
        sys.exit(EXIT_STATISTICAL)


if __name__ == "__main__":
    main()
