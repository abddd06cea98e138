"""End-to-end runs: kernel checks, renewal solve, decay analysis, optional Monte Carlo.

Every number in the summary is computed from the same arrays that are written
to the export files, so the summary can be re-derived from the exports.
"""
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, exports, field as fieldmod, montecarlo, radiative_units, spectral
from .config import Problem, build_initial_data
from .errors import KinrelaxError, StageError
from .fitting import power_fit
from .kernels import GAS, MONOKINETIC
from .renewal import mass_conservation_check, solve

MU_ROWS = 20001
A4_P1 = (0.85, 1.15)
A4_P6 = (2.5, 3.5)
A5_RATE = 0.05
A5_AGREEMENT = 1e-8
A6_FRACTION = 0.95
A3_MASS = 1e-6
ROUNDOFF_ERROR = 1e-10


@dataclass
class ReportBundle:
    summary: dict
    files: list = field(default_factory=list)
    statistical_failure: bool = False

    @property
    def verdicts(self):
        """``{dotted.key: passed}`` for every tolerance verdict in the summary."""
        out = {}

        def walk(node, prefix):
            if isinstance(node, dict):
                if "pass" in node:
                    out[prefix] = node["pass"]
                    return
                for k, v in node.items():
                    walk(v, f"{prefix}.{k}" if prefix else str(k))

        walk(self.summary, "")
        return out


@contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except KinrelaxError as exc:
        raise StageError(name, exc) from exc


def verdict(value, lo=None, hi=None, **extra):
    ok = bool(np.isfinite(value)) and (lo is None or value >= lo) and (hi is None or value <= hi)
    out = {"value": float(value), "pass": ok}
    if lo is not None:
        out["min"] = lo
    if hi is not None:
        out["max"] = hi
    out.update(extra)
    return out


def kernel_checks():
    return {
        "gas_mass": verdict(abs(GAS.moment(0) - 1.0), hi=1e-10, quantity="|int K - 1|"),
        "monokinetic_mass": verdict(abs(MONOKINETIC.moment(0) - 1.0), hi=1e-10, quantity="|int K - 1|"),
        "gas_tail_ratio_50": verdict(abs(float(GAS.tail_ratio(50.0)) - 1.0), hi=0.01, quantity="|K(50)/(8/(3*50^5)) - 1|"),
        "monokinetic_mean": verdict(abs(MONOKINETIC.moment(1) - 4.0 / 3.0), hi=0.0, quantity="|m1 - 4/3|"),
        "gas_mean": float(GAS.moment(1)),
    }


def solution_table(sol):
    """Columns, rows, header and footer of the renewal-solution export."""
    stride = max(1, -(-(len(sol.values) - 1) // (MU_ROWS - 1)))
    idx = np.arange(0, len(sol.values), stride)
    S = sol.source_values if sol.source_values is not None else np.full(len(sol.values), np.nan)
    rows = zip(sol.times[idx], sol.values[idx], S[idx], sol.deviation()[idx])
    meta = {"dt": sol.dt, "stride": stride, "scheme": sol.scheme, "kernel": sol.kernel_variant}
    footer = {"mu_infinity": sol.mu_infinity, "mu_infinity_discrete": sol.mu_infinity_discrete,
              "residual_max": sol.residual_max}
    return ["t", "mu", "S", "deviation"], rows, meta, footer


def _write_mu(out, sol):
    return exports.write_table(out / "mu.csv", *solution_table(sol))


def _solve_stage(cfg, f_in, kernel):
    with stage("renewal"):
        sol = solve(kernel, f_in, cfg.horizon, cfg.dt)
    return sol


def run_gas(cfg, out, bundle):
    f_in = build_initial_data(cfg.initial_data)
    sol = _solve_stage(cfg, f_in, GAS)
    bundle.files.append(_write_mu(out, sol))
    s = bundle.summary
    s["renewal"] = {
        "mu_infinity": sol.mu_infinity,
        "mu_infinity_discrete": sol.mu_infinity_discrete,
        "residual_max": sol.residual_max,
        "mass_conservation": verdict(mass_conservation_check(sol, f_in), hi=A3_MASS),
        "equilibrium_value": 1.0 / math.sqrt(2.0 * math.pi),
    }
    t0, t1 = cfg.fit_windows.power
    t1 = min(t1, sol.horizon)
    with stage("field"):
        times = np.geomspace(t0, t1, cfg.field_points)
        curves = fieldmod.error_curve(sol, f_in, times, cfg.norms)
    cols = ["t"] + [f"lp_error_p{p:g}" for p in cfg.norms]
    bundle.files.append(exports.write_table(
        out / "field_curves.csv", cols, zip(times, *[curves[p] for p in cfg.norms]),
        {"functional": "int int |g - g_inf|^p M dv dx (not rooted)"}))
    fits = {}
    for p in cfg.norms:
        vals = curves[p]
        key = f"p{p:g}"
        if np.all(vals > 0) and np.max(vals) > ROUNDOFF_ERROR:
            with stage("field"):
                fit = power_fit(times, vals, (t0, t1))
            entry = {"rate": fit.rate, "intercept": fit.intercept, "rms_residual": fit.rms_residual}
            if p == 1.0:
                entry["verdict"] = verdict(fit.rate, *A4_P1)
            elif p == 6.0:
                entry["verdict"] = verdict(fit.rate, *A4_P6)
        else:
            entry = {"rate": math.nan, "note": "error at round-off level (equilibrium data)",
                     "max_error": verdict(float(np.max(vals)), hi=ROUNDOFF_ERROR)}
        fits[key] = entry
    s["field"] = {"window": [t0, t1], "fits": fits}
    return sol, f_in


def run_radiative(cfg, out, bundle):
    f_in = build_initial_data(cfg.initial_data)
    sol = _solve_stage(cfg, f_in, MONOKINETIC)
    bundle.files.append(_write_mu(out, sol))
    s = bundle.summary
    consts = radiative_units.PhysicalConstants.si() if cfg.constants.mode == "si" else radiative_units.DIMENSIONLESS
    s["renewal"] = {
        "mu_infinity": sol.mu_infinity,
        "mu_infinity_discrete": sol.mu_infinity_discrete,
        "residual_max": sol.residual_max,
        "energy_conservation": verdict(mass_conservation_check(sol, f_in), hi=A3_MASS),
        "theta_infinity": radiative_units.temperature_from_flux(sol.mu_infinity, consts),
        "theta_infinity_from_energy": radiative_units.equilibrium_temperature(f_in, consts),
    }
    with stage("spectral"):
        sa = spectral.spectral_abscissa(cfg.spectral_strip_depth)
        alpha_b, bracket = spectral.abscissa_by_bisection(hi=cfg.spectral_strip_depth)
        near_origin = spectral.count_zeros(spectral.Rectangle(-0.1, 0.1, -0.5, 0.5))
        right = spectral.count_zeros(spectral.Rectangle(0.05, 2.0, -sa.height, sa.height))
    bundle.files.append(exports.write_table(
        out / "zeros.csv", ["re", "im", "residual"],
        [(z.real, z.imag, abs(complex(spectral.characteristic(z)))) for z in sa.zeros],
        {"strip": f"{-cfg.spectral_strip_depth} < Re z <= 0", "height": sa.height},
        {"alpha": sa.alpha, "alpha_bisection": alpha_b}))
    t0, t1 = cfg.fit_windows.exponential
    with stage("spectral"):
        fit = spectral.exponential_rate_fit(sol, (t0, t1), alpha=sa.alpha)
    s["spectral"] = {
        "alpha": sa.alpha,
        "witness_zero": sa.witness_zero,
        "alpha_bisection": alpha_b,
        "newton_vs_bisection": verdict(abs(sa.alpha - alpha_b), hi=A5_AGREEMENT),
        "zeros_in_strip": len(sa.zeros),
        "count_near_origin": verdict(near_origin, 1, 1),
        "count_right_of_axis": verdict(right, 0, 0),
        "fitted_rate": fit.rate,
        "raw_rate": fit.diagnostics.get("raw_rate"),
        "relative_difference": verdict(fit.diagnostics["relative_difference"], hi=A5_RATE),
        "window": [t0, t1],
    }
    return sol, f_in


def run_bounds(cfg, out, bundle):
    b = cfg.bounds
    with stage("bounds"):
        sc = bounds.LowerBoundScenario(b.epsilon, b.T, b.R, p=b.p[0] if b.p else 2.0)
        times = np.geomspace(b.t_min, b.t_max, b.points)
        section = {}
        kinds = [("log_entropy", sc)] + [(f"algebraic_lp_p{p:g}", bounds.LowerBoundScenario(b.epsilon, b.T, b.R, p=p))
                                        for p in b.p]
        for name, scen in kinds:
            kind = bounds.EnvelopeKind.LOG_ENTROPY if name == "log_entropy" else bounds.EnvelopeKind.ALGEBRAIC_LP
            kw = {"with_energy": b.with_energy} if kind is bounds.EnvelopeKind.LOG_ENTROPY else {}
            rows = bounds.envelope_sweep(kind, scen, times, **kw)
            bundle.files.append(exports.write_table(
                out / f"envelope_{name}.csv", ["t", "envelope_value", "growth_normalized_value"], rows))
            norm = rows[:, 2]
            section[name] = {
                "min_normalized": float(norm.min()),
                "bounded_below": verdict(float(norm.min() / norm[0]), lo=0.5),
            }
            if kind is bounds.EnvelopeKind.ALGEBRAIC_LP and scen.p == 2.0:
                both = bounds.envelope_both_couplings(scen, float(times[-1]))
                section[name]["couplings_at_t_max"] = both
        rng = np.random.default_rng(b.seed)
        worst = math.inf
        chain_ok = True
        for _ in range(b.chain_samples):
            eps = rng.uniform(0.05, 0.45)
            scen = bounds.LowerBoundScenario(eps, rng.uniform(0.2, 5.0), 0.5)
            t = rng.uniform(0.0, 50.0)
            links = list(bounds.inequality_chain(scen, t).values())
            chain_ok &= all(a >= c * (1 - 1e-9) for a, c in zip(links, links[1:]))
            worst = min(worst, links[0] / links[-1])
        section["chain"] = {"samples": b.chain_samples, "monotone": chain_ok,
                            "min_direct_over_analytic": verdict(worst if b.chain_samples else math.nan, lo=1.0)}
        eps = b.epsilon
        section["norms"] = {
            "entropy": verdict(abs(bounds.entropy_norm(eps) / (6 * bounds.UNIT_BALL ** 2 * abs(math.log(eps))) - 1), hi=1e-10),
            "lp": {f"p{p:g}": verdict(abs(bounds.lp_norm(eps, p) / (
                bounds.UNIT_BALL ** (2 / p) / eps ** (6 * (p - 1) / p)) - 1), hi=1e-10) for p in b.p},
        }
    bundle.summary["bounds"] = section


def run_monte_carlo(cfg, out, bundle, sol, f_in):
    mc = cfg.monte_carlo
    horizon = min(sol.horizon, mc.horizon or 40.0)
    with stage("montecarlo"):
        tally = montecarlo.simulate(f_in, mc.particle_count, mc.seed, horizon, mc.bin_width)
        agree = montecarlo.compare_with_renewal(tally, sol)
        cdf = montecarlo.grey_interval_cdf if f_in.kind == "grey" else GAS.cdf
        intervals = montecarlo.compare_intervals(tally, cdf)
    ref = montecarlo.renewal_bin_means(sol, tally)
    meta = {"normalization": "flux per unit area per unit time; weights sum to the initial mass",
            "particles": mc.particle_count, "seed": mc.seed, "blocks": tally.meta["blocks"]}
    bundle.files.append(exports.write_table(
        out / "mc_flux.csv", ["bin_center", "flux_estimate", "stderr", "renewal_bin_mean"],
        zip(tally.bin_centers, tally.counts, tally.stderr, ref), meta))
    expected = montecarlo.interval_expectation(tally, cdf)
    e = tally.interval_edges
    bundle.files.append(exports.write_table(
        out / "mc_intervals.csv", ["bin_lo", "bin_hi", "count", "expected"],
        zip(e[:-1], e[1:], tally.interval_counts, expected)))
    section = {
        "flux_within_3sigma": verdict(agree.fraction_within, lo=A6_FRACTION),
        "max_abs_z": agree.max_abs_z,
        "intervals_within_3sigma": verdict(intervals.fraction_within, lo=1.0),
        "unthermalized_mass": tally.unthermalized_mass,
        "zero_speed_mass": tally.zero_speed_mass,
    }
    bundle.summary["montecarlo"] = section
    bundle.statistical_failure = not (section["flux_within_3sigma"]["pass"] and section["intervals_within_3sigma"]["pass"])


def run(cfg, output_dir=None, monte_carlo=None):
    """Execute the pipeline for a validated :class:`ScenarioConfig`."""
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = ReportBundle({"problem": cfg.problem.value})
    with stage("kernels"):
        bundle.summary["kernels"] = kernel_checks()
    if cfg.problem is Problem.BOUNDS:
        run_bounds(cfg, out, bundle)
    else:
        runner = run_gas if cfg.problem is Problem.GAS else run_radiative
        sol, f_in = runner(cfg, out, bundle)
        do_mc = cfg.monte_carlo.enabled if monte_carlo is None else monte_carlo
        if do_mc:
            run_monte_carlo(cfg, out, bundle, sol, f_in)
    bundle.files.append(exports.write_summary(out / "summary.yaml", bundle.summary))
    return bundle
