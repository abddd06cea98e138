"""Radial initial data and the renewal source terms they generate.

Gas data ``f_in(rho, r)`` are functions of the position radius and the speed.
Grey radiative data ``u_in(q)`` take the *squared* radius ``q = |x|^2``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator, RegularGridInterpolator

from .errors import DomainError
from .geometry import BALL_VOLUME
from .kernels import GAS
from .quadrature import composite_gauss_legendre, gauss_legendre, geometric_breaks

SPEED_CUTOFF = 12.0
NODES = 64
SQRT_2PI = math.sqrt(2.0 * math.pi)
MAXWELL_NORM = (2.0 * math.pi) ** -1.5
HALF_FLUX = 1.0 / SQRT_2PI
UNIT_BALL = 4.0 * math.pi / 3.0


def maxwellian(r):
    """Unit-temperature Maxwellian as a function of the speed."""
    r = np.asarray(r, dtype=float)
    return MAXWELL_NORM * np.exp(-0.5 * r * r)


# -- initial data -----------------------------------------------------------


class RadialInitialData:
    kind = "gas"
    breakpoints = ()

    def density(self, rho, speed):
        raise NotImplementedError

    def sup_profile(self):
        """``sup_x f_in(|x|, r)`` bound used in the ``t^-4`` source estimate."""
        raise NotImplementedError

    def total_mass(self):
        """``int int f_in dx dv`` by radial quadrature, independent of any source term."""
        rb = np.concatenate(([0.0], [b for b in self.speed_breaks if b < SPEED_CUTOFF], [SPEED_CUTOFF]))
        pb = np.concatenate(([0.0], [b for b in self.radius_breaks if b < 1.0], [1.0]))
        rho, wp = composite_gauss_legendre(pb, NODES)
        r, wr = composite_gauss_legendre(rb, NODES)
        vals = self.density(rho[:, None], r[None, :])
        integrand = vals * (rho ** 2)[:, None] * (r ** 2)[None, :]
        return 16.0 * math.pi ** 2 * float(wp @ integrand @ wr)

    speed_breaks = ()
    radius_breaks = ()


@dataclass(frozen=True)
class EquilibriumMultiple(RadialInitialData):
    c: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise DomainError("equilibrium multiple must be positive")

    def density(self, rho, speed):
        return self.c * maxwellian(speed) * np.ones_like(np.asarray(rho, dtype=float))

    def sup_profile(self):
        return self.c * MAXWELL_NORM


@dataclass(frozen=True)
class BoundedRadial(RadialInitialData):
    """Bounded data ``0 <= f_in <= bound_constant * M``."""

    profile: Callable = field(compare=False)
    bound_constant: float = 1.0
    name: str = "bounded"

    def density(self, rho, speed):
        return np.maximum(self.profile(np.asarray(rho, float), np.asarray(speed, float)), 0.0)

    def sup_profile(self):
        return self.bound_constant * MAXWELL_NORM

    def check_bound(self, n=200):
        rho = np.linspace(0.0, 1.0, n)
        r = np.linspace(0.0, SPEED_CUTOFF, n)
        vals = self.density(rho[:, None], r[None, :])
        return bool(np.all(vals <= self.bound_constant * maxwellian(r)[None, :] * (1 + 1e-12) + 1e-300))

    @classmethod
    def from_table(cls, path, bound_constant=None):
        """Load ``rho, speed, value`` rows on a rectangular sorted grid."""
        rho_axis, speed_axis, grid = _read_gas_table(path)
        interp = RegularGridInterpolator(
            (rho_axis, speed_axis), grid, method="pchip", bounds_error=False, fill_value=0.0
        )

        def profile(rho, speed):
            rho, speed = np.broadcast_arrays(rho, speed)
            pts = np.stack([rho.ravel(), speed.ravel()], axis=-1)
            inside = (pts[:, 1] <= speed_axis[-1]) & (pts[:, 0] <= rho_axis[-1])
            out = np.zeros(len(pts))
            if np.any(inside):
                out[inside] = np.maximum(interp(pts[inside]), 0.0)
            return out.reshape(rho.shape)

        ratio = grid / maxwellian(speed_axis)[None, :]
        c = float(np.max(ratio)) if bound_constant is None else bound_constant
        if np.any(ratio > c * (1 + 1e-12)):
            raise DomainError("tabulated profile exceeds bound_constant * M on its grid")
        return cls(profile, c, name=f"table:{path}")


@dataclass(frozen=True)
class ConcentratedBox(RadialInitialData):
    """``eps^-6`` on ``|x| <= eps, |v| <= eps``: slow particles massed at the centre."""

    epsilon: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")

    @property
    def speed_breaks(self):
        return (self.epsilon,)

    @property
    def radius_breaks(self):
        return (self.epsilon,)

    @property
    def breakpoints(self):
        e = self.epsilon
        return ((1 - e) / e, (1 + e) / e)

    def density(self, rho, speed):
        e = self.epsilon
        rho = np.asarray(rho, dtype=float)
        speed = np.asarray(speed, dtype=float)
        return np.where((rho <= e) & (speed <= e), e ** -6, 0.0)

    def sup_profile(self):
        return self.epsilon ** -6

    def exact_mass(self):
        return UNIT_BALL ** 2


@dataclass(frozen=True)
class RadialShellGrey(RadialInitialData):
    """Grey intensity ``u_in(|x|^2)``, isotropic, compactly supported in ``(0, 1)``."""

    profile: Callable = field(compare=False)
    support: tuple = (0.0, 1.0)
    name: str = "grey"
    kind = "grey"

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return np.maximum(self.profile(q), 0.0)

    def density(self, rho, speed=None):
        return self(np.asarray(rho, float) ** 2)

    def sup_profile(self):
        q = np.linspace(0.0, 1.0, 4001)
        return float(np.max(self(q)))

    def total_energy(self):
        """``int_Omega int_S2 u_in dx d omega``."""
        a, b = self.support
        rb = sorted({0.0, math.sqrt(max(a, 0.0)), math.sqrt(min(b, 1.0)), 1.0})
        rho, w = composite_gauss_legendre(rb, NODES)
        return 16.0 * math.pi ** 2 * float(np.sum(w * rho ** 2 * self(rho ** 2)))

    def equilibrium_flux(self):
        """Uniform isotropic intensity with the same energy."""
        return self.total_energy() / (4.0 * math.pi * BALL_VOLUME)

    def total_mass(self):
        return self.total_energy()

    @classmethod
    def from_table(cls, path):
        """Load ``rho_squared, value`` rows."""
        data = _read_table(path, 2)
        q, vals = data[:, 0], data[:, 1]
        if np.any(np.diff(q) <= 0):
            raise DomainError("rho_squared column must be strictly increasing")
        interp = PchipInterpolator(q, vals, extrapolate=False)

        def profile(x):
            out = interp(np.asarray(x, float))
            return np.nan_to_num(np.maximum(out, 0.0), nan=0.0)

        nz = q[vals > 0]
        support = (float(q[0]), float(q[-1])) if nz.size == 0 else (
            float(q[max(np.searchsorted(q, nz[0]) - 1, 0)]),
            float(q[min(np.searchsorted(q, nz[-1]) + 1, len(q) - 1)]),
        )
        return cls(profile, support, name=f"table:{path}")


def smooth_bump(a, b, amplitude=1.0):
    """``amplitude * exp(1 - 1/(1 - s^2))`` on ``(a, b)`` with ``s`` the rescaled coordinate."""

    def profile(q):
        q = np.asarray(q, dtype=float)
        s = (2.0 * q - a - b) / (b - a)
        inside = np.abs(s) < 1.0
        out = np.zeros_like(q)
        si = s[inside]
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    return profile


def grey_shell(a=0.2, b=0.5, amplitude=1.0):
    return RadialShellGrey(smooth_bump(a, b, amplitude), (a, b), name=f"grey-shell[{a},{b}]")


def bounded_bump(bound_constant=2.0):
    """``C M(r) (1 - rho^2)^2 (r^2/2) e^{1 - r^2/2}``, which stays below ``C M``."""

    def profile(rho, r):
        return bound_constant * maxwellian(r) * (1.0 - rho * rho) ** 2 * 0.5 * r * r * np.exp(1.0 - 0.5 * r * r)

    return BoundedRadial(profile, bound_constant, name=f"bounded-bump[{bound_constant}]")


def _read_table(path, ncols):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip() or _is_numeric_row(header):
            raise DomainError(f"{path}: first line must be a header naming the axes")
    data = np.loadtxt(path, delimiter=_sniff_delimiter(header), skiprows=1, ndmin=2)
    if data.shape[1] != ncols:
        raise DomainError(f"{path}: expected {ncols} columns, found {data.shape[1]}")
    if np.any(data[:, -1] < 0):
        raise DomainError(f"{path}: profile values must be nonnegative")
    return data


def _read_gas_table(path):
    data = _read_table(path, 3)
    rho_axis = np.unique(data[:, 0])
    speed_axis = np.unique(data[:, 1])
    if len(data) != len(rho_axis) * len(speed_axis):
        raise DomainError(f"{path}: grid is not rectangular")
    order = np.lexsort((data[:, 1], data[:, 0]))
    if not np.array_equal(order, np.arange(len(data))):
        raise DomainError(f"{path}: rows must be sorted by rho then speed")
    grid = data[:, 2].reshape(len(rho_axis), len(speed_axis))
    return rho_axis, speed_axis, grid


def _sniff_delimiter(header):
    for d in (",", "\t", ";"):
        if d in header:
            return d
    return None


def _is_numeric_row(line):
    try:
        [float(x) for x in line.replace(",", " ").split()]
    except ValueError:
        return False
    return True


# -- source terms -----------------------------------------------------------


def gas_source(f_in, t, nodes=NODES):
    """Wall flux at time ``t`` carried by molecules that have not yet touched the wall.

    ``S(t) = 2 pi int_0^inf int_0^1 f_in(sqrt(1 + t^2 r^2 - 2 t r y), r) 1_{t r < 2y} r^3 y dy dr``.
    Accepts scalar or array ``t``.
    """
    if f_in.kind != "gas":
        raise DomainError("gas_source needs gas initial data")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("time must be nonnegative")
    if isinstance(f_in, EquilibriumMultiple):
        out = f_in.c * HALF_FLUX * (1.0 - GAS.cdf(t_arr))
    elif isinstance(f_in, ConcentratedBox):
        out = _box_source(f_in.epsilon, t_arr)
    else:
        out = _quadrature_gas_source(f_in, t_arr, nodes)
    return float(out[0]) if np.ndim(t) == 0 else out


def gas_source_quadrature(f_in, t, nodes=NODES):
    """Generic tensor quadrature path, also valid for presets that have a closed form."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = _quadrature_gas_source(f_in, t_arr, nodes)
    return float(out[0]) if np.ndim(t) == 0 else out


def _quadrature_gas_source(f_in, t_arr, nodes, chunk=64):
    out = np.empty(len(t_arr))
    for start in range(0, len(t_arr), chunk):
        t = t_arr[start:start + chunk]
        safe = np.where(t > 0, t, 1.0)
        rmax = np.where(t > 0, np.minimum(SPEED_CUTOFF, 2.0 / safe), SPEED_CUTOFF)
        r, wr = gauss_legendre(np.zeros_like(rmax), rmax, nodes)  # (c, n)
        tr = t[:, None] * r
        y, wy = gauss_legendre(0.5 * tr, np.ones_like(tr), nodes)  # (c, n, n)
        rho2 = 1.0 + tr[..., None] ** 2 - 2.0 * tr[..., None] * y
        rho = np.sqrt(np.clip(rho2, 0.0, 1.0))
        vals = f_in.density(rho, np.broadcast_to(r[..., None], rho.shape))
        inner = np.sum(vals * y * wy, axis=-1)
        out[start:start + chunk] = 2.0 * math.pi * np.sum(inner * r ** 3 * wr, axis=-1)
    return out


def _box_source(eps, t_arr):
    # molecules reach the wall iff t r in [1 - eps, 1 + eps]; the y-integral is exact and
    # r^3 (1 - y_lo^2) is a degree-5 polynomial, so a 4-point rule is exact
    out = np.zeros(len(t_arr))
    pos = t_arr > 0
    t = t_arr[pos]
    lo = (1.0 - eps) / t
    hi = np.minimum(eps, (1.0 + eps) / t)
    ok = hi > lo
    res = np.zeros(len(t))
    if np.any(ok):
        tt = t[ok][:, None]
        r, w = gauss_legendre(lo[ok], hi[ok], 4)
        poly = r ** 3 - r * (1.0 + (tt * r) ** 2 - eps * eps) ** 2 / (4.0 * tt * tt)
        res[ok] = math.pi * eps ** -6 * np.sum(w * poly, axis=-1)
    out[pos] = res
    return out


def radiative_source(u_in, t, nodes=NODES):
    """``S(t) = 1/2 int_t^2 u_in(1 + t^2 - t s) s ds`` for ``t <= 2``, zero afterwards."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise DomainError("time must be nonnegative")
    out = np.zeros(len(t_arr))
    a, b = u_in.support
    for i, ti in enumerate(t_arr):
        if ti >= 2.0:
            continue
        cuts = [ti, 2.0]
        if ti > 0:
            # s where the argument 1 + t^2 - t s crosses a support endpoint
            for q in (a, b):
                s = (1.0 + ti * ti - q) / ti
                if ti < s < 2.0:
                    cuts.append(s)
        s, w = composite_gauss_legendre(sorted(cuts), nodes)
        out[i] = 0.5 * np.sum(w * u_in(1.0 + ti * ti - ti * s) * s)
    return float(out[0]) if np.ndim(t) == 0 else out


class GasSource:
    """Callable ``S(t)`` bound to gas initial data."""

    def __init__(self, f_in, nodes=NODES):
        self.f_in = f_in
        self.nodes = nodes
        self.support_end = math.inf
        self.breakpoints = tuple(f_in.breakpoints)

    def __call__(self, t):
        return gas_source(self.f_in, t, self.nodes)

    def tail_bound(self, horizon):
        return 4.0 * math.pi * self.f_in.sup_profile() / (3.0 * horizon ** 3)


class RadiativeSource:
    def __init__(self, u_in, nodes=NODES):
        self.u_in = u_in
        self.nodes = nodes
        self.support_end = 2.0
        # the outgoing endpoint s = 2 sees u_in((1 - t)^2): fronts pass at t = 1 - sqrt(q)
        a, b = u_in.support
        self.breakpoints = tuple(sorted({1.0 - math.sqrt(q) for q in (a, b) if 0.0 < q < 1.0}))

    def __call__(self, t):
        return radiative_source(self.u_in, t, self.nodes)

    def tail_bound(self, horizon):
        return 0.0


def make_source(data, nodes=NODES):
    return RadiativeSource(data, nodes) if data.kind == "grey" else GasSource(data, nodes)


@dataclass(frozen=True)
class SourceIntegral:
    value: float
    tail_bound: float
    horizon: float


def source_integral(source, horizon=1.0e4, tail_bound=None):
    """``int_0^inf S`` as quadrature on ``[0, horizon]`` plus an extrapolated tail.

    The tail beyond ``horizon`` is estimated from the local power-law exponent of
    ``S``.  ``tail_bound`` (or ``source.tail_bound(horizon)``) is reported as an
    error bar, not added to the value.
    """
    end = getattr(source, "support_end", math.inf)
    h = min(horizon, end)
    breaks = set(geometric_breaks(0.0, h, first=0.25, ratio=1.5))
    breaks.update(b for b in getattr(source, "breakpoints", ()) if 0 < b < h)
    if end <= horizon:
        breaks.update(np.linspace(0.0, h, 33))
    breaks = np.array(sorted(breaks))
    x, w = composite_gauss_legendre(breaks, 48)
    value = float(np.sum(w * evaluate_source(source, x)))
    if math.isfinite(end) and end <= horizon:
        return SourceIntegral(value, 0.0, h)
    value += tail_integral(source, h, far=h)
    if tail_bound is None:
        tb = source.tail_bound(h) if hasattr(source, "tail_bound") else math.nan
    else:
        tb = float(tail_bound)
    return SourceIntegral(value, tb, h)


def tail_integral(source, t, far=None):
    """Estimate ``int_t^inf S``.

    Compactly supported sources are integrated exactly up to their support end.
    Otherwise ``S`` is integrated on geometric panels up to ``far`` (default
    ``max(1e4, 100 t)``) and beyond that treated as a power law ``s^-q``, with
    ``q`` read off ``S(far/2)`` and ``S(far)``, adding ``far S(far) / (q - 1)``.
    Returns ``inf`` when the local exponent does not exceed 1 and ``nan`` when
    ``S`` is not positive there.
    """
    end = getattr(source, "support_end", math.inf)
    if end <= t:
        return 0.0
    if math.isfinite(end):
        breaks = [t] + [b for b in getattr(source, "breakpoints", ()) if t < b < end] + [end]
        x, w = composite_gauss_legendre(breaks, 48)
        return float(np.sum(w * evaluate_source(source, x)))
    far = max(1.0e4, 100.0 * t) if far is None else far
    body = 0.0
    if far > t:
        breaks = set(t + geometric_breaks(0.0, far - t, first=max(0.25, 0.1 * t), ratio=1.5))
        breaks.update(b for b in getattr(source, "breakpoints", ()) if t < b < far)
        x, w = composite_gauss_legendre(np.array(sorted(breaks)), 48)
        body = float(np.sum(w * evaluate_source(source, x)))
    s_half, s_t = evaluate_source(source, np.array([0.5 * far, far]))
    if s_t == 0.0:
        return body
    if s_t < 0.0 or s_half <= 0.0:
        # not a decaying positive tail: no meaningful extrapolation
        return math.nan
    q = math.log(s_half / s_t) / math.log(2.0)
    if q <= 1.0:
        return math.inf
    return body + far * s_t / (q - 1.0)


def evaluate_source(source, t):
    """Evaluate any source callable on a 1D array, vectorizing scalar-only callables."""
    t = np.asarray(t, dtype=float)
    try:
        out = np.asarray(source(t), dtype=float)
    except (TypeError, ValueError):
        out = None
    if out is None or out.shape != t.shape:
        out = np.array([float(source(float(ti))) for ti in t.ravel()]).reshape(t.shape)
    return out
