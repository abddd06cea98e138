"""Lower bounds on any uniform decay rate, from concentrated initial data.

The test data ``F_in = eps^-6 1_{|x| <= eps} 1_{|v| <= eps}`` put mass ``|B|^2`` on
slow molecules near the centre.  With an absorbing wall the solution is explicit,
``Phi(t, x, v) = F_in(x - t v, v) 1_{t <= tau(x, v)}``, and it is dominated by the
diffuse-reflection solution; the time-averaged positive part of
``Phi - (|B|^2/|Omega|) M`` is therefore a lower bound for the ``L^1`` distance to
equilibrium.  This module evaluates that functional exactly (up to quadrature)
and the closed-form bound chain that leads to the decay envelopes.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import BALL_VOLUME
from .quadrature import composite_gauss_legendre
from .sources import MAXWELL_NORM, maxwellian

UNIT_BALL = 4.0 * math.pi / 3.0  # |B| in three dimensions
OMEGA = BALL_VOLUME
DIM = 3


class EnvelopeKind(str, enum.Enum):
    LOG_ENTROPY = "log_entropy"
    ALGEBRAIC_LP = "algebraic_lp"


@dataclass(frozen=True)
class LowerBoundScenario:
    epsilon: float
    T: float = 1.0
    R: float = 0.5
    N: int = DIM
    p: float = 2.0

    def __post_init__(self):
        if self.N != DIM:
            raise DomainError("only N = 3 is supported")
        if not 0.0 < self.epsilon < self.R:
            raise DomainError("epsilon must lie in (0, R)")
        if not self.T > 0.0:
            raise DomainError("T must be positive")
        if not self.p > 1.0:
            raise DomainError("p must exceed 1")

    @property
    def p_dual(self):
        return math.inf if self.p == 1.0 else (1.0 if math.isinf(self.p) else self.p / (self.p - 1.0))

    def with_epsilon(self, eps):
        return LowerBoundScenario(eps, self.T, self.R, self.N, self.p)


def equilibrium_level():
    """``|B|^2 / |Omega|``: the equilibrium density multiplying ``M``."""
    return UNIT_BALL ** 2 / OMEGA


def absorbing_solution(scenario, t, x, v):
    """``Phi(t, x, v)`` for stacked 3-vectors ``x`` and ``v`` in the unit ball."""
    eps = scenario.epsilon
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    speed = np.linalg.norm(v, axis=-1)
    origin = np.linalg.norm(x - t * v, axis=-1)
    # t <= tau(x, v): the ball is convex and the origin x - t v lies in eps B, so the
    # backward segment stays inside exactly when x itself is inside
    inside = (origin <= eps) & (speed <= eps) & (np.linalg.norm(x, axis=-1) <= 1.0)
    out = np.where(inside, eps ** -6, 0.0)
    return float(out) if out.ndim == 0 else out


def lens_volume(d, r_small, r_big=1.0):
    """Volume of ``B(0, r_big) ∩ B(d, r_small)`` for centre distance ``d``."""
    d = np.asarray(d, dtype=float)
    R, r = r_big, r_small
    full = 4.0 / 3.0 * math.pi * min(r, R) ** 3
    out = np.where(d <= abs(R - r), full, 0.0)
    part = (d > abs(R - r)) & (d < R + r)
    dp = d[part] if d.ndim else (d if part else None)
    if np.any(part):
        val = math.pi * (R + r - dp) ** 2 * (dp * dp + 2 * dp * r - 3 * r * r + 2 * dp * R + 6 * r * R - 3 * R * R) / (12.0 * dp)
        if d.ndim:
            out = out.copy()
            out[part] = val
        else:
            out = np.asarray(val)
    return float(out) if out.ndim == 0 else out


def _breaks(lo, hi, cuts):
    return np.array(sorted({lo, hi, *[c for c in cuts if lo < c < hi]}))


def direct_l1_check(scenario, t, nodes=48):
    """``int_0^T int int (Phi(t + s) - (|B|^2/|Omega|) M)^+ dv dx ds`` in the unit ball.

    On the support of ``Phi`` the positive part is ``eps^-6 - c M(v)`` (as
    ``eps^-6`` dwarfs ``c M``), and the ``x``-measure of that support at speed
    ``r`` and time ``t'`` is the lens ``|B(t' r, eps) ∩ B(0, 1)|``.
    """
    eps = scenario.epsilon
    c = equilibrium_level()
    if eps ** -6 <= c * MAXWELL_NORM:
        raise DomainError("epsilon too large: the positive part is no longer the support")
    # s-axis breaks where the lens regime changes at r = eps
    s_cuts = [(1.0 - eps) / eps - t, (1.0 + eps) / eps - t]
    s, ws = composite_gauss_legendre(_breaks(0.0, scenario.T, s_cuts), nodes)
    total = 0.0
    for si, wi in zip(s, ws):
        tp = t + si
        cuts = [(1.0 - eps) / tp, (1.0 + eps) / tp] if tp > 0 else []
        r, wr = composite_gauss_legendre(_breaks(0.0, eps, cuts), nodes)
        vol = lens_volume(tp * r, eps)
        dens = eps ** -6 - c * maxwellian(r)
        total += wi * float(np.sum(wr * 4.0 * math.pi * r * r * dens * vol))
    return total


def monte_carlo_l1_check(scenario, t, n=10 ** 7, seed=0, chunk=10 ** 6):
    """Independent estimate of :func:`direct_l1_check` with its standard error.

    Samples ``s`` uniform on ``[0, T]``, the origin ``y = x - (t + s) v`` and ``v``
    uniform in ``eps B``; the integrand is ``(eps^-6 - c M(v)) 1_{|y + (t+s) v| <= 1}``.
    """
    eps = scenario.epsilon
    c = equilibrium_level()
    rng = np.random.default_rng(seed)
    vol = scenario.T * (UNIT_BALL * eps ** 3) ** 2
    sums = 0.0
    sq = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        s = rng.uniform(0.0, scenario.T, m)
        y = _uniform_ball(rng, m) * eps
        v = _uniform_ball(rng, m) * eps
        tp = (t + s)[:, None]
        hit = np.linalg.norm(y + tp * v, axis=1) <= 1.0
        val = vol * np.where(hit, eps ** -6 - c * maxwellian(np.linalg.norm(v, axis=1)), 0.0)
        sums += val.sum()
        sq += (val * val).sum()
        done += m
    mean = sums / n
    var = max(sq / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def _uniform_ball(rng, m):
    d = rng.normal(size=(m, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.random((m, 1)) ** (1.0 / 3.0)


def analytic_lower_bound(scenario, t):
    """``T |B| (1 - eps^6 |B|^2 / (|Omega| (2 pi)^{3/2}))^+ min(1, (R - eps)/(eps (t + T)))^3``."""
    eps, T, R = scenario.epsilon, scenario.T, scenario.R
    mass_factor = max(1.0 - eps ** 6 * UNIT_BALL ** 2 * MAXWELL_NORM / OMEGA, 0.0)
    return T * UNIT_BALL * mass_factor * min(1.0, (R - eps) / (eps * (t + T))) ** DIM


def inequality_chain(scenario, t, nodes=48):
    """Every link of the lower-bound argument, largest first.

    * ``direct``: the exact positive-part functional;
    * ``slow_only``: restricted to molecules with ``(t+s)|v| <= R - eps``, whose
      support stays well inside the ball;
    * ``flat_maxwellian``: ``M`` replaced by its maximum ``(2 pi)^{-3/2}``;
    * ``end_of_window``: the ``s``-integrand bounded by its value at ``s = T``;
    * ``analytic``: the closed form of :func:`analytic_lower_bound`.  It lacks the
      ``|B|`` from the velocity-ball volume, so it sits a factor ``|B|`` below the
      previous link.
    """
    eps, T, R = scenario.epsilon, scenario.T, scenario.R
    c = equilibrium_level()
    s, ws = composite_gauss_legendre(_breaks(0.0, T, [(R - eps) / eps - t]), nodes)
    slow = 0.0
    flat = 0.0
    for si, wi in zip(s, ws):
        rmax = min(eps, (R - eps) / (t + si))
        r, wr = composite_gauss_legendre([0.0, rmax], nodes)
        shell = wr * 4.0 * math.pi * r * r
        slow += wi * UNIT_BALL * eps ** 3 * float(np.sum(shell * (eps ** -6 - c * maxwellian(r))))
        flat += wi * UNIT_BALL * eps ** 3 * float(np.sum(shell)) * (eps ** -6 - c * MAXWELL_NORM)
    mass_factor = max(1.0 - eps ** 6 * c * MAXWELL_NORM, 0.0)
    end = mass_factor * UNIT_BALL ** 2 * T * eps ** -3 * min(eps, (R - eps) / (t + T)) ** 3
    return {
        "direct": direct_l1_check(scenario, t, nodes),
        "slow_only": slow,
        "flat_maxwellian": flat,
        "end_of_window": end,
        "analytic": analytic_lower_bound(scenario, t),
    }


# -- norms of the concentrated data ---------------------------------------------


def _box_integral(func, eps, nodes=16):
    """``int int func(F_in) dx dv`` over the support, by radial quadrature."""
    rho, w = composite_gauss_legendre([0.0, eps], nodes)
    shell = float(np.sum(w * 4.0 * math.pi * rho * rho))
    return func(eps ** -6) * shell * shell


def entropy_norm(eps):
    """``int int F_in |ln F_in|`` (closed form ``2 N |B|^2 |ln eps|``)."""
    return _box_integral(lambda f: f * abs(math.log(f)), eps)


def lp_norm(eps, p):
    """``||F_in||_{L^p}`` (closed form ``|B|^{2/p} / eps^{2N/p'}``)."""
    if math.isinf(p):
        return eps ** -6
    return _box_integral(lambda f: f ** p, eps) ** (1.0 / p)


def energy_norm(eps):
    """``int int F_in (1 + |v|^2)``: mass plus twice the kinetic energy, ``|B|^2 (1 + 3 eps^2 / 5)``."""
    r, w = composite_gauss_legendre([0.0, eps], 16)
    shell = float(np.sum(w * 4.0 * math.pi * r * r))
    second = float(np.sum(w * 4.0 * math.pi * r ** 4))
    return eps ** -6 * shell * (shell + second)


# -- envelopes ------------------------------------------------------------------


def growth_factor(kind, scenario):
    """The factor that makes the envelope bounded below: ``ln t`` or ``t^{N min(1, 2/p')}``."""
    kind = EnvelopeKind(kind)
    if kind is EnvelopeKind.LOG_ENTROPY:
        return lambda t: math.log(t)
    expo = DIM * min(1.0, 2.0 / scenario.p_dual)
    return lambda t: t ** expo


def envelope(kind, scenario, t, coupling="auto", with_energy=False):
    """Smallest decay rate ``E(t)`` compatible with the concentrated test data.

    ``coupling`` picks ``eps``: ``"inverse_t"`` uses ``eps = 1/t``, ``"fixed"``
    keeps ``scenario.epsilon``; ``"auto"`` uses ``1/t`` for the entropy bound and
    for ``p < 2``, and the fixed value for ``p >= 2``.
    """
    kind = EnvelopeKind(kind)
    if coupling == "auto":
        coupling = "inverse_t" if kind is EnvelopeKind.LOG_ENTROPY or scenario.p < 2.0 else "fixed"
    if coupling not in ("inverse_t", "fixed"):
        raise DomainError(f"unknown coupling {coupling!r}")
    if kind is EnvelopeKind.LOG_ENTROPY and t <= math.e:
        raise DomainError("the entropy envelope needs t > e")
    eps = 1.0 / t if coupling == "inverse_t" else scenario.epsilon
    if not eps < scenario.R:
        raise DomainError("eps = 1/t must stay below R: t too small")
    sc = scenario.with_epsilon(eps)
    bound = analytic_lower_bound(sc, t)
    if kind is EnvelopeKind.LOG_ENTROPY:
        norm = 2.0 * DIM * UNIT_BALL ** 2 * abs(math.log(eps))
        if with_energy:
            norm += UNIT_BALL ** 2 * (1.0 + 0.6 * eps * eps)
    else:
        pd = scenario.p_dual
        norm = UNIT_BALL ** (0.0 if math.isinf(scenario.p) else 2.0 / scenario.p) / eps ** (2.0 * DIM / pd)
    return bound / norm


def envelope_both_couplings(scenario, t):
    """At ``p = 2`` both couplings are legitimate; report the pair."""
    return {c: envelope(EnvelopeKind.ALGEBRAIC_LP, scenario, t, coupling=c) for c in ("fixed", "inverse_t")}


def envelope_sweep(kind, scenario, times, **kw):
    """Rows ``(t, envelope, envelope * growth)`` for export."""
    g = growth_factor(kind, scenario)
    rows = []
    for t in times:
        e = envelope(kind, scenario, float(t), **kw)
        rows.append((float(t), e, e * g(float(t))))
    return np.array(rows)
