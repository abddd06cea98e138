"""Exit-time renewal kernels.

Two kernels are provided:

* ``GAS`` -- law of the wall-to-wall flight time ``2 y / r`` of a molecule
  re-emitted with the flux-weighted Maxwellian at unit temperature.  In closed
  form ``K(t) = (t/4) [8 - (c^4 + 4c^2 + 8) exp(-c^2/2)]`` with ``c = 2/t``.
  It decays like ``8 / (3 t^5)``, so only moments up to order 3 exist and its
  Laplace transform does not continue to ``Re z < 0``.
* ``MONOKINETIC`` -- the same flight time at unit speed: ``K(s) = s/2`` on
  ``[0, 2)``.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .errors import (
    DivergentMomentError,
    DomainError,
    OutOfDomainError,
    UnsupportedVariantError,
)
from .quadrature import composite_gauss_legendre

HEAVY_TAIL_TAG = "heavy-tail kernel: no left half-plane continuation"

SERIES_RADIUS = 0.25
TAIL_SPLIT = 50.0
_SERIES_TERMS = 40


class KernelVariant(str, enum.Enum):
    GAS = "gas"
    MONOKINETIC = "monokinetic"


def _gas_eval(tau):
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    pos = tau > 0.0
    t = tau[pos]
    u = 2.0 / (t * t)
    big = u < 1.0
    res = np.empty_like(t)
    # series of t * sum (-1)^n u^(n+3) / (n! (n+3)), accurate where the closed form cancels
    ub = u[big]
    term = ub ** 3
    acc = term / 3.0
    for n in range(1, 30):
        term = -term * ub / n
        acc = acc + term / (n + 3)
    res[big] = t[big] * acc
    us = u[~big]
    bracket = 8.0 - (4.0 * us * us + 8.0 * us + 8.0) * np.exp(-us)
    res[~big] = 0.25 * t[~big] * bracket
    out[pos] = res
    return out


def _gas_cdf(tau):
    """``P(flight time <= tau) = tau^2 (1 - e^{-2/tau^2}) - e^{-2/tau^2}``."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    pos = tau > 0.0
    t = tau[pos]
    u = 2.0 / (t * t)
    big = u < 1.0
    res = np.empty_like(t)
    ub = u[big]
    # 1 - cdf = sum_{k>=2} (-1)^k (k-1) u^k / (k+1)!
    power = ub * ub / 6.0  # (-u)^k / (k+1)! at k = 2
    acc = power.copy()
    for k in range(3, 32):
        power = -power * ub / (k + 1)
        acc = acc + (k - 1) * power
    res[big] = 1.0 - acc
    us = u[~big]
    e = np.exp(-us)
    res[~big] = (2.0 / us) * (-np.expm1(-us)) - e
    out[pos] = res
    return out


def _mono_eval(tau):
    tau = np.asarray(tau, dtype=float)
    return np.where((tau >= 0.0) & (tau < 2.0), 0.5 * tau, 0.0)


def _mono_cdf(tau):
    tau = np.asarray(tau, dtype=float)
    return np.clip(tau, 0.0, 2.0) ** 2 / 4.0


def _mono_laplace(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_RADIUS
    zs = z[small]
    # sum_n (-z)^n 2^(n+1) / (n! (n+2))
    term = np.ones_like(zs)
    acc = term * 1.0
    for n in range(1, _SERIES_TERMS):
        term = term * (-2.0 * zs) / n
        acc = acc + term * 2.0 / (n + 2)
    out[small] = acc
    zl = z[~small]
    out[~small] = (1.0 - np.exp(-2.0 * zl) * (1.0 + 2.0 * zl)) / (2.0 * zl * zl)
    return out


def _mono_laplace_derivative(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_RADIUS
    zs = z[small]
    # d/dz sum_n (-2z)^n 2 / (n! (n+2)) = sum_{n>=1} -2 (-2z)^(n-1) 2 / ((n-1)! (n+2))
    term = np.ones_like(zs)
    acc = -4.0 / 3.0 * term
    for n in range(2, _SERIES_TERMS):
        term = term * (-2.0 * zs) / (n - 1)
        acc = acc - 4.0 * term / (n + 2)
    out[small] = acc
    zl = z[~small]
    e = np.exp(-2.0 * zl)
    numer = 1.0 - e * (1.0 + 2.0 * zl)
    out[~small] = 2.0 * e / zl - numer / zl ** 3
    return out


def _gas_moment_closed_form(m):
    # E[(2y/r)^m] with y ~ 2y dy on [0,1] and r ~ r^3 e^{-r^2/2} / 2 dr
    return 2.0 ** m / (m + 2) * 2.0 ** ((2 - m) / 2) * _gamma((4 - m) / 2)


@dataclass(frozen=True)
class Kernel:
    variant: KernelVariant

    @property
    def support_bound(self):
        return 2.0 if self.variant is KernelVariant.MONOKINETIC else math.inf

    @property
    def breakpoints(self):
        """Points where the kernel is discontinuous."""
        return (2.0,) if self.variant is KernelVariant.MONOKINETIC else ()

    def eval(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        if np.any(tau_arr < 0.0):
            raise DomainError("kernel argument must be nonnegative")
        if self.variant is KernelVariant.GAS:
            out = _gas_eval(tau_arr)
        else:
            out = _mono_eval(tau_arr)
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def cdf(self, tau):
        """``int_0^tau K``."""
        tau_arr = np.asarray(tau, dtype=float)
        out = _gas_cdf(tau_arr) if self.variant is KernelVariant.GAS else _mono_cdf(tau_arr)
        return float(out) if out.ndim == 0 else out

    def moment(self, m):
        """``int_0^inf tau^m K(tau) d tau``."""
        if m < 0 or int(m) != m:
            raise DomainError("moment order must be a nonnegative integer")
        m = int(m)
        if self.variant is KernelVariant.MONOKINETIC:
            return 2.0 ** (m + 1) / (m + 2)
        if m >= 4:
            raise DivergentMomentError(
                f"moment {m} of the gas kernel diverges (K ~ 8/(3 tau^5))"
            )
        breaks = np.array([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0,
                           12.0, 16.0, 24.0, 32.0, 40.0, TAIL_SPLIT])
        x, w = composite_gauss_legendre(breaks, 64)
        body = float(np.sum(w * x ** m * _gas_eval(x)))
        return body + _gas_tail_moment(m, TAIL_SPLIT)

    def laplace(self, z):
        z_arr = np.asarray(z, dtype=complex)
        if self.variant is KernelVariant.MONOKINETIC:
            out = _mono_laplace(z_arr)
        else:
            if np.any(z_arr.real < 0.0):
                raise OutOfDomainError(
                    "Laplace transform of the gas kernel requested at Re(z) < 0",
                    tag=HEAVY_TAIL_TAG,
                )
            out = _gas_laplace(z_arr)
        return complex(out) if out.ndim == 0 else out

    def laplace_derivative(self, z):
        if self.variant is not KernelVariant.MONOKINETIC:
            raise UnsupportedVariantError("laplace_derivative is only available for the monokinetic kernel")
        out = _mono_laplace_derivative(np.asarray(z, dtype=complex))
        return complex(out) if out.ndim == 0 else out

    def tail_ratio(self, tau):
        """``K(tau) / (8 / (3 tau^5))``, tending to 1 at large ``tau``."""
        if self.variant is not KernelVariant.GAS:
            raise UnsupportedVariantError("the monokinetic kernel has compact support and no tail")
        tau_arr = np.asarray(tau, dtype=float)
        if np.any(tau_arr <= 0.0):
            raise DomainError("tail_ratio needs tau > 0")
        out = _gas_eval(tau_arr) * 3.0 * tau_arr ** 5 / 8.0
        return float(out) if out.ndim == 0 else out


def _gas_tail_moment(m, split):
    # termwise integral of tau^m * tau * sum (-1)^n u^(n+3)/(n!(n+3)), u = 2/tau^2
    total = 0.0
    for n in range(12):
        coef = (-1.0) ** n * 2.0 ** (n + 3) / (math.factorial(n) * (n + 3))
        power = m - 4 - 2 * n
        total += coef * split ** power / (-power)
    return total


_LAPLACE_BREAKS = np.concatenate(
    ([0.0], 1e-4 * 1.2 ** np.arange(0, 51), np.linspace(1.0, 12.0, 23)[1:])
)
_LAPLACE_BREAKS = np.unique(np.clip(_LAPLACE_BREAKS, 0.0, 12.0))


def _gas_laplace(z):
    # Fubini: E[exp(-z 2y/r)] = E_r[ Ktilde_mono(z / r) ], speed law r^3 e^{-r^2/2} / 2
    r, w = composite_gauss_legendre(_LAPLACE_BREAKS, 48)
    wr = w * r ** 3 * np.exp(-0.5 * r * r) / 2.0
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for i, zi in enumerate(flat):
        if zi == 0:
            out[i] = 1.0
        else:
            out[i] = np.sum(wr * _mono_laplace(zi / r))
    return out.reshape(z.shape)


GAS = Kernel(KernelVariant.GAS)
MONOKINETIC = Kernel(KernelVariant.MONOKINETIC)


def get_kernel(variant):
    return GAS if KernelVariant(variant) is KernelVariant.GAS else MONOKINETIC
