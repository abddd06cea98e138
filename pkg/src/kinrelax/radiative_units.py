"""Physical radiative quantities: Planck function, Stefan-Boltzmann constant, temperatures.

The grey intensity is the Planck function integrated over frequency, ``(sigma/pi) theta^4``;
an intensity (or flux per steradian) ``f`` therefore corresponds to the temperature
``(pi f / sigma)^{1/4}``.  Dimensionless mode sets ``h = k = c = 1``.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as sc
from scipy.integrate import quad

from .errors import DomainError
from .geometry import BALL_VOLUME

SERIES_SWITCH = 1e-4
PI4_15 = math.pi ** 4 / 15.0


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = 1.0
    k: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.h > 0 and self.k > 0 and self.c > 0):
            raise DomainError("physical constants must be positive")

    @classmethod
    def si(cls):
        """CODATA values from :mod:`scipy.constants`."""
        return cls(sc.h, sc.k, sc.c)

    @classmethod
    def dimensionless(cls):
        return cls(1.0, 1.0, 1.0)


DIMENSIONLESS = PhysicalConstants()


def _bose(x):
    """``1 / (e^x - 1)``; a Laurent series below ``SERIES_SWITCH`` avoids cancellation."""
    x = np.asarray(x, dtype=float)
    small = x < SERIES_SWITCH
    xs = np.where(small, x, 1.0)
    series = 1.0 / xs - 0.5 + xs / 12.0 - xs ** 3 / 720.0
    with np.errstate(over="ignore"):
        direct = 1.0 / np.expm1(np.where(small, 1.0, x))
    return np.where(small, series, direct)


def planck(nu, theta, consts=DIMENSIONLESS):
    """Black-body spectral intensity ``B_nu(theta) = (2 h nu^3 / c^2) / (e^{h nu / k theta} - 1)``."""
    nu = np.asarray(nu, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(nu <= 0) or np.any(theta <= 0):
        raise DomainError("frequency and temperature must be positive")
    x = consts.h * nu / (consts.k * theta)
    out = 2.0 * consts.h * nu ** 3 / consts.c ** 2 * _bose(x)
    return float(out) if out.ndim == 0 else out


def stefan_boltzmann(consts=DIMENSIONLESS):
    """``sigma = 2 pi^5 k^4 / (15 c^2 h^3)``."""
    return 2.0 * math.pi ** 5 * consts.k ** 4 / (15.0 * consts.c ** 2 * consts.h ** 3)


def bose_integral():
    """``int_0^inf x^3 / (e^x - 1) dx`` by adaptive quadrature (closed form ``pi^4 / 15``)."""
    head, _ = quad(lambda x: x ** 3 * float(_bose(x)), 0.0, 50.0, epsabs=0.0, epsrel=1e-13, limit=200)
    # beyond 50 the integrand is x^3 e^{-x} (1 + e^{-x} + ...): the geometric tail in closed form
    tail = sum(math.exp(-50.0 * j) * (50.0 ** 3 / j + 3 * 50.0 ** 2 / j ** 2 + 6 * 50.0 / j ** 3 + 6 / j ** 4)
               for j in range(1, 4))
    return head + tail


def stefan_boltzmann_by_quadrature(consts=DIMENSIONLESS):
    """``(2 pi k^4 / (c^2 h^3)) int_0^inf x^3 / (e^x - 1) dx``."""
    return 2.0 * math.pi * consts.k ** 4 / (consts.c ** 2 * consts.h ** 3) * bose_integral()


def integrated_planck(theta, consts=DIMENSIONLESS):
    """``int_0^inf B_nu(theta) d nu`` by quadrature in ``x = h nu / k theta``."""
    scale = consts.k * theta / consts.h
    pref = 2.0 * consts.h / consts.c ** 2 * scale ** 4
    return pref * bose_integral()


def temperature_from_flux(f, consts=DIMENSIONLESS):
    """``(pi f / sigma)^{1/4}``: the temperature whose grey intensity is ``f``."""
    if f < 0:
        raise DomainError("flux must be nonnegative")
    return (math.pi * f / stefan_boltzmann(consts)) ** 0.25


def equilibrium_temperature(u_in, consts=DIMENSIONLESS):
    """``theta_inf`` from ``4 sigma |Omega| theta^4 = int int I_in``."""
    return (u_in.total_energy() / (4.0 * stefan_boltzmann(consts) * BALL_VOLUME)) ** 0.25
