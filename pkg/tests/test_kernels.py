import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad

from kinrelax.errors import DivergentMomentError, DomainError, OutOfDomainError, UnsupportedVariantError
from kinrelax.kernels import GAS, HEAVY_TAIL_TAG, MONOKINETIC, get_kernel
from kinrelax.quadrature import composite_gauss_legendre

HALF_FLUX = (2.0 * math.pi) ** -0.5


def gas_kernel_by_definition(tau):
    """``(pi tau / (2 <M>_+)) int_0^{2/tau} M(r) r^5 dr`` by adaptive quadrature."""
    m = lambda r: (2.0 * math.pi) ** -1.5 * math.exp(-0.5 * r * r) * r ** 5
    val, _ = quad(m, 0.0, 2.0 / tau, epsabs=0.0, epsrel=1e-13, limit=200)
    return math.pi * tau / (2.0 * HALF_FLUX) * val


def test_monokinetic_values():
    assert MONOKINETIC.eval(1.0) == 0.5
    assert MONOKINETIC.eval(3.0) == 0.0
    assert MONOKINETIC.eval(0.0) == 0.0


def test_gas_values_against_definition():
    assert GAS.eval(2.0) == pytest.approx((8.0 - 13.0 * math.exp(-0.5)) / 2.0, rel=1e-14)
    assert GAS.eval(1.0) == pytest.approx((8.0 - 40.0 * math.exp(-2.0)) / 4.0, rel=1e-14)
    assert GAS.eval(0.0) == 0.0


def test_gas_closed_form_matches_quadrature_at_random_points(rng):
    taus = rng.uniform(0.0, 100.0, 100)
    taus[taus == 0] = 1.0
    for tau in taus:
        assert abs(GAS.eval(tau) - gas_kernel_by_definition(tau)) < 1e-12


def test_negative_argument():
    with pytest.raises(DomainError):
        GAS.eval(-1.0)


@pytest.mark.parametrize("k", [GAS, MONOKINETIC])
def test_normalization_by_quadrature_with_tail(k):
    breaks = np.concatenate(([0.0, 0.5, 1.0, 1.5, 2.0], np.geomspace(3.0, 200.0, 30)))
    x, w = composite_gauss_legendre(breaks, 64)
    body = float(np.sum(w * k.eval(x)))
    tail = 2.0 / (3.0 * 200.0 ** 4) if k is GAS else 0.0
    assert abs(body + tail - 1.0) < 1e-10


def test_positivity_on_grid():
    tau = np.linspace(0.0, 300.0, 100_001)
    assert np.all(GAS.eval(tau) >= 0.0)
    assert np.all(MONOKINETIC.eval(tau) >= 0.0)


def test_moments():
    assert MONOKINETIC.moment(0) == 1.0
    assert MONOKINETIC.moment(1) == 4.0 / 3.0
    assert GAS.moment(0) == pytest.approx(1.0, abs=1e-12)
    # 2 E[cos] E[1/|v|] under the flux-weighted law: 2 (2/3) (sqrt(pi/2) / 2)
    assert GAS.moment(1) == pytest.approx(4.0 / 3.0 * 0.5 * math.sqrt(math.pi / 2.0), rel=1e-12)
    for m in (2, 3):
        direct, _ = quad(lambda t: t ** m * GAS.eval(t), 0.0, np.inf, limit=500, epsrel=1e-12)
        assert GAS.moment(m) == pytest.approx(direct, rel=1e-7)


def test_gas_fourth_moment_diverges():
    with pytest.raises(DivergentMomentError):
        GAS.moment(4)


def test_monokinetic_laplace_values():
    assert MONOKINETIC.laplace(0.0) == 1.0
    direct, _ = quad(lambda t: math.exp(-t) * t / 2.0, 0.0, 2.0, epsabs=1e-15)
    assert abs(MONOKINETIC.laplace(1.0) - direct) < 1e-12
    assert MONOKINETIC.laplace(1.0) == pytest.approx((1.0 - 3.0 * math.exp(-2.0)) / 2.0, rel=1e-14)
    for y in (1.0, 2.0, 5.0):
        assert MONOKINETIC.laplace(1j * y).real < 1.0


def test_laplace_series_and_closed_form_agree_across_switch():
    closed = lambda z: (1.0 - cmath.exp(-2.0 * z) * (1.0 + 2.0 * z)) / (2.0 * z * z)
    for z in (0.2499, 0.2501, 0.25j, -0.24 + 0.1j):
        assert abs(MONOKINETIC.laplace(z) - closed(z)) < 1e-13


def test_gas_laplace_domain():
    with pytest.raises(OutOfDomainError) as info:
        GAS.laplace(-0.1)
    assert info.value.tag == HEAVY_TAIL_TAG
    val = GAS.laplace(0.7)
    direct, _ = quad(lambda t: math.exp(-0.7 * t) * GAS.eval(t), 0.0, np.inf, limit=500, epsrel=1e-13)
    assert abs(val - direct) < 1e-10


def test_laplace_derivative():
    assert MONOKINETIC.laplace_derivative(0.0) == pytest.approx(-4.0 / 3.0, abs=1e-15)
    assert abs(MONOKINETIC.laplace_derivative(0.0) - MONOKINETIC.laplace_derivative(1e-6)) < 1e-5
    h = 1e-6
    fd = (MONOKINETIC.laplace(1.0 + h) - MONOKINETIC.laplace(1.0 - h)) / (2 * h)
    assert abs(MONOKINETIC.laplace_derivative(1.0) - fd) < 1e-8
    with pytest.raises(UnsupportedVariantError):
        GAS.laplace_derivative(1.0)


def test_tail_ratio():
    assert abs(GAS.tail_ratio(50.0) - 1.0) < 0.01
    # sixth-order Taylor oracle: bracket = c^6/6 - c^8/16 + ..., so ratio ~ 1 - 3 c^2 / 8
    c = 2.0 / 50.0
    assert GAS.tail_ratio(50.0) == pytest.approx(1.0 - 0.375 * c * c, rel=1e-6)
    assert 0.0 < GAS.tail_ratio(5.0) < np.inf
    tau = 1e-3
    assert GAS.eval(tau) / (2.0 * tau) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(UnsupportedVariantError):
        MONOKINETIC.tail_ratio(3.0)


def test_monokinetic_laplace_bound_and_right_half_plane(rng):
    z = rng.uniform(-3, 3, 100) + 1j * rng.uniform(-30, 30, 100)
    bound = (1.0 + (1.0 + 2.0 * np.abs(z)) * np.exp(-2.0 * z.real)) / (2.0 * np.abs(z) ** 2)
    assert np.all(np.abs(MONOKINETIC.laplace(z)) <= bound * (1 + 1e-12))
    zr = rng.uniform(1e-3, 3, 100) + 1j * rng.uniform(-30, 30, 100)
    assert np.all(np.abs(MONOKINETIC.laplace(zr)) < 1.0)


def test_get_kernel():
    assert get_kernel("gas") is GAS
    assert get_kernel("monokinetic") is MONOKINETIC
    with pytest.raises(ValueError):
        get_kernel("photon")


def test_cdf_consistency():
    for k in (GAS, MONOKINETIC):
        for t in (0.3, 1.0, 2.5, 10.0):
            direct, _ = quad(k.eval, 0.0, t, points=[2.0] if t > 2 else None, epsabs=1e-14)
            assert k.cdf(t) == pytest.approx(direct, abs=1e-12)
