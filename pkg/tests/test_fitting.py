import numpy as np
import pytest

from kinrelax.errors import FitDomainError
from kinrelax.fitting import FitModel, exponential_fit, local_maxima, power_fit


def test_exact_inverse_power():
    t = np.geomspace(20.0, 200.0, 40)
    fit = power_fit(t, 1.0 / t, (20.0, 200.0))
    assert fit.model is FitModel.POWER_LAW
    assert fit.rate == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(fit.predict(t), 1.0 / t, rtol=1e-9)


def test_noisy_power(rng):
    t = np.geomspace(20.0, 200.0, 60)
    err = 5.0 * t ** -0.6 + rng.normal(0.0, 1e-4, t.size)
    assert power_fit(t, err, (20.0, 200.0)).rate == pytest.approx(0.6, abs=0.02)


def test_nonpositive_rejected():
    t = np.geomspace(1.0, 10.0, 20)
    e = 1.0 / t
    e[5] = 0.0
    with pytest.raises(FitDomainError):
        power_fit(t, e, (1.0, 10.0))


def test_too_few_points():
    t = np.geomspace(1.0, 10.0, 5)
    with pytest.raises(FitDomainError):
        power_fit(t, 1.0 / t, (1.0, 10.0))


def test_empty_window():
    with pytest.raises(FitDomainError):
        power_fit(np.arange(1.0, 20.0), np.ones(19), (5.0, 5.0))


def test_local_maxima_refined():
    t = np.linspace(0.0, 10.0, 1001)
    pt, pv = local_maxima(t, np.exp(-t) * np.abs(np.cos(2.0 * t)) + 0.0)
    assert len(pt) >= 3
    # peaks of |cos| sit near multiples of pi/2, shifted by the decay
    assert np.all(np.abs(pt[:3] - np.pi / 2 * np.arange(1, 4) + np.arctan(0.5) / 2) < 0.05)


def test_exponential_raw():
    t = np.linspace(0.0, 10.0, 200)
    fit = exponential_fit(t, 3.0 * np.exp(-0.25 * t), (1.0, 9.0), mode="raw")
    assert fit.rate == pytest.approx(0.25, abs=1e-10)
