"""Decay-rate fits: power laws on log-log axes, exponentials on log-linear axes."""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitDomainError, WindowTooLateError

MIN_POINTS = 10


class FitModel(str, enum.Enum):
    POWER_LAW = "power_law"
    EXPONENTIAL = "exponential"


class FitMode(str, enum.Enum):
    RAW = "raw"
    ENVELOPE = "envelope"


@dataclass(frozen=True)
class DecayFit:
    model: FitModel
    rate: float
    intercept: float
    window: tuple
    rms_residual: float
    mode: FitMode = FitMode.RAW
    n_points: int = 0
    diagnostics: dict = field(default_factory=dict)

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        if self.model is FitModel.POWER_LAW:
            return np.exp(self.intercept) * t ** (-self.rate)
        return np.exp(self.intercept - self.rate * t)


def _window(times, values, window):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise FitDomainError("times and values differ in length")
    t0, t1 = window
    if not t1 > t0:
        raise FitDomainError("empty fit window")
    sel = (times >= t0) & (times <= t1)
    return times[sel], values[sel]


def _line(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))


def power_fit(times, errors, window):
    """Least-squares slope of ``log err`` against ``log t``; ``rate = -slope``."""
    t, e = _window(times, errors, window)
    if len(t) < MIN_POINTS:
        raise FitDomainError(f"need at least {MIN_POINTS} points in the window, got {len(t)}")
    if np.any(e <= 0.0) or np.any(t <= 0.0):
        raise FitDomainError("power-law fit needs positive times and errors")
    slope, icpt, rms = _line(np.log(t), np.log(e))
    return DecayFit(FitModel.POWER_LAW, -slope, icpt, tuple(window), rms, FitMode.RAW, len(t))


def local_maxima(times, values):
    """Peaks of ``values`` refined by a parabola through ``log values`` at 3 nodes."""
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    inner = np.flatnonzero((v[1:-1] >= v[:-2]) & (v[1:-1] > v[2:])) + 1
    inner = inner[(v[inner - 1] > 0) & (v[inner + 1] > 0)]
    ym, y0, yp = np.log(v[inner - 1]), np.log(v[inner]), np.log(v[inner + 1])
    curv = ym - 2.0 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(curv < 0, 0.5 * (ym - yp) / curv, 0.0)
    shift = np.clip(shift, -0.5, 0.5)
    h = t[1] - t[0] if len(t) > 1 else 1.0
    peak_t = t[inner] + shift * h
    peak_log = y0 - 0.25 * (ym - yp) * shift
    return peak_t, np.exp(peak_log)


def exponential_fit(times, deviation, window, mode=FitMode.ENVELOPE, noise_floor=0.0):
    """Rate of ``|deviation| ~ C exp(-rate t)`` over ``window``.

    ``mode="raw"`` fits every sample; ``mode="envelope"`` fits only the local
    maxima of ``|deviation|``, which is the meaningful reading for oscillatory
    decay.  Raises :class:`WindowTooLateError` when the signal has sunk to
    ``noise_floor`` (or to exact zero) inside the window.
    """
    mode = FitMode(mode)
    t, d = _window(times, deviation, window)
    e = np.abs(d)
    if len(t) < MIN_POINTS:
        raise FitDomainError(f"need at least {MIN_POINTS} points in the window, got {len(t)}")
    tail = e[-max(len(e) // 20, 3):]
    if np.max(tail) <= noise_floor:
        raise WindowTooLateError("deviation has reached the noise floor inside the window")
    raw = None
    if np.all(e > 0):
        raw = _line(t, np.log(e))
    if mode is FitMode.RAW:
        if raw is None:
            raise WindowTooLateError("deviation vanishes inside the window")
        slope, icpt, rms = raw
        return DecayFit(FitModel.EXPONENTIAL, -slope, icpt, tuple(window), rms, mode, len(t))
    pt, pv = local_maxima(t, e)
    if len(pt) < 3:
        raise FitDomainError("fewer than 3 local maxima in the window; use raw mode")
    slope, icpt, rms = _line(pt, np.log(pv))
    diag = {"raw_rate": -raw[0] if raw is not None else math.nan, "peaks": len(pt)}
    return DecayFit(FitModel.EXPONENTIAL, -slope, icpt, tuple(window), rms, mode, len(pt), diag)
