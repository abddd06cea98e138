"""Zeros of ``1 - Ktilde(z)`` for the monokinetic kernel and the decay rate they set.

Zero counts come from the argument principle evaluated by phase tracking: the
contour is sampled until successive phase increments of ``1 - Ktilde`` stay
below ``pi/2`` and the winding is summed.  Only values of ``Ktilde`` are needed.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContourError, RefinementError
from .fitting import FitMode, exponential_fit
from .kernels import MONOKINETIC

MAX_REFINE = 40
MIN_MODULUS = 1e-12
NEWTON_TOL = 1e-12


def characteristic(z):
    """``1 - Ktilde(z)`` for the monokinetic kernel."""
    return 1.0 - MONOKINETIC.laplace(z)


def characteristic_derivative(z):
    return -MONOKINETIC.laplace_derivative(z)


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ContourError(f"degenerate rectangle {self}")

    def corners(self):
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def contains(self, z):
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    def conjugate(self):
        return Rectangle(self.re_min, self.re_max, -self.im_max, -self.im_min)

    def quarters(self):
        rm = 0.5 * (self.re_min + self.re_max)
        im = 0.5 * (self.im_min + self.im_max)
        return [Rectangle(self.re_min, rm, self.im_min, im), Rectangle(rm, self.re_max, self.im_min, im),
                Rectangle(self.re_min, rm, im, self.im_max), Rectangle(rm, self.re_max, im, self.im_max)]

    def inflate(self, d):
        return Rectangle(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d)

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min

    @property
    def center(self):
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))


def _as_rect(rect):
    return rect if isinstance(rect, Rectangle) else Rectangle(*rect)


def _edge_winding(a, b, density, func):
    """Total phase change of ``func`` along the segment ``a -> b``, and the min modulus seen."""
    n = max(16, int(math.ceil(abs(b - a) * density)))
    s = np.linspace(0.0, 1.0, n + 1)
    vals = func(a + (b - a) * s)
    for _ in range(MAX_REFINE):
        ratio = vals[1:] / vals[:-1]
        dphi = np.angle(ratio)
        dmod = np.abs(np.log(np.abs(ratio)))
        bad = np.flatnonzero((np.abs(dphi) >= 0.5 * math.pi) | (dmod > math.log(4.0)))
        if bad.size == 0:
            return float(np.sum(dphi)), float(np.min(np.abs(vals)))
        mids = 0.5 * (s[bad] + s[bad + 1])
        mvals = func(a + (b - a) * mids)
        s = np.insert(s, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)
        if np.min(np.abs(vals)) == 0.0:
            break
    raise ContourError("phase tracking did not resolve the contour (zero on or very near it)")


def winding_number(rect, density=32.0, func=characteristic):
    """Winding number of ``func`` around the rectangle, with the min modulus on the contour."""
    c = _as_rect(rect).corners()
    total = 0.0
    mod = math.inf
    for a, b in zip(c, c[1:] + c[:1]):
        w, m = _edge_winding(a, b, density, func)
        total += w
        mod = min(mod, m)
    turns = total / (2.0 * math.pi)
    k = round(turns)
    if abs(turns - k) > 1e-3:
        raise ContourError(f"winding {turns:.6f} is not an integer")
    return int(k), mod


def count_zeros(rect, density=32.0, retries=4, jitter=1e-7, min_modulus=MIN_MODULUS):
    """Number of zeros of ``1 - Ktilde`` inside ``rect``, counted with multiplicity.

    If the contour passes within ``min_modulus`` of a zero, the rectangle is
    inflated by ``jitter`` times its size (growing each retry) and recounted.
    """
    rect = _as_rect(rect)
    scale = max(rect.width, rect.height)
    for attempt in range(retries + 1):
        r = rect if attempt == 0 else rect.inflate(jitter * scale * 3 ** (attempt - 1))
        try:
            k, mod = winding_number(r, density)
        except ContourError:
            continue
        if mod >= min_modulus:
            return k
    raise ContourError(f"contour of {rect} stays too close to a zero after {retries} retries")


def refine_zero(seed, tol=NEWTON_TOL, maxiter=50, region=None):
    """Newton iteration on ``1 - Ktilde``; ``region`` (a rectangle) rejects escapes."""
    z = complex(seed)
    box = None if region is None else _as_rect(region)
    leash = None if box is None else box.inflate(2.0 * max(box.width, box.height))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(maxiter):
            f = complex(characteristic(z))
            if not (math.isfinite(f.real) and math.isfinite(f.imag)):
                raise RefinementError(f"Newton iteration diverged from {seed}")
            if abs(f) < tol:
                break
            d = complex(characteristic_derivative(z))
            if d == 0:
                raise RefinementError("vanishing derivative during Newton refinement")
            z = z - f / d
            if leash is not None and not leash.contains(z):
                raise RefinementError(f"Newton left the region: {z}")
        else:
            raise RefinementError(f"Newton did not converge from {seed} in {maxiter} iterations")
        # one polishing step once inside the basin
        d = complex(characteristic_derivative(z))
        z_next = z - complex(characteristic(z)) / d
        if abs(characteristic(z_next)) <= abs(characteristic(z)):
            z = z_next
    if box is not None and not box.contains(z):
        raise RefinementError(f"Newton left the region: {z}")
    return z


@dataclass(frozen=True)
class ZeroSet:
    rectangle: Rectangle
    count: int
    zeros: list
    refinement_residuals: list

    def as_array(self):
        return np.array(self.zeros, dtype=complex)


def find_zeros(rect, density=32.0, min_size=1e-3):
    """Count, isolate and refine every zero in ``rect``.

    Boxes with count 1 are refined by Newton from their centre; if Newton
    escapes the box, the box is quartered (quadtree fallback).
    """
    rect = _as_rect(rect)
    total = count_zeros(rect, density)
    zeros = []
    stack = [(rect, total)]
    while stack:
        box, k = stack.pop()
        if k == 0:
            continue
        if k == 1:
            try:
                zeros.append(refine_zero(box.center, region=box))
                continue
            except RefinementError:
                pass
        if max(box.width, box.height) < min_size:
            if k == 1:
                zeros.append(refine_zero(box.center))
                continue
            raise RefinementError(f"{k} zeros could not be separated inside {box}")
        parts = box.quarters()
        counts = [count_zeros(p, density) for p in parts]
        if sum(counts) != k:
            raise ContourError(f"tile counts {counts} do not add up to {k} in {box}")
        stack.extend(zip(parts, counts))
    zeros.sort(key=lambda z: (z.imag, z.real))
    res = [float(abs(characteristic(z))) for z in zeros]
    return ZeroSet(rect, total, zeros, res)


def certify(z, radius=1e-6):
    """Zero count of a small box around ``z`` (1 for a simple isolated zero)."""
    return count_zeros(Rectangle(z.real - radius, z.real + radius, z.imag - radius, z.imag + radius))


def zero_free_height(depth):
    """Height above which ``|Ktilde| < 1/2`` throughout ``-depth <= Re z <= 0``.

    From ``|Ktilde(z)| <= (1 + (1 + 2|z|) e^{2 depth}) / (2 |z|^2)``.
    """
    e = math.exp(2.0 * depth)
    return e + math.sqrt(e * e + 1.0 + e)


@dataclass(frozen=True)
class SpectralAbscissa:
    alpha: float
    witness_zero: Optional[complex]
    searched_strip: tuple
    zeros: list = field(default_factory=list)
    height: float = math.nan
    lower_bound_only: bool = False


def spectral_abscissa(strip_depth=3.0, tile_height=2.0, density=32.0, re_max=0.05, gap=0.25):
    """``alpha = min(-Re z)`` over the nonzero zeros in ``(-strip_depth, 0]``.

    The upper half strip is tiled into boxes of height ``tile_height`` up to the
    zero-free height; a box ``|Im z| <= gap`` around the real axis must hold only
    ``z = 0``.  Lower-half zeros are the conjugates.
    """
    if not strip_depth > 0:
        raise ContourError("strip_depth must be positive")
    Y = zero_free_height(strip_depth)
    near_axis = count_zeros(Rectangle(-strip_depth, re_max, -gap, gap), density)
    if near_axis != 1:
        raise ContourError(f"expected only z=0 near the real axis, counted {near_axis}")
    edges = np.arange(gap, Y + tile_height, tile_height)
    edges[-1] = max(edges[-1], Y)
    found = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        zs = find_zeros(Rectangle(-strip_depth, re_max, lo, hi), density)
        found.extend(zs.zeros)
    inside = [z for z in found if z.real > -strip_depth]
    if not inside:
        return SpectralAbscissa(strip_depth, None, (-strip_depth, 0.0), [], Y, True)
    witness = min(inside, key=lambda z: -z.real)
    return SpectralAbscissa(-witness.real, witness, (-strip_depth, 0.0), inside, Y, False)


def abscissa_by_bisection(lo=1e-3, hi=3.0, tol=1e-11, gap=0.25, re_max=0.05, density=32.0):
    """Bracket ``alpha`` using zero counts only (no Newton).

    ``count([-a, re_max] x [gap, Y(a)])`` is 0 for ``a < alpha`` and positive beyond.
    """
    def occupied(a):
        rect = Rectangle(-a, re_max, gap, zero_free_height(a))
        try:
            return count_zeros(rect, density, retries=0, min_modulus=0.0) > 0
        except ContourError:
            return True  # the left edge sits on a zero: a == alpha to working precision

    if occupied(lo):
        raise ContourError("zeros found arbitrarily close to the imaginary axis")
    if not occupied(hi):
        raise ContourError(f"no nonzero zero with Re z > -{hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if occupied(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), (lo, hi)


def exponential_rate_fit(sol, window=(5.0, 40.0), mode=FitMode.ENVELOPE, alpha=None, discrete=True):
    """Fit ``|mu(t) - mu_inf| ~ C exp(-rate t)`` over ``window``.

    When ``alpha`` is given the result's diagnostics carry the relative
    difference ``|rate - alpha| / alpha``.
    """
    t0, t1 = window
    if t0 <= 2.0:
        raise ContourError("window must start after the source support (t0 > 2)")
    dev = sol.deviation(discrete=discrete)
    floor = 16.0 * np.finfo(float).eps * max(abs(sol.mu_infinity), 1e-300)
    fit = exponential_fit(sol.times, dev, (t0, min(t1, sol.horizon)), mode=mode, noise_floor=floor)
    if alpha is not None:
        fit.diagnostics["alpha"] = alpha
        fit.diagnostics["relative_difference"] = abs(fit.rate - alpha) / alpha
    return fit
