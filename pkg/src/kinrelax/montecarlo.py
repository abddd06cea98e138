"""Particle oracle: free flight in the unit ball with diffuse wall reemission.

Each particle flies straight to the wall, is tallied there, and is reemitted
inward from the same wall point with a fresh velocity: the flux-weighted
half-space Maxwellian for a gas, or the unit-speed cosine law for grey
radiation.  The tally of wall arrivals per unit area and time estimates the
outgoing flux ``mu(t)``; the arrival-to-arrival intervals sample the kernel.

Particles are grouped into fixed-size blocks; block ``b`` draws from its own
child of ``SeedSequence(seed)``, so results depend only on the seed and the
block size, not on how blocks are scheduled over workers.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyEnsembleError
from .sources import (
    MAXWELL_NORM,
    BoundedRadial,
    ConcentratedBox,
    EquilibriumMultiple,
    maxwellian,
)

BLOCK_SIZE = 1 << 15
GAS = "gas"
GREY = "grey"


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    positions: np.ndarray
    velocities: np.ndarray
    weights: np.ndarray
    rng_seed: int
    particle_count: int
    kind: str = GAS
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if self.particle_count < 1:
            raise EmptyEnsembleError("ensemble has no particles")
        if np.any(np.linalg.norm(self.positions, axis=1) > 1.0 + 1e-12):
            raise DomainError("particle outside the unit ball")

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    @property
    def n_blocks(self):
        return -(-self.particle_count // self.block_size)

    def block(self, b):
        sl = slice(b * self.block_size, min((b + 1) * self.block_size, self.particle_count))
        return self.positions[sl], self.velocities[sl], self.weights[sl]


@dataclass(frozen=True, eq=False)
class FluxTally:
    """Wall flux per unit area and time, with batch-means standard errors.

    ``counts[i]`` estimates the mean of ``mu`` over ``[i, i + 1) * bin_width``.
    """

    bin_width: float
    counts: np.ndarray
    stderr: np.ndarray
    block_counts: np.ndarray
    area_normalizer: float
    total_mass: float
    kind: str
    interval_edges: np.ndarray
    interval_counts: np.ndarray
    interval_total: int
    unthermalized_mass: float
    zero_speed_mass: float
    meta: dict = field(default_factory=dict)

    @property
    def bin_centers(self):
        return (np.arange(len(self.counts)) + 0.5) * self.bin_width

    @property
    def bin_edges(self):
        return np.arange(len(self.counts) + 1) * self.bin_width


# -- sampling ------------------------------------------------------------------


def _isotropic(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1)[:, None]


def _maxwell_speeds(rng, n):
    return np.linalg.norm(rng.normal(size=(n, 3)), axis=1)


def _block_seeds(seed, n_blocks):
    """``(initial, flight)`` generators for every block."""
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    return [tuple(np.random.default_rng(s) for s in c.spawn(2)) for c in children]


def _sample_block(f_in, n, rng):
    """Positions and velocities for ``n`` particles distributed like ``f_in``."""
    if isinstance(f_in, ConcentratedBox):
        e = f_in.epsilon
        x = _isotropic(rng, n) * (e * rng.random((n, 1)) ** (1.0 / 3.0))
        v = _isotropic(rng, n) * (e * rng.random((n, 1)) ** (1.0 / 3.0))
        return x, v
    if isinstance(f_in, EquilibriumMultiple):
        x = _isotropic(rng, n) * rng.random((n, 1)) ** (1.0 / 3.0)
        return x, _isotropic(rng, n) * _maxwell_speeds(rng, n)[:, None]
    if f_in.kind == GREY:
        top = f_in.sup_profile() * (1.0 + 1e-9)
        rho = _rejection(rng, n, lambda m: rng.random(m) ** (1.0 / 3.0), lambda p: f_in(p * p) / top)
        return _isotropic(rng, n) * rho[:, None], _isotropic(rng, n)
    if isinstance(f_in, BoundedRadial):
        # propose uniform-in-ball radius and Maxwell speed, accept with f / (C M)
        c = f_in.bound_constant * (1.0 + 1e-12)

        def propose(m):
            return np.column_stack((rng.random(m) ** (1.0 / 3.0), _maxwell_speeds(rng, m)))

        def accept(p):
            return f_in.density(p[:, 0], p[:, 1]) / (c * maxwellian(p[:, 1]))

        pts = _rejection(rng, n, propose, accept)
        return _isotropic(rng, n) * pts[:, :1], _isotropic(rng, n) * pts[:, 1:]
    raise DomainError(f"no sampler for {type(f_in).__name__}")


def _rejection(rng, n, propose, accept, max_rounds=10000):
    out = []
    have = 0
    for _ in range(max_rounds):
        m = max(2 * (n - have), 1024)
        cand = propose(m)
        keep = rng.random(m) < accept(cand)
        out.append(cand[keep])
        have += int(keep.sum())
        if have >= n:
            return np.concatenate(out)[:n]
    raise DomainError("rejection sampling accepted too few points; the density may vanish")


def sample_initial(f_in, n, seed, block_size=BLOCK_SIZE):
    """Equal-weight particles whose weights sum to ``int int f_in``."""
    if n < 1:
        raise EmptyEnsembleError("need at least one particle")
    mass = f_in.exact_mass() if hasattr(f_in, "exact_mass") else f_in.total_mass()
    if not mass > 0.0:
        raise EmptyEnsembleError("initial data carry no mass")
    n_blocks = -(-n // block_size)
    xs, vs = [], []
    for b, (rng, _) in enumerate(_block_seeds(seed, n_blocks)):
        m = min(block_size, n - b * block_size)
        x, v = _sample_block(f_in, m, rng)
        xs.append(x)
        vs.append(v)
    kind = GREY if f_in.kind == GREY else GAS
    return ParticleEnsemble(np.concatenate(xs), np.concatenate(vs), np.full(n, mass / n), seed, n, kind, block_size)


def diffuse_resample(rng, inward_normals, kind=GAS):
    """Inward velocities with flux-weighted law ``M(v) |v . n|`` (or unit-speed cosine law)."""
    m = np.atleast_2d(inward_normals)
    n = len(m)
    cos = np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    if kind == GAS:
        speed = np.sqrt(2.0 * rng.gamma(2.0, 1.0, n))  # density r^3 e^{-r^2/2} / 2
    else:
        speed = np.ones(n)
    # orthonormal frame around each normal
    helper = np.where(np.abs(m[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = np.cross(m, helper)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(m, e1)
    sin = np.sqrt(1.0 - cos * cos)
    d = cos[:, None] * m + sin[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
    return d * speed[:, None]


# -- flight ----------------------------------------------------------------------


def _time_to_wall(x, v):
    """Forward time for ``x + s v`` to reach the unit sphere (``inf`` at zero speed)."""
    vv = np.einsum("ij,ij->i", v, v)
    xv = np.einsum("ij,ij->i", x, v)
    xx = np.einsum("ij,ij->i", x, x)
    disc = np.sqrt(np.maximum(xv * xv + vv * (1.0 - xx), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        # stable root: (1 - |x|^2) / (xv + disc) when xv > 0
        s = np.where(xv > 0, (1.0 - xx) / (xv + disc), (disc - xv) / vv)
    return np.where(vv > 0, np.maximum(s, 0.0), np.inf)


def _evolve_block(x, v, w, rng, kind, horizon, n_bins, bin_width, edges):
    tally = np.zeros(n_bins)
    hist = np.zeros(len(edges) - 1, dtype=np.int64)
    interval_total = 0
    t = _time_to_wall(x, v)
    never = float(np.sum(w[t > horizon]))
    act = np.flatnonzero(t <= horizon)
    y = x[act] + t[act, None] * v[act]
    t = t[act]
    w = w[act]
    while len(t):
        k = np.minimum((t / bin_width).astype(np.int64), n_bins - 1)
        tally += np.bincount(k, weights=w, minlength=n_bins)
        y /= np.linalg.norm(y, axis=1)[:, None]
        vel = diffuse_resample(rng, -y, kind)
        dt = _time_to_wall(y, vel)
        hist += np.histogram(dt, edges)[0]
        interval_total += len(dt)
        y = y + dt[:, None] * vel
        t = t + dt
        keep = t <= horizon
        t, y, w = t[keep], y[keep], w[keep]
    return tally, hist, interval_total, never


def evolve(ens, horizon, tally_bin, interval_max=None, interval_bins=32, workers=1):
    """Run every particle to ``horizon`` and tally wall arrivals in bins of ``tally_bin``.

    ``mu_hat = sum(weights) / (4 pi * tally_bin)`` for a gas; grey intensity is
    converted from flux by the extra factor ``pi`` of the cosine law.
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    n_bins = int(math.ceil(horizon / tally_bin - 1e-9))
    if interval_max is None:
        interval_max = 4.0 if ens.kind == GAS else 2.0
    edges = np.linspace(0.0, interval_max, interval_bins + 1)
    seeds = _block_seeds(ens.rng_seed, ens.n_blocks)

    def one(b):
        x, v, w = ens.block(b)
        return _evolve_block(x, v, w, seeds[b][1], ens.kind, horizon, n_bins, tally_bin, edges)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(ens.n_blocks)))
    else:
        results = [one(b) for b in range(ens.n_blocks)]
    area = 4.0 * math.pi * (1.0 if ens.kind == GAS else math.pi)
    blocks = np.array([r[0] for r in results]) / (area * tally_bin)
    counts = blocks.sum(axis=0)
    nb = len(blocks)
    if nb > 1:
        # batch means with unequal batches: est_b is the mean over m_b particles
        m = np.array([len(ens.block(b)[2]) for b in range(nb)], dtype=float)[:, None]
        n = ens.particle_count
        est = blocks * n / m
        var_particle = np.sum(m * (est - counts) ** 2, axis=0) / (nb - 1)
        stderr = np.sqrt(var_particle / n)
    else:
        stderr = np.full(n_bins, math.nan)
    speeds = np.linalg.norm(ens.velocities, axis=1)
    return FluxTally(
        bin_width=tally_bin,
        counts=counts,
        stderr=stderr,
        block_counts=blocks,
        area_normalizer=area,
        total_mass=ens.total_mass,
        kind=ens.kind,
        interval_edges=edges,
        interval_counts=sum(r[1] for r in results),
        interval_total=int(sum(r[2] for r in results)),
        unthermalized_mass=float(sum(r[3] for r in results)),
        zero_speed_mass=float(np.sum(ens.weights[speeds == 0.0])),
        meta={"particles": ens.particle_count, "blocks": nb, "seed": ens.rng_seed, "horizon": horizon},
    )


def simulate(f_in, n, seed, horizon, tally_bin, block_size=BLOCK_SIZE, **kw):
    return evolve(sample_initial(f_in, n, seed, block_size), horizon, tally_bin, **kw)


# -- comparisons -------------------------------------------------------------------


def renewal_bin_means(sol, tally, nodes=8):
    """Bin averages of the renewal ``mu`` on the tally's bins."""
    from .quadrature import gauss_legendre

    e = tally.bin_edges
    hi = np.minimum(e[1:], sol.horizon)
    x, w = gauss_legendre(e[:-1], hi, nodes)
    return np.sum(w * sol.at(x), axis=-1) / (hi - e[:-1])


@dataclass(frozen=True)
class Agreement:
    z_scores: np.ndarray
    fraction_within: float
    max_abs_z: float
    threshold: float = 3.0

    def passed(self, required=0.95):
        return self.fraction_within >= required


def compare_with_renewal(tally, sol, threshold=3.0):
    """Per-bin ``(mu_hat - mu) / stderr`` against the renewal solution."""
    ref = renewal_bin_means(sol, tally)
    diff = tally.counts - ref
    # bins no particle can reach yet carry no variance: exact agreement there scores 0
    silent = tally.stderr == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(silent, np.where(np.abs(diff) <= 1e-12 * np.abs(ref).max(initial=0.0), 0.0, np.inf),
                     diff / np.where(silent, 1.0, tally.stderr))
    within = np.abs(z) <= threshold
    return Agreement(z, float(np.mean(within)), float(np.max(np.abs(z))), threshold)


def interval_expectation(tally, cdf):
    """Expected interval counts per bin under a law with distribution ``cdf``."""
    return tally.interval_total * np.diff(cdf(tally.interval_edges))


def compare_intervals(tally, cdf, threshold=3.0):
    """Binomial z-scores of the crossing-interval histogram against ``cdf``."""
    p = np.diff(cdf(tally.interval_edges))
    n = tally.interval_total
    exp = n * p
    z = (tally.interval_counts - exp) / np.sqrt(n * p * (1.0 - p))
    within = np.abs(z) <= threshold
    return Agreement(z, float(np.mean(within)), float(np.max(np.abs(z))), threshold)


def grey_interval_cdf(s):
    """Distribution of reemission chord lengths at unit speed: density ``s/2`` on ``(0, 2]``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 2.0)
    return 0.25 * s * s


def equilibrium_flux(f_in):
    """``mu`` at equilibrium for data of the given mass: ``mass / |Omega| * (2 pi)^{-1/2}``."""
    from .geometry import BALL_VOLUME

    mass = f_in.exact_mass() if hasattr(f_in, "exact_mass") else f_in.total_mass()
    return mass / BALL_VOLUME * MAXWELL_NORM * 2.0 * math.pi


__all__ = [
    "ParticleEnsemble", "FluxTally", "Agreement", "sample_initial", "diffuse_resample", "evolve",
    "simulate", "compare_with_renewal", "compare_intervals", "grey_interval_cdf", "renewal_bin_means",
    "equilibrium_flux",
]
