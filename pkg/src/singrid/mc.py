"""Seeded Monte Carlo estimation over box domains, cubes, and balls.

Randomness comes from counter-based Philox streams addressed by a seed plus
an integer path, so every estimate is reproducible from its recorded seed
and independent shards draw from non-overlapping streams.  Samples are
produced in fixed-size blocks, each block from its own stream: partitioning
work across blocks cannot change the numbers.
"""

import math
import zlib
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import Box, Domain, disjoint_cells

DEFAULT_SEED = 0xA11CE
BLOCK = 1 << 16


def stream(seed: int, *path) -> np.random.Generator:
    """Deterministic generator for (seed, path); strings hash via crc32."""
    key = tuple(p if isinstance(p, int) else zlib.crc32(str(p).encode())
                for p in path)
    seq = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class MeasureEstimate:
    """Monte Carlo value with a 95% normal-theory confidence half-width.

    ``half_width = 1.96 * sample_stddev / sqrt(samples)`` (scaled by the
    sampled volume); ``resampled`` counts draws replaced after landing on a
    flagged singular point.
    """

    value: float
    half_width: float
    samples: int
    seed: int
    resampled: int = 0

    @property
    def lower(self) -> float:
        return self.value - self.half_width

    @property
    def upper(self) -> float:
        return self.value + self.half_width

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


class CellSampler:
    """Uniform sampler over a disjoint family of boxes (volume-weighted)."""

    def __init__(self, cells: tuple[Box, ...]):
        if not cells:
            raise ValueError("nothing to sample: empty region")
        self.dim = cells[0].dim
        self.lo = np.array([[float(c) for c in b.lo] for b in cells])
        self.width = np.array([[float(s) for s in b.sides] for b in cells])
        vols = np.array([float(b.volume) for b in cells])
        self.volume = float(sum((b.volume for b in cells), Fraction(0)))
        self.cum = np.cumsum(vols / vols.sum())

    def draw(self, gen: np.random.Generator, count: int) -> np.ndarray:
        u = gen.random((count, self.dim + 1))
        idx = np.searchsorted(self.cum, u[:, 0], side="right")
        idx = np.minimum(idx, len(self.cum) - 1)
        return self.lo[idx] + u[:, 1:] * self.width[idx]


def domain_sampler(dom: Domain, cube: Box | None = None) -> CellSampler:
    """Sampler for the domain, optionally restricted to an open cube."""
    if cube is None:
        return CellSampler(disjoint_cells(dom))
    boxes = [b for b in (cube.intersect(db) for db in dom.boxes) if b is not None]
    if not boxes:
        raise ValueError("cube does not meet the domain")
    return CellSampler(disjoint_cells(Domain(tuple(boxes))))


def _as_flagged(f):
    """Normalize integrands to the (values, flags) protocol of fields."""
    if hasattr(f, "batch"):
        return f.batch

    def wrapped(pts):
        vals = np.asarray(f(pts), dtype=float)
        return vals, np.zeros(len(pts), dtype=bool)

    return wrapped


def mc_integrate(f, dom: Domain, samples: int, seed: int = DEFAULT_SEED,
                 cube: Box | None = None, path=()) -> MeasureEstimate:
    """Uniform-sampling integral of ``f`` over the domain (or cube ∩ domain).

    ``f`` is either a field (``batch`` protocol) or a plain callable on point
    arrays.  Singular-flagged draws are replaced from the same stream and
    counted; they occur only at exact lattice coincidences.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    sampler = domain_sampler(dom, cube)
    eval_f = _as_flagged(f)
    total = 0.0
    total_sq = 0.0
    resampled = 0
    done = 0
    block_index = 0
    while done < samples:
        count = min(BLOCK, samples - done)
        gen = stream(seed, *path, block_index)
        pts = sampler.draw(gen, count)
        vals, flags = eval_f(pts)
        for _ in range(4):
            if not np.any(flags):
                break
            redo = np.flatnonzero(flags)
            resampled += len(redo)
            pts[redo] = sampler.draw(gen, len(redo))
            new_vals, new_flags = eval_f(pts[redo])
            vals[redo] = new_vals
            flags = np.zeros(len(pts), dtype=bool)
            flags[redo] = new_flags
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += count
        block_index += 1
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    half = 1.96 * math.sqrt(var / samples) * sampler.volume
    return MeasureEstimate(value=mean * sampler.volume, half_width=half,
                           samples=samples, seed=seed, resampled=resampled)


def mc_measure(indicator, dom: Domain, samples: int, seed: int = DEFAULT_SEED,
               path=()) -> MeasureEstimate:
    """Measure of ``{x : indicator(x)}`` inside the domain."""

    def f(pts):
        return indicator(pts).astype(float)

    return mc_integrate(f, dom, samples, seed=seed, path=path)


def sample_ball(center, radius: float, count: int, gen: np.random.Generator,
                inner: float = 0.0) -> np.ndarray:
    """Uniform points of a ball (or shell ``inner*radius < |x-c| < radius``).

    Directions from normalized Gaussians; radii via the inverse-cdf power
    ``u^(1/n)`` restricted to the shell, which is exact for the uniform law.
    """
    center = np.asarray(center, dtype=float)
    n = len(center)
    d = gen.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = gen.random(count)
    lo = inner ** n
    r = radius * (lo + u * (1.0 - lo)) ** (1.0 / n)
    return center + d * r[:, None]
