"""Executable witnesses and statistical probes for the fields' key properties.

Everything here produces *evidence* at a finite horizon: constructive
witnesses whose inequalities are checked at sampled points, and seeded
Monte Carlo estimates of coverage, residuals, and violation densities.
Reports never promote an almost-everywhere statement to "verified"; they
record what was sampled, at which indices, with which seed.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContainmentFailure, DeltaNotFound
from .fields import BumpField, BumpSum, node_membership
from .geometry import (Box, Domain, GridNode, ball_inside_domain,
                       box_covered_by, domain_measure, enumerate_nodes,
                       minimal_grid_index, nearest_node_index, rational,
                       rational_vec, unit_ball_constants)
from .mc import DEFAULT_SEED, MeasureEstimate, domain_sampler, sample_ball, stream
from .profiles import ProfileTransform, SigmaProfile, transformed_profile
from .quadrature import radial_quadrature

PROBE_FLOOR_EXP = 40  # growth-threshold search stops at radius 2^-40


# ---------------------------------------------------------------------------
# constructive local-unboundedness witness


@dataclass(frozen=True)
class WitnessReport:
    """One run of the constructive witness.

    Given a target level C and an open ball G inside the domain, the witness
    picks the grid whose cells are finer than G, locates the node whose cell
    contains the ball center, finds a radius delta below which the profile
    exceeds ``(C+1) l^2``, and then checks that the stacked field of length l
    exceeds ``C+1`` at every sampled point of the punctured node ball of
    radius ``delta / (2(m+l))``.  Pointwise monotonicity of the stack then
    pushes the same bound to every longer stack.
    """

    target_c: float
    ball_center: tuple
    ball_radius: Fraction
    l: int
    node: GridNode
    delta: float
    region_radius: float
    sampled_min: float
    verified: bool
    samples: int
    seed: int


def _find_growth_radius(profile: SigmaProfile, threshold: float,
                        samples: int = 64) -> float:
    """Largest dyadic delta with sigma > threshold on a log grid of (0, delta).

    Halves from 1/2 down to the probe floor; each candidate is vetted at
    ``samples`` log-spaced radii spanning candidate..floor.  Evidence-based:
    the final field sampling re-checks the consequence anyway.
    """
    floor = 2.0 ** -PROBE_FLOOR_EXP
    log_thresh = math.log(threshold)
    for i in range(1, PROBE_FLOOR_EXP):
        delta = 2.0 ** -i
        u_lo = math.log(1.0 / delta)
        u_hi = PROBE_FLOOR_EXP * math.log(2.0)
        u = np.linspace(u_lo, u_hi, samples)
        if np.all(profile.log_at_exp(u) > log_thresh):
            return delta
    raise DeltaNotFound(
        f"profile does not exceed {threshold:g} above radius {floor:g}; "
        "either it lacks the blow-up property or the probe floor is too high")


def witness_unboundedness(profile: SigmaProfile, dom: Domain, ball_center,
                          ball_radius, c: float, samples: int = 10_000,
                          seed: int = DEFAULT_SEED,
                          m: int | None = None) -> WitnessReport:
    """Run the constructive witness for level ``c`` on the ball ``G``."""
    if c <= 0:
        raise ValueError("target level must be positive")
    z = rational_vec(ball_center)
    rho0 = rational(ball_radius)
    if not ball_inside_domain(z, rho0, dom):
        raise ValueError("witness ball must lie inside the domain")
    if m is None:
        m = minimal_grid_index(dom)
    n = dom.dim

    l = math.floor(Fraction(n) / rho0) + 1  # least integer with l > n / rho0
    t = m + l
    k = nearest_node_index(z, t)
    node = GridNode(t, k)

    # the node cell must sit inside G: max corner distance <= rho0, exactly
    half = Fraction(1, 2 * t)
    corner_d2 = sum((abs(zi - Fraction(ki, t)) + half) ** 2
                    for zi, ki in zip(z, k))
    if corner_d2 > rho0 * rho0:
        raise ContainmentFailure(
            "node cell escapes the witness ball; impossible when l > n/rho0")
    cell = node.cell()
    if not box_covered_by(cell.lo, cell.hi, dom.boxes):
        raise ContainmentFailure("node cell escapes the domain")

    threshold = (c + 1.0) * l * l
    delta = _find_growth_radius(profile, threshold)
    region_radius = delta / (2.0 * t)

    stack = BumpSum(profile, dom, length=l, m=m)
    gen = stream(seed, "witness", l)
    center = [float(v) for v in node.coords]
    pts = sample_ball(center, region_radius, samples, gen, inner=1e-12)
    vals, _ = stack.batch(pts)
    sampled_min = float(vals.min())
    return WitnessReport(
        target_c=c,
        ball_center=tuple(z),
        ball_radius=rho0,
        l=l,
        node=node,
        delta=delta,
        region_radius=region_radius,
        sampled_min=sampled_min,
        verified=bool(sampled_min > c + 1.0),
        samples=samples,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# coverage by shrunk node balls


def shrunk_cover_measure_exact(dom: Domain, m: int, k: int, t: int) -> float:
    """Exact measure of the shrunk ball union of grid ``m+t`` (balls of radius
    ``1/(2(m+t)k)`` are disjoint and inside the domain, so it is just count
    times ball volume)."""
    nodes = enumerate_nodes(dom, m + t)
    consts = unit_ball_constants(dom.dim)
    r = 1.0 / (2.0 * (m + t) * k)
    return nodes.count * consts.volume * r ** dom.dim


def _cover_flags(dom: Domain, m: int, k: int, t: int, pts: np.ndarray) -> np.ndarray:
    member, d2 = node_membership(dom, m + t, pts)
    r = 1.0 / (2.0 * (m + t) * k)
    return member & (d2 < r * r)


@dataclass(frozen=True)
class ExhaustionReport:
    """Per-grid Monte Carlo estimates of ``meas(region ∩ shrunk balls)``
    against the asymptotic floor ``cube_fraction * k^-n * meas(region)``.

    ``satisfied_from`` is the first index from which every later tested
    estimate clears ``floor * (1 - slack)`` by at least its half-width;
    None when the horizon never gets there (at modest indices the exact
    coverage still carries a ``(1 - 1/t)^n``-style geometric deficit, so a
    tight slack needs a long horizon).
    """

    k: int
    t_values: tuple[int, ...]
    bound: float
    slack: float
    estimates: tuple[MeasureEstimate, ...]
    satisfied_from: int | None
    seed: int


def exhaustion_estimate(dom: Domain, k: int, t_values, samples: int = 1_000_000,
                        seed: int = DEFAULT_SEED, m: int | None = None,
                        region: Domain | None = None,
                        slack: float = 0.02) -> ExhaustionReport:
    """Estimate the shrunk-ball coverage of ``region`` for each grid offset."""
    if m is None:
        m = minimal_grid_index(dom)
    if region is None:
        region = dom
    t_values = tuple(t_values)
    sampler = domain_sampler(region)
    vol = sampler.volume
    estimates = []
    for t in t_values:
        gen = stream(seed, "exhaustion", k, t)
        hits = 0
        total = 0
        while total < samples:
            count = min(1 << 17, samples - total)
            pts = sampler.draw(gen, count)
            hits += int(_cover_flags(dom, m, k, t, pts).sum())
            total += count
        p = hits / samples
        half = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / samples) * vol
        estimates.append(MeasureEstimate(value=p * vol, half_width=half,
                                         samples=samples, seed=seed))
    consts = unit_ball_constants(dom.dim)
    bound = consts.cube_fraction * k ** -dom.dim * vol
    satisfied_from = None
    level = bound * (1.0 - slack)
    for i in range(len(t_values)):
        if all(e.value - e.half_width >= level for e in estimates[i:]):
            satisfied_from = t_values[i]
            break
    return ExhaustionReport(k=k, t_values=t_values, bound=bound, slack=slack,
                            estimates=tuple(estimates),
                            satisfied_from=satisfied_from, seed=seed)


@dataclass(frozen=True)
class ResidualReport:
    """Decay of the domain part never touched by the first ``t_max`` shrunk
    ball unions.  One fixed sample set accumulates coverage over the grids,
    so the residual sequence is non-increasing per construction (exact
    set inclusion at the sample level, not a statistical artifact)."""

    k: int
    t_max: int
    decay: tuple[tuple[int, float], ...]
    final: MeasureEstimate
    seed: int


def exhaustion_residual(dom: Domain, k: int, t_max: int,
                        samples: int = 1_000_000, seed: int = DEFAULT_SEED,
                        m: int | None = None,
                        decay_at=None) -> ResidualReport:
    """Residual measure of the domain not covered by grids ``1..t_max``."""
    if m is None:
        m = minimal_grid_index(dom)
    sampler = domain_sampler(dom)
    vol = sampler.volume
    gen = stream(seed, "residual", k)
    pts = sampler.draw(gen, samples)
    covered = np.zeros(samples, dtype=bool)
    decay_at = sorted(set(decay_at or []) | {t_max})
    decay = []
    for t in range(1, t_max + 1):
        covered |= _cover_flags(dom, m, k, t, pts)
        if t in decay_at:
            decay.append((t, float((~covered).mean()) * vol))
    p = float((~covered).mean())
    half = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / samples) * vol
    final = MeasureEstimate(value=p * vol, half_width=half, samples=samples,
                            seed=seed)
    return ResidualReport(k=k, t_max=t_max, decay=tuple(decay), final=final,
                          seed=seed)


# ---------------------------------------------------------------------------
# pointwise blow-up probe and majorant search


@dataclass(frozen=True)
class ProbeTable:
    """Fractions of sampled points whose running-max field value has exceeded
    each rung by horizon T.  Rows are exact running maxima, so each rung's
    fraction is non-decreasing in T by construction."""

    rungs: tuple[float, ...]
    t_values: tuple[int, ...]
    fractions: dict
    samples: int
    seed: int


def pointwise_unboundedness_probe(profile: SigmaProfile, dom: Domain,
                                  x_samples: int, t_max: int, rungs,
                                  seed: int = DEFAULT_SEED,
                                  m: int | None = None) -> ProbeTable:
    if m is None:
        m = minimal_grid_index(dom)
    sampler = domain_sampler(dom)
    gen = stream(seed, "probe")
    pts = sampler.draw(gen, x_samples)
    rungs = tuple(rungs)
    best = np.zeros(x_samples)
    t_values = tuple(range(1, t_max + 1))
    fractions = {rung: [] for rung in rungs}
    for t in t_values:
        field = BumpField(profile, dom, m + t, m=m)
        vals, _ = field.batch(pts)
        best = np.maximum(best, vals)
        for rung in rungs:
            fractions[rung].append(float((best > rung).mean()))
    return ProbeTable(rungs=rungs, t_values=t_values,
                      fractions={r: tuple(v) for r, v in fractions.items()},
                      samples=x_samples, seed=seed)


@dataclass(frozen=True)
class MajorantReport:
    """Sampled violations of a candidate pointwise ceiling.

    Any fixed candidate must eventually be pierced somewhere; a horizon
    too short to find violations is reported as exactly that, never as
    evidence the ceiling holds."""

    t_max: int
    per_t_fraction: tuple[float, ...]
    total_fraction: float
    first_t: int | None
    examples: tuple
    samples: int
    seed: int


def majorant_violations(profile: SigmaProfile, dom: Domain, psi,
                        x_samples: int, t_max: int, seed: int = DEFAULT_SEED,
                        m: int | None = None,
                        max_examples: int = 8) -> MajorantReport:
    """Hunt for sampled points where some field exceeds the candidate ``psi``.

    ``psi`` is a plain vectorized callable on point arrays (a constant can
    be passed as ``lambda pts: np.full(len(pts), value)``).
    """
    if m is None:
        m = minimal_grid_index(dom)
    sampler = domain_sampler(dom)
    gen = stream(seed, "majorant")
    pts = sampler.draw(gen, x_samples)
    ceiling = np.asarray(psi(pts), dtype=float)
    ever = np.zeros(x_samples, dtype=bool)
    per_t = []
    first_t = None
    examples = []
    for t in range(1, t_max + 1):
        field = BumpField(profile, dom, m + t, m=m)
        vals, _ = field.batch(pts)
        hit = vals > ceiling
        per_t.append(float(hit.mean()))
        if np.any(hit):
            if first_t is None:
                first_t = t
            for i in np.flatnonzero(hit)[: max(0, max_examples - len(examples))]:
                examples.append((t, tuple(float(v) for v in pts[i]),
                                 float(vals[i]), float(ceiling[i])))
        ever |= hit
    return MajorantReport(t_max=t_max, per_t_fraction=tuple(per_t),
                          total_fraction=float(ever.mean()), first_t=first_t,
                          examples=tuple(examples), samples=x_samples,
                          seed=seed)


# ---------------------------------------------------------------------------
# integrability-failure tables


@dataclass(frozen=True)
class NonIntegrabilityReport:
    """Shell-integral ladder for a reweighted profile plus the divergence
    verdict of its radial integral, and (for power reweightings) the sampled
    domination ``(lam - 1) ln v <= v^(lam-1)`` that converts the failure of
    ``v ln v`` into failure of every higher power."""

    transform: str
    eps_ladder: tuple[float, ...]
    shell_values: tuple[float, ...]
    increments: tuple[float, ...]
    radial_verdict: str
    domination_fraction: float | None
    seed: int


def non_integrability_table(profile: SigmaProfile, transform: ProfileTransform,
                            n: int, m: int, eps_ladder,
                            dom: Domain | None = None,
                            domination_lam: float | None = None,
                            x_samples: int = 1000,
                            seed: int = DEFAULT_SEED) -> NonIntegrabilityReport:
    from .integrals import shell_integral  # local import to avoid a cycle

    eps_ladder = tuple(sorted(eps_ladder, reverse=True))
    values = tuple(shell_integral(profile, transform, n, m, eps)
                   for eps in eps_ladder)
    increments = tuple(b - a for a, b in zip(values, values[1:]))
    star = transformed_profile(profile, transform)
    res = radial_quadrature(star, n, tol=1e-8, on_inconclusive="return")
    domination = None
    if domination_lam is not None and dom is not None:
        if domination_lam <= 1.0:
            raise ValueError("domination exponent must exceed 1")
        stack = BumpSum(profile, dom, length=3, m=m)
        sampler = domain_sampler(dom)
        gen = stream(seed, "domination")
        pts = sampler.draw(gen, x_samples)
        vals, _ = stack.batch(pts)
        lam = domination_lam
        domination = float(((lam - 1.0) * np.log(vals) <= vals ** (lam - 1.0)).mean())
    return NonIntegrabilityReport(
        transform=transform.name,
        eps_ladder=eps_ladder,
        shell_values=values,
        increments=increments,
        radial_verdict=res.verdict,
        domination_fraction=domination,
        seed=seed,
    )
