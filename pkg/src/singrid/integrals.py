"""Closed-form and hybrid integrals of the grid fields.

The whole-domain integral of a bump field splits exactly: the background
contributes ``sigma(1) * (meas(domain) - meas(balls))`` and each ball
contributes ``surface(n) / (2t)^n`` times the radial integral, by the polar
change of variables.  Summing and using ``surface = n * vol(unit ball)``
gives the form used here,

    sigma(1) * (measOmega - measBalls) + n * radial * measBalls,

which is bounded by ``bound.value * measOmega`` with slack
``n * radial * (measOmega - measBalls) + sigma(1) * measBalls >= 0``: the
uniform bound is an algebraic identity away, never a tolerance game.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NodeNotInSet, SingridError
from .fields import BumpField, BumpSum
from .geometry import (Box, Domain, GridNode, ball_union_measure,
                       domain_measure, rational, rational_vec,
                       unit_ball_constants, unit_ball_volume)
from .mc import DEFAULT_SEED, MeasureEstimate, sample_ball, stream
from .profiles import ProfileTransform, SigmaProfile, transformed_profile
from .quadrature import radial_integral


def field_integral(field: BumpField, tol: float = 1e-8) -> float:
    """Exact whole-domain integral of a bump field.

    Raises if the computed value exceeds the uniform bound; that cannot
    happen unless the geometry or quadrature is broken, so it is treated as
    an internal error rather than a report entry.
    """
    n = field.domain.dim
    radial, _ = radial_integral(field.profile, n, tol=tol)
    meas_omega = float(domain_measure(field.domain))
    meas_balls = ball_union_measure(field.balls(), n)
    value = field.sigma_at_1 * (meas_omega - meas_balls) + n * radial * meas_balls
    bound = (field.sigma_at_1 + n * radial) * meas_omega
    if value > bound * (1.0 + 1e-12):
        raise SingridError("uniform integral bound violated; internal inconsistency")
    return value


def ball_integral(field: BumpField, node: GridNode, tol: float = 1e-8) -> float:
    """Integral of the field over one node ball: surface/(2t)^n * radial."""
    if node.index not in field.nodes.index_set or node.t != field.t:
        raise NodeNotInSet(f"node {node.index} is not admissible on grid {field.t}")
    n = field.domain.dim
    radial, _ = radial_integral(field.profile, n, tol=tol)
    consts = unit_ball_constants(n)
    return consts.surface / (2.0 * field.t) ** n * radial


def sum_field_integral(field: BumpSum, tol: float = 1e-8) -> float:
    """Integral of the weighted stack; bounded by twice the uniform bound
    times the domain measure (the weights sum below 2)."""
    value = sum(w * field_integral(term, tol=tol)
                for w, term in zip(field.weights, field.terms))
    n = field.domain.dim
    radial, _ = radial_integral(field.profile, n, tol=tol)
    bound = 2.0 * (field.profile.at_one + n * radial) * float(domain_measure(field.domain))
    if value > bound * (1.0 + 1e-12):
        raise SingridError("stacked integral exceeds twice the uniform bound")
    return value


# ---------------------------------------------------------------------------
# cube-restricted integrals


def open_cube(center, side) -> Box:
    c = rational_vec(center)
    h = rational(side) / 2
    return Box(tuple(x - h for x in c), tuple(x + h for x in c))


@dataclass(frozen=True)
class CubeIntegral:
    """Integral of a bump field over cube ∩ domain.

    The background and the balls wholly inside the cube are exact; balls
    straddling the cube boundary are estimated by stratified sampling
    inside each ball (their total volume shrinks like a boundary layer,
    keeping the Monte Carlo part small).
    """

    value: float
    half_width: float
    exact_part: float
    mc_part: float
    region_measure: float
    inside_balls: int
    straddling_balls: int
    samples: int
    seed: int

    def contains(self, x: float) -> bool:
        return abs(x - self.value) <= self.half_width


def _cube_region_measure(cube: Box, dom: Domain) -> Fraction:
    boxes = [b for b in (cube.intersect(db) for db in dom.boxes) if b is not None]
    if not boxes:
        return Fraction(0)
    return domain_measure(Domain(tuple(boxes)))


def _classify_ball(center, radius: Fraction, cube: Box) -> str:
    """inside / outside / straddle for an open ball against an open cube."""
    inside = all(c.lo[i] <= y - radius and y + radius <= c.hi[i]
                 for i, (y, c) in enumerate(zip(center, [cube] * len(center))))
    if inside:
        return "inside"
    d2 = Fraction(0)
    for i, y in enumerate(center):
        if y < cube.lo[i]:
            d2 += (cube.lo[i] - y) ** 2
        elif y > cube.hi[i]:
            d2 += (y - cube.hi[i]) ** 2
    if d2 >= radius * radius:
        return "outside"
    return "straddle"


def cube_integral(field: BumpField, cube: Box, samples_per_ball: int = 2048,
                  seed: int = DEFAULT_SEED, tol: float = 1e-8) -> CubeIntegral:
    """Integral of the field over cube ∩ domain with an exact/MC split."""
    n = field.domain.dim
    region = float(_cube_region_measure(cube, field.domain))
    if region == 0.0:
        return CubeIntegral(0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, seed)
    radial, _ = radial_integral(field.profile, n, tol=tol)
    consts = unit_ball_constants(n)
    r = field.nodes.ball_radius
    ball_vol = unit_ball_volume(n) * float(r) ** n
    per_ball_exact = consts.surface / (2.0 * field.t) ** n * radial
    s1 = field.sigma_at_1

    exact = s1 * region
    inside = 0
    straddling = []
    for node in field.nodes.nodes:
        kind = _classify_ball(node.coords, r, cube)
        if kind == "inside":
            inside += 1
            exact += per_ball_exact - s1 * ball_vol
        elif kind == "straddle":
            straddling.append(node)

    mc_total = 0.0
    mc_var = 0.0
    used = 0
    for i, node in enumerate(straddling):
        gen = stream(seed, field.t, i)
        pts = sample_ball([float(c) for c in node.coords], float(r),
                          samples_per_ball, gen)
        lo = np.array([float(v) for v in cube.lo])
        hi = np.array([float(v) for v in cube.hi])
        in_cube = np.all((pts > lo) & (pts < hi), axis=1)
        d = np.linalg.norm(pts - np.array([float(c) for c in node.coords]), axis=1)
        vals = np.where(in_cube, field.profile.fn(2.0 * field.t * d) - s1, 0.0)
        mc_total += ball_vol * float(vals.mean())
        mc_var += (ball_vol ** 2) * float(vals.var(ddof=1)) / samples_per_ball
        used += samples_per_ball
    half = 1.96 * math.sqrt(mc_var) if used else 0.0
    return CubeIntegral(
        value=exact + mc_total,
        half_width=half,
        exact_part=exact,
        mc_part=mc_total,
        region_measure=region,
        inside_balls=inside,
        straddling_balls=len(straddling),
        samples=used,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# shell integrals


def shell_integral(profile: SigmaProfile, transform: ProfileTransform, n: int,
                   m: int, eps: float, tol: float = 1e-9) -> float:
    """Reweighted integral over the shell ``eps/(2(m+1)) < |x-y| < 1/(2(m+1))``
    around any admissible node of the first stacked grid:

        surface(n) / (2(m+1))^n * integral_eps^1 sigma*(rho) rho^(n-1) drho,

    with ``sigma* = sigma F(sigma)``.  The value is node-independent; as
    ``eps -> 0`` it grows without bound exactly when the reweighted profile
    loses integrability, which is the contradiction device behind the
    non-integrability results.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("shell parameter must lie in (0, 1)")
    star = transformed_profile(profile, transform)
    val, _ = radial_integral(star, n, lower=eps, tol=tol)
    consts = unit_ball_constants(n)
    return consts.surface / (2.0 * (m + 1)) ** n * val
