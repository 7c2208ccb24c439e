"""Radial quadrature with an endpoint singularity at zero.

Computes ``integral_eps^1 sigma(rho) rho^(n-1) drho`` on dyadic panels
``[2^-(j+1), 2^-j]`` toward the singular endpoint, one fixed-order Gauss
rule per panel.  Everything runs in the substituted variable
``u = ln(1/rho)``, where panel j is ``[j ln 2, (j+1) ln 2]`` and the
integrand is ``exp(log sigma(e^-u) - n u)``: profiles supply the log form,
so the machinery keeps working at radii that underflow doubles.

For ``eps = 0`` the panel ladder is open-ended and ends in one of three
verdicts:

* ``converged`` — trailing panels decay geometrically and the extrapolated
  tail is below tolerance (the tail estimate is added to the value);
* ``divergent`` — the sums over dyadic *blocks* of panels (panels
  ``2^L..2^(L+1)-1``) fail to shrink and trend upward over at least
  :data:`DIVERGENCE_LEVELS` consecutive levels, i.e. the partial sums
  visibly fail the Cauchy criterion;
* ``inconclusive`` — neither fired by the panel limit.

The divergence verdict is a documented heuristic, evidence not proof (a
sufficiently slowly divergent integrand can evade any finite scan).  The
block-sum diagnostics ride along in the result for callers that want to
reason about inconclusive cases.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DivergentIntegral, InconclusiveTolerance
from .profiles import SigmaProfile

GAUSS_ORDER = 16
_NODES, _WEIGHTS = leggauss(GAUSS_ORDER)
LN2 = math.log(2.0)

#: consecutive non-shrinking dyadic-block comparisons required for the
#: divergence verdict
DIVERGENCE_LEVELS = 10
#: a single panel above this value settles divergence immediately
PANEL_BLOWUP = 1e250


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    verdict: str                      # converged | divergent | inconclusive
    panels: int
    block_sums: tuple[float, ...] = ()  # per dyadic level, diagnostics


def _panel_values(profile: SigmaProfile, n: int, u_lo: np.ndarray, u_hi: np.ndarray):
    """Gauss value on each [u_lo, u_hi] panel plus a split-halves refinement.

    Returns (refined value, |coarse - refined|) per panel; the difference is
    the per-panel error estimate, a generous bound for a rule this stiff."""

    def gauss(a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        u = mid[:, None] + half[:, None] * _NODES[None, :]
        with np.errstate(over="ignore"):  # inf panels settle divergence
            g = np.exp(profile.log_at_exp(u.ravel()) - n * u.ravel())
        return half * (g.reshape(u.shape) * _WEIGHTS[None, :]).sum(axis=1)

    coarse = gauss(u_lo, u_hi)
    mid = 0.5 * (u_lo + u_hi)
    fine = gauss(u_lo, mid) + gauss(mid, u_hi)
    return fine, np.abs(coarse - fine)


def _break_points_u(profile: SigmaProfile) -> list[float]:
    """Profile branch switches as u-coordinates, ascending.  Panels are split
    there: the rule assumes smoothness inside a panel, and a kink on an edge
    costs nothing while a kink inside one caps the attainable accuracy."""
    return sorted(math.log(1.0 / bp) for bp in profile.breakpoints
                  if 0.0 < bp < 1.0)


def _dyadic_panels(profile: SigmaProfile, n: int, js: np.ndarray,
                   breaks_u: list[float]):
    """Per-dyadic-panel values/errors, splitting any panel holding a kink."""
    u_lo = js * LN2
    u_hi = (js + 1) * LN2
    vals, errs = _panel_values(profile, n, u_lo, u_hi)
    for bu in breaks_u:
        inside = np.flatnonzero((u_lo < bu) & (bu < u_hi))
        for i in inside:
            parts_lo = np.array([u_lo[i], bu])
            parts_hi = np.array([bu, u_hi[i]])
            v, e = _panel_values(profile, n, parts_lo, parts_hi)
            vals[i] = v.sum()
            errs[i] = e.sum()
    return vals, errs


def radial_quadrature(profile: SigmaProfile, n: int, lower: float = 0.0,
                      tol: float = 1e-8, max_panels: int = 16384,
                      on_inconclusive: str = "raise") -> QuadratureResult:
    """Integrate ``sigma(rho) rho^(n-1)`` over ``(lower, 1)``.

    ``tol`` is relative.  With ``lower > 0`` the panel set is finite and the
    result is a plain converged value.  With ``lower = 0`` the ladder runs
    until the convergence or divergence criterion fires; if neither does by
    ``max_panels``, an :class:`InconclusiveTolerance` is raised unless
    ``on_inconclusive="return"``.
    """
    if not 0.0 <= lower < 1.0:
        raise ValueError("lower bound must lie in [0, 1)")

    breaks_u = _break_points_u(profile)
    if lower > 0.0:
        u_max = math.log(1.0 / lower)
        edges = [j * LN2 for j in range(int(u_max / LN2) + 1)]
        if edges[-1] < u_max:
            edges.append(u_max)
        edges = sorted(set(edges) | {bu for bu in breaks_u if bu < u_max})
        lo = np.array(edges[:-1])
        hi = np.array(edges[1:])
        vals, errs = _panel_values(profile, n, lo, hi)
        value = float(vals.sum())
        err = float(errs.sum())
        verdict = "converged" if err <= tol * max(abs(value), 1e-300) else "inconclusive"
        if verdict == "inconclusive" and on_inconclusive == "raise":
            raise InconclusiveTolerance(
                f"partial radial integral error {err:.3g} above tolerance")
        return QuadratureResult(value, err, verdict, len(lo))

    chunk = 256
    panel_sums: list[float] = []
    panel_errs: list[float] = []
    total = 0.0

    def result_blocks():
        sums = np.array(panel_sums)
        blocks = []
        level = 1
        while 2 ** (level + 1) <= len(sums):
            blocks.append(float(sums[2 ** level:2 ** (level + 1)].sum()))
            level += 1
        return tuple(blocks)

    for start in range(0, max_panels, chunk):
        js = np.arange(start, min(start + chunk, max_panels), dtype=float)
        vals, errs = _dyadic_panels(profile, n, js, breaks_u)
        for v, e in zip(vals, errs):
            if not math.isfinite(v) or v > PANEL_BLOWUP:
                return QuadratureResult(math.inf, math.inf, "divergent",
                                        len(panel_sums) + 1, result_blocks())
            panel_sums.append(float(v))
            panel_errs.append(float(e))
            total += float(v)
            # geometric-tail convergence test on the trailing three panels
            if len(panel_sums) >= 4:
                p = panel_sums[-3:]
                scale = tol * max(abs(total), 1e-300)
                if max(p) < 0.25 * scale and p[-2] > 0 and p[-1] / p[-2] < 0.9:
                    r = p[-1] / p[-2]
                    tail = p[-1] * r / (1.0 - r)
                    if tail <= 0.5 * scale:
                        value = total + tail
                        err = sum(panel_errs) + tail
                        return QuadratureResult(value, err, "converged",
                                                len(panel_sums))

    blocks = result_blocks()
    comparisons = [b2 >= 0.98 * b1 for b1, b2 in zip(blocks, blocks[1:])]
    trailing = 0
    for ok in reversed(comparisons):
        if not ok:
            break
        trailing += 1
    if trailing >= DIVERGENCE_LEVELS and blocks[-1] > max(tol, 1e-12):
        return QuadratureResult(math.inf, math.inf, "divergent",
                                len(panel_sums), blocks)
    res = QuadratureResult(total, math.inf, "inconclusive", len(panel_sums), blocks)
    if on_inconclusive == "raise":
        raise InconclusiveTolerance(
            f"no verdict after {len(panel_sums)} dyadic panels "
            f"(last block sum {blocks[-1]:.3g})")
    return res


def radial_integral(profile: SigmaProfile, n: int, lower: float = 0.0,
                    tol: float = 1e-8) -> tuple[float, str]:
    """Radial integral value with provenance, preferring a closed form.

    Raises :class:`DivergentIntegral` when quadrature reaches a divergence
    verdict, and propagates :class:`InconclusiveTolerance` when it cannot
    decide (profiles with closed forms never reach quadrature).
    """
    if profile.analytic_radial is not None:
        val = profile.analytic_radial(n, lower)
        if val is not None:
            return val, "exact"
    res = radial_quadrature(profile, n, lower=lower, tol=tol)
    if res.verdict == "divergent":
        raise DivergentIntegral(f"radial integral of {profile.name} diverges")
    return res.value, f"quadrature(tol={tol:g})"
