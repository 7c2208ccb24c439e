"""Singularity profiles: positive radial weights that blow up at zero.

A profile is a function ``sigma: [0, inf) -> (0, inf)`` meant to satisfy

    (i)   continuity on (0, inf),
    (ii)  sigma >= 1 on [0, 1],
    (iii) sigma(rho) -> inf as rho -> 0+,
    (iv)  integral of sigma(rho) rho^(n-1) over (0, 1) finite.

Membership is *evidence*, checked numerically by :func:`admissibility_report`;
nothing here proves (i)-(iv).  Profiles evaluate vectorized on numpy arrays
and additionally expose ``log_at_exp(u) = log sigma(e^-u)`` so quadrature and
probes can work at radii far below floating-point range (``1/rho^n`` at
``rho = 2^-40`` and n = 8 already tops the double range; the log form never
overflows).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

E = math.e
#: below this radius the double-log profile switches to its singular branch
LOGLOG_KNEE = math.exp(-math.e)


@dataclass(frozen=True)
class SigmaProfile:
    name: str
    #: vectorized sigma(rho), rho >= 0
    fn: Callable[[np.ndarray], np.ndarray]
    #: vectorized log sigma(e^-u), u >= 0
    log_at_exp: Callable[[np.ndarray], np.ndarray]
    #: radii where the definition switches branch (continuity is probed
    #: two-sided there instead of across)
    breakpoints: tuple[float, ...] = ()
    #: optional closed form of integral_eps^1 sigma(rho) rho^(n-1) drho;
    #: returns None when it does not apply to the requested dimension
    analytic_radial: Optional[Callable[[int, float], Optional[float]]] = None

    def __call__(self, rho):
        arr = np.asarray(rho, dtype=float)
        out = self.fn(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    @property
    def at_one(self) -> float:
        return self(1.0)


def sigma_one() -> SigmaProfile:
    """The reciprocal profile: 1 at rho = 0, otherwise 1/rho."""

    def fn(rho):
        out = np.empty_like(rho)
        pos = rho > 0
        out[pos] = 1.0 / rho[pos]
        out[~pos] = 1.0
        return out

    def analytic(n, eps=0.0):
        # integrand is rho^(n-2)
        return (1.0 - eps ** (n - 1)) / (n - 1)

    return SigmaProfile(
        name="sigma1",
        fn=fn,
        log_at_exp=lambda u: np.asarray(u, dtype=float) + 0.0,
        analytic_radial=analytic,
    )


def constant_profile(c: float = 1.0, name: str | None = None) -> SigmaProfile:
    """Constant positive profile (violates the blow-up property unless used
    as a degenerate test object)."""
    if c <= 0:
        raise ValueError("profile values must be positive")
    logc = math.log(c)
    return SigmaProfile(
        name=name or f"const{c:g}",
        fn=lambda rho: np.full_like(rho, c),
        log_at_exp=lambda u: np.full_like(np.asarray(u, dtype=float), logc),
        analytic_radial=lambda n, eps=0.0: c * (1.0 - eps ** n) / n,
    )


def power_profile(s: float) -> SigmaProfile:
    """Pure power singularity rho^-s (diagnostic object for the quadrature
    divergence verdict; it is integrable against rho^(n-1) iff s < n)."""

    def fn(rho):
        out = np.empty_like(rho)
        pos = rho > 0
        with np.errstate(over="ignore"):
            out[pos] = rho[pos] ** (-s)
        out[~pos] = np.inf if s > 0 else 1.0
        return out

    return SigmaProfile(
        name=f"power{s:g}",
        fn=fn,
        log_at_exp=lambda u: s * np.asarray(u, dtype=float),
    )


def loglog_profile(n: int) -> SigmaProfile:
    """The slowly-integrable profile used for the non-integrability results.

    For 0 < rho < e^-e it equals ``(4/rho^n) / (ln(1/rho) * (ln ln(1/rho))^2)``;
    at rho = 0 and for rho >= e^-e it is the constant ``4 e^(n e - 1)``.  Both
    branches meet at the knee, so the profile is continuous on (0, inf).
    Its radial integral has the closed form used by :func:`radial integral
    <singrid.quadrature.radial_quadrature>` cross-checks:

        integral_eps^1 = C (1 - knee^n)/n + 4 (1 - 1/ln ln(1/eps)),

    for eps below the knee (the second term loses its ``1/ln ln`` tail as
    eps -> 0).  The tail decays like ``4 / ln ln(1/eps)``: the mass near zero
    is real but sits at radii no direct sampling can reach, which is exactly
    what makes this profile a stress test for every numerical route here.
    """
    if n < 2:
        raise ValueError("dimension must be >= 2")
    c = 4.0 * math.exp(n * E - 1.0)
    logc = math.log(c)
    knee = LOGLOG_KNEE
    log4 = math.log(4.0)

    def fn(rho):
        out = np.full_like(rho, c)
        sing = (rho > 0) & (rho < knee)
        if np.any(sing):
            u = np.log(1.0 / rho[sing])
            out[sing] = np.exp(log4 + n * u - np.log(u) - 2.0 * np.log(np.log(u)))
        return out

    def log_at_exp(u):
        u = np.asarray(u, dtype=float)
        out = np.full_like(u, logc)
        sing = u > E
        if np.any(sing):
            us = u[sing]
            out[sing] = log4 + n * us - np.log(us) - 2.0 * np.log(np.log(us))
        return out

    def analytic(n_req, eps=0.0):
        if n_req != n:
            return None
        if eps >= knee:
            return c * (1.0 - eps ** n) / n
        head = c * (1.0 - knee ** n) / n
        if eps == 0.0:
            return head + 4.0
        return head + 4.0 * (1.0 - 1.0 / math.log(math.log(1.0 / eps)))

    return SigmaProfile(
        name=f"loglog-n{n}",
        fn=fn,
        log_at_exp=log_at_exp,
        breakpoints=(knee,),
        analytic_radial=analytic,
    )


# ---------------------------------------------------------------------------
# transformed profiles


@dataclass(frozen=True)
class ProfileTransform:
    """A nondecreasing continuous reweighting ``F`` with ``F(1) = 1``.

    Applied to a profile it yields ``sigma*(rho) = sigma(rho) F(sigma(rho))``.
    ``log_at_log`` is the optional stable form ``log F(e^L)`` as a function of
    ``L = log sigma``; without it the transform falls back to clamping huge
    arguments at 1e300, which is fine for bounded-growth F but documented as
    a limitation for custom transforms.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    log_at_log: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        one = float(np.asarray(self.fn(np.array([1.0])))[0])
        if one != 1.0:
            raise ValueError(f"transform must satisfy F(1) = 1 exactly, got {one!r}")
        grid = np.concatenate([np.geomspace(1e-6, 1.0, 41), np.geomspace(1.0, 1e12, 41)])
        vals = np.asarray(self.fn(grid), dtype=float)
        if np.any(np.diff(vals) < -1e-12 * np.maximum(1.0, np.abs(vals[:-1]))):
            raise ValueError("transform must be nondecreasing")

    def __call__(self, v):
        arr = np.asarray(v, dtype=float)
        out = np.asarray(self.fn(np.atleast_1d(arr)), dtype=float)
        return float(out[0]) if arr.ndim == 0 else out


def identity_transform() -> ProfileTransform:
    return ProfileTransform(
        name="identity",
        fn=lambda v: np.ones_like(v),
        log_at_log=lambda L: np.zeros_like(L),
    )


def log_power_transform(lam: float) -> ProfileTransform:
    """``F(v) = [ln(e - 1 + v)]^lam``: nondecreasing, continuous, and
    ``F(1) = ln(e)^lam = 1`` exactly in IEEE arithmetic."""
    if lam <= 0:
        raise ValueError("exponent must be positive")

    def fn(v):
        return np.log(E - 1.0 + v) ** lam

    def log_at_log(L):
        L = np.asarray(L, dtype=float)
        # ln(e-1+v) = L + log1p((e-1) e^-L) for v = e^L >= 1; direct below
        big = L > 0.0
        w = np.empty_like(L)
        w[big] = L[big] + np.log1p((E - 1.0) * np.exp(-L[big]))
        w[~big] = np.log(E - 1.0 + np.exp(L[~big]))
        return lam * np.log(w)

    return ProfileTransform(name=f"logpow{lam:g}", fn=fn, log_at_log=log_at_log)


def power_transform(lam: float) -> ProfileTransform:
    """``F(v) = v^(lam-1)`` for lam > 1, so sigma F(sigma) = sigma^lam."""
    if lam <= 1:
        raise ValueError("exponent must exceed 1")
    return ProfileTransform(
        name=f"pow{lam:g}",
        fn=lambda v: v ** (lam - 1.0),
        log_at_log=lambda L: (lam - 1.0) * np.asarray(L, dtype=float),
    )


def transformed_profile(base: SigmaProfile, transform: ProfileTransform) -> SigmaProfile:
    """Pointwise product profile ``sigma(rho) * F(sigma(rho))``."""

    def fn(rho):
        s = base.fn(rho)
        with np.errstate(over="ignore"):
            return s * np.asarray(transform.fn(s), dtype=float)

    if transform.log_at_log is not None:
        def log_at_exp(u):
            L = base.log_at_exp(u)
            return L + transform.log_at_log(L)
    else:
        def log_at_exp(u):
            L = np.asarray(base.log_at_exp(u), dtype=float)
            v = np.exp(np.minimum(L, 690.0))  # clamp: custom F without log form
            return L + np.log(np.asarray(transform.fn(v), dtype=float))

    return SigmaProfile(
        name=f"{base.name}*{transform.name}",
        fn=fn,
        log_at_exp=log_at_exp,
        breakpoints=base.breakpoints,
    )


# ---------------------------------------------------------------------------
# the uniform integral-bound constant


@dataclass(frozen=True)
class UniformBound:
    """``sigma(1) + n * integral_0^1 sigma(rho) rho^(n-1) drho`` and its parts.

    This constant bounds the mean of every grid field built from the profile,
    uniformly in the grid index.
    """

    value: float
    sigma_at_1: float
    radial_integral: float
    n: int
    provenance: str

    def __post_init__(self):
        expected = self.sigma_at_1 + self.n * self.radial_integral
        if not math.isclose(self.value, expected, rel_tol=1e-12):
            raise AssertionError("inconsistent bound decomposition")


def uniform_bound(profile: SigmaProfile, n: int, tol: float = 1e-8) -> UniformBound:
    """Compute the bound constant, preferring a declared closed form and
    falling back to adaptive quadrature (raises if that diverges)."""
    from .quadrature import radial_quadrature  # local import to avoid a cycle

    radial = None
    provenance = "exact"
    if profile.analytic_radial is not None:
        radial = profile.analytic_radial(n, 0.0)
    if radial is None:
        res = radial_quadrature(profile, n, tol=tol)
        radial = res.value
        provenance = f"quadrature(tol={tol:g})"
    s1 = profile.at_one
    return UniformBound(
        value=s1 + n * radial,
        sigma_at_1=s1,
        radial_integral=radial,
        n=n,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# numerical admissibility probes


@dataclass(frozen=True)
class ProbeConfig:
    """Sampling plan for the admissibility probes."""

    rho_min_exp: int = 40          # probe radii down to 2^-40
    rho_max: float = 2.0
    grid_points: int = 4096        # log-spaced continuity/lower-bound grid
    continuity_rel_tol: float = 0.10
    breakpoint_rel_tol: float = 1e-9
    bound_ladder: tuple[float, ...] = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
    quad_tol: float = 1e-8
    max_panels: int = 4096


@dataclass(frozen=True)
class Verdict:
    ok: bool
    detail: str

    @property
    def label(self) -> str:
        return "consistent" if self.ok else "violated"


@dataclass(frozen=True)
class AdmissibilityReport:
    """Numerical evidence for the four profile properties.  Every verdict is
    sampled evidence, never proof; the probe parameters ride along."""

    profile: str
    n: int
    continuity: Verdict
    lower_bound: Verdict
    divergence_at_zero: Verdict
    radial_integral: Verdict
    probe: ProbeConfig

    @property
    def consistent(self) -> bool:
        return (self.continuity.ok and self.lower_bound.ok
                and self.divergence_at_zero.ok and self.radial_integral.ok)


def _continuity_probe(profile, cfg: ProbeConfig) -> Verdict:
    rho = np.geomspace(2.0 ** -cfg.rho_min_exp, cfg.rho_max, cfg.grid_points)
    vals = profile(rho)
    scale = np.maximum.reduce([np.abs(vals[:-1]), np.abs(vals[1:]),
                               np.ones(len(vals) - 1)])
    jumps = np.abs(np.diff(vals)) / scale
    # pairs straddling a declared breakpoint are checked two-sided instead
    straddle = np.zeros(len(jumps), dtype=bool)
    for bp in profile.breakpoints:
        straddle |= (rho[:-1] <= bp) & (rho[1:] >= bp)
    worst = float(jumps[~straddle].max()) if np.any(~straddle) else 0.0
    if worst > cfg.continuity_rel_tol:
        i = int(np.argmax(np.where(straddle, -1.0, jumps)))
        return Verdict(False, f"relative jump {worst:.3g} near rho={rho[i]:.6g}")
    for bp in profile.breakpoints:
        left = profile(bp * (1.0 - 1e-9))
        right = profile(bp * (1.0 + 1e-9))
        gap = abs(left - right) / max(abs(left), abs(right), 1.0)
        if gap > cfg.breakpoint_rel_tol:
            return Verdict(False, f"two-sided mismatch {gap:.3g} at breakpoint {bp:g}")
    return Verdict(True, f"max relative jump {worst:.3g} over {cfg.grid_points} samples")


def _lower_bound_probe(profile, cfg: ProbeConfig) -> Verdict:
    rho = np.concatenate([[0.0], np.geomspace(2.0 ** -cfg.rho_min_exp, 1.0, 512),
                          np.linspace(0.0, 1.0, 257)[1:]])
    vals = profile(rho)
    bad = vals < 1.0
    if np.any(bad):
        i = int(np.argmax(bad))
        return Verdict(False, f"sigma({rho[i]:.6g}) = {vals[i]:.6g} < 1")
    return Verdict(True, f"sigma >= 1 at {len(rho)} samples of [0, 1]")


def _divergence_probe(profile, cfg: ProbeConfig) -> Verdict:
    j = np.arange(0, cfg.rho_min_exp + 1, dtype=float)
    logs = profile.log_at_exp(j * math.log(2.0))  # log sigma(2^-j)
    tail_min = np.minimum.accumulate(logs[::-1])[::-1]  # min over j' >= j
    for bound in cfg.bound_ladder:
        if not np.any(tail_min > math.log(bound)):
            return Verdict(False, f"sigma(2^-j) never settles above {bound:g} "
                                  f"for j <= {cfg.rho_min_exp}")
    return Verdict(True, f"exceeds {cfg.bound_ladder[-1]:g} from 2^-j ladder, "
                         f"depth {cfg.rho_min_exp}")


def _radial_probe(profile, n, cfg: ProbeConfig) -> Verdict:
    from .quadrature import radial_quadrature

    if profile.analytic_radial is not None:
        val = profile.analytic_radial(n, 0.0)
        if val is not None and math.isfinite(val):
            return Verdict(True, f"closed form {val:.6g}")
    res = radial_quadrature(profile, n, tol=cfg.quad_tol,
                            max_panels=cfg.max_panels, on_inconclusive="return")
    if res.verdict == "converged":
        return Verdict(True, f"quadrature {res.value:.6g} +- {res.abs_error_estimate:.2g}")
    if res.verdict == "divergent":
        return Verdict(False, "radial integral divergent (dyadic block sums grow)")
    # inconclusive: accept a decreasing block-sum trend as convergence evidence
    blocks = res.block_sums
    if len(blocks) >= 5 and all(b2 < b1 for b1, b2 in zip(blocks[-5:], blocks[-4:])):
        return Verdict(True, f"block sums decreasing (last {blocks[-1]:.3g}); "
                             f"partial value {res.value:.6g}, tail unresolved")
    return Verdict(False, "no convergence or divergence evidence at panel limit")


def admissibility_report(profile: SigmaProfile, n: int,
                         probe: ProbeConfig = ProbeConfig()) -> AdmissibilityReport:
    """Run the four numerical probes against a profile."""
    return AdmissibilityReport(
        profile=profile.name,
        n=n,
        continuity=_continuity_probe(profile, probe),
        lower_bound=_lower_bound_probe(profile, probe),
        divergence_at_zero=_divergence_probe(profile, probe),
        radial_integral=_radial_probe(profile, n, probe),
        probe=probe,
    )


# ---------------------------------------------------------------------------
# profile files

# A profile file lists half-open pieces covering (0, inf) plus the value at 0:
#
#     at0: 1
#     piece 0 1e-3 : 0.001 * rho^-2
#     piece 1e-3 inf : 1000
#
# Expressions are products of: a numeric literal, rho^P, log^P (= ln(1/rho)^P)
# and loglog^P (= (ln ln(1/rho))^P), with float exponents.


@dataclass(frozen=True)
class _Piece:
    lo: float
    hi: float
    coef: float
    p_rho: float
    p_log: float
    p_loglog: float


def _parse_expr(expr: str) -> tuple[float, float, float, float]:
    coef, p_rho, p_log, p_loglog = 1.0, 0.0, 0.0, 0.0
    for token in expr.split("*"):
        token = token.strip()
        if not token:
            raise ValueError("empty factor in profile expression")
        base, _, exp = token.partition("^")
        base = base.strip()
        power = float(exp) if exp else 1.0
        if base == "rho":
            p_rho += power
        elif base == "log":
            p_log += power
        elif base == "loglog":
            p_loglog += power
        elif base == "e":
            coef *= E ** power
        else:
            coef *= float(base) ** power
    if coef <= 0:
        raise ValueError("profile expressions must be positive")
    return coef, p_rho, p_log, p_loglog


def parse_profile(text: str, name: str = "file") -> SigmaProfile:
    at0 = None
    pieces: list[_Piece] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("at0"):
            at0 = float(line.split(":", 1)[1])
            continue
        if not line.lower().startswith("piece"):
            raise ValueError(f"unrecognized profile line: {raw!r}")
        head, _, expr = line.partition(":")
        parts = head.split()
        if len(parts) != 3:
            raise ValueError(f"piece needs 'piece LO HI : EXPR', got {raw!r}")
        lo, hi = float(parts[1]), float(parts[2])
        coef, p_rho, p_log, p_loglog = _parse_expr(expr)
        pieces.append(_Piece(lo, hi, coef, p_rho, p_log, p_loglog))
    if at0 is None or not pieces:
        raise ValueError("profile file needs an at0 line and at least one piece")
    pieces.sort(key=lambda p: p.lo)
    if pieces[0].lo != 0.0 or not math.isinf(pieces[-1].hi):
        raise ValueError("pieces must cover (0, inf)")
    for a, b in zip(pieces, pieces[1:]):
        if a.hi != b.lo:
            raise ValueError("pieces must abut without gaps or overlaps")

    def piece_values(p: _Piece, rho):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            logv = math.log(p.coef) + p.p_rho * np.log(rho)
            if p.p_log or p.p_loglog:
                u = np.log(1.0 / rho)
                logv = logv + p.p_log * np.log(u)
                if p.p_loglog:
                    logv = logv + p.p_loglog * np.log(np.log(u))
            return np.exp(logv)

    def fn(rho):
        out = np.empty_like(rho)
        zero = rho == 0.0
        out[zero] = at0
        for p in pieces:
            sel = (rho > 0.0) & (rho >= p.lo if p.lo > 0 else rho > 0.0) & (rho < p.hi)
            if np.any(sel):
                out[sel] = piece_values(p, rho[sel])
        return out

    def log_at_exp(u):
        u = np.asarray(u, dtype=float)
        rho = np.exp(-u)
        out = np.empty_like(u)
        for p in pieces:
            sel = (rho >= p.lo if p.lo > 0 else np.ones_like(u, bool)) & (rho < p.hi)
            if not np.any(sel):
                continue
            logv = math.log(p.coef) - p.p_rho * u[sel]
            if p.p_log or p.p_loglog:
                with np.errstate(divide="ignore", invalid="ignore"):
                    logv = logv + p.p_log * np.log(u[sel])
                    if p.p_loglog:
                        logv = logv + p.p_loglog * np.log(np.log(u[sel]))
            out[sel] = logv
        return out

    # probe for non-finite values before returning the profile
    sample = np.geomspace(1e-12, 10.0, 200)
    probe_vals = fn(sample)
    if not np.all(np.isfinite(probe_vals) & (probe_vals > 0)):
        raise ValueError("profile expression evaluates non-finite or non-positive")
    breaks = tuple(p.hi for p in pieces if math.isfinite(p.hi))
    return SigmaProfile(name=name, fn=fn, log_at_exp=log_at_exp, breakpoints=breaks)


def load_profile(path) -> SigmaProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_profile(fh.read(), name=str(path))


def builtin_profile(spec: str, n: int) -> SigmaProfile:
    """Resolve a CLI profile spec: ``sigma1``, ``loglog``, or ``file:PATH``."""
    if spec == "sigma1":
        return sigma_one()
    if spec == "loglog":
        return loglog_profile(n)
    if spec.startswith("file:"):
        return load_profile(spec[5:])
    raise ValueError(f"unknown profile spec {spec!r}")
