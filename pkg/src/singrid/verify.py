"""The aggregate verification battery behind the ``verify-all`` command.

Each check returns a dict with ``status`` in {"pass", "fail", "warn"}: warn
means the configured horizon cannot decide the check either way.  Two of the
coverage checks compare Monte Carlo estimates against asymptotic floors that
finite grids approach from below with a known geometric deficit (a boundary
layer of order ``1/t``); when the deficit alone already exceeds the allowed
slack at every index within the horizon, the honest verdict is "insufficient
horizon", not failure — the same guard the battery applies when asked to run
with ``t_max = 1``.  The exact finite-index ceilings ride along in the
reports so the gap is visible.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .checks import (exhaustion_estimate, exhaustion_residual,
                     majorant_violations, non_integrability_table,
                     pointwise_unboundedness_probe, shrunk_cover_measure_exact,
                     witness_unboundedness)
from .errors import SingridError
from .fields import BumpField, BumpSum
from .gamma import (check_growth_conditions, model_family,
                    sandwich_violation_search)
from .geometry import (Domain, domain_measure, enumerate_nodes,
                       minimal_grid_index, unit_ball_constants, unit_cube)
from .integrals import cube_integral, field_integral, open_cube, sum_field_integral
from .mc import DEFAULT_SEED, mc_integrate, stream
from .profiles import (SigmaProfile, log_power_transform, loglog_profile,
                       sigma_one, transformed_profile, uniform_bound)
from .quadrature import radial_quadrature


@dataclass
class VerifyConfig:
    domain: Domain
    profile: SigmaProfile
    n: int = 2
    t_max: int = 20
    s_max: int = 20
    samples: int = 200_000
    x_samples: int = 10_000
    samples_per_ball: int = 1024
    seed: int = DEFAULT_SEED
    tol: float = 1e-8
    slack_cover: float = 0.02
    slack_cube: float = 0.05
    residual_target: float = 0.02
    bound_scale: float = 1.0   # fault-injection knob for the mean-bound check


def _check(check_id, label, status, required, measured, note=""):
    return {"id": check_id, "label": label, "status": status,
            "required": required, "measured": measured, "note": note}


def _brute_force_count(dom: Domain, t: int) -> int:
    """Independent enumeration: nested loops over candidate indices with a
    direct single-box containment comparison per candidate."""
    import itertools
    bb = dom.bounding_box
    count = 0
    ranges = []
    for i in range(dom.dim):
        lo = math.ceil(t * bb.lo[i] + Fraction(1, 2))
        hi = math.floor(t * bb.hi[i] - Fraction(1, 2))
        ranges.append(range(lo, hi + 1))
    for idx in itertools.product(*ranges):
        for b in dom.boxes:
            if all(b.lo[i] <= Fraction(2 * k - 1, 2 * t)
                   and Fraction(2 * k + 1, 2 * t) <= b.hi[i]
                   for i, k in enumerate(idx)):
                count += 1
                break
    return count


def check_node_enumeration(cfg: VerifyConfig, m: int):
    mismatches = []
    is_unit = cfg.domain == unit_cube(cfg.n)
    for t in range(m + 1, m + 7):
        got = enumerate_nodes(cfg.domain, t).count
        if len(cfg.domain.boxes) == 1:
            want = _brute_force_count(cfg.domain, t)
            if got != want:
                mismatches.append((t, got, want))
        if is_unit and got != (t - 1) ** cfg.n:
            mismatches.append((t, got, (t - 1) ** cfg.n))
    status = "pass" if not mismatches else "fail"
    return _check(1, "node enumeration vs independent count", status,
                  "exact match", mismatches or "all equal")


def check_mean_bound(cfg: VerifyConfig, m: int):
    meas = float(domain_measure(cfg.domain))
    bound = uniform_bound(cfg.profile, cfg.n, tol=cfg.tol)
    ceiling = bound.value * meas * cfg.bound_scale
    failures = []
    t_top = m + min(10, max(cfg.t_max, 1))
    for t in range(m + 1, t_top + 1):
        exact = field_integral(BumpField(cfg.profile, cfg.domain, t, m=m))
        if exact > ceiling:
            failures.append({"t": t, "exact": exact, "ceiling": ceiling})
            continue
        est = mc_integrate(BumpField(cfg.profile, cfg.domain, t, m=m),
                           cfg.domain, cfg.samples, seed=cfg.seed,
                           path=("meanbound", t))
        if not est.contains(exact):
            failures.append({"t": t, "exact": exact, "mc": est.value,
                             "half_width": est.half_width})
    status = "pass" if not failures else "fail"
    note = ("" if not failures else
            "mean bound or oracle containment failed; heavy-tailed profiles "
            "carry singular mass no uniform sample reaches")
    return _check(2, "uniform mean bound and oracle containment", status,
                  f"exact <= {ceiling:.6g} and CI contains exact",
                  failures or "all contained", note)


def check_radial_agreement(cfg: VerifyConfig, m: int):
    prof = cfg.profile
    if prof.analytic_radial is None:
        return _check(3, "radial integral closed-form agreement", "warn",
                      "closed form available", "profile declares none")
    worst = 0.0
    eps_list = [0.0] if prof.analytic_radial(cfg.n, 0.0) is not None else []
    eps_list += [2.0 ** -j for j in (10, 20, 30)]
    for eps in eps_list:
        closed = prof.analytic_radial(cfg.n, eps)
        if closed is None:
            continue
        res = radial_quadrature(prof, cfg.n, lower=eps, tol=1e-10,
                                on_inconclusive="return")
        if res.verdict == "converged":
            worst = max(worst, abs(res.value - closed) / max(abs(closed), 1.0))
        elif eps > 0.0:
            return _check(3, "radial integral closed-form agreement", "fail",
                          "partial integrals converge", f"inconclusive at eps={eps:g}")
    status = "pass" if worst <= 1e-9 else "fail"
    return _check(3, "radial integral closed-form agreement", status,
                  "relative gap <= 1e-9", worst)


def check_stack_monotone(cfg: VerifyConfig, m: int):
    from .mc import domain_sampler
    sampler = domain_sampler(cfg.domain)
    pts = sampler.draw(stream(cfg.seed, "stackcheck"), cfg.x_samples)
    top = min(10, max(cfg.t_max, 2))
    stack = BumpSum(cfg.profile, cfg.domain, length=top, m=m)
    prev = None
    partial = np.zeros(len(pts))
    violations = 0
    for w, term in zip(stack.weights, stack.terms):
        vals, _ = term.batch(pts)
        partial = partial + w * vals
        if np.any(partial < 1.0):
            violations += int((partial < 1.0).sum())
        if prev is not None and not np.all(partial > prev):
            violations += int((partial <= prev).sum())
        prev = partial.copy()
    meas = float(domain_measure(cfg.domain))
    bound = uniform_bound(cfg.profile, cfg.n, tol=cfg.tol)
    norm = sum_field_integral(stack)
    norm_ok = norm <= 2.0 * bound.value * meas
    status = "pass" if violations == 0 and norm_ok else "fail"
    return _check(4, "stack lower bound, strict growth, mean ceiling", status,
                  ">= 1, strictly increasing, mean <= 2*bound*meas",
                  {"pointwise_violations": violations, "stack_mean": norm,
                   "ceiling": 2.0 * bound.value * meas})


def check_witness(cfg: VerifyConfig, m: int):
    widest = max(cfg.domain.boxes, key=lambda b: min(b.sides))
    center = tuple((a + b) / 2 for a, b in zip(widest.lo, widest.hi))
    radius = min(widest.sides) / 5
    rows = []
    ok = True
    for c in (1.0, 10.0, 100.0, 1000.0):
        rep = witness_unboundedness(cfg.profile, cfg.domain, center, radius, c,
                                    samples=cfg.x_samples, seed=cfg.seed, m=m)
        rows.append({"c": c, "l": rep.l, "delta": rep.delta,
                     "sampled_min": rep.sampled_min, "verified": rep.verified})
        ok &= rep.verified
    return _check(5, "constructive local blow-up witness", "pass" if ok else "fail",
                  "sampled min > C + 1 for every level", rows)


def check_cover_density(cfg: VerifyConfig, m: int):
    consts = unit_ball_constants(cfg.n)
    meas = float(domain_measure(cfg.domain))
    rows = []
    status = "pass"
    for k in (1, 2):
        required = consts.cube_fraction * k ** -cfg.n * meas * (1.0 - cfg.slack_cover)
        ceilings = {t: shrunk_cover_measure_exact(cfg.domain, m, k, t)
                    for t in range(1, cfg.t_max + 1)}
        typical_ci = 1.96 * 0.5 / math.sqrt(cfg.samples) * meas
        feasible = [t for t, ceil in ceilings.items()
                    if ceil - typical_ci >= required]
        if not feasible:
            gap = required - max(ceilings.values())
            rows.append({"k": k, "status": "insufficient horizon",
                         "required": required,
                         "best_exact_ceiling": max(ceilings.values()),
                         "shortfall": gap})
            if status == "pass":
                status = "warn"
            continue
        t_lo = feasible[0]
        rep = exhaustion_estimate(cfg.domain, k, range(t_lo, cfg.t_max + 1),
                                  samples=cfg.samples, seed=cfg.seed, m=m,
                                  slack=cfg.slack_cover)
        ok = rep.satisfied_from == t_lo
        rows.append({"k": k, "status": "pass" if ok else "fail",
                     "satisfied_from": rep.satisfied_from,
                     "first_feasible": t_lo, "required": required})
        if not ok:
            status = "fail"
    note = ("coverage at grid t carries an exact deficit factor "
            "|nodes|*vol(ball)/meas relative to the asymptotic floor; "
            "indices whose exact ceiling sits below the required level "
            "cannot decide the check")
    return _check(6, "shrunk-ball coverage density", status,
                  f"estimate - CI >= floor*(1 - {cfg.slack_cover})", rows, note)


def _residual_floor(dom: Domain, m: int, k: int, t_max: int) -> float | None:
    """Exact lower bound on the uncovered measure at the horizon, from the
    boundary frame no ball of any grid up to ``m + t_max`` can reach.
    Single-box domains only; None means no usable floor."""
    if len(dom.boxes) != 1:
        return None
    b = dom.boxes[0]
    inner_lo = []
    inner_hi = []
    for i in range(dom.dim):
        reach_lo = min(
            Fraction(math.ceil(tp * b.lo[i] + Fraction(1, 2)), tp)
            - Fraction(1, 2 * tp * k) - b.lo[i]
            for tp in range(m + 1, m + t_max + 1))
        reach_hi = min(
            b.hi[i] - Fraction(math.floor(tp * b.hi[i] - Fraction(1, 2)), tp)
            - Fraction(1, 2 * tp * k)
            for tp in range(m + 1, m + t_max + 1))
        inner_lo.append(max(reach_lo, 0))
        inner_hi.append(max(reach_hi, 0))
    inner = Fraction(1)
    for i in range(dom.dim):
        side = b.hi[i] - b.lo[i] - inner_lo[i] - inner_hi[i]
        inner *= max(side, 0)
    return float(b.volume - inner)


def check_cover_residual(cfg: VerifyConfig, m: int):
    meas = float(domain_measure(cfg.domain))
    required = cfg.residual_target * meas
    floor = _residual_floor(cfg.domain, m, 1, cfg.t_max)
    if floor is not None and floor >= required:
        return _check(7, "residual decay of uncovered set", "warn",
                      f"residual < {required:.4g}",
                      {"status": "insufficient horizon",
                       "never_covered_frame": floor},
                      "the boundary frame no tested grid reaches already "
                      "exceeds the target; a longer horizon is needed")
    rep = exhaustion_residual(cfg.domain, 1, cfg.t_max, samples=cfg.samples,
                              seed=cfg.seed, m=m,
                              decay_at=range(0, cfg.t_max + 1, max(1, cfg.t_max // 10)))
    monotone = all(b[1] <= a[1] for a, b in zip(rep.decay, rep.decay[1:]))
    ok = monotone and rep.final.value + rep.final.half_width < required
    return _check(7, "residual decay of uncovered set",
                  "pass" if ok else "fail", f"residual < {required:.4g}",
                  {"final": rep.final.value, "half_width": rep.final.half_width,
                   "monotone": monotone, "frame_floor": floor})


def check_pointwise_growth(cfg: VerifyConfig, m: int):
    rungs = (2.0, 5.0, 10.0, 1000.0)
    rep = pointwise_unboundedness_probe(cfg.profile, cfg.domain,
                                        min(cfg.x_samples, 20_000),
                                        cfg.t_max, rungs, seed=cfg.seed, m=m)
    monotone = all(
        all(a <= b for a, b in zip(rep.fractions[r], rep.fractions[r][1:]))
        for r in rungs)
    finals = {f"{r:g}": rep.fractions[r][-1] for r in rungs}
    return _check(8, "running-max growth fractions",
                  "pass" if monotone else "fail",
                  "fractions non-decreasing in the horizon (exact)",
                  {"final_fractions": finals, "monotone": monotone},
                  "rung fractions approach 1 only on horizons of order "
                  "rung^n; they are reported, not thresholded")


def check_cube_ceiling(cfg: VerifyConfig, m: int):
    widest = max(cfg.domain.boxes, key=lambda b: min(b.sides))
    center = tuple((a + b) / 2 for a, b in zip(widest.lo, widest.hi))
    side = min(widest.sides) / 2
    cube = open_cube(center, side)
    bound = uniform_bound(cfg.profile, cfg.n, tol=cfg.tol)
    t_lo = max(cfg.t_max // 2 + 1, 1)
    worst = None
    region = None
    for t in range(t_lo, cfg.t_max + 1):
        field = BumpField(cfg.profile, cfg.domain, m + t, m=m)
        res = cube_integral(field, cube, samples_per_ball=cfg.samples_per_ball,
                            seed=cfg.seed)
        region = res.region_measure
        if worst is None or res.value > worst[1]:
            worst = (t, res.value)
    ceiling = bound.value * region * (1.0 + cfg.slack_cube)
    ok = worst[1] <= ceiling
    return _check(9, "cube-restricted mean ceiling", "pass" if ok else "fail",
                  f"max over t in ({t_lo - 1}, {cfg.t_max}] <= {ceiling:.6g}",
                  {"max_integral": worst[1], "argmax_t": worst[0],
                   "ceiling": ceiling})


def check_reweighted_divergence(cfg: VerifyConfig, m: int):
    prof = loglog_profile(cfg.n)
    rep = non_integrability_table(prof, log_power_transform(1.0), cfg.n, m,
                                  [2.0 ** -j for j in (10, 20, 30, 40)],
                                  seed=cfg.seed)
    increasing = all(b > a for a, b in zip(rep.shell_values, rep.shell_values[1:]))
    ok = increasing and rep.radial_verdict == "divergent"
    consts = unit_ball_constants(cfg.n)
    pref = consts.surface / (2.0 * (m + 1)) ** cfg.n
    plain_gap = 0.0
    for j in (10, 20, 30, 40):
        closed = prof.analytic_radial(cfg.n, 2.0 ** -j)
        res = radial_quadrature(prof, cfg.n, lower=2.0 ** -j, tol=1e-10,
                                on_inconclusive="return")
        plain_gap = max(plain_gap, abs(res.value - closed) / closed)
    ok &= plain_gap <= 1e-9
    return _check(10, "reweighted shells diverge, plain shells converge",
                  "pass" if ok else "fail",
                  "reweighted ladder strictly increasing with divergent "
                  "verdict; plain ladder matches its closed form",
                  {"reweighted_values": [v for v in rep.shell_values],
                   "increments": [v for v in rep.increments],
                   "radial_verdict": rep.radial_verdict,
                   "plain_closed_form_gap": plain_gap,
                   "plain_tail_note": "plain ladder tail decays like "
                                      "4/ln ln(1/eps): convergent but far "
                                      "from flat at any feasible depth"})


def check_sandwich(cfg: VerifyConfig, m: int):
    family = model_family(cfg.profile, cfg.domain, p=2.0, weight_terms=5, m=m)
    growth = check_growth_conditions(family, range(1, 6), 512, 2048,
                                     seed=cfg.seed)
    probes = sandwich_violation_search(family, [1.0],
                                       range(1, min(cfg.s_max, 40) + 1),
                                       seed=cfg.seed)
    hit = probes[0].first_s is not None
    ok = growth.ok and hit
    return _check(11, "growth sandwich holds; single-weight pinching fails",
                  "pass" if ok else "fail",
                  "zero growth violations and at least one pinching witness",
                  {"convexity_violations": growth.convexity_violations,
                   "bound_violations": growth.bound_violations,
                   "pinching_first_s": probes[0].first_s,
                   "pinching_hits": len(probes[0].hits)})


def check_determinism(cfg: VerifyConfig, m: int):
    field = BumpField(cfg.profile, cfg.domain, m + 1, m=m)
    a = mc_integrate(field, cfg.domain, 10_000, seed=cfg.seed, path=("det",))
    b = mc_integrate(field, cfg.domain, 10_000, seed=cfg.seed, path=("det",))
    ok = (a.value == b.value and a.half_width == b.half_width)
    return _check(12, "seeded reruns reproduce estimates exactly",
                  "pass" if ok else "fail", "bit-identical estimates",
                  {"first": a.value, "second": b.value})


ALL_CHECKS = (
    check_node_enumeration,
    check_mean_bound,
    check_radial_agreement,
    check_stack_monotone,
    check_witness,
    check_cover_density,
    check_cover_residual,
    check_pointwise_growth,
    check_cube_ceiling,
    check_reweighted_divergence,
    check_sandwich,
    check_determinism,
)


def run_battery(cfg: VerifyConfig) -> dict:
    """Run every check in order, aggregating failures (no short-circuit)."""
    m = minimal_grid_index(cfg.domain)
    results = []
    for fn in ALL_CHECKS:
        try:
            results.append(fn(cfg, m))
        except SingridError as exc:
            results.append(_check(len(results) + 1, fn.__name__, "fail",
                                  "no error", f"{type(exc).__name__}: {exc}"))
    failed = [r["id"] for r in results if r["status"] == "fail"]
    warned = [r["id"] for r in results if r["status"] == "warn"]
    return {
        "checks": results,
        "failed": failed,
        "warnings": warned,
        "passed": not failed,
        "base_index": m,
    }
