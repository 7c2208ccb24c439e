import math

import numpy as np
import pytest

import singrid as sg
from singrid.profiles import LOGLOG_KNEE, ProbeConfig


# --- the reciprocal profile ---------------------------------------------------

def test_sigma1_values(sigma1):
    assert sigma1(0.5) == 2.0
    assert sigma1(0.0) == 1.0
    assert sigma1(2.0) == 0.5


def test_sigma1_bound_n2(sigma1):
    ub = sg.uniform_bound(sigma1, 2)
    assert ub.value == 3.0
    assert ub.sigma_at_1 == 1.0
    assert ub.radial_integral == 1.0


def test_sigma1_bound_quadrature_cross_check(sigma1):
    # strip the closed form so the bound is forced through quadrature
    bare = sg.SigmaProfile(name="sigma1-bare", fn=sigma1.fn,
                           log_at_exp=sigma1.log_at_exp)
    ub = sg.uniform_bound(bare, 2)
    assert ub.value == pytest.approx(3.0, abs=1e-10)
    assert "quadrature" in ub.provenance


def test_sigma1_bound_n3(sigma1):
    assert sg.uniform_bound(sigma1, 3).value == pytest.approx(2.5, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_constant_profile_bound(n):
    ub = sg.uniform_bound(sg.constant_profile(1.0), n)
    assert ub.value == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sigma1_radial_quadrature_matches_closed_form(sigma1, n):
    res = sg.radial_quadrature(sigma1, n, tol=1e-10)
    assert res.verdict == "converged"
    assert res.value == pytest.approx(1.0 / (n - 1), abs=1e-10)
    assert res.abs_error_estimate <= 1e-10 * res.value * 10


# --- the double-log profile ----------------------------------------------------

def test_loglog_knee_value(loglog2):
    assert loglog2(LOGLOG_KNEE) == pytest.approx(4 * math.exp(2 * math.e - 1),
                                                 rel=1e-14)
    assert loglog2(0.0) == pytest.approx(4 * math.exp(2 * math.e - 1), rel=1e-14)
    assert loglog2(1.0) == loglog2(LOGLOG_KNEE)


def test_loglog_continuous_at_knee(loglog2):
    left = loglog2(LOGLOG_KNEE * (1 - 1e-12))
    right = loglog2(LOGLOG_KNEE * (1 + 1e-12))
    assert abs(left - right) / right < 1e-9


def test_loglog_dominates_quarter_reciprocal(loglog2):
    # sigma(rho) >= 1/(4 rho) strictly below the knee
    rho = np.geomspace(1e-12, LOGLOG_KNEE * 0.999, 400)
    assert np.all(loglog2.fn(rho) >= 1.0 / (4.0 * rho))
    assert loglog2(1e-3) >= 1.0 / (4.0 * 1e-3)


def test_loglog_closed_form_partial_integrals(loglog2):
    # hard-integrand oracle pair: quadrature vs the closed form
    for j in (5, 10, 20, 30, 40):
        eps = 2.0 ** -j
        res = sg.radial_quadrature(loglog2, 2, lower=eps, tol=1e-10)
        assert res.value == pytest.approx(loglog2.analytic_radial(2, eps),
                                          rel=1e-12)


def test_loglog_bound_uses_closed_form(loglog2):
    ub = sg.uniform_bound(loglog2, 2)
    c = 4 * math.exp(2 * math.e - 1)
    expected = c + 2 * (c * (1 - LOGLOG_KNEE ** 2) / 2 + 4.0)
    assert ub.value == pytest.approx(expected, rel=1e-14)
    assert ub.provenance == "exact"


def test_loglog_analytic_radial_other_dim_is_none(loglog2):
    assert loglog2.analytic_radial(3, 0.0) is None


# --- log-space evaluation -------------------------------------------------------

@pytest.mark.parametrize("profile_name", ["sigma1", "loglog", "star"])
def test_log_form_matches_direct(profile_name, sigma1, loglog2):
    prof = {"sigma1": sigma1, "loglog": loglog2,
            "star": sg.transformed_profile(loglog2, sg.log_power_transform(1.0))
            }[profile_name]
    u = np.linspace(0.1, 500.0, 200)
    direct_ok = u < 170.0   # direct evaluation stays in double range here
    logs = prof.log_at_exp(u)
    direct = prof.fn(np.exp(-u[direct_ok]))
    assert np.allclose(np.exp(logs[direct_ok]), direct, rtol=1e-10)
    assert np.all(np.isfinite(logs))


def test_log_form_far_below_float_range(loglog2):
    # radius e^-2000 is unrepresentable; the log form must still work
    val = loglog2.log_at_exp(np.array([2000.0]))[0]
    expected = math.log(4) + 2 * 2000 - math.log(2000) - 2 * math.log(math.log(2000))
    assert val == pytest.approx(expected, rel=1e-12)


# --- admissibility probes --------------------------------------------------------

def test_sigma1_admissible(sigma1):
    rep = sg.admissibility_report(sigma1, 2)
    assert rep.consistent
    for verdict in (rep.continuity, rep.lower_bound, rep.divergence_at_zero,
                    rep.radial_integral):
        assert verdict.label == "consistent"


def test_loglog_admissible(loglog2):
    rep = sg.admissibility_report(loglog2, 2)
    assert rep.consistent


def test_linear_profile_violates_lower_bound_and_divergence():
    lin = sg.SigmaProfile(
        name="rho", fn=lambda r: np.maximum(r, 1e-300),
        log_at_exp=lambda u: -np.asarray(u, dtype=float))
    rep = sg.admissibility_report(lin, 2)
    assert not rep.lower_bound.ok
    assert not rep.divergence_at_zero.ok
    assert rep.continuity.ok


def test_jump_profile_flagged_discontinuous(sigma1):
    def fn(r):
        return np.where(r < 1e-3, 2.0 / np.maximum(r, 1e-300), 1.0 / np.maximum(r, 1e-300))

    jumpy = sg.SigmaProfile(
        name="jump", fn=fn,
        log_at_exp=lambda u: np.where(np.asarray(u) > math.log(1e3),
                                      math.log(2.0) + np.asarray(u, dtype=float),
                                      np.asarray(u, dtype=float)))
    rep = sg.admissibility_report(jumpy, 2)
    assert not rep.continuity.ok


def test_declared_breakpoint_skips_continuity_flag(loglog2):
    cfg = ProbeConfig(continuity_rel_tol=1e-6)
    # the knee kink is steep but declared; only the two-sided check runs there
    rep = sg.admissibility_report(loglog2, 2, cfg)
    assert rep.continuity.ok or "breakpoint" not in rep.continuity.detail


def test_reweighted_profile_fails_radial_probe(loglog2):
    star = sg.transformed_profile(loglog2, sg.log_power_transform(1.0))
    rep = sg.admissibility_report(star, 2)
    assert not rep.radial_integral.ok
    assert rep.divergence_at_zero.ok


# --- transforms -------------------------------------------------------------------

def test_identity_transform_is_identity(sigma1):
    star = sg.transformed_profile(sigma1, sg.identity_transform())
    rho = np.geomspace(1e-9, 2.0, 100)
    assert np.allclose(star.fn(rho), sigma1.fn(rho), rtol=0)


def test_log_power_transform_fixed_point_exact():
    for lam in (0.1, 1.0, 2.0, 5.0):
        f = sg.log_power_transform(lam)
        assert f(1.0) == 1.0


def test_transform_rejects_wrong_fixed_point():
    with pytest.raises(ValueError):
        sg.ProfileTransform(name="bad", fn=lambda v: v + 1.0)


def test_transform_rejects_decreasing():
    with pytest.raises(ValueError):
        sg.ProfileTransform(name="dec", fn=lambda v: 1.0 / np.maximum(v, 1e-12))


def test_power_transform_squares_profile(sigma1):
    star = sg.transformed_profile(sigma1, sg.power_transform(2.0))
    assert star(0.5) == pytest.approx(4.0, rel=1e-14)


# --- the reweighting inequality chain ----------------------------------------------

@pytest.mark.parametrize("lam", [0.1, 1.0, 2.0])
def test_reweighting_inequality_chain(loglog2, lam):
    """Sampled chain used to push the reweighted profile below by a clean
    divergent envelope, checked pointwise on (0, knee)."""
    rho = np.geomspace(1e-10, LOGLOG_KNEE * 0.999, 500)
    u = np.log(1.0 / rho)
    f = sg.log_power_transform(lam)
    sigma_vals = loglog2.fn(rho)
    assert np.all(f(sigma_vals) > np.log(1.0 / (4.0 * rho)) ** lam)
    assert np.all(np.log(1.0 / (4.0 * rho)) > (1.0 - 2.0 / math.e) * u)
    assert np.all(np.log(u) ** 2 < (4.0 / lam ** 2) * u ** lam)


def test_reweighted_profile_exceeds_divergent_envelope(loglog2):
    lam = 1.0
    star = sg.transformed_profile(loglog2, sg.log_power_transform(lam))
    rho = np.geomspace(1e-10, LOGLOG_KNEE * 0.999, 500)
    envelope = (lam ** 2 / rho) * (1.0 - 2.0 / math.e) ** lam / np.log(1.0 / rho)
    assert np.all(star.fn(rho) * rho > envelope)


# --- profile files -------------------------------------------------------------------

def test_profile_file_reciprocal_matches_builtin(sigma1):
    text = "at0: 1\npiece 0 inf : rho^-1\n"
    prof = sg.parse_profile(text)
    rho = np.geomspace(1e-9, 3.0, 50)
    assert np.allclose(prof.fn(rho), sigma1.fn(rho), rtol=1e-14)
    assert prof(0.0) == 1.0


def test_profile_file_loglog_equivalent(loglog2):
    c = 4 * math.exp(2 * math.e - 1)
    text = (f"at0: {c!r}\n"
            f"piece 0 {LOGLOG_KNEE!r} : 4 * rho^-2 * log^-1 * loglog^-2\n"
            f"piece {LOGLOG_KNEE!r} inf : {c!r}\n")
    prof = sg.parse_profile(text)
    rho = np.geomspace(1e-10, 2.0, 300)
    assert np.allclose(prof.fn(rho), loglog2.fn(rho), rtol=1e-12)
    u = np.linspace(3.0, 800.0, 50)
    assert np.allclose(prof.log_at_exp(u), loglog2.log_at_exp(u), rtol=1e-12)


def test_profile_file_rejects_gaps():
    with pytest.raises(ValueError):
        sg.parse_profile("at0: 1\npiece 0 0.5 : rho^-1\npiece 0.6 inf : 2\n")


def test_profile_file_rejects_missing_at0():
    with pytest.raises(ValueError):
        sg.parse_profile("piece 0 inf : rho^-1\n")


def test_profile_file_rejects_unknown_factor():
    with pytest.raises(ValueError):
        sg.parse_profile("at0: 1\npiece 0 inf : spam^2\n")


def test_builtin_profile_dispatch(tmp_path):
    assert sg.builtin_profile("sigma1", 2).name == "sigma1"
    assert sg.builtin_profile("loglog", 3).name == "loglog-n3"
    path = tmp_path / "p.txt"
    path.write_text("at0: 1\npiece 0 inf : rho^-1\n")
    assert sg.builtin_profile(f"file:{path}", 2)(0.5) == 2.0
    with pytest.raises(ValueError):
        sg.builtin_profile("nope", 2)
