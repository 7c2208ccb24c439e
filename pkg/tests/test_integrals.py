import math

import numpy as np
import pytest

import singrid as sg
from singrid.errors import NodeNotInSet


def test_field_integral_reciprocal(square, sigma1):
    field = sg.BumpField(sigma1, square, 2, m=1)
    assert sg.field_integral(field) == pytest.approx(1 + math.pi / 16, rel=1e-14)


@pytest.mark.parametrize("t", [2, 3, 7])
def test_constant_profile_integrates_to_measure(square, t):
    field = sg.BumpField(sg.constant_profile(1.0), square, t, m=1)
    assert sg.field_integral(field) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("profile_name", ["sigma1", "loglog"])
def test_uniform_bound_zero_tolerance(square, sigma1, loglog2, profile_name):
    profile = sigma1 if profile_name == "sigma1" else loglog2
    bound = sg.uniform_bound(profile, 2)
    for t in range(2, 22):
        value = sg.field_integral(sg.BumpField(profile, square, t, m=1))
        assert value <= bound.value * 1.0


def test_integral_identity_with_ball_measure(square, sigma1):
    # value == sigma(1) * (meas(domain) - meas(balls))
    #          + (bound - sigma(1)) * meas(balls), exactly
    bound = sg.uniform_bound(sigma1, 2)
    for t in (2, 5, 9):
        field = sg.BumpField(sigma1, square, t, m=1)
        g = sg.ball_union_measure(field.balls(), 2)
        expected = sigma1.at_one * (1.0 - g) + (bound.value - sigma1.at_one) * g
        assert sg.field_integral(field) == pytest.approx(expected, rel=1e-13)


def test_ball_integral_values(square, sigma1):
    field = sg.BumpField(sigma1, square, 2, m=1)
    node = field.nodes.nodes[0]
    assert sg.ball_integral(field, node) == pytest.approx(math.pi / 8, rel=1e-14)
    const = sg.BumpField(sg.constant_profile(1.0), square, 2, m=1)
    assert sg.ball_integral(const, const.nodes.nodes[0]) == pytest.approx(
        math.pi / 16, rel=1e-14)


def test_ball_integral_rejects_foreign_node(square, sigma1):
    field = sg.BumpField(sigma1, square, 2, m=1)
    with pytest.raises(NodeNotInSet):
        sg.ball_integral(field, sg.GridNode(2, (5, 5)))
    with pytest.raises(NodeNotInSet):
        sg.ball_integral(field, sg.GridNode(3, (1, 1)))


def test_ball_decomposition_reproduces_total(square, sigma1):
    field = sg.BumpField(sigma1, square, 4, m=1)
    g = sg.ball_union_measure(field.balls(), 2)
    total = sigma1.at_one * (1.0 - g) + sum(
        sg.ball_integral(field, node) for node in field.nodes.nodes)
    assert total == pytest.approx(sg.field_integral(field), rel=1e-13)


def test_stack_integral(square, sigma1):
    single = sg.BumpSum(sigma1, square, 1, m=1)
    assert sg.sum_field_integral(single) == pytest.approx(
        sg.field_integral(single.terms[0]), rel=0)
    bound = sg.uniform_bound(sigma1, 2)
    prev = 0.0
    for length in range(1, 11):
        val = sg.sum_field_integral(sg.BumpSum(sigma1, square, length, m=1))
        assert val > prev
        prev = val
    assert prev <= 2 * bound.value


# --- cube-restricted integrals -------------------------------------------------

def test_cube_covering_domain_equals_total(square, sigma1):
    field = sg.BumpField(sigma1, square, 3, m=1)
    res = sg.cube_integral(field, sg.open_cube(("1/2", "1/2"), 4))
    assert res.straddling_balls == 0
    assert res.mc_part == 0.0
    assert res.value == pytest.approx(sg.field_integral(field), rel=1e-13)


def test_cube_disjoint_is_zero(square, sigma1):
    field = sg.BumpField(sigma1, square, 3, m=1)
    res = sg.cube_integral(field, sg.open_cube((5, 5), 1))
    assert res.value == 0.0 and res.region_measure == 0.0


def test_cube_aligned_with_cells_is_exact(square, sigma1):
    # walls on cell boundaries: every ball is inside or outside, no sampling
    field = sg.BumpField(sigma1, square, 4, m=1)
    res = sg.cube_integral(field, sg.open_cube(("1/2", "1/2"), "3/4"))
    assert res.straddling_balls == 0
    assert res.half_width == 0.0
    assert res.inside_balls == 9


def test_cube_integral_against_mc_oracle(square, sigma1):
    field = sg.BumpField(sigma1, square, 5, m=1)
    cube = sg.open_cube((0.43, 0.57), 0.31)
    res = sg.cube_integral(field, cube, samples_per_ball=20_000)
    oracle = sg.mc_integrate(field, square, 400_000, cube=cube, seed=31)
    assert abs(res.value - oracle.value) <= res.half_width + oracle.half_width


def test_cube_partially_outside_domain(square, sigma1):
    field = sg.BumpField(sigma1, square, 3, m=1)
    res = sg.cube_integral(field, sg.open_cube((0, "1/2"), "1/2"))
    assert res.region_measure == pytest.approx(1 / 8, rel=0)
    assert res.value >= res.region_measure  # values are at least 1


# --- shell integrals -------------------------------------------------------------

def test_shell_reciprocal_half(square, sigma1):
    val = sg.shell_integral(sigma1, sg.identity_transform(), 2, 1, 0.5)
    assert val == pytest.approx(math.pi / 16, rel=1e-14)


def test_shell_exhausts_ball_integral(square, sigma1):
    # eps -> 0 recovers the per-ball integral of the first stacked grid
    val = sg.shell_integral(sigma1, sg.identity_transform(), 2, 1, 1e-12)
    field = sg.BumpField(sigma1, square, 2, m=1)
    per_ball = sg.ball_integral(field, field.nodes.nodes[0])
    assert val == pytest.approx(per_ball, abs=2e-12)


def test_shell_requires_valid_eps(sigma1):
    with pytest.raises(ValueError):
        sg.shell_integral(sigma1, sg.identity_transform(), 2, 1, 0.0)
    with pytest.raises(ValueError):
        sg.shell_integral(sigma1, sg.identity_transform(), 2, 1, 1.0)


def test_reweighted_shell_ladder_regression(loglog2):
    # frozen from the quadrature itself; the growth pattern is the point:
    # each deepening adds mass ~2, with no sign of flattening
    vals = [sg.shell_integral(loglog2, sg.log_power_transform(1.0), 2, 1, 2.0 ** -j)
            for j in (10, 20, 30, 40)]
    expected = [390.7627471212898, 394.3636753717959,
                396.7864589881139, 398.7532699002965]
    assert vals == pytest.approx(expected, rel=1e-9)
    increments = np.diff(vals)
    assert np.all(increments > 1.0)


def test_plain_shell_ladder_matches_closed_form(loglog2):
    # the untransformed ladder converges, but with a 4/ln ln(1/eps) tail:
    # increments at depth 40 are still ~0.045, exactly as the closed form says
    pref = 2 * math.pi / 16
    for j in (10, 20, 30, 40):
        val = sg.shell_integral(loglog2, sg.identity_transform(), 2, 1, 2.0 ** -j)
        assert val == pytest.approx(pref * loglog2.analytic_radial(2, 2.0 ** -j),
                                    rel=1e-12)
    inc = (sg.shell_integral(loglog2, sg.identity_transform(), 2, 1, 2.0 ** -40)
           - sg.shell_integral(loglog2, sg.identity_transform(), 2, 1, 2.0 ** -30))
    closed_inc = pref * (loglog2.analytic_radial(2, 2.0 ** -40)
                         - loglog2.analytic_radial(2, 2.0 ** -30))
    assert inc == pytest.approx(closed_inc, rel=1e-9)
    assert 0.04 < inc < 0.05
