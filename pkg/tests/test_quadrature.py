import math

import pytest

from hyptimes.maps import make_map
from hyptimes.quadrature import integral_log_dist, rise_pieces

CIRCLE = make_map("circle-intermittent")
DOUBLING = make_map("doubling")


def closed_moment(reach: float, p: int) -> float:
    """integral_0^U (-log u)^p du = U * sum_{k<=p} (p!/k!) (-log U)^k."""
    return reach * sum(
        math.factorial(p) / math.factorial(k) * (-math.log(reach)) ** k
        for k in range(p + 1)
    )


# -- rise-piece decomposition --------------------------------------------------


def test_circle_rise_pieces():
    pieces = rise_pieces(CIRCLE)
    assert len(pieces) == 4
    assert all(reach == 0.5 for _, _, reach in pieces)
    assert {(pt, side) for pt, side, _ in pieces} == \
        {(-1.0, 1), (-1.0, -1), (0.0, 1), (0.0, -1)}


def test_interval_rise_pieces():
    pieces = rise_pieces(make_map("quadratic(1.5)"))
    assert sorted(pieces) == [(0.0, -1, 1.0), (0.0, 1, 1.0)]


def test_empty_exceptional_set_has_no_pieces():
    assert rise_pieces(DOUBLING) == []


# -- closed-form agreement -----------------------------------------------------


@pytest.mark.parametrize("p", [1, 2, 3, 4])
@pytest.mark.parametrize("delta", [0.1, 0.5])
def test_circle_matches_closed_form(p, delta):
    res = integral_log_dist(CIRCLE, p=p, delta=delta)
    assert res.converged
    expected = 4.0 * closed_moment(min(delta, 0.5), p) / CIRCLE.period
    assert res.value == pytest.approx(expected, rel=1e-6)
    assert res.est_error <= 1e-8


def test_circle_untruncated_first_moment_is_one_plus_log_two():
    res = integral_log_dist(CIRCLE, p=1, delta=0.5)
    assert abs(res.value - (1.0 + math.log(2.0))) <= 1e-6


def test_quadratic_matches_closed_form():
    m = make_map("quadratic(1.5)")
    res = integral_log_dist(m, p=2, delta=0.1)
    assert res.converged
    expected = 2.0 * closed_moment(0.1, 2) / m.period
    assert res.value == pytest.approx(expected, rel=1e-6)


def test_moments_grow_with_p_inside_small_window():
    # on dist <= 0.1 the integrand base -log u exceeds 1, so higher powers
    # integrate to strictly larger values
    vals = [integral_log_dist(CIRCLE, p=p, delta=0.1).value for p in (1, 2, 3, 4)]
    assert vals == sorted(vals)
    assert vals[0] < vals[-1]


def test_delta_one_caps_at_piece_reach():
    full = integral_log_dist(CIRCLE, p=1, delta=1.0)
    half = integral_log_dist(CIRCLE, p=1, delta=0.5)
    assert full.value == pytest.approx(half.value, rel=1e-9)


# -- degenerate and invalid inputs ----------------------------------------------


def test_empty_exceptional_set_integral_is_zero():
    res = integral_log_dist(DOUBLING, p=3, delta=0.1)
    assert res.value == 0.0
    assert res.converged
    assert res.n_eval == 0
    assert res.levels == 0


def test_parameter_validation():
    with pytest.raises(ValueError):
        integral_log_dist(CIRCLE, p=0)
    with pytest.raises(ValueError):
        integral_log_dist(CIRCLE, p=1.5)
    with pytest.raises(ValueError):
        integral_log_dist(CIRCLE, delta=0.0)
    with pytest.raises(ValueError):
        integral_log_dist(CIRCLE, delta=1.5)
    with pytest.raises(ValueError):
        integral_log_dist(CIRCLE, tol=0.0)
    with pytest.raises(ValueError):
        integral_log_dist(CIRCLE, order=1)


def test_result_records_effort():
    res = integral_log_dist(CIRCLE, p=1, delta=0.1)
    assert res.n_eval > 0
    assert res.levels >= 8
    assert res.p == 1 and res.delta == 0.1
    d = res.to_json_dict()
    assert d["value"] == res.value and d["converged"] is True
