import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from core.errors import InvalidOrderError
from lab.bessel import (
    BesselOrder,
    as_order,
    asymptotic_amplitude,
    compute_S,
    derivative_identity_residual,
    SERIES_LIMIT,
    _library_value,
    _series_value,
    envelope_bounds,
    eval_j,
    s_growth_ratio,
)

MINUS_HALF = BesselOrder(alpha=-0.5)


def test_minus_half_is_cosine_at_pi():
    assert eval_j(MINUS_HALF, math.pi) == pytest.approx(-1.0, abs=1e-13)


def test_value_at_origin_is_one():
    assert eval_j(BesselOrder(alpha=3.2), 0.0) == 1.0


def test_first_root_of_order_zero():
    assert abs(eval_j(BesselOrder(alpha=0.0), 2.404825557695773)) < 1e-10


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0, 2.5, 7.0])
@pytest.mark.parametrize("x", [40.0, 47.3, 55.0, SERIES_LIMIT - 0.01, SERIES_LIMIT, SERIES_LIMIT + 0.01])
def test_series_and_library_branches_agree_near_switch(alpha, x):
    order = BesselOrder(alpha=alpha)
    assert _series_value(order, x) == pytest.approx(_library_value(order, x), abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=120.0))
def test_minus_half_matches_cosine(x):
    assert eval_j(MINUS_HALF, x) == pytest.approx(math.cos(x), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-3, max_value=120.0))
def test_plus_half_matches_sinc(x):
    assert eval_j(BesselOrder(alpha=0.5), x) == pytest.approx(math.sin(x) / x, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-0.5, max_value=6.0), st.floats(min_value=0.0, max_value=100.0))
def test_bounded_by_one(alpha, x):
    assert abs(eval_j(BesselOrder(alpha=alpha), x)) <= 1.0 + 1e-12


def test_negative_order_rejected():
    with pytest.raises(InvalidOrderError):
        as_order(-1.0)


def test_negative_x_rejected():
    with pytest.raises(ValueError):
        eval_j(MINUS_HALF, -1.0)


def test_envelope_order_zero_at_one():
    envelope = envelope_bounds(BesselOrder(alpha=0.0), 1.0, 0)
    assert envelope.upper == pytest.approx(1.0)
    assert envelope.lower == pytest.approx(0.75)
    assert envelope.valid


def test_envelope_at_origin_is_degenerate():
    envelope = envelope_bounds(BesselOrder(alpha=2.0), 0.0, 3)
    assert envelope.lower == 1.0
    assert envelope.upper == 1.0


def test_envelope_contains_cosine():
    envelope = envelope_bounds(MINUS_HALF, 1.0, 1)
    assert envelope.lower <= math.cos(1.0) <= envelope.upper


def test_envelope_outside_range_is_not_valid():
    assert not envelope_bounds(MINUS_HALF, 3.0, 1).valid


@settings(max_examples=150, deadline=None)
@given(
    st.floats(min_value=-0.5, max_value=5.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.integers(min_value=0, max_value=6),
)
def test_envelope_contains_value(alpha, fraction, m):
    order = BesselOrder(alpha=alpha)
    x = fraction * 2.0 * math.sqrt(alpha + 1.0)
    envelope = envelope_bounds(order, x, m)
    value = eval_j(order, x)
    assert envelope.valid
    assert envelope.lower - 1e-14 <= value <= envelope.upper + 1e-14


@pytest.mark.parametrize(
    ("alpha", "x", "h", "limit"),
    [(-0.5, 1.0, 1e-5, 1e-9), (0.7, 2.3, 1e-5, 1e-8), (1.0, 1e-3, 1e-6, 1e-8)],
)
def test_derivative_identity(alpha, x, h, limit):
    assert abs(derivative_identity_residual(BesselOrder(alpha=alpha), x, h)) <= limit


def test_asymptotic_amplitude_minus_half():
    assert asymptotic_amplitude(MINUS_HALF) == pytest.approx(1.0)


def test_S_minus_half_is_one():
    assert compute_S(MINUS_HALF) == pytest.approx(1.0, abs=1e-9)


def test_S_zero_matches_independent_maximization():
    order = BesselOrder(alpha=0.0)

    def negative(x: float) -> float:
        return -math.sqrt(x) * abs(eval_j(order, x))

    best = 0.0
    for k in range(60):
        result = minimize_scalar(negative, bounds=(1.0 + k, 2.0 + k), method="bounded", options={"xatol": 1e-10})
        best = max(best, -result.fun)
    best = max(best, asymptotic_amplitude(order))
    assert compute_S(order) == pytest.approx(best, abs=1e-6)


@pytest.mark.slow
def test_S_increases_with_order():
    values = [compute_S(BesselOrder(alpha=alpha)) for alpha in (1.0, 2.0, 3.0)]
    assert values[0] < values[1] < values[2]


@pytest.mark.slow
def test_S_growth_ratio_decreases():
    ratios = [s_growth_ratio(BesselOrder(alpha=alpha)) for alpha in (2.0, 4.0, 8.0)]
    assert ratios[0] > ratios[1] > ratios[2] > 0.6
