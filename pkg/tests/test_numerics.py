import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import QuadratureError
from lab.numerics import (
    abs_integral,
    geometric_edges,
    integrate_panels,
    iterated_average,
    refine_supremum,
    shift_offsets,
    sign_change_edges,
    split_edges,
)


def test_integrate_polynomial_exactly():
    result = integrate_panels(lambda t: t ** 3, [0.0, 1.0, 2.0])
    assert result.value == pytest.approx(4.0, abs=1e-14)


def test_integrate_refines_oscillation():
    result = integrate_panels(np.sin, [0.0, 100.0], tol=1e-12)
    assert result.value == pytest.approx(1.0 - math.cos(100.0), abs=1e-11)
    assert result.panels > 1


def test_single_edge_is_empty():
    assert integrate_panels(np.exp, [1.0]).value == 0.0


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate_panels(lambda t: np.where(t > 0.5, np.inf, 1.0), [0.0, 1.0])


def test_panel_budget_exhausted():
    with pytest.raises(QuadratureError):
        integrate_panels(lambda t: np.sin(1.0 / t), [1e-6, 1.0], tol=1e-14, panel_budget=50)


def test_split_edges_respects_length():
    edges = split_edges(0.0, 10.0, 3.0)
    assert edges[0] == 0.0 and edges[-1] == 10.0
    assert np.max(np.diff(edges)) <= 3.0


def test_geometric_edges_are_ratios():
    edges = geometric_edges(1.0, 16.0, per_octave=2)
    assert len(edges) == 9
    assert np.allclose(edges[1:] / edges[:-1], math.sqrt(2.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=0.1, max_value=10.0), min_size=1, max_size=6))
def test_shift_weights_sum_to_one(shifts):
    offsets, weights = shift_offsets(shifts)
    assert math.fsum(weights) == pytest.approx(1.0)
    assert np.all(np.diff(offsets) > 0)
    assert offsets[0] == 0.0


def test_iterated_average_of_linear_sequence():
    assert iterated_average([0.0, 1.0, 2.0, 3.0, 4.0], 2) == pytest.approx(3.0)


def test_refine_supremum_finds_interior_peak():
    grid = np.linspace(0.0, 2.0, 11)
    value, point = refine_supremum(lambda x: 1.0 - (x - 0.73) ** 2, grid)
    assert value == pytest.approx(1.0, abs=1e-12)
    assert point == pytest.approx(0.73, abs=1e-5)


def test_sign_change_edges_adds_zero():
    edges = sign_change_edges(np.cos, np.array([0.0, 3.0]))
    assert any(abs(e - math.pi / 2) < 1e-10 for e in edges)


def test_abs_integral_of_sine():
    assert abs_integral(np.sin, [0.0, 2.0 * math.pi]) == pytest.approx(4.0, abs=1e-12)


def test_abs_integral_of_line_through_zero():
    assert abs_integral(lambda t: t - 1.3, [1.0, 2.0]) == pytest.approx(0.29, abs=1e-12)


def test_abs_integral_rejects_pole_between_nodes():
    with pytest.raises(QuadratureError):
        abs_integral(lambda t: 1.0 / (t - 1.3), [1.0, 2.0])


def test_strict_panels_reject_non_integrable_point():
    with pytest.raises(QuadratureError):
        integrate_panels(lambda t: 1.0 / np.abs(t - 0.7), [0.5, 1.0], tol=1e-8, strict=True)
