import math

import numpy as np
import pytest
from scipy.integrate import quad

from core.errors import DivergenceError, NonConvergenceError, ProfileError, UnboundedError
from lab import gallery
from lab.gm_analysis import (
    GMCertificate,
    PieceDescription,
    ProfileDescription,
    from_description,
    gm_fit_certificate,
    gm_verify,
    weighted,
)
from lab.transforms import (
    BoundVariant,
    CellRow,
    constant_factor,
    cossup_bound,
    cossup_bounds,
    default_u_grid,
    hankel_limit,
    hypotheses_hold,
    m_weight,
    partial_hankel,
    sup_ibp_integral,
    uniform_tail,
)

E_INV = math.exp(-1.0)


def _profile(name: str):
    return gallery.get(name).profile


def test_default_u_grid_starts_at_zero():
    grid = default_u_grid(1e-3, 1e3, 25)
    assert grid[0] == 0.0
    assert grid[1] == pytest.approx(1e-3)
    assert grid[-1] == pytest.approx(1e3)
    assert len(grid) == 152


def test_partial_integral_at_zero_frequency(trunc_exp):
    result = partial_hankel(trunc_exp, -0.5, 0.0, 1.0)
    assert result.value == pytest.approx(1.0 - E_INV, abs=1e-10)
    assert result.error_estimate >= 0.0


def test_partial_integral_over_empty_interval(tail_three_halves):
    assert partial_hankel(tail_three_halves, -0.5, 3.0, 0.0).value == 0.0


def test_partial_integral_matches_cosine_transform(trunc_exp):
    expected = (1.0 - E_INV * math.cos(2.0) + 2.0 * E_INV * math.sin(2.0)) / 5.0
    assert partial_hankel(trunc_exp, -0.5, 2.0, 1.0).value == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(0.364434, abs=1e-6)


def test_partial_integral_rejects_singular_origin():
    with pytest.raises(ProfileError):
        partial_hankel(_profile("pure_power(2)"), -0.5, 1.0, 1.0)


def test_cell_row_from_result(trunc_exp):
    row = CellRow.from_result(partial_hankel(trunc_exp, -0.5, 0.0, 1.0))
    assert list(row.model_dump()) == ["alpha", "u", "N", "value", "error_estimate"]


def test_limit_of_finite_support(trunc_exp):
    assert hankel_limit(trunc_exp, -0.5, 0.0) == pytest.approx(1.0 - E_INV, abs=1e-10)


def test_limit_of_zero_profile():
    assert hankel_limit(_profile("zero"), 1.5, 2.0) == 0.0


def test_limit_diverges_at_resonance():
    with pytest.raises(DivergenceError):
        hankel_limit(_profile("cos_over_sqrt"), -0.5, 1.0)


def test_limit_diverges_without_decay():
    # 裾の振幅 t^{2α+1-p-(α+1/2)} = t^1 が減衰しない
    with pytest.raises(DivergenceError):
        hankel_limit(_profile("power_tail(0.5)"), 1.0, 2.0)


@pytest.mark.slow
def test_limit_of_cos_over_sqrt_above_resonance():
    expected = math.sqrt(math.pi) / (2.0 * math.sqrt(2.0)) * (1.0 / math.sqrt(3.0) + 1.0)
    assert hankel_limit(_profile("cos_over_sqrt"), -0.5, 2.0) == pytest.approx(expected, abs=1e-6)
    assert expected == pytest.approx(0.98846, abs=1e-5)


def test_uniform_tail_beyond_support(trunc_exp):
    assert uniform_tail(trunc_exp, -0.5, [0.0, 1.0, 5.0], 1.0, 10.0) == 0.0


def test_uniform_tail_of_gm_profile_shrinks(tail_three_halves):
    grid = [0.0, 1e-3, 1e-2]
    tails = [uniform_tail(tail_three_halves, -0.5, grid, M, 2.0 * M) for M in (1e2, 1e4, 1e6)]
    assert tails[0] > tails[1] > tails[2]
    assert tails[-1] < 1e-3


def test_uniform_tail_is_worker_independent(tail_three_halves):
    grid = [0.0, 0.3, 1.0, 3.0]
    serial = uniform_tail(tail_three_halves, -0.5, grid, 1.0, 50.0)
    parallel = uniform_tail(tail_three_halves, -0.5, grid, 1.0, 50.0, workers=3)
    assert serial == parallel


def test_m_weight_of_truncated_exponential(trunc_exp):
    assert m_weight(trunc_exp, -0.5) == pytest.approx(E_INV, rel=1e-9)


def test_m_weight_of_three_halves_tail(tail_three_halves):
    assert m_weight(tail_three_halves, -0.5) == pytest.approx(1.0, rel=1e-9)


def test_m_weight_unbounded():
    with pytest.raises(UnboundedError):
        m_weight(_profile("cos_over_sqrt"), -0.5)


def test_sup_ibp_of_zero():
    assert sup_ibp_integral(_profile("zero"), 0.0) == 0.0


def test_sup_ibp_includes_jump_atom(trunc_exp):
    assert sup_ibp_integral(trunc_exp, -0.5) == pytest.approx(1.0 - E_INV, rel=1e-9)


def test_sup_ibp_of_three_halves_tail(tail_three_halves):
    assert sup_ibp_integral(tail_three_halves, -0.5) == pytest.approx(3.0, rel=1e-8)


def test_sup_ibp_requires_decay(tail_three_halves):
    with pytest.raises(NonConvergenceError):
        sup_ibp_integral(tail_three_halves, 0.0)


def test_hypotheses():
    assert hypotheses_hold(_profile("power_tail(3)"), -0.5)
    assert hypotheses_hold(_profile("trunc_exp"), 2.0)
    assert not hypotheses_hold(_profile("power_tail(1.5)"), 0.0)
    assert not hypotheses_hold(_profile("pure_power(2)"), -0.5)


@pytest.mark.parametrize("u", [0.7, 2.5, 9.0])
def test_cosine_kernel_reduction(tail_three_halves, u):
    def integrand(t: float) -> float:
        return (1.0 if t <= 1.0 else t ** -1.5) * math.cos(u * t)

    expected, _ = quad(integrand, 0.0, 3.0, points=[1.0], epsabs=1e-13, epsrel=1e-13, limit=200)
    result = partial_hankel(tail_three_halves, -0.5, u, 3.0)
    assert result.value == pytest.approx(expected, abs=1e-10)


def _described(name: str, expression: str):
    return from_description(
        ProfileDescription(name=name, pieces=[PieceDescription(start=0.0, end=1.0, expression=expression)])
    )


def test_zero_profile_is_declared_not_named():
    named_zero = _described("zero", "1")
    assert not named_zero.is_zero()
    assert hankel_limit(named_zero, -0.5, 0.5) == pytest.approx(math.sin(0.5) / 0.5, abs=1e-9)

    blank = _described("blank", "0")
    assert blank.is_zero()
    assert weighted(blank, 2.0).is_zero()
    assert hankel_limit(blank, 0.0, 2.0) == 0.0
    assert gallery.get("zero").profile.is_zero()


def test_constant_factor_for_cosine_transform():
    cert = GMCertificate(C=1.0, nu=1)
    assert constant_factor(cert, -0.5, 1.0) == pytest.approx(2.0 * 4.0 * (16.0 / 3.0 + 1.0))


def test_bound_at_zero_length():
    cert = GMCertificate(C=gallery.GM_CONSTANT, nu=1)
    reports = cossup_bounds(_profile("power_tail(3)"), -0.5, 0.0, cert, [0.0, 0.5, 1.0, 2.0])
    assert set(reports) == {BoundVariant.STATEMENT, BoundVariant.PROOF}
    for report in reports.values():
        assert report.lhs == 0.0
        assert report.term_boundary == 0.0
        assert report.passed


def test_bound_terms_for_cosine_transform():
    profile = _profile("power_tail(3)")
    cert = GMCertificate(C=gallery.GM_CONSTANT, nu=1)
    report = cossup_bounds(profile, -0.5, 4.0, cert, [0.0, 1.0])[BoundVariant.STATEMENT]
    assert report.term_boundary == pytest.approx(2.0 * 4.0 * 4.0 ** -3)
    assert report.S_used == pytest.approx(1.0, abs=1e-9)
    assert report.rhs == pytest.approx(
        report.term_partial + report.term_boundary + report.term_constant + report.term_sup_ibp
    )
    assert report.passed


@pytest.mark.slow
@pytest.mark.parametrize("N", [1.0, 10.0, 100.0])
def test_bound_holds_with_fitted_certificate(tail_three_halves, N):
    cert = gm_fit_certificate(tail_three_halves, 1, np.geomspace(1e-2, 1e3, 41))
    assert cert.passed
    reports = cossup_bounds(tail_three_halves, -0.5, N, cert, default_u_grid(1e-2, 1e2, 5))
    assert all(report.passed for report in reports.values())


def test_single_variant_matches_both_variants():
    profile = _profile("power_tail(3)")
    cert = GMCertificate(C=gallery.GM_CONSTANT, nu=1)
    u_grid = [0.0, 0.5, 1.0, 2.0]
    both = cossup_bounds(profile, -0.5, 0.0, cert, u_grid)
    proof = cossup_bound(profile, -0.5, 0.0, cert, u_grid, variant=BoundVariant.PROOF, workers=2)
    assert proof == both[BoundVariant.PROOF]


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0])
@pytest.mark.parametrize("name", ["power_tail(5)", "alternating_dyadic(5)"])
def test_bound_holds_for_every_order(name, alpha):
    entry = gallery.get(name)
    profile = entry.profile
    assert hypotheses_hold(profile, alpha)
    cert = GMCertificate(C=entry.gm_status.C, nu=entry.gm_status.nu)
    assert gm_verify(profile, cert, np.geomspace(1e-2, 1e2, 33)).passed

    reports = cossup_bounds(profile, alpha, 10.0, cert, [0.0, 0.5, 1.0, 2.0, 5.0], workers=2)
    for variant in (BoundVariant.STATEMENT, BoundVariant.PROOF):
        report = reports[variant]
        assert report.alpha == alpha
        assert report.passed, report
