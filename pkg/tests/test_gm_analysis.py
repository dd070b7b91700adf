import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from core.errors import BadBlockError, NotGMOnGridError, ProfileError
from lab import gallery
from lab.gm_analysis import (
    DecayStatus,
    GMCertificate,
    JumpAtom,
    PieceDescription,
    PowerHint,
    ProfileDescription,
    RadialProfile,
    abel_olivier_profile,
    block_stats,
    dyadic_stats,
    en_measure,
    from_description,
    gm_fit_certificate,
    gm_fit_constant,
    gm_sides,
    gm_verify,
    ibp_identity_check,
    pointwise_bound_check,
    sign_interval_search,
    step_profile,
    variation,
    weighted,
)
from lab.series import gms_sides, gms_verify


def _profile(name: str) -> RadialProfile:
    return gallery.get(name).profile


# ---------------------------------------------------------------------------
# プロファイルと変動
# ---------------------------------------------------------------------------


def test_missing_decay_hint_rejected():
    with pytest.raises(ProfileError):
        RadialProfile(name="bare", value=np.exp, derivative=np.exp)


def test_variation_of_monotone_segment():
    assert variation(_profile("monotone_exp"), 0.01, 1.0) == pytest.approx(math.exp(-0.01) - math.exp(-1.0), rel=1e-10)


def test_variation_includes_jump_atom(trunc_exp):
    assert variation(trunc_exp, 0.5, 2.0) == pytest.approx(math.exp(-0.5), rel=1e-10)


def test_variation_of_constant_piece():
    assert variation(_profile("power_tail(2)"), 0.1, 0.9) == 0.0


def test_variation_rejects_bad_interval(trunc_exp):
    with pytest.raises(ValueError):
        variation(trunc_exp, 2.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.05, max_value=5.0),
    st.floats(min_value=1.1, max_value=10.0),
    st.floats(min_value=1.1, max_value=10.0),
)
def test_variation_is_additive(a, first, second):
    profile = _profile("power_tail(2)")
    b, c = a * first, a * first * second
    whole = variation(profile, a, c)
    assert variation(profile, a, b) + variation(profile, b, c) == pytest.approx(whole, rel=1e-10, abs=1e-15)


def test_profile_from_description_matches_gallery(trunc_exp):
    description = ProfileDescription(
        name="described_exp",
        pieces=[PieceDescription(start=0.0, end=1.0, expression="exp(-t)")],
    )
    profile = from_description(description)
    assert profile.support_end == 1.0
    assert variation(profile, 0.5, 2.0) == pytest.approx(variation(trunc_exp, 0.5, 2.0), rel=1e-12)


def test_profile_from_description_rejects_garbage():
    description = ProfileDescription(name="broken", pieces=[PieceDescription(start=0.0, expression="t +* 2")])
    with pytest.raises(ProfileError):
        from_description(description)


def test_variation_rejects_undeclared_singularity():
    description = ProfileDescription(
        name="log_singular",
        pieces=[PieceDescription(start=0.0, end=2.0, expression="log(abs(t - 1.3))")],
    )
    profile = from_description(description)
    assert variation(profile, 1.5, 1.9) == pytest.approx(math.log(3.0), rel=1e-9)
    with pytest.raises(ProfileError):
        variation(profile, 1.0, 2.0)


# ---------------------------------------------------------------------------
# GM 条件
# ---------------------------------------------------------------------------


def test_lambda_must_match_nu():
    assert GMCertificate(C=1.0, nu=2).lam == 4.0
    with pytest.raises(ValidationError):
        GMCertificate.model_validate({"C": 1.0, "nu": 1, "lambda": 3.0})


def test_inverse_square_tail_sides():
    lhs, rhs = gm_sides(_profile("power_tail(2)"), 4.0, 2.0)
    assert lhs == pytest.approx(0.75 / 16.0, rel=1e-10)
    assert rhs == pytest.approx(15.0 / 8.0 / 16.0, rel=1e-10)


def test_inverse_square_tail_passes_with_unit_constant():
    cert = gm_verify(_profile("power_tail(2)"), GMCertificate(C=1.0, nu=1), np.geomspace(1.0, 1e3, 20))
    assert cert.passed
    assert len(cert.checked_points) == 20


def test_fitted_constant_of_inverse_square_tail():
    constant = gm_fit_constant(_profile("power_tail(2)"), 1, np.geomspace(2.0, 1e3, 15))
    assert constant == pytest.approx(0.4, abs=1e-6)
    assert constant <= 0.41


def test_fitted_constant_of_decreasing_profile():
    constant = gm_fit_constant(_profile("monotone_exp"), 1, np.geomspace(1e-2, 20.0, 30))
    assert 0.0 < constant <= 1.0 / math.log(2.0)


def test_zero_profile_fits_zero():
    assert gm_fit_constant(_profile("zero"), 1, [0.1, 1.0, 10.0]) == 0.0


def test_cos_over_sqrt_fails_at_witness():
    cert = gm_verify(_profile("cos_over_sqrt"), GMCertificate(C=10.0, nu=1), [1e3])
    assert not cert.passed
    assert cert.failing_points()[0].x == 1e3


def test_not_gm_on_grid_when_rhs_vanishes():
    # 値は 0 のまま跳びだけを持つ測度
    spike = RadialProfile(
        name="spike",
        value=lambda t: np.zeros_like(t),
        derivative=lambda t: np.zeros_like(t),
        breakpoints=(1.0,),
        jump_atoms=(JumpAtom(location=1.0, jump=1.0),),
        support_end=2.0,
        origin_hint=PowerHint(exponent=0.0),
    )
    with pytest.raises(NotGMOnGridError):
        gm_fit_constant(spike, 1, [0.6])


@pytest.mark.parametrize("w", [-2.0, -1.0, 1.0, 2.0])
def test_weighted_profile_keeps_finite_constant(w):
    profile = weighted(_profile("power_tail(3)"), w)
    constant = gm_fit_constant(profile, 1, np.geomspace(0.05, 50.0, 13))
    assert math.isfinite(constant)
    assert constant > 0.0


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.5, 1.0])
@pytest.mark.parametrize("name", ["power_tail(5)", "trunc_exp"])
def test_order_weight_keeps_certified_profile_gm(name, alpha):
    profile = _profile(name)
    grid = np.geomspace(0.05, 50.0, 13)
    assert gm_verify(profile, GMCertificate(C=gallery.GM_CONSTANT, nu=1), grid).passed
    cert = gm_fit_certificate(weighted(profile, 2.0 * alpha + 1.0), 1, grid)
    assert cert.passed
    assert math.isfinite(cert.C)


def test_pointwise_ratio_of_inverse_square():
    report = pointwise_bound_check(_profile("pure_power(2)"), GMCertificate(C=1.0, nu=1), [4.0])
    assert report.max_ratio == pytest.approx(8.0 / 15.0, rel=1e-9)
    assert not report.vacuous


def test_pointwise_ratio_of_zero_is_vacuous():
    report = pointwise_bound_check(_profile("zero"), GMCertificate(C=0.0, nu=1), [1.0, 2.0])
    assert report.vacuous
    assert report.max_ratio is None


# ---------------------------------------------------------------------------
# 二進ブロック
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("nu", [1, 2])
def test_inverse_square_blocks_are_good(nu):
    for stats in dyadic_stats(_profile("pure_power(2)"), nu, (1, 8)):
        assert stats.good
        assert stats.A_n == pytest.approx(2.0 ** (-2 * stats.n), rel=1e-12)
        assert stats.B_n == pytest.approx(2.0 ** (4 * nu) * stats.A_n, rel=1e-9)


def test_inverse_cube_blocks_are_bad():
    assert not any(stats.good for stats in dyadic_stats(_profile("pure_power(3)"), 1, (1, 8)))


def test_capped_inverse_cube_is_bad_from_two_nu():
    stats = dyadic_stats(_profile("power_tail(3)"), 1, (1, 8))
    assert stats[0].good
    assert not any(s.good for s in stats[1:])


def test_zero_blocks_are_good():
    for stats in dyadic_stats(_profile("zero"), 1, (0, 3)):
        assert stats.good
        assert stats.A_n == stats.B_n == 0.0


def test_en_measure_of_inverse_square():
    stats = en_measure(_profile("pure_power(2)"), 3, 1.0, 1)
    assert stats.E_threshold == pytest.approx(4.8828125e-4)
    assert stats.E_measure == pytest.approx(12.0)
    assert stats.E_bound == pytest.approx(1.0 / 32.0)
    assert stats.bound_holds


def test_en_measure_rejects_bad_block():
    with pytest.raises(BadBlockError):
        en_measure(_profile("pure_power(3)"), 3, 1.0, 1)


def test_en_measure_without_mass_has_no_claim(trunc_exp):
    stats = en_measure(trunc_exp, 3, gallery.GM_CONSTANT, 1)
    assert stats.A_n == 0.0
    assert stats.bound_holds is None


def test_sign_interval_of_positive_profile():
    witness = sign_interval_search(_profile("pure_power(2)"), 3, 1.0, 1)
    assert witness.sign == 1
    assert witness.ell == pytest.approx(4.0)
    assert witness.em == pytest.approx(16.0)
    assert witness.captured_measure >= witness.bound


def test_sign_interval_of_negative_profile():
    witness = sign_interval_search(_profile("negative_power_tail"), 3, gallery.GM_CONSTANT, 1)
    assert witness.sign == -1
    assert witness.ell == pytest.approx(4.0)
    assert witness.em == pytest.approx(16.0)


def test_sign_interval_of_alternating_profile_stays_in_one_block():
    profile = _profile("alternating_dyadic")
    assert block_stats(profile, 3, 1).good
    witness = sign_interval_search(profile, 3, gallery.GM_CONSTANT, 1)
    assert witness.sign == -1
    assert witness.ell == pytest.approx(8.0)
    assert witness.em == pytest.approx(16.0)


# ---------------------------------------------------------------------------
# 減衰と部分積分
# ---------------------------------------------------------------------------


def test_decay_of_three_halves_tail(tail_three_halves):
    result = abel_olivier_profile(tail_three_halves, [100.0])
    assert result.points[0].sup == pytest.approx(0.1, rel=1e-9)
    assert result.status == DecayStatus.DECAYING


def test_decay_beyond_support(trunc_exp):
    assert abel_olivier_profile(trunc_exp, [2.0]).points[0].sup == 0.0


def test_decay_of_cos_over_sqrt_is_unbounded():
    result = abel_olivier_profile(_profile("cos_over_sqrt"), [1.0, 10.0, 100.0, 1e3])
    assert result.status == DecayStatus.UNBOUNDED


def test_decay_profile_is_nonincreasing():
    result = abel_olivier_profile(_profile("power_tail(2)"), [0.5, 1.0, 3.0, 10.0, 30.0])
    sups = [point.sup for point in result.points]
    assert all(later <= earlier for earlier, later in zip(sups, sups[1:]))


def test_ibp_identity_with_jump(trunc_exp):
    assert ibp_identity_check(trunc_exp, 1.0, 1e-10) < 1e-10


def test_ibp_identity_of_three_halves_tail(tail_three_halves):
    assert ibp_identity_check(tail_three_halves, 1.0, 1e-8) < 1e-8


def test_ibp_identity_of_zero():
    assert ibp_identity_check(_profile("zero"), 2.0, 1e-12) == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("k", range(2, 14))
def test_step_embedding_tracks_sequence_condition(k):
    sequence = gallery.get("inverse_square").sequence
    n = 2 ** k
    gm_lhs, gm_rhs = gm_sides(step_profile(sequence), float(n), 2.0)
    gms_lhs, gms_rhs = gms_sides(sequence, n, 2)
    ratio = (gm_lhs / gm_rhs) / (gms_lhs / gms_rhs)
    assert 0.5 <= ratio <= 2.0


@pytest.mark.parametrize("name", ["cosn_over_n", "square_wave", "alternating_harmonic"])
def test_step_embedding_fails_where_sequence_fails(name):
    entry = gallery.get(name)
    status = entry.gm_status
    witness = int(status.witness)
    assert not gms_verify(entry.sequence, status.C, status.nu, [witness]).passed
    cert = gm_verify(step_profile(entry.sequence), GMCertificate(C=status.C, nu=status.nu), [float(witness)])
    assert not cert.passed


def test_step_embedding_of_zero_sequence_passes():
    sequence = gallery.get("zero_sequence").sequence
    assert gms_verify(sequence, 0.0, 1, [2, 16, 128]).passed
    assert gm_verify(step_profile(sequence), GMCertificate(C=0.0, nu=1), [2.0, 16.0, 128.0]).passed
