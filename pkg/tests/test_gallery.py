import math

import pytest

from core import settings
from core.errors import NotGMOnGridError, UnknownEntryError, WitnessNotFoundError
from lab import gallery
from lab.gallery import GalleryEntry, GMKind, GMStatus


def test_names_are_sorted_and_complete():
    names = gallery.names()
    assert names == sorted(names)
    for expected in ("cos_over_sqrt", "trunc_exp", "power_tail(1.5)", "pure_power(3)", "alternating_dyadic",
                     "zero", "cosn_over_n", "square_wave", "zero_sequence"):
        assert expected in names


def test_catalog_entries_have_one_kind():
    for entry in gallery.load_catalog().values():
        assert (entry.profile is None) != (entry.sequence is None)


def test_family_lookup_accepts_fractions():
    entry = gallery.get("power_tail(3/2)")
    assert entry.name == "power_tail(1.5)"
    assert entry.profile.decay_hint.exponent == 1.5


def test_family_lookup_builds_new_members():
    entry = gallery.get("pure_power(5/2)")
    assert entry.closed_form_transform.alpha == 1.5


@pytest.mark.parametrize("name", ["nope", "power_tail(-1)", "power_tail(1/0)", "power_tail(abc)", "unknown_family(2)"])
def test_unknown_names(name):
    with pytest.raises(UnknownEntryError):
        gallery.get(name)


def test_power_transform_reduces_to_fresnel():
    formula = gallery.power_transform(-0.5, 0.5)
    for u in (0.5, 1.0, 2.0):
        assert formula(u) == pytest.approx(math.sqrt(math.pi / (2.0 * u)), rel=1e-12)


def test_power_transform_outside_validity():
    with pytest.raises(ValueError):
        gallery.power_transform(-0.5, 2.0)


def test_cos_over_sqrt_transform_domain():
    closed = gallery.get("cos_over_sqrt").closed_form_transform
    assert not closed.domain(1.0)
    assert closed.domain(2.0)
    expected = math.sqrt(math.pi) / (2.0 * math.sqrt(2.0)) * (1.0 / math.sqrt(3.0) + 1.0)
    assert closed.formula(2.0) == pytest.approx(expected)


def test_square_wave_sum():
    assert gallery.square_wave_sum(math.pi) == 1.0
    assert gallery.square_wave_sum(0.0) == 0.0
    assert gallery.square_wave_sum(math.pi / 2.0) == 0.5
    assert gallery.square_wave_sum(2.0 * math.pi + math.pi) == 1.0


def test_default_n_grid():
    grid = gallery.default_n_grid()
    assert grid[0] == 1 and grid[-1] == 10_000
    assert grid == sorted(set(grid))


@pytest.fixture
def verifying_catalog(monkeypatch: pytest.MonkeyPatch):
    """構築時の判定確認を有効にしてカタログを作り直す"""
    monkeypatch.setattr(settings, "VERIFY_GALLERY", True)
    gallery._catalog.cache_clear()
    yield
    gallery._catalog.cache_clear()


def test_catalog_verifies_every_entry_on_load(verifying_catalog, monkeypatch):
    verified = []
    monkeypatch.setattr(gallery, "verify_entry", lambda entry, grid=None: verified.append(entry.name))
    gallery.get("trunc_exp")
    assert sorted(verified) == gallery.names()


def test_mislabeled_catalog_fails_to_load(verifying_catalog, monkeypatch):
    def mislabeled():
        base = gallery.inverse_square()
        status = GMStatus(kind=GMKind.NOT_GM, C=10.0, witness=16)
        return GalleryEntry(name="mislabeled", sequence=base.sequence, gm_status=status)

    monkeypatch.setattr(gallery, "_builders", lambda: [mislabeled])
    with pytest.raises(WitnessNotFoundError):
        gallery.load_catalog()


@pytest.mark.slow
def test_catalog_statuses_hold_on_default_grids(verifying_catalog):
    assert len(gallery.load_catalog()) == len(gallery._builders())


@pytest.mark.parametrize("name", ["trunc_exp", "cos_over_sqrt", "zero", "inverse_square", "cosn_over_n",
                                  "square_wave", "alternating_harmonic", "zero_sequence"])
def test_recorded_status_is_confirmed(name):
    gallery.verify_entry(gallery.get(name))


@pytest.mark.slow
@pytest.mark.parametrize("name", ["power_tail(1.5)", "power_tail(3)", "pure_power(2)", "negative_power_tail",
                                  "monotone_exp", "alternating_dyadic"])
def test_recorded_gm_constant_holds(name):
    gallery.verify_entry(gallery.get(name))


def test_wrong_gm_label_is_caught():
    base = gallery.get("cos_over_sqrt")
    entry = GalleryEntry(name="mislabeled", profile=base.profile, gm_status=GMStatus(kind=GMKind.GM, C=1.0))
    with pytest.raises(NotGMOnGridError):
        gallery.verify_entry(entry, [1e3])


def test_wrong_witness_is_caught():
    base = gallery.get("inverse_square")
    status = GMStatus(kind=GMKind.NOT_GM, C=10.0, witness=16)
    with pytest.raises(WitnessNotFoundError):
        gallery.verify_entry(GalleryEntry(name="mislabeled", sequence=base.sequence, gm_status=status))


def test_unknown_status_is_not_checked():
    base = gallery.get("cos_over_sqrt")
    gallery.verify_entry(GalleryEntry(name="open", profile=base.profile, gm_status=GMStatus(kind=GMKind.UNKNOWN)))


@pytest.mark.parametrize("name", ["trunc_exp", "zero"])
def test_spot_checks_of_finite_entries(name):
    checks = gallery.spot_check(gallery.get(name))
    assert len(checks) == 3
    assert all(check.passed for check in checks)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["cos_over_sqrt", "pure_power(2)", "pure_power(3)", "fresnel_check", "monotone_exp"])
def test_spot_checks_of_oscillatory_tails(name):
    entry = gallery.get(name)
    checks = gallery.spot_check(entry, tol=min(1e-9, entry.closed_form_transform.tolerance / 100.0))
    assert all(check.passed for check in checks), checks


def test_spot_check_without_closed_form():
    assert gallery.spot_check(gallery.get("power_tail(2)")) == []
