"""
Tests for Hilbert characters and their asymptotics
"""

import math

import pytest
from hypothesis import given, strategies as st

from services.character_service import CharacterService, WeightedCharacter, fit_decay_exponent
from services.errors import PreconditionError, ValidationError
from services.polytope_service import PolytopeService


def test_cp1_level_one(cp1):
    chi = CharacterService.hilbert_character(cp1, 1)
    assert chi.weights == {(-1,): 1, (0,): 1, (1,): 1}
    assert chi.total == 3


@pytest.mark.parametrize('name, total', [('cp2', 10), ('bl1cp2', 9)])
def test_anticanonical_totals(catalog, name, total):
    assert CharacterService.hilbert_character(catalog.get_polytope(name), 1).total == total


def test_total_equals_ehrhart_value(bl1cp2):
    chi = CharacterService.hilbert_character(bl1cp2, 2)
    assert chi.total == PolytopeService.ehrhart_counts(bl1cp2, 2)[-1]


def test_total_strictly_increases(cp2):
    totals = [CharacterService.hilbert_character(cp2, m).total for m in range(1, 8)]
    assert all(b > a for a, b in zip(totals, totals[1:]))


class TestCharacterValue:

    def test_zero_gives_total(self, bl1cp2):
        chi = CharacterService.hilbert_character(bl1cp2, 3)
        assert CharacterService.character_value(chi, [0.0, 0.0]) == pytest.approx(chi.total)

    def test_cp1_closed_forms(self, cp1):
        e = math.e
        chi1 = CharacterService.hilbert_character(cp1, 1)
        chi2 = CharacterService.hilbert_character(cp1, 2)
        assert CharacterService.character_value(chi1, [1.0]) == pytest.approx(e + 1 + 1 / e, rel=1e-14)
        assert CharacterService.character_value(chi2, [1.0]) == pytest.approx(
            e ** 2 + e + 1 + 1 / e + e ** -2, rel=1e-14)

    def test_dimension_mismatch(self, cp2):
        chi = CharacterService.hilbert_character(cp2, 1)
        with pytest.raises(ValidationError):
            CharacterService.character_value(chi, [1.0])

    @given(st.floats(min_value=-2, max_value=2), st.floats(min_value=-2, max_value=2),
           st.integers(min_value=1, max_value=4))
    def test_multiplicative_under_products(self, cp1, eta, zeta, m):
        chi = CharacterService.hilbert_character(cp1, m)
        square = CharacterService.hilbert_character(PolytopeService.product(cp1, cp1), m)
        expected = CharacterService.character_value(chi, [eta]) * CharacterService.character_value(chi, [zeta])
        assert CharacterService.character_value(square, [eta, zeta]) == pytest.approx(expected, rel=1e-12)


class TestAsymptotics:

    def test_cp1_counts(self, cp1):
        report = CharacterService.hrr_asymptotic_check(cp1, [10, 20, 40])
        assert [r for _, r in report.count_rows] == pytest.approx([2.1, 2.05, 2.025])
        assert report.count_exponent == pytest.approx(-1.0, abs=1e-9)

    def test_cp2_ratio_approaches_volume(self, cp2):
        report = CharacterService.hrr_asymptotic_check(cp2, [40, 80, 160])
        assert report.count_rows[-1][1] == pytest.approx(4.5, abs=0.03)
        assert report.volume == 4.5

    def test_weighted_sums_converge_at_first_order(self, bl1cp2):
        report = CharacterService.hrr_asymptotic_check(bl1cp2, [10, 20, 40, 80], eta=[0.3, -0.2])
        assert -1.3 <= report.value_exponent <= -0.7
        assert -1.3 <= report.moment_exponent <= -0.7

    def test_needs_three_levels(self, cp1):
        with pytest.raises(PreconditionError):
            CharacterService.hrr_asymptotic_check(cp1, [10])

    def test_levels_must_increase(self, cp1):
        with pytest.raises(PreconditionError):
            CharacterService.hrr_asymptotic_check(cp1, [10, 40, 20])


class TestEquality:

    def test_character_equals_itself(self, bl1cp2):
        chi = CharacterService.hilbert_character(bl1cp2, 2)
        assert CharacterService.characters_equal(chi, chi)

    def test_reflected_interval_needs_normalization(self, interval):
        reflected = PolytopeService.transform(interval, [[-1]])
        a = CharacterService.hilbert_character(interval, 1)
        b = CharacterService.hilbert_character(reflected, 1)
        assert not CharacterService.characters_equal(a, b)
        assert CharacterService.characters_equal(a, b, normalize=True)

    def test_reflected_cp1_is_equal_raw(self, cp1):
        reflected = PolytopeService.transform(cp1, [[-1]])
        a = CharacterService.hilbert_character(cp1, 2)
        b = CharacterService.hilbert_character(reflected, 2)
        assert CharacterService.characters_equal(a, b)

    def test_cp2_differs_from_bl1cp2(self, cp2, bl1cp2):
        a = CharacterService.hilbert_character(cp2, 1)
        b = CharacterService.hilbert_character(bl1cp2, 1)
        assert not CharacterService.characters_equal(a, b, normalize=True)

    def test_level_mismatch(self, cp2):
        with pytest.raises(ValidationError):
            CharacterService.characters_equal(CharacterService.hilbert_character(cp2, 1),
                                              CharacterService.hilbert_character(cp2, 2))

    def test_product_character_matches_product_polytope(self, cp1, p1xp1):
        chi = CharacterService.hilbert_character(cp1, 2)
        assert CharacterService.characters_equal(CharacterService.product_character(chi, chi),
                                                 CharacterService.hilbert_character(p1xp1, 2))


class TestCodec:

    def test_dict_round_trip(self, bl1cp2):
        chi = CharacterService.hilbert_character(bl1cp2, 1)
        assert CharacterService.from_dict(chi.to_dict()).weights == chi.weights

    def test_csv(self, cp1):
        assert CharacterService.hilbert_character(cp1, 1).to_csv() == "u1,mult\n-1,1\n0,1\n1,1\n"

    def test_zero_multiplicity_is_rejected(self):
        with pytest.raises(ValidationError):
            WeightedCharacter(level=1, dim=1, weights={(0,): 0})

    def test_malformed_json(self):
        with pytest.raises(ValidationError):
            CharacterService.from_dict({'m': 1, 'weights': [{'u': [0]}]})


def test_decay_exponent_needs_two_nonzero_gaps():
    assert fit_decay_exponent([10], [0.1]) is None
    assert fit_decay_exponent([10, 20], [0.1, 0.0]) is None
    assert fit_decay_exponent([10, 20, 40], [0.4, 0.2, 0.1]) == pytest.approx(-1.0)
