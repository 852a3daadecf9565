from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincorr.harness import derangement_measure, implication_gap_measures, random_measure
from spincorr.measures import is_associated, is_downward_fkg, normalize, satisfies_lattice
from spincorr.three_site import (
    SYSTEMS,
    ThreeSiteCoords,
    check_complement_bound,
    classify,
    complement_products,
    margins,
    system_holds,
)

EPS = Fraction(1, 100)


def coords_from_seed(seed, mode="generic"):
    return ThreeSiteCoords.from_weights(random_measure(seed, 3, mode).weights)


class TestMargins:
    def test_uniform_measure(self):
        coords = ThreeSiteCoords.from_weights([Fraction(1, 8)] * 8)
        for system in SYSTEMS:
            assert system_holds(coords, system)
        for system in ("det-zero-slice", "det-one-slice"):
            assert all(slack == 0 for _, slack in margins(coords, system))

    def test_gap_measure_one_slice_slack(self):
        gap1, _ = implication_gap_measures(EPS)
        coords = ThreeSiteCoords.from_weights(gap1.weights)
        slacks = margins(coords, "det-one-slice")
        assert slacks[0][1] == EPS * Fraction(1, 6) - Fraction(1, 36)
        assert slacks[0][1] < 0

    def test_derangement_first_product_slack_is_zero(self):
        coords = ThreeSiteCoords.from_weights(derangement_measure(3).weights)
        assert coords.a == Fraction(1, 3)
        assert coords.b1 == coords.b2 == coords.b3 == Fraction(1, 6)
        assert coords.c1 == coords.c2 == coords.c3 == 0
        assert coords.d == Fraction(1, 6)
        slacks = margins(coords, "cov-prod")
        assert slacks[0][1] == 0

    @given(st.integers(0, 10**6), st.integers(2, 9))
    @settings(max_examples=40)
    def test_scale_invariance_of_verdicts(self, seed, factor):
        coords = coords_from_seed(seed)
        scaled = coords.scaled(Fraction(factor))
        for system in SYSTEMS:
            original = [slack for _, slack in margins(coords, system)]
            blown = [slack for _, slack in margins(scaled, system)]
            assert [s * factor * factor for s in original] == blown

    def test_unknown_system_rejected(self):
        with pytest.raises(ValueError):
            margins(coords_from_seed(0), "nonsense")


class TestClassify:
    def test_gap_measure_one(self):
        gap1, _ = implication_gap_measures(EPS)
        verdicts = classify(ThreeSiteCoords.from_weights(gap1.weights))
        assert verdicts.as_dict() == {
            "lattice": False,
            "dca": True,
            "downward_fkg": True,
            "associated": True,
        }

    def test_gap_measure_two(self):
        _, gap2 = implication_gap_measures(EPS)
        verdicts = classify(ThreeSiteCoords.from_weights(gap2.weights))
        assert verdicts.as_dict() == {
            "lattice": False,
            "dca": False,
            "downward_fkg": False,
            "associated": True,
        }

    def test_product_measures_satisfy_everything(self):
        for seed in range(10):
            coords = coords_from_seed(seed, "product")
            verdicts = classify(coords)
            assert all(verdicts.as_dict().values())

    def test_matches_brute_force_on_random_measures(self):
        for seed in range(60):
            for mode in ("generic", "strictly-positive"):
                mu = normalize(random_measure(seed, 3, mode))
                verdicts = classify(ThreeSiteCoords.from_weights(mu.weights))
                assert verdicts.lattice == satisfies_lattice(mu).holds
                assert verdicts.downward_fkg == is_downward_fkg(mu).holds
                assert verdicts.associated == is_associated(mu).holds

    def test_boundary_completion_needed_for_lattice(self):
        # two-site determinants all hold trivially, complement pair fails
        weights = [Fraction(0)] * 8
        weights[0b000] = Fraction(1, 3)
        weights[0b001] = Fraction(1, 3)
        weights[0b110] = Fraction(1, 3)
        coords = ThreeSiteCoords.from_weights(weights)
        assert system_holds(coords, "det-zero-slice")
        assert system_holds(coords, "det-one-slice")
        assert any(slack < 0 for _, slack in complement_products(coords))
        assert not classify(coords).lattice
        assert not satisfies_lattice(normalize_weights(weights)).holds


def normalize_weights(weights):
    from spincorr.measures import WeightVector

    return normalize(WeightVector.exact(weights))


class TestComplementBound:
    def test_uniform_equality(self):
        coords = ThreeSiteCoords.from_weights([Fraction(1, 8)] * 8)
        assert check_complement_bound(coords)
        assert all(slack == 0 for _, slack in complement_products(coords))

    def test_gap_measure_one(self):
        gap1, _ = implication_gap_measures(EPS)
        assert check_complement_bound(ThreeSiteCoords.from_weights(gap1.weights))

    def test_precondition_enforced(self):
        _, gap2 = implication_gap_measures(EPS)
        coords = ThreeSiteCoords.from_weights(gap2.weights)
        with pytest.raises(ValueError):
            check_complement_bound(coords)

    def test_randomized_implication(self):
        # the bound must follow from cov-prod plus det-zero-slice; integer
        # coordinates are enough by scale invariance and keep this fast
        import random

        rng = random.Random(1234)
        checked = 0
        draws = 0
        while checked < 10**4:
            draws += 1
            if draws > 10**6:
                raise AssertionError("not enough qualifying samples")
            a, b1, b2, b3, c1, c2, c3, d = (rng.randrange(0, 13) for _ in range(8))
            if not (a or b1 or b2 or b3 or c1 or c2 or c3 or d):
                continue
            # independently transcribed precondition, raw integer arithmetic
            if b1 * d < c2 * c3 or b2 * d < c1 * c3 or b3 * d < c1 * c2:
                continue
            if (
                a * (c2 + c3 + d) < b1 * (b2 + b3 + c1)
                or a * (c1 + c3 + d) < b2 * (b1 + b3 + c2)
                or a * (c1 + c2 + d) < b3 * (b1 + b2 + c3)
            ):
                continue
            assert check_complement_bound(ThreeSiteCoords(a, b1, b2, b3, c1, c2, c3, d))
            checked += 1


class TestChainConsistency:
    def test_verdict_sets_respect_the_chain(self):
        for seed in range(300):
            verdicts = classify(coords_from_seed(seed))
            if verdicts.lattice:
                assert verdicts.dca
            if verdicts.dca:
                assert verdicts.downward_fkg
            if verdicts.downward_fkg:
                assert verdicts.associated
