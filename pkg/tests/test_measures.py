from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincorr.harness import derangement_measure, implication_gap_measures, random_measure
from spincorr.measures import (
    ProbabilityMeasure,
    WeightVector,
    condition_zeros,
    covariance,
    is_associated,
    is_downward_fkg,
    mix,
    normalize,
    project_zeros,
    reverify_witness,
    satisfies_lattice,
    stochastically_dominates,
    tilt,
)
from spincorr.three_site import ThreeSiteCoords, classify

EPS = Fraction(1, 100)


def three_site_cov(coords, kind):
    """Independent closed forms for covariances of the eight-weight measure."""
    a, d = coords.a, coords.d
    b1, b2, b3 = coords.b1, coords.b2, coords.b3
    c1, c2, c3 = coords.c1, coords.c2, coords.c3
    if kind == "site1-vs-others-product":
        return a * (c2 + c3 + d) - b1 * (b2 + b3 + c1)
    if kind == "site1-vs-others-union":
        return d * (b2 + b3 + a) - c1 * (c2 + c3 + b1)
    if kind == "site2-vs-site3":
        return (b1 + a) * (c1 + d) - (c3 + b2) * (b3 + c2)
    raise ValueError(kind)


class TestNormalize:
    def test_uniform(self):
        assert normalize(WeightVector.exact([1, 1, 1, 1])).weights == (Fraction(1, 4),) * 4

    def test_point_mass(self):
        assert normalize(WeightVector.exact([2, 0, 0, 0])).weights[0] == 1

    def test_scale_invariance(self):
        w = random_measure(3, 3, "generic")
        assert normalize(w.scaled(7)) == normalize(w)

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            WeightVector.exact([0, 0])


class TestExpectationCovariance:
    def test_bernoulli_half_variance(self):
        mu = ProbabilityMeasure.uniform(1)
        f = [0, 1]
        assert covariance(mu, f, f) == Fraction(1, 4)

    def test_product_measure_independent_coordinates(self):
        mu = ProbabilityMeasure.product([Fraction(1, 3), Fraction(2, 5)])
        f = [c & 1 for c in range(4)]
        g = [c >> 1 & 1 for c in range(4)]
        assert covariance(mu, f, g) == 0

    def test_three_site_covariance_identities(self):
        # cov of coordinate 1 against: the product of the others, the union
        # of the others, and the pairwise case, in the eight-weight coords.
        for seed in range(25):
            mu = normalize(random_measure(seed, 3, "generic"))
            coords = ThreeSiteCoords.from_weights(mu.weights)
            f1 = [c & 1 for c in range(8)]
            g1 = [(c >> 1 & 1) * (c >> 2 & 1) for c in range(8)]
            h1 = [1 if c & 0b110 else 0 for c in range(8)]
            f2 = [c >> 1 & 1 for c in range(8)]
            f3 = [c >> 2 & 1 for c in range(8)]
            assert covariance(mu, f1, g1) == three_site_cov(coords, "site1-vs-others-product")
            assert covariance(mu, f1, h1) == three_site_cov(coords, "site1-vs-others-union")
            assert covariance(mu, f2, f3) == three_site_cov(coords, "site2-vs-site3")


class TestIsAssociated:
    def test_product_measures_hold(self):
        for seed in range(10):
            mu = normalize(random_measure(seed, 3, "product"))
            report = is_associated(mu)
            assert report.holds
            assert report.margin >= 0

    def test_two_site_determinant_equivalence(self):
        for seed in range(40):
            mu = normalize(random_measure(seed, 2, "generic"))
            w = mu.weights
            det = w[0b11] * w[0b00] - w[0b10] * w[0b01]
            assert is_associated(mu).holds == (det >= 0)

    def test_three_site_matches_classifier(self):
        for seed in range(40):
            mu = normalize(random_measure(seed, 3, "generic"))
            verdicts = classify(ThreeSiteCoords.from_weights(mu.weights))
            assert is_associated(mu).holds == verdicts.associated

    def test_failing_witness_reverifies(self):
        _, gap2 = implication_gap_measures(EPS)
        mu = normalize(gap2)
        cond = condition_zeros(mu, [0])
        report = is_associated(cond)
        if report.fails:
            assert reverify_witness(cond, report) < 0
        # the unconditioned measure is associated
        assert is_associated(mu).holds

    def test_homogeneity(self):
        w = random_measure(11, 3, "generic")
        assert is_associated(w).verdict == is_associated(w.scaled(7)).verdict

    def test_float_mode_agrees_with_exact(self):
        for seed in range(20):
            mu = normalize(random_measure(seed, 3, "generic"))
            fl = ProbabilityMeasure.floats([float(v) for v in mu.weights])
            exact = is_associated(mu)
            approx = is_associated(fl)
            if abs(float(exact.margin)) > 1e-7:
                assert exact.holds == approx.holds


class TestSatisfiesLattice:
    def test_product_measure_equality_everywhere(self):
        mu = ProbabilityMeasure.product([Fraction(1, 3), Fraction(1, 5), Fraction(4, 7)])
        report = satisfies_lattice(mu)
        assert report.holds
        assert report.margin == 0

    def test_gap_measure_fails_by_one_slice_determinant(self):
        gap1, _ = implication_gap_measures(EPS)
        report = satisfies_lattice(gap1)
        assert report.fails
        # witness meet/join pair realizes c1*a < b2*b3 (or a permutation of it)
        assert reverify_witness(gap1, report) < 0
        coords = ThreeSiteCoords.from_weights(normalize(gap1).weights)
        assert coords.c1 * coords.a < coords.b2 * coords.b3

    def test_derangement_fails(self):
        mu = derangement_measure(3)
        report = satisfies_lattice(mu)
        assert report.fails
        assert reverify_witness(mu, report) < 0

    def test_homogeneity(self):
        w = random_measure(5, 3, "strictly-positive")
        assert satisfies_lattice(w).verdict == satisfies_lattice(w.scaled(7)).verdict

    def test_sparse_sweep_catches_complement_pair(self):
        # strictly positive two-site determinants but a complementary pair violation
        weights = [Fraction(0)] * 8
        weights[0b000] = Fraction(1, 3)
        weights[0b001] = Fraction(1, 3)
        weights[0b110] = Fraction(1, 3)
        report = satisfies_lattice(WeightVector.exact(weights))
        assert report.fails
        assert {report.witness["eta"], report.witness["zeta"]} == {0b001, 0b110}


class TestConditionZeros:
    def test_empty_set_is_identity(self):
        mu = normalize(random_measure(2, 3, "generic"))
        assert condition_zeros(mu, []) == mu

    def test_product_measure_pins_coordinates(self):
        mu = ProbabilityMeasure.product([Fraction(1, 3), Fraction(2, 5)])
        cond = condition_zeros(mu, [1])
        expected = ProbabilityMeasure.product([Fraction(1, 3), Fraction(0)])
        assert cond == expected

    def test_derangement_conditioned_is_smaller_derangement(self):
        mu = derangement_measure(3)
        sub, remaining = project_zeros(mu, [1])
        assert remaining == (0, 2)
        assert sub.weights == derangement_measure(2).weights

    def test_zero_probability_event_rejected(self):
        mu = ProbabilityMeasure.point_mass(2, 0b11)
        with pytest.raises(ValueError):
            condition_zeros(mu, [0])


class TestTilt:
    def test_constant_tilt_is_identity(self):
        mu = normalize(random_measure(4, 3, "generic"))
        assert tilt(mu, [Fraction(1)] * 8) == mu

    def test_multiplicativity(self):
        mu = normalize(random_measure(6, 2, "strictly-positive"))
        h1 = [Fraction(3, 2), Fraction(1), Fraction(2), Fraction(1, 2)]
        h2 = [Fraction(1, 3), Fraction(2), Fraction(1), Fraction(5)]
        combined = [a * b for a, b in zip(h1, h2)]
        assert tilt(tilt(mu, h1), h2) == tilt(mu, combined)

    def test_soft_conditioning_approaches_hard_conditioning(self):
        mu = normalize(random_measure(9, 3, "strictly-positive"))
        target = condition_zeros(mu, [0, 2])

        def distance(eps):
            h = [(eps / (1 + eps)) ** ((c & 1) + (c >> 2 & 1)) for c in range(8)]
            tilted = tilt(mu, h)
            return sum(abs(a - b) for a, b in zip(tilted.weights, target.weights))

        assert distance(Fraction(1, 10**6)) < Fraction(1, 10**4)
        assert distance(Fraction(1, 10**6)) < distance(Fraction(1, 10**3))

    def test_nonpositive_tilt_rejected(self):
        mu = ProbabilityMeasure.uniform(2)
        with pytest.raises(ValueError):
            tilt(mu, [1, 1, 0, 1])


class TestIsDownwardFkg:
    def test_derangement_holds(self):
        report = is_downward_fkg(derangement_measure(3))
        assert report.holds

    def test_gap_measure_two_fails(self):
        _, gap2 = implication_gap_measures(EPS)
        report = is_downward_fkg(normalize(gap2))
        assert report.fails
        assert reverify_witness(normalize(gap2), report) < 0

    def test_lattice_measures_are_downward_fkg(self):
        for seed in range(10):
            mu = normalize(random_measure(seed, 3, "lattice"))
            assert is_downward_fkg(mu).holds

    def test_zero_mass_conditionings_skipped(self):
        mu = ProbabilityMeasure.point_mass(3, 0b111)
        report = is_downward_fkg(mu)
        assert report.holds
        assert report.details["subsets_skipped"] == 7


class TestStochasticDomination:
    def test_reflexive(self):
        mu = normalize(random_measure(8, 3, "generic"))
        report = stochastically_dominates(mu, mu)
        assert report.holds
        assert report.margin == 0

    def test_product_grid_matches_coordinatewise_order(self):
        grid = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
        for p0 in grid:
            for p1 in grid:
                for q0 in grid:
                    for q1 in grid:
                        lower = ProbabilityMeasure.product([p0, p1])
                        upper = ProbabilityMeasure.product([q0, q1])
                        expected = p0 <= q0 and p1 <= q1
                        assert stochastically_dominates(lower, upper).holds == expected

    def test_conditioning_on_more_zeros_moves_down(self):
        # downward FKG measure: nested zero conditionings are ordered
        mu = derangement_measure(4)
        smaller = condition_zeros(mu, [0, 1])
        larger = condition_zeros(mu, [0])
        assert stochastically_dominates(smaller, larger).holds

    def test_convex_combinations_of_nested_conditionals_associated(self):
        mu = derangement_measure(4)
        low = condition_zeros(mu, [0, 1])
        high = condition_zeros(mu, [0])
        for lam in (0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1):
            assert is_associated(mix(low, high, lam)).holds


class TestChainInvariant:
    def test_implication_chain_on_random_measures(self):
        for seed in range(60):
            for mode in ("generic", "strictly-positive"):
                mu = normalize(random_measure(seed, 3, mode))
                lattice = satisfies_lattice(mu).holds
                dfkg = is_downward_fkg(mu).holds
                assoc = is_associated(mu).holds
                if lattice:
                    assert dfkg
                if dfkg:
                    assert assoc


@given(st.integers(0, 10**6), st.sampled_from([1, 2, 3]))
@settings(max_examples=30, deadline=None)
def test_normalized_measures_always_total_one(seed, n):
    mu = normalize(random_measure(seed, n, "generic"))
    assert mu.total == 1
