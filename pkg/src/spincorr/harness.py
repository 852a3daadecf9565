"""Randomized generators, preservation experiments, counterexample search,
and constructors for the classical example measures and systems.

Preservation experiments evolve a family of initial measures that satisfy
a property and re-check the property along a time grid.  When the rate
classifiers confirm the hypotheses under which preservation is known to
hold, any residual violation (beyond the float tolerance, and surviving a
re-run with a tighter Poisson truncation) is flagged as build-failing.

Counterexample search runs the cheap exact derivative-at-zero functionals
over small parameter grids first and only then confirms candidates by
actually evolving a measure, mirroring how such violations are proved.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from .dynamics import (
    RateTable,
    association_determinant_poly,
    birth_submodularity,
    births_additive,
    births_increasing,
    build_generator,
    deaths_constant,
    derivative_at_zero,
    has_independent_flips,
    is_attractive,
    semigroup_apply,
)
from .lattice import BudgetError, configs, validate_site_count
from .measures import (
    EXACT,
    ProbabilityMeasure,
    PropertyReport,
    WeightVector,
    is_associated,
    is_downward_fkg,
    satisfies_lattice,
)
from .three_site import ThreeSiteCoords, classify
from .tilts import dca_falsify

DEFAULT_TIME_GRID = (0.1, 0.5, 1.0, 2.0)
LATTICE_REJECTION_BUDGET = 5000
REVERIFY_TAIL = 1e-16

MEASURE_MODES = ("generic", "strictly-positive", "lattice", "product")
PROPERTIES = ("associated", "fkg-lattice", "downward-fkg", "dca")


# ---------------------------------------------------------------------------
# random generators (all exact rationals, reproducible from the seed)


def _salt(label: str) -> int:
    # Stable across processes (str.__hash__ is randomized per run).
    value = 0
    for ch in label:
        value = (value * 131 + ord(ch)) & 0xFFFFFFFF
    return value


def _rng(seed: int, n: int, salt: int = 0) -> random.Random:
    return random.Random((seed * 1000003 + n) * 1000003 + salt)


def random_measure(seed: int, n: int, mode: str = "generic") -> WeightVector:
    """Seeded exact-rational weight vector.

    ``generic`` zeroes each coordinate with probability 1/4 (so sparse
    supports occur), ``strictly-positive`` keeps every weight positive,
    ``lattice`` rejection-samples strictly positive vectors against the
    lattice condition, ``product`` factorizes over sites.
    """
    validate_site_count(n)
    rng = _rng(seed, n, salt=_salt(mode))
    size = 1 << n
    if mode == "generic":
        while True:
            weights = [
                Fraction(0) if rng.random() < 0.25 else Fraction(rng.randrange(1, 49), 48)
                for _ in range(size)
            ]
            if any(weights):
                return WeightVector.exact(weights)
    if mode == "strictly-positive":
        return WeightVector.exact([Fraction(rng.randrange(1, 49), 48) for _ in range(size)])
    if mode == "lattice":
        # Rejection against the lattice condition.  Proposals alternate
        # between generic positive vectors (diverse, rarely accepted for
        # n >= 4) and a log-supermodular product-interaction family that
        # always qualifies; every draw is checked before acceptance.
        interaction_masks = [m for m in range(size) if m.bit_count() >= 2]
        for attempt in range(LATTICE_REJECTION_BUDGET):
            if attempt % 2 == 0:
                candidate = WeightVector.exact(
                    [Fraction(rng.randrange(1, 49), 48) for _ in range(size)]
                )
            else:
                site_factors = [Fraction(rng.randrange(1, 25), 8) for _ in range(n)]
                interactions = [
                    (m, 1 + Fraction(rng.randrange(0, 9), 8))
                    for m in interaction_masks
                    if rng.random() < 0.5
                ]
                weights = []
                for c in range(size):
                    w = Fraction(1)
                    for x in range(n):
                        if c >> x & 1:
                            w *= site_factors[x]
                    for m, v in interactions:
                        if c & m == m:
                            w *= v
                    weights.append(w)
                candidate = WeightVector.exact(weights)
            if satisfies_lattice(candidate).holds:
                return candidate
        raise BudgetError(
            f"lattice rejection budget exhausted after {LATTICE_REJECTION_BUDGET} draws "
            f"(n={n}, seed={seed})"
        )
    if mode == "product":
        ps = [Fraction(rng.randrange(1, 16), 16) for _ in range(n)]
        return WeightVector(n, ProbabilityMeasure.product(ps).weights, EXACT)
    raise ValueError(f"unknown measure mode {mode!r}; known: {MEASURE_MODES}")


def random_increasing_table(rng: random.Random, n: int, denominator: int = 8, top: int = 24):
    """Random increasing nonnegative function via monotone closure."""
    raw = [Fraction(rng.randrange(0, top + 1), denominator) for _ in configs(n)]
    out = list(raw)
    for c in configs(n):
        for x in range(n):
            if c >> x & 1:
                out[c] = max(out[c], out[c & ~(1 << x)])
    return tuple(out)


def random_spin_system(seed: int, n: int, kind: str = "generic") -> RateTable:
    """Seeded rate tables: ``generic`` unconstrained nonnegative rationals,
    ``attractive`` monotone rates, ``independent`` constant rates."""
    rng = _rng(seed, n, salt=_salt(kind))
    if kind == "generic":
        size = 1 << n
        birth = [[Fraction(rng.randrange(0, 17), 8) for _ in range(size)] for _ in range(n)]
        death = [[Fraction(rng.randrange(0, 17), 8) for _ in range(size)] for _ in range(n)]
        return RateTable.from_tables(birth, death)
    if kind == "attractive":
        birth = [random_increasing_table(rng, n) for _ in range(n)]
        death = []
        for _ in range(n):
            inc = random_increasing_table(rng, n)
            peak = max(inc)
            death.append(tuple(peak - v for v in inc))
        return RateTable.from_tables(birth, death)
    if kind == "independent":
        birth = [Fraction(rng.randrange(1, 17), 8) for _ in range(n)]
        death = [Fraction(rng.randrange(1, 17), 8) for _ in range(n)]
        return RateTable.independent_flips(n, birth, death)
    raise ValueError(f"unknown system kind {kind!r}")


def random_single_site_birth(seed: int, n: int, site: int, budget: int = 5000) -> RateTable:
    """Single-site birth system whose rate table is increasing and
    submodular, found by rejection."""
    rng = _rng(seed, n, salt=101 + site)
    for _ in range(budget):
        values = random_increasing_table(rng, n, denominator=4, top=12)
        table = RateTable.single_site_birth(n, site, values)
        if birth_submodularity(table, site).holds:
            return table
    raise BudgetError(f"no increasing submodular table found in {budget} draws")


# ---------------------------------------------------------------------------
# named examples


def derangement_measure(k: int) -> ProbabilityMeasure:
    """Law of the non-fixed-point indicators of a uniform permutation of k
    points.  Associated and downward FKG, but not lattice FKG for k >= 3."""
    if not 2 <= k <= 5:
        raise ValueError(f"permutation size must be in [2, 5], got {k}")
    counts = [0] * (1 << k)
    total = 0
    for pi in permutations(range(k)):
        mask = 0
        for i in range(k):
            if pi[i] != i:
                mask |= 1 << i
        counts[mask] += 1
        total += 1
    return ProbabilityMeasure(
        k, tuple(Fraction(c, total) for c in counts), EXACT
    )


def corner_flip_system(n: int = 3) -> RateTable:
    """Births only one step below the full configuration, deaths only one
    step above the empty one: site x turns on at rate 1 when every other
    site is occupied, and off at rate 1 when it is the lone occupant.
    For three sites this preserves the lattice condition without having
    independent flips; every non-constant configuration loses mass at
    exactly rate exp(-t)."""
    validate_site_count(n)

    def birth(x, c):
        others = ((1 << n) - 1) & ~(1 << x)
        return Fraction(1) if c & others == others else Fraction(0)

    def death(x, c):
        others = ((1 << n) - 1) & ~(1 << x)
        return Fraction(1) if c & others == 0 else Fraction(0)

    return RateTable.from_site_functions(n, birth, death)


def crossed_birth_pair() -> RateTable:
    """Two sites, each born at rate 1 minus the other's spin, no deaths.
    Strictly anti-monotone births: the standard non-attractive fixture."""
    def birth(x, c):
        other = 1 - x
        return Fraction(1 - (c >> other & 1))

    def death(x, c):
        return Fraction(0)

    return RateTable.from_site_functions(2, birth, death)


def supermodular_single_birth() -> RateTable:
    """Three sites; the only rate is a birth at site 2 equal to the product
    of the other two spins.  Increasing but strictly supermodular, so it
    breaks the submodularity needed to preserve conditional association."""
    values = [Fraction((c >> 0 & 1) * (c >> 1 & 1)) for c in configs(3)]
    return RateTable.single_site_birth(3, 2, values)


def implication_gap_measures(eps) -> tuple[WeightVector, WeightVector]:
    """The two three-site weight vectors separating the implication chain.

    For small eps the first (a = b_i = 1/6, c_i = eps, d = 1/3) satisfies
    DCA but not the lattice condition; the second (a = 1/3, b_i = eps,
    c_i = d = 1/6) is associated but not downward FKG.  Both sum to
    1 + 3*eps before normalization.  Raises if eps lands outside the range
    where those verdicts hold.
    """
    eps = Fraction(eps)
    if not 0 < eps < Fraction(1, 36):
        raise ValueError(f"eps must lie in (0, 1/36), got {eps}")
    sixth = Fraction(1, 6)
    first = ThreeSiteCoords(
        a=sixth, b1=sixth, b2=sixth, b3=sixth, c1=eps, c2=eps, c3=eps, d=Fraction(1, 3)
    )
    second = ThreeSiteCoords(
        a=Fraction(1, 3), b1=eps, b2=eps, b3=eps, c1=sixth, c2=sixth, c3=sixth, d=sixth
    )
    v1 = classify(first)
    v2 = classify(second)
    if not (v1.dca and v1.associated and not v1.lattice):
        raise ValueError(f"eps={eps} gives unintended verdicts for the first measure: {v1}")
    if not (v2.associated and not v2.downward_fkg and not v2.lattice):
        raise ValueError(f"eps={eps} gives unintended verdicts for the second measure: {v2}")
    return (
        WeightVector.exact(first.to_weights()),
        WeightVector.exact(second.to_weights()),
    )


# ---------------------------------------------------------------------------
# property evaluation shared by the experiments


def evaluate_property(
    name: str,
    measure,
    *,
    tolerance=None,
    tilt_budget: int = 200,
    allow_large: bool = False,
    tilt_seed: int = 0,
) -> PropertyReport:
    if name == "associated":
        return is_associated(measure, tolerance=tolerance, allow_large=allow_large)
    if name == "fkg-lattice":
        return satisfies_lattice(measure, tolerance=tolerance)
    if name == "downward-fkg":
        return is_downward_fkg(measure, tolerance=tolerance, allow_large=allow_large)
    if name == "dca":
        return dca_falsify(
            measure,
            budget=tilt_budget,
            tolerance=tolerance,
            allow_large=allow_large,
            seed=tilt_seed,
        )
    raise ValueError(f"unknown property {name!r}; known: {PROPERTIES}")


def hypothesis_reports(name: str, system: RateTable) -> tuple[tuple[str, bool], ...]:
    """Rate-classifier conditions under which the property is preserved."""
    if name == "associated":
        return (("attractive", is_attractive(system).holds),)
    if name == "fkg-lattice":
        return (("independent-flips", has_independent_flips(system)),)
    if name == "downward-fkg":
        return (
            ("constant-deaths", deaths_constant(system).holds),
            ("additive-births", births_additive(system).holds),
        )
    if name == "dca":
        return (
            ("constant-deaths", deaths_constant(system).holds),
            ("increasing-births", all(births_increasing(system, x).holds for x in range(system.n))),
            ("submodular-births", all(birth_submodularity(system, x).holds for x in range(system.n))),
        )
    raise ValueError(f"unknown property {name!r}; known: {PROPERTIES}")


# ---------------------------------------------------------------------------
# preservation experiments


@dataclass(frozen=True)
class ExperimentSpec:
    """One preservation run: evolve qualifying initial measures under the
    system and re-check the property along the time grid."""

    system: RateTable
    property: str
    times: tuple[float, ...] = DEFAULT_TIME_GRID
    seed: int = 0
    measure_mode: str = "lattice"
    measure_count: int = 20
    measures: tuple[WeightVector, ...] | None = None
    tolerance: float = 1e-9
    tilt_budget: int = 200

    def __post_init__(self):
        if self.property not in PROPERTIES:
            raise ValueError(f"unknown property {self.property!r}")
        times = tuple(float(t) for t in self.times)
        if any(not math.isfinite(t) or t < 0 for t in times):
            raise ValueError("times must be finite and nonnegative")
        object.__setattr__(self, "times", times)

    def initial_measures(self) -> tuple[WeightVector, ...]:
        if self.measures is not None:
            return tuple(self.measures)
        return tuple(
            random_measure(self.seed + i, self.system.n, self.measure_mode)
            for i in range(self.measure_count)
        )


@dataclass(frozen=True)
class CellOutcome:
    measure_index: int
    t: float
    report: PropertyReport


@dataclass(frozen=True)
class ExperimentOutcome:
    property: str
    hypotheses: tuple[tuple[str, bool], ...]
    hypotheses_satisfied: bool
    cells: tuple[CellOutcome, ...]
    violations: tuple[CellOutcome, ...]
    skipped_measures: tuple[int, ...]
    build_failing: bool
    summary: str
    witness: dict | None = None


def verify_preservation(spec: ExperimentSpec) -> ExperimentOutcome:
    """Run the preservation experiment an ExperimentSpec describes.

    Initial measures that do not satisfy the property are skipped and
    recorded.  A violation on an evolved measure is re-evaluated with the
    Poisson truncation tightened to 1e-16 before being reported, to
    separate genuine violations from truncation noise.
    """
    gen = build_generator(spec.system)
    hypotheses = hypothesis_reports(spec.property, spec.system)
    hyp_ok = all(ok for _, ok in hypotheses)
    cells = []
    violations = []
    skipped = []
    witness = None
    for i, start in enumerate(spec.initial_measures()):
        base = evaluate_property(
            spec.property, start, tolerance=None, tilt_budget=spec.tilt_budget
        )
        if base.fails:
            skipped.append(i)
            continue
        for t in spec.times:
            evolved = semigroup_apply(gen, start, t)
            report = evaluate_property(
                spec.property, evolved, tolerance=spec.tolerance, tilt_budget=spec.tilt_budget
            )
            if report.fails:
                evolved = semigroup_apply(gen, start, t, tail=REVERIFY_TAIL)
                report = evaluate_property(
                    spec.property, evolved, tolerance=spec.tolerance, tilt_budget=spec.tilt_budget
                )
            cell = CellOutcome(i, t, report)
            cells.append(cell)
            if report.fails:
                violations.append(cell)
                if witness is None:
                    witness = {
                        "measure_index": i,
                        "initial_weights": [str(w) for w in start.weights],
                        "t": t,
                        "evolved_weights": [repr(float(w)) for w in evolved.weights],
                        "report_property": report.property,
                        "report_witness": report.witness,
                        "report_margin": float(report.margin),
                    }
    if violations:
        summary = "violation-found"
    elif not cells:
        summary = "no-qualifying-measures"
    else:
        summary = "all-hold"
    return ExperimentOutcome(
        property=spec.property,
        hypotheses=hypotheses,
        hypotheses_satisfied=hyp_ok,
        cells=tuple(cells),
        violations=tuple(violations),
        skipped_measures=tuple(skipped),
        build_failing=bool(violations) and hyp_ok,
        summary=summary,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# counterexample search


SEARCH_TARGETS = ("association", "downward-fkg")

_PARAM_GRID = tuple(Fraction(i, 8) for i in range(1, 8))
_CONFIRM_TIMES = (0.01, 0.05, 0.1, 0.25, 0.5)


@dataclass(frozen=True)
class SearchOutcome:
    target: str
    found: bool
    witness: dict | None
    derivative_certificate: dict | None
    evaluations: int
    summary: str


def _product_params(n, x, y, rho, lam, background):
    ps = [background] * n
    ps[x] = rho
    ps[y] = lam
    return ps


def _product_with_background(n, x, y, rho, lam, background):
    return ProbabilityMeasure.product(_product_params(n, x, y, rho, lam, background))


def _search_association(system: RateTable, budget: int) -> SearchOutcome:
    """Look for a product measure whose evolution loses association.

    Exact negative derivatives of the two-site association determinant at
    t = 0 are collected first; each candidate is then confirmed on a small
    time grid with the float association sweep.
    """
    gen = build_generator(system)
    n = system.n
    evaluations = 0
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            poly = association_determinant_poly(n, x, y)
            for background in (Fraction(1, 8), Fraction(7, 8)):
                for rho in _PARAM_GRID:
                    for lam in _PARAM_GRID:
                        mu = _product_with_background(n, x, y, rho, lam, background)
                        deriv = derivative_at_zero(gen, mu, poly)
                        evaluations += 1
                        if deriv >= 0:
                            continue
                        certificate = {
                            "sites": [x, y],
                            "rho": str(rho),
                            "lambda": str(lam),
                            "background": str(background),
                            "derivative": str(deriv),
                        }
                        for t in _CONFIRM_TIMES:
                            if evaluations >= budget:
                                break
                            evolved = semigroup_apply(gen, mu, t)
                            report = is_associated(evolved)
                            evaluations += 1
                            if report.fails:
                                witness = {
                                    "product_probabilities": [
                                        str(p) for p in _product_params(n, x, y, rho, lam, background)
                                    ],
                                    "t": t,
                                    "report_property": report.property,
                                    "report_witness": report.witness,
                                    "report_margin": float(report.margin),
                                }
                                return SearchOutcome(
                                    "association", True, witness, certificate, evaluations,
                                    "violation-found",
                                )
    return SearchOutcome("association", False, None, None, evaluations, "search-exhausted")


def _search_downward_fkg(system: RateTable, budget: int) -> SearchOutcome:
    """Look for a product measure whose evolution loses downward FKG,
    via the association determinant conditioned on zeros at a third site."""
    gen = build_generator(system)
    n = system.n
    evaluations = 0
    for u in range(n):
        for x in range(n):
            for y in range(x + 1, n):
                if u in (x, y):
                    continue
                poly = association_determinant_poly(n, x, y, zero_sites=(u,))
                for background in (Fraction(1, 2), Fraction(1, 8), Fraction(7, 8)):
                    for rho in _PARAM_GRID:
                        for lam in _PARAM_GRID:
                            mu = _product_with_background(n, x, y, rho, lam, background)
                            deriv = derivative_at_zero(gen, mu, poly)
                            evaluations += 1
                            if deriv >= 0:
                                continue
                            certificate = {
                                "conditioned_site": u,
                                "sites": [x, y],
                                "rho": str(rho),
                                "lambda": str(lam),
                                "background": str(background),
                                "derivative": str(deriv),
                            }
                            for t in _CONFIRM_TIMES:
                                if evaluations >= budget:
                                    break
                                evolved = semigroup_apply(gen, mu, t)
                                report = is_downward_fkg(evolved)
                                evaluations += 1
                                if report.fails:
                                    witness = {
                                        "product_probabilities": [
                                            str(p)
                                            for p in _product_params(n, x, y, rho, lam, background)
                                        ],
                                        "t": t,
                                        "report_property": report.property,
                                        "report_witness": report.witness,
                                        "report_margin": float(report.margin),
                                    }
                                    return SearchOutcome(
                                        "downward-fkg", True, witness, certificate,
                                        evaluations, "violation-found",
                                    )
    return SearchOutcome("downward-fkg", False, None, None, evaluations, "search-exhausted")


def search_counterexample(target: str, system: RateTable, budget: int = 20000) -> SearchOutcome:
    """Search for an initial measure and time at which the evolved measure
    violates the target property.

    A found witness for ``downward-fkg`` is also a DCA violation, since
    conditional association implies the downward FKG property.
    """
    if target == "association":
        return _search_association(system, budget)
    if target == "downward-fkg":
        return _search_downward_fkg(system, budget)
    raise ValueError(f"unknown search target {target!r}; known: {SEARCH_TARGETS}")
