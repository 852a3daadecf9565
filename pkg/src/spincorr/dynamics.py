"""Spin-system rate tables, generators, semigroups, and rate classifiers.

A spin system flips one site at a time: site x turns on at rate
birth(x, eta) and off at rate death(x, eta), neither depending on the
spin at x itself.  Tables store one exact rational per (site, config)
with the own-spin independence enforced at construction: the value at a
configuration is taken from the representative with the site's own bit
cleared.  Conditions stated "off x" (all other sites empty/full) are
therefore conditions on that representative.

The semigroup exp(tQ) acts on measures from the left (mu S(t) = mu e^{tQ})
and on functions from the right.  The primary evaluation is
uniformization, which preserves nonnegativity and total mass by
construction; a dense scaling-and-squaring routine is kept as an
independent cross-check oracle.  Dynamics outputs are floats and are
tagged as such; only the derivative at t=0 is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import exp

import numpy as np
import scipy.linalg

from .lattice import configs, single_bit_pairs, two_site_quadruples, validate_site_count
from .measures import (
    FAILS,
    HOLDS,
    ProbabilityMeasure,
    PropertyReport,
    _as_probability,
    as_fraction,
)

DEFAULT_POISSON_TAIL = 1e-13


def _representative_table(n: int, site: int, values) -> tuple[Fraction, ...]:
    vals = [as_fraction(v) for v in values]
    if len(vals) != 1 << n:
        raise ValueError(f"expected {1 << n} rates per site, got {len(vals)}")
    bit = 1 << site
    table = tuple(vals[c & ~bit] for c in configs(n))
    if any(v < 0 for v in table):
        raise ValueError(f"negative rate at site {site}")
    return table


@dataclass(frozen=True)
class RateTable:
    """Per-site birth and death rates over all configurations."""

    n: int
    birth: tuple[tuple[Fraction, ...], ...]
    death: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_tables(cls, birth, death) -> "RateTable":
        """Build from per-site tables indexed by configuration mask.

        Entries at configurations with the site's own bit set are ignored:
        the value at the own-bit-cleared representative is copied across.
        """
        n = len(birth)
        validate_site_count(n)
        if len(death) != n:
            raise ValueError("birth and death tables must cover the same sites")
        b = tuple(_representative_table(n, x, birth[x]) for x in range(n))
        d = tuple(_representative_table(n, x, death[x]) for x in range(n))
        return cls(n, b, d)

    @classmethod
    def from_site_functions(cls, n: int, birth_fn, death_fn) -> "RateTable":
        birth = [[birth_fn(x, c) for c in configs(n)] for x in range(n)]
        death = [[death_fn(x, c) for c in configs(n)] for x in range(n)]
        return cls.from_tables(birth, death)

    @classmethod
    def independent_flips(cls, n: int, births, deaths) -> "RateTable":
        """Constant rates per site: every spin flips on its own."""
        births = [as_fraction(b) for b in births]
        deaths = [as_fraction(d) for d in deaths]
        if len(births) != n or len(deaths) != n:
            raise ValueError(f"expected {n} birth and death constants")
        size = 1 << n
        return cls.from_tables(
            [[births[x]] * size for x in range(n)],
            [[deaths[x]] * size for x in range(n)],
        )

    @classmethod
    def single_site_birth(cls, n: int, site: int, values) -> "RateTable":
        """All rates zero except the birth rate at one site."""
        if not 0 <= site < n:
            raise ValueError(f"site {site} out of range")
        size = 1 << n
        zero = [Fraction(0)] * size
        birth = [list(zero) for _ in range(n)]
        birth[site] = [as_fraction(v) for v in values]
        death = [list(zero) for _ in range(n)]
        return cls.from_tables(birth, death)

    def rate(self, site: int, config: int) -> Fraction:
        """Flip rate at the site in this configuration (birth or death)."""
        if config >> site & 1:
            return self.death[site][config]
        return self.birth[site][config]

    def exit_rate(self, config: int) -> Fraction:
        return sum(self.rate(x, config) for x in range(self.n))


def contact_process(edges, infection=1, recovery=1, n: int | None = None) -> RateTable:
    """Contact process on a finite graph: births at rate
    infection * (number of occupied neighbours), deaths at constant rate."""
    edges = [tuple(e) for e in edges]
    infection = as_fraction(infection)
    recovery = as_fraction(recovery)
    sites = {x for e in edges for x in e}
    if n is None:
        n = max(sites) + 1 if sites else 1
    validate_site_count(n)
    if any(not 0 <= x < n for x in sites):
        raise ValueError("edge endpoint out of range")
    neighbours = [[] for _ in range(n)]
    for i, j in edges:
        if i == j:
            raise ValueError(f"self-loop at site {i}")
        neighbours[i].append(j)
        neighbours[j].append(i)

    def birth(x, c):
        return infection * sum(1 for y in neighbours[x] if c >> y & 1)

    def death(x, c):
        return recovery

    return RateTable.from_site_functions(n, birth, death)


def path_edges(k: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(k - 1)]


# ---------------------------------------------------------------------------
# generator and semigroup


@dataclass(frozen=True)
class Generator:
    """Dense rate matrix of single-site flips; rows sum to zero exactly."""

    n: int
    rows: tuple[tuple[Fraction, ...], ...]

    @cached_property
    def matrix(self) -> np.ndarray:
        mat = np.array([[float(q) for q in row] for row in self.rows], dtype=np.float64)
        mat.flags.writeable = False
        return mat

    @cached_property
    def uniformization_rate(self) -> Fraction:
        return max(-row[c] for c, row in enumerate(self.rows))

    def __add__(self, other: "Generator") -> "Generator":
        if not isinstance(other, Generator):
            return NotImplemented
        if self.n != other.n:
            raise ValueError(f"site counts differ: {self.n} vs {other.n}")
        rows = tuple(
            tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.rows, other.rows)
        )
        return Generator(self.n, rows)


def build_generator(rates: RateTable) -> Generator:
    """Q(eta, eta with site x flipped) = flip rate; diagonal balances the row."""
    size = 1 << rates.n
    rows = []
    for c in range(size):
        row = [Fraction(0)] * size
        total = Fraction(0)
        for x in range(rates.n):
            r = rates.rate(x, c)
            row[c ^ (1 << x)] = r
            total += r
        row[c] = -total
        rows.append(tuple(row))
    return Generator(rates.n, tuple(rows))


def _poisson_sweep(gen: Generator, vector: np.ndarray, t: float, tail: float, from_left: bool):
    lam = float(gen.uniformization_rate)
    if lam == 0.0 or t == 0.0:
        return vector.copy()
    if lam * t > 500.0:
        # Split long horizons so the leading Poisson weight stays representable.
        half = _poisson_sweep(gen, vector, t / 2.0, tail, from_left)
        return _poisson_sweep(gen, half, t / 2.0, tail, from_left)
    transition = np.eye(1 << gen.n) + gen.matrix / lam
    weight = exp(-lam * t)
    cumulative = weight
    acc = weight * vector
    current = vector
    k = 0
    k_max = int(lam * t + 60.0 * (lam * t + 1.0) ** 0.5 + 100.0)
    while 1.0 - cumulative > tail and k < k_max:
        k += 1
        current = current @ transition if from_left else transition @ current
        weight *= lam * t / k
        cumulative += weight
        acc = acc + weight * current
    return acc


def semigroup_apply(
    gen: Generator, measure, t, *, tail: float = DEFAULT_POISSON_TAIL
) -> ProbabilityMeasure:
    """mu S(t) by uniformization: a Poisson mixture of powers of the
    embedded stochastic matrix, truncated when the tail mass drops below
    ``tail``.  Output is a float-mode measure summing to 1 within 1e-12,
    so ``tail`` must stay below that slack."""
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    pm = _as_probability(measure)
    if pm.n != gen.n:
        raise ValueError(f"site counts differ: measure {pm.n} vs generator {gen.n}")
    out = _poisson_sweep(gen, pm.as_float_array(), t, tail, from_left=True)
    return ProbabilityMeasure.floats(out)


def semigroup_apply_function(
    gen: Generator, values, t, *, tail: float = DEFAULT_POISSON_TAIL
) -> tuple[float, ...]:
    """S(t)f, the expected value of f at time t started from each configuration."""
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    vec = np.array([float(v) for v in values], dtype=np.float64)
    if vec.shape[0] != 1 << gen.n:
        raise ValueError(f"expected {1 << gen.n} values")
    out = _poisson_sweep(gen, vec, t, tail, from_left=False)
    return tuple(float(v) for v in out)


def semigroup_apply_expm(gen: Generator, measure, t) -> ProbabilityMeasure:
    """Scaling-and-squaring cross-check oracle for semigroup_apply."""
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    pm = _as_probability(measure)
    kernel = scipy.linalg.expm(gen.matrix * t)
    return ProbabilityMeasure.floats(pm.as_float_array() @ kernel)


def uniformized_kernel(gen: Generator, t, *, tail: float = DEFAULT_POISSON_TAIL) -> np.ndarray:
    """Full transition matrix P_t under uniformization."""
    size = 1 << gen.n
    return _poisson_sweep(gen, np.eye(size), float(t), tail, from_left=False)


def trotter_compose(
    g1: Generator, g2: Generator, measure, t, steps: int, *, tail: float = DEFAULT_POISSON_TAIL
) -> ProbabilityMeasure:
    """[S1(t/m) S2(t/m)]^m acting on a measure; converges to the semigroup
    of g1 + g2 with first-order error in 1/m."""
    if g1.n != g2.n:
        raise ValueError(f"site counts differ: {g1.n} vs {g2.n}")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    t = float(t)
    dt = t / steps
    pm = _as_probability(measure)
    for _ in range(steps):
        pm = semigroup_apply(g1, pm, dt, tail=tail)
        pm = semigroup_apply(g2, pm, dt, tail=tail)
    return pm


def independent_flip_kernel(rates: RateTable, t) -> np.ndarray:
    """Product of the closed-form two-state kernels, one per site.

    Site z with constant birth b and death d mixes to equilibrium at rate
    b + d: p_t(0 -> 1) = b/(b+d) * (1 - exp(-(b+d)t)).  Only valid when
    the system has independent flips."""
    if not has_independent_flips(rates):
        raise ValueError("rates are not configuration independent")
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    kernels = []
    for z in range(rates.n):
        b = float(rates.birth[z][0])
        d = float(rates.death[z][0])
        total = b + d
        mixed = 1.0 - exp(-total * t) if total > 0 else 0.0
        up = b / total * mixed if total > 0 else 0.0
        down = d / total * mixed if total > 0 else 0.0
        kernels.append(np.array([[1.0 - up, up], [down, 1.0 - down]]))
    out = np.array([[1.0]])
    for z in reversed(range(rates.n)):
        out = np.kron(out, kernels[z])
    return out


# ---------------------------------------------------------------------------
# rate classifiers


def is_attractive(rates: RateTable) -> PropertyReport:
    """Births increasing and deaths decreasing in the configuration."""
    best = None
    for x in range(rates.n):
        for lo, hi, _ in single_bit_pairs(rates.n):
            up = rates.birth[x][hi] - rates.birth[x][lo]
            down = rates.death[x][lo] - rates.death[x][hi]
            for kind, slack, pair in (("birth", up, (lo, hi)), ("death", down, (lo, hi))):
                if best is None or slack < best:
                    best = slack
                if slack < 0:
                    witness = {"site": x, "kind": kind, "lower": pair[0], "upper": pair[1]}
                    return PropertyReport("attractive", FAILS, witness, slack)
    return PropertyReport("attractive", HOLDS, None, best)


def has_independent_flips(rates: RateTable) -> bool:
    """True iff every site's birth and death rates ignore the configuration."""
    for x in range(rates.n):
        if len(set(rates.birth[x])) > 1 or len(set(rates.death[x])) > 1:
            return False
    return True


def deaths_constant(rates: RateTable) -> PropertyReport:
    """Death rates independent of the configuration at every site."""
    for x in range(rates.n):
        values = set(rates.death[x])
        if len(values) > 1:
            lo = min(c for c in configs(rates.n) if rates.death[x][c] != rates.death[x][0])
            witness = {"site": x, "config": lo, "values": sorted(str(v) for v in values)}
            return PropertyReport("constant-deaths", FAILS, witness, None)
    return PropertyReport("constant-deaths", HOLDS, None, None)


def deaths_constant_on_occupied(rates: RateTable) -> PropertyReport:
    """Death rates take one value per site on configurations with another
    occupied site.

    The comparison runs over own-bit representatives other than the empty
    configuration; the value when the site is the lone occupant (the empty
    representative) is exempt.
    """
    for x in range(rates.n):
        bit = 1 << x
        seen = {}
        for c in configs(rates.n):
            if c & bit or c == 0:
                continue
            seen.setdefault(rates.death[x][c], c)
            if len(seen) > 1:
                (v1, c1), (v2, c2) = sorted(seen.items(), key=lambda kv: kv[1])[:2]
                witness = {
                    "site": x,
                    "configs": [c1, c2],
                    "values": [str(v1), str(v2)],
                }
                return PropertyReport("constant-deaths-occupied", FAILS, witness, None)
    return PropertyReport("constant-deaths-occupied", HOLDS, None, None)


@dataclass(frozen=True)
class AdditiveDecomposition:
    """Birth rates at one site written as a positive combination of
    'some site of A occupied' indicators over subsets A of the other sites.

    ``coefficients`` maps each nonempty subset mask to its coefficient as
    recovered by Moebius inversion over the subset lattice; the inversion
    reproduces the table exactly iff the rate vanishes when all other
    sites are empty (``empty_rate`` is zero), and the rates are additive
    iff moreover every coefficient is nonnegative.
    """

    n: int
    site: int
    coefficients: tuple[tuple[int, Fraction], ...]
    empty_rate: Fraction
    exact: bool
    additive: bool

    def reconstruct(self, config: int) -> Fraction:
        total = Fraction(0)
        for mask, coeff in self.coefficients:
            if config & mask:
                total += coeff
        return total


def additive_decomposition(rates: RateTable, site: int) -> AdditiveDecomposition:
    """Recover the coefficients of the occupied-set decomposition.

    With f(B) the birth rate when exactly B (a set of other sites) is
    occupied and G(D) = f(full) - f(full minus D), the coefficient of A is
    sum over D <= A of (-1)^|A minus D| G(D).  Non-additivity is a verdict,
    not an error.
    """
    if not 0 <= site < rates.n:
        raise ValueError(f"site {site} out of range")
    offsites = [x for x in range(rates.n) if x != site]
    full = 0
    for x in offsites:
        full |= 1 << x

    def f(mask):
        return rates.birth[site][mask]

    gvals = {}
    sub = full
    while True:
        gvals[sub] = f(full) - f(full & ~sub)
        if sub == 0:
            break
        sub = (sub - 1) & full

    coefficients = []
    sub = full
    while True:
        if sub:
            coeff = Fraction(0)
            d = sub
            while True:
                sign = -1 if (sub ^ d).bit_count() & 1 else 1
                coeff += sign * gvals[d]
                if d == 0:
                    break
                d = (d - 1) & sub
            coefficients.append((sub, coeff))
        if sub == 0:
            break
        sub = (sub - 1) & full
    coefficients.sort()

    empty_rate = f(0)
    exact = empty_rate == 0
    additive = exact and all(c >= 0 for _, c in coefficients)
    return AdditiveDecomposition(
        rates.n, site, tuple(coefficients), empty_rate, exact, additive
    )


def births_additive(rates: RateTable) -> PropertyReport:
    """Additivity of the birth rates at every site."""
    for x in range(rates.n):
        dec = additive_decomposition(rates, x)
        if not dec.additive:
            bad = None
            if dec.exact:
                bad = min(mask for mask, c in dec.coefficients if c < 0)
            witness = {
                "site": x,
                "empty_rate": str(dec.empty_rate),
                "negative_coefficient_mask": bad,
            }
            return PropertyReport("additive-births", FAILS, witness, None)
    return PropertyReport("additive-births", HOLDS, None, None)


def birth_submodularity(rates: RateTable, site: int) -> PropertyReport:
    """Submodularity of the birth rate at one site:
    rate(or) + rate(and) <= rate(eta) + rate(zeta).

    Checked on pairs differing at exactly two sites, which is equivalent
    to the condition over all pairs for any real table.
    """
    table = rates.birth[site]
    best = None
    for base, x, y in two_site_quadruples(rates.n):
        both = base | 1 << x | 1 << y
        slack = table[base | 1 << x] + table[base | 1 << y] - table[both] - table[base]
        if best is None or slack < best:
            best = slack
        if slack < 0:
            witness = {"site": site, "base": base, "raised": [x, y]}
            return PropertyReport("submodular-births", FAILS, witness, slack)
    return PropertyReport("submodular-births", HOLDS, None, best)


def births_increasing(rates: RateTable, site: int) -> PropertyReport:
    table = rates.birth[site]
    best = None
    for lo, hi, _ in single_bit_pairs(rates.n):
        slack = table[hi] - table[lo]
        if best is None or slack < best:
            best = slack
        if slack < 0:
            witness = {"site": site, "lower": lo, "upper": hi}
            return PropertyReport("increasing-births", FAILS, witness, slack)
    return PropertyReport("increasing-births", HOLDS, None, best)


# ---------------------------------------------------------------------------
# derivative of event polynomials at t = 0


@dataclass(frozen=True)
class EventPolynomial:
    """Polynomial of degree at most two in the probabilities of fixed
    configuration sets, evaluated along the semigroup orbit of a measure."""

    n: int
    events: tuple[tuple[int, ...], ...]
    monomials: tuple[tuple[Fraction, tuple[int, ...]], ...]

    def __post_init__(self):
        size = 1 << self.n
        for event in self.events:
            if any(not 0 <= c < size for c in event):
                raise ValueError(f"event {event!r} contains configs out of range")
        for coeff, indices in self.monomials:
            if len(indices) > 2:
                raise ValueError("monomials must have degree at most two")
            if any(not 0 <= i < len(self.events) for i in indices):
                raise ValueError(f"monomial {indices!r} references an unknown event")

    def event_probabilities(self, weights) -> list:
        return [sum(weights[c] for c in event) for event in self.events]

    def value(self, weights):
        probs = self.event_probabilities(weights)
        total = 0
        for coeff, indices in self.monomials:
            term = coeff
            for i in indices:
                term *= probs[i]
            total += term
        return total


def association_determinant_poly(n: int, x: int, y: int, zero_sites=()) -> EventPolynomial:
    """P(x=1, y=1, Z) P(x=0, y=0, Z) - P(x=1, y=0, Z) P(x=0, y=1, Z) with Z
    the event of zeros on ``zero_sites``; nonnegative whenever the measure
    conditioned on Z is associated, zero at product measures."""
    if x == y:
        raise ValueError("sites must be distinct")
    zmask = 0
    for z in zero_sites:
        if z in (x, y):
            raise ValueError("pinned sites must differ from the compared pair")
        zmask |= 1 << z
    events = []
    for sx, sy in ((1, 1), (0, 0), (1, 0), (0, 1)):
        members = tuple(
            c
            for c in configs(n)
            if (c >> x & 1) == sx and (c >> y & 1) == sy and c & zmask == 0
        )
        events.append(members)
    monomials = ((Fraction(1), (0, 1)), (Fraction(-1), (2, 3)))
    return EventPolynomial(n, tuple(events), monomials)


def measure_flow(gen: Generator, measure) -> tuple[Fraction, ...]:
    """mu Q, the exact time derivative of the semigroup orbit at t = 0."""
    pm = _as_probability(measure)
    if pm.n != gen.n:
        raise ValueError(f"site counts differ: measure {pm.n} vs generator {gen.n}")
    weights = pm.as_fractions()
    size = 1 << gen.n
    out = [Fraction(0)] * size
    for source in range(size):
        w = weights[source]
        if w == 0:
            continue
        row = gen.rows[source]
        out[source] += w * row[source]
        for x in range(gen.n):
            target = source ^ (1 << x)
            if row[target]:
                out[target] += w * row[target]
    return tuple(out)


def derivative_at_zero(gen: Generator, measure, poly: EventPolynomial) -> Fraction:
    """Exact d/dt F(mu S(t)) at t = 0 by the chain rule through mu Q."""
    pm = _as_probability(measure)
    if poly.n != gen.n or pm.n != gen.n:
        raise ValueError("functional, measure, and generator must share the site count")
    weights = pm.as_fractions()
    probs = poly.event_probabilities(weights)
    flow = measure_flow(gen, pm)
    flow_probs = [sum(flow[c] for c in event) for event in poly.events]
    total = Fraction(0)
    for coeff, indices in poly.monomials:
        for pos in range(len(indices)):
            term = coeff * flow_probs[indices[pos]]
            for other in range(len(indices)):
                if other != pos:
                    term *= probs[indices[other]]
            total += term
    return total
