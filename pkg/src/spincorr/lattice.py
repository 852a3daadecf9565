"""Configurations of {0,1}^n as bitmasks, their lattice structure, and up-sets.

A configuration is an n-bit mask with bit x holding the spin at site x, so
meet/join are single AND/OR instructions and a weight vector is indexed
directly by the mask.  An up-set (upward-closed event) is stored as a
2^n-bit membership mask over configuration indices: intersecting two
up-sets is one AND, and weighing an up-set against a measure is a masked
sum.  These two encodings are shared by every other module.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_SITES = 6
DEFAULT_SWEEP_SITES = 5


class BudgetError(RuntimeError):
    """An enumeration or sweep would exceed its configured budget."""


def validate_site_count(n: int) -> None:
    if not isinstance(n, int) or not 1 <= n <= MAX_SITES:
        raise ValueError(f"site count must be an integer in [1, {MAX_SITES}], got {n!r}")


def validate_config(config: int, n: int) -> None:
    if not 0 <= config < (1 << n):
        raise ValueError(f"configuration {config!r} out of range for {n} sites")


def configs(n: int) -> range:
    """All configuration masks of an n-site system, in index order."""
    return range(1 << n)


def meet_join(a: int, b: int, n: int) -> tuple[int, int]:
    """Coordinatewise minimum and maximum of two configurations."""
    validate_site_count(n)
    validate_config(a, n)
    validate_config(b, n)
    return a & b, a | b


def flip(config: int, sites, n: int) -> int:
    """Complement the spin at each listed site (distinct, in range)."""
    validate_config(config, n)
    sites = tuple(sites)
    if len(set(sites)) != len(sites):
        raise ValueError(f"flip sites must be distinct, got {sites!r}")
    mask = 0
    for x in sites:
        if not 0 <= x < n:
            raise ValueError(f"site {x!r} out of range for {n} sites")
        mask |= 1 << x
    return config ^ mask


def config_leq(a: int, b: int) -> bool:
    """Coordinatewise a <= b."""
    return a & ~b == 0


def comparable(a: int, b: int) -> bool:
    return config_leq(a, b) or config_leq(b, a)


def single_bit_pairs(n: int):
    """Yield (lower, upper, site) for every pair of configs differing in one bit."""
    for c in configs(n):
        for x in range(n):
            if not c >> x & 1:
                yield c, c | 1 << x, x


def two_site_quadruples(n: int):
    """Yield (base, x, y) with base(x) = base(y) = 0 for every unordered site pair.

    The four configs base, base|x, base|y, base|x|y form the square whose
    corners the pairwise lattice and submodularity checks compare.
    """
    for x in range(n):
        for y in range(x + 1, n):
            pair = 1 << x | 1 << y
            for base in configs(n):
                if base & pair == 0:
                    yield base, x, y


# ---------------------------------------------------------------------------
# up-sets


def is_up_set(members: int, n: int) -> bool:
    """True iff the membership mask is closed under raising any coordinate."""
    for c in configs(n):
        if members >> c & 1:
            for x in range(n):
                up = c | 1 << x
                if up != c and not members >> up & 1:
                    return False
    return True


def _extend_up_sets(prev: tuple[int, ...], n_prev: int) -> tuple[int, ...]:
    # Up-sets of the (n_prev+1)-cube are pairs (A, B) of up-sets of the
    # n_prev-cube with A <= B: A is the membership on the lower half
    # (new site at 0), B on the upper half.
    half = 1 << n_prev
    arr = np.asarray(prev, dtype=np.int64)
    out = []
    for low in prev:
        for high in arr[(arr & low) == low]:
            out.append(low | int(high) << half)
    out.sort()
    return tuple(out)


@lru_cache(maxsize=None)
def _up_sets_small(n: int) -> tuple[int, ...]:
    if n == 0:
        return (0, 1)
    return _extend_up_sets(_up_sets_small(n - 1), n - 1)


def enumerate_up_sets(n: int, *, allow_large: bool = False) -> tuple[int, ...]:
    """All up-sets of {0,1}^n as membership masks, ascending.

    Counts grow like the Dedekind numbers (20 for n=3, 168 for n=4,
    7581 for n=5, 7828354 for n=6), so n=6 is opt-in via ``allow_large``
    and is recomputed on every call instead of cached.
    """
    validate_site_count(n)
    if n > DEFAULT_SWEEP_SITES:
        if not allow_large:
            raise BudgetError(
                f"up-set enumeration for n={n} needs allow_large=True "
                f"(default budget stops at n={DEFAULT_SWEEP_SITES})"
            )
        return _extend_up_sets(_up_sets_small(n - 1), n - 1)
    return _up_sets_small(n)


def up_set_members(members: int) -> tuple[int, ...]:
    """Configuration indices contained in a membership mask."""
    out = []
    c = 0
    while members:
        if members & 1:
            out.append(c)
        members >>= 1
        c += 1
    return tuple(out)


@lru_cache(maxsize=None)
def up_set_matrix(n: int) -> np.ndarray:
    """Boolean (#up-sets, 2^n) membership matrix, rows in enumeration order."""
    if n > DEFAULT_SWEEP_SITES:
        raise BudgetError(f"membership matrix not built for n={n}")
    masks = np.asarray(_up_sets_small(n), dtype=np.int64)
    cols = np.arange(1 << n, dtype=np.int64)
    mat = (masks[:, None] >> cols[None, :] & 1).astype(bool)
    mat.flags.writeable = False
    return mat


@lru_cache(maxsize=None)
def up_set_intersection_table(n: int) -> np.ndarray:
    """(K, K) table mapping up-set row pairs to the row of their intersection.

    Up-sets are closed under intersection, so the table is total.  Kept to
    n <= 4 where K*K stays small; larger sweeps recompute intersections
    on the fly.
    """
    if n > 4:
        raise BudgetError(f"intersection table not built for n={n}")
    masks = _up_sets_small(n)
    index = {m: i for i, m in enumerate(masks)}
    k = len(masks)
    table = np.empty((k, k), dtype=np.int32)
    for i, mi in enumerate(masks):
        for j, mj in enumerate(masks):
            table[i, j] = index[mi & mj]
    table.flags.writeable = False
    return table


# ---------------------------------------------------------------------------
# monotone functions


def is_increasing(values, n: int):
    """Check f(eta) <= f(zeta) whenever eta <= zeta.

    Only pairs differing in one bit are compared (enough by transitivity).
    Returns (True, None) or (False, (lower, upper)) with the violating pair.
    """
    vals = list(values)
    if len(vals) != 1 << n:
        raise ValueError(f"expected {1 << n} values, got {len(vals)}")
    for lo, hi, _ in single_bit_pairs(n):
        if vals[lo] > vals[hi]:
            return False, (lo, hi)
    return True, None


def is_decreasing(values, n: int):
    vals = list(values)
    if len(vals) != 1 << n:
        raise ValueError(f"expected {1 << n} values, got {len(vals)}")
    for lo, hi, _ in single_bit_pairs(n):
        if vals[lo] < vals[hi]:
            return False, (lo, hi)
    return True, None


def decompose_increasing(values, n: int):
    """Write an increasing f as constant + sum of positive multiples of up-set indicators.

    Layer-cake over the sorted distinct values: the term for level v is
    (v - previous level) times the indicator of {f >= v}, which is an
    up-set because f is increasing.  Reconstruction is exact.
    Returns (constant, ((coefficient, members_mask), ...)).
    """
    vals = list(values)
    ok, pair = is_increasing(vals, n)
    if not ok:
        raise ValueError(f"function is not increasing, witness pair {pair}")
    levels = sorted(set(vals))
    base = levels[0]
    terms = []
    prev = base
    for level in levels[1:]:
        members = 0
        for c in configs(n):
            if vals[c] >= level:
                members |= 1 << c
        terms.append((level - prev, members))
        prev = level
    return base, tuple(terms)
