"""Seeded random cacti and divisors for property tests and spot checks.

Two denominator regimes: the "generic" one draws offsets with large coprime
denominators (a stand-in for generic edge lengths, which no rational choice
can certify), and the "coarse" one keeps every denominator a divisor of a
small base so the subdivision oracle stays desk-sized.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .divisors import Divisor
from .graphs import CactusGraph, PointRef

GENERIC_PRIMES = (101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173)
COARSE_DENOMS = (1, 2, 3, 4, 6, 8, 12, 24)


def _random_fraction(rng: random.Random, coarse: bool, lo=Fraction(1, 2), hi=Fraction(3)) -> Fraction:
    """A rational in [lo, hi] with regime-appropriate denominator."""
    if coarse:
        den = rng.choice(COARSE_DENOMS)
    else:
        den = rng.choice(GENERIC_PRIMES)
    lo_num = -(-lo.numerator * den // lo.denominator)  # ceil
    hi_num = hi.numerator * den // hi.denominator
    return Fraction(rng.randint(lo_num, max(lo_num, hi_num)), den)


def _random_offset(rng: random.Random, circumference: Fraction, coarse: bool) -> Fraction:
    if coarse:
        base = 24
        n = int(circumference * base)
        return Fraction(rng.randrange(0, max(1, n)), base)
    den = rng.choice(GENERIC_PRIMES)
    return circumference * Fraction(rng.randrange(0, den), den)


def random_cactus(rng: random.Random, genus: int, coarse: bool = False) -> CactusGraph:
    """A random tree of `genus` loops with random circumferences and offsets."""
    if genus < 1:
        raise ValueError("genus must be at least 1")
    ids = [f"L{i + 1}" for i in range(genus)]
    loops = [(lid, _random_fraction(rng, coarse)) for lid in ids]
    circ = dict(loops)
    attachments = {}
    for i in range(1, genus):
        parent = ids[rng.randrange(0, i)]
        attachments[ids[i]] = (parent, _random_offset(rng, circ[parent], coarse))
    return CactusGraph(loops, attachments)


def random_point(rng: random.Random, graph: CactusGraph, coarse: bool = False) -> PointRef:
    lid = rng.choice(graph.loop_ids)
    return graph.canonical_point(lid, _random_offset(rng, graph.circumference(lid), coarse))


def random_divisor(
    rng: random.Random,
    graph: CactusGraph,
    max_sites: int = 4,
    mult_range=(-3, 3),
    coarse: bool = False,
    max_abs_degree: int | None = None,
) -> Divisor:
    """A random divisor on up to max_sites points, optionally degree-bounded."""
    for _ in range(200):
        chips = []
        for _ in range(rng.randint(1, max_sites)):
            mult = 0
            while mult == 0:
                mult = rng.randint(*mult_range)
            chips.append((random_point(rng, graph, coarse), mult))
        D = Divisor(graph, chips)
        if max_abs_degree is None or abs(D.degree) <= max_abs_degree:
            return D
    raise RuntimeError("could not hit the requested degree range")


def random_effective_divisor(rng: random.Random, graph: CactusGraph, degree: int, coarse: bool = False) -> Divisor:
    """`degree` unit chips at random points."""
    return Divisor(graph, [(random_point(rng, graph, coarse), 1) for _ in range(degree)])


def random_principal_divisor(rng: random.Random, graph: CactusGraph, tents: int = 3, coarse: bool = False) -> Divisor:
    """A sum of random tent divisors: div of an explicit PL function.

    Each tent on a loop of circumference c contributes
    (m - rho) + (m + rho) - 2(m); subtrees glued under the tent see only a
    constant, so the sum is principal on the whole cactus.
    """
    chips: list = []
    for _ in range(tents):
        lid = rng.choice(graph.loop_ids)
        c = graph.circumference(lid)
        center = _random_offset(rng, c, coarse)
        rho = _random_offset(rng, c, coarse) / 2
        if rho == 0:
            continue
        weight = rng.choice((-2, -1, 1, 2))
        chips.append((graph.canonical_point(lid, center - rho), weight))
        chips.append((graph.canonical_point(lid, center + rho), weight))
        chips.append((graph.canonical_point(lid, center), -2 * weight))
    return Divisor(graph, chips)
