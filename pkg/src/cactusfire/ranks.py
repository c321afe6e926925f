"""Exact divisor rank via a finite adversary game.

The rank of D is the largest r such that D minus any effective degree-r
divisor still has an effective equivalent.  Quantifying over all of the
graph is replaced by a finite candidate set: the wedge points, the base
point, each loop's free-chip position for the current class, and a few
deterministic generic offsets per loop.  Rank is piecewise constant along a
loop with breakpoints only at such special points, so generic samples stand
in for generic adversaries; the test suite validates this empirically by
massive random sampling rather than assuming it.

Effectiveness of a class is decided exactly by reduction: a class contains
an effective divisor iff its base-point-reduced form is nonnegative there.
All results are memoized per graph, keyed by (degree, mu) class coordinates,
which is sound because rank is a class invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .divisors import (
    Divisor,
    DivisorClass,
    canonical_divisor,
    class_coordinates,
    divisor_combine,
    free_chip_offsets,
    point_divisor,
)
from .graphs import CactusGraph, PointRef
from .reduction import q_reduce

SAMPLE_REFINEMENT_LIMIT = 40
GENERIC_SAMPLES_PER_LOOP = 3


@dataclass(frozen=True)
class RankWitness:
    """Result of the rank game.

    refuting_sequence lists rank+1 chip removals after which the class has
    no effective representative (empty for rank -1, None when only a lower
    bound is known); candidate_log records the top-level adversary pool.
    """

    rank: int
    refuting_sequence: tuple | None
    candidate_log: tuple = ()
    lower_bound_only: bool = False


def is_effective_class(D: Divisor) -> bool:
    """True iff D is linearly equivalent to an effective divisor.

    Decided by reducing toward the base point: the reduced form is effective
    away from it and maximal there, so its base coefficient tells all.
    """
    if D.degree < 0:
        return False
    if D.is_effective():
        return True
    graph = D.graph
    memo = graph.cache("effective")
    key = class_coordinates(D).key()
    if key not in memo:
        reduced = q_reduce(D, graph.base_point)
        memo[key] = reduced.coefficient(graph.base_point) >= 0
    return memo[key]


def _generic_offsets(graph: CactusGraph, loop: str, special: set, k: int = GENERIC_SAMPLES_PER_LOOP):
    """k deterministic offsets (2j+1)*c/(3*2^m), refined until off all special points."""
    c = graph.circumference(loop)
    for m in range(1, SAMPLE_REFINEMENT_LIMIT + 1):
        den = 3 * (2 ** m)
        cand = [c * Fraction(2 * j + 1, den) for j in range(k)]
        if all(x not in special for x in cand):
            return cand
    raise RuntimeError(
        f"generic sample refinement limit {SAMPLE_REFINEMENT_LIMIT} exceeded on loop {loop!r}"
    )


def candidate_points(D: Divisor) -> tuple:
    """The finite adversary pool for the rank game at D's class.

    Ordered: base point, wedge points, per-loop free-chip positions of the
    class, then generic samples; deduplicated canonically.
    """
    graph = D.graph
    cls = class_coordinates(D)
    free = free_chip_offsets(cls)
    out = []
    seen = set()

    def push(p: PointRef):
        if p not in seen:
            seen.add(p)
            out.append(p)

    push(graph.base_point)
    for w in graph.wedge_points:
        push(w)
    for lid in graph.loop_ids:
        push(graph.canonical_point(lid, free[lid]))
    q = graph.base_point
    for lid in graph.loop_ids:
        special = {Fraction(0), free[lid]}
        for child, off in graph.children_of(lid):
            special.add(off)
        if q.loop == lid:
            special.add(q.offset)
        for p in D._chips:
            if p.loop == lid:
                special.add(p.offset)
        for x in _generic_offsets(graph, lid, special):
            push(graph.canonical_point(lid, x))
    return tuple(out)


def rank_at_least(D: Divisor, r: int) -> bool:
    """Play the game: does every adversary path of length r stay effective?"""
    if r < 0:
        return True
    if D.degree < r:
        return False  # rank never exceeds degree
    if D.degree - r >= D.graph.genus:
        # every removal path ends at degree >= g, and a q-reduced divisor has
        # at most one free chip per loop, so all such leaf classes are
        # effective: the game passes without exploring the tree
        return True
    if r == 0:
        return is_effective_class(D)
    graph = D.graph
    memo = graph.cache("rank_at_least")
    key = (class_coordinates(D).key(), r)
    if key in memo:
        return memo[key]
    result = True
    for p in candidate_points(D):
        if not rank_at_least(divisor_combine(D, point_divisor(graph, p), 1, -1), r - 1):
            result = False
            break
    memo[key] = result
    return result


def _refutation(D: Divisor, r: int) -> tuple:
    """A removal path of length r certifying rank_at_least(D, r) is False."""
    if r <= 0:
        return ()
    graph = D.graph
    for p in candidate_points(D):
        rest = divisor_combine(D, point_divisor(graph, p), 1, -1)
        if not rank_at_least(rest, r - 1):
            return (p,) + _refutation(rest, r - 1)
    raise AssertionError("no refuting candidate found for a failing rank check")


def rank(D: Divisor, max_r: int | None = None) -> RankWitness:
    """Exact rank of D, with a refuting sequence for rank + 1.

    max_r caps the search; a capped result below the degree bound is marked
    lower_bound_only (its refuting sequence is unknown).  Default cap is
    deg(D), which is always exact since rank never exceeds degree.
    """
    deg = D.degree
    candidates = candidate_points(D) if deg >= 0 else ()
    if deg < 0 or not is_effective_class(D):
        return RankWitness(rank=-1, refuting_sequence=(), candidate_log=candidates)
    cap = deg if max_r is None else min(max_r, deg)
    r = 0
    while r < cap and rank_at_least(D, r + 1):
        r += 1
    if r == cap and cap < deg:
        return RankWitness(rank=r, refuting_sequence=None, candidate_log=candidates, lower_bound_only=True)
    return RankWitness(rank=r, refuting_sequence=_refutation(D, r + 1), candidate_log=candidates)


def riemann_roch_residual(D: Divisor) -> int:
    """r(D) - r(K - D) - deg(D) - 1 + genus; zero when Riemann-Roch holds."""
    graph = D.graph
    K = canonical_divisor(graph)
    r_d = rank(D).rank
    r_k = rank(divisor_combine(K, D, 1, -1)).rank
    return r_d - r_k - D.degree - 1 + graph.genus
