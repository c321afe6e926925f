"""Brill-Noether loci on cacti: stratified scans, dimension probes, w-bounds.

W^r_d is the locus of degree-d classes of rank at least r inside the Picard
torus; its expected dimension is rho(g, r, d) = g - (r+1)(g-d+r).  Since the
locus has measure zero whenever rho < g, blind sampling of the torus finds
nothing; the scan instead enumerates effective support patterns (chips on
wedge points and the base point plus a few loops carrying one free chip
each) and grids the free offsets, so one-parameter families show up as runs
of consecutive marked grid points.  Local dimension at a witness is probed
by perturbing its class coordinates along subsets of loop directions at two
magnitudes and re-checking the rank game.

The Brill-Noether rank w^r_d (largest k such that every effective degree
r+k adversary is dominated by some rank-r degree-d divisor) is bracketed by
an exhaustive game over finite candidate families; bounds carry explicit
certification flags since the search family, not the theory, limits them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, product

from .divisors import Divisor, DivisorClass, class_coordinates, representative_from_class
from .graphs import CactusGraph, PointRef
from .ranks import _generic_offsets, rank, rank_at_least

PROBE_MAGNITUDES = (Fraction(1, 64), Fraction(1, 128))
# four deterministic direction patterns per subset; the tilted pairs guard
# against accidental symmetry of the axis-aligned ones
PROBE_PATTERNS = (
    (Fraction(1), Fraction(1), Fraction(1)),
    (Fraction(-1), Fraction(1), Fraction(-1)),
    (Fraction(3, 5), Fraction(-5, 7), Fraction(7, 9)),
    (Fraction(-7, 9), Fraction(3, 5), Fraction(-5, 7)),
)


class ResourceCapError(RuntimeError):
    """A scan or search would exceed its configured budget."""


def rho(g: int, r: int, d: int) -> int:
    """Expected dimension of W^r_d on genus g: g - (r+1)(g-d+r)."""
    if g < 1:
        raise ValueError("genus must be at least 1")
    if r < 0:
        raise ValueError("rank must be nonnegative")
    return g - (r + 1) * (g - d + r)


# ---------------------------------------------------------------------------
# stratified scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stratum:
    """One support pattern with its grid marks and per-coordinate runs."""

    stratum_id: int
    fixed_pattern: tuple  # ((PointRef, mult), ...)
    free_loops: tuple  # loop ids carrying one gridded chip each
    resolution: int
    marked: tuple  # grid index tuples whose divisor passed rank >= r
    ranks: dict  # grid index tuple -> capped game rank
    runs: tuple  # per free coordinate: lengths of maximal cyclic marked runs

    def pattern_label(self) -> str:
        fixed = "+".join(f"{m}({p})" for p, m in self.fixed_pattern) or "0"
        free = ",".join(self.free_loops) or "-"
        return f"fixed[{fixed}]|free[{free}]"


@dataclass(frozen=True)
class ScanReport:
    r: int
    d: int
    resolution: int
    max_free: int
    strata: tuple
    found_positive_dimensional: bool
    evaluations: int


def _compositions(total: int, slots: int):
    """All tuples of `slots` nonnegative ints summing to `total`."""
    if slots == 0:
        if total == 0:
            yield ()
        return
    if slots == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


def _cyclic_runs(marks: list) -> list:
    """Lengths of maximal cyclic runs of True in a boolean list."""
    n = len(marks)
    if n == 0:
        return []
    if all(marks):
        return [n]
    runs = []
    # rotate so position 0 is unmarked, making runs non-wrapping
    start = marks.index(False)
    rotated = marks[start:] + marks[:start]
    length = 0
    for m in rotated:
        if m:
            length += 1
        elif length:
            runs.append(length)
            length = 0
    if length:
        runs.append(length)
    return runs


def stratified_scan(
    graph: CactusGraph,
    r: int,
    d: int,
    resolution: int,
    max_free: int = 3,
    budget: int = 200_000,
) -> ScanReport:
    """Mark the grid points of every effective support pattern with rank >= r.

    Patterns put nonnegative multiplicities on the wedge points and the base
    point plus one free chip on each loop of a subset of size <= max_free,
    with total degree d; each free offset runs over j*c/N.  A stratum whose
    marks contain a cyclic run of 3+ consecutive grid points in some free
    coordinate is evidence of a positive-dimensional family, which is the
    report's verdict bit.
    """
    if d < 0 or r < 0:
        raise ValueError("r and d must be nonnegative")
    if max_free > 3:
        raise ValueError("max_free is capped at 3 (desk scale)")
    if resolution < 1:
        raise ValueError("resolution must be positive")

    fixed_points = []
    seen = set()
    for p in (graph.base_point,) + graph.wedge_points:
        if p not in seen:
            seen.add(p)
            fixed_points.append(p)

    plans = []
    total_evals = 0
    for f in range(0, min(max_free, d, graph.genus) + 1):
        for free_loops in combinations(graph.loop_ids, f):
            for comp in _compositions(d - f, len(fixed_points)):
                plans.append((free_loops, comp))
                total_evals += resolution ** f
    if total_evals > budget:
        raise ResourceCapError(
            f"scan would take {total_evals} rank evaluations, over budget {budget}"
        )

    strata = []
    found = False
    for sid, (free_loops, comp) in enumerate(plans):
        fixed_pattern = tuple((p, m) for p, m in zip(fixed_points, comp) if m != 0)
        f = len(free_loops)
        marked = []
        ranks: dict = {}
        grid_axes = [range(resolution)] * f
        mark_table: dict = {}
        for idx in product(*grid_axes):
            chips = list(fixed_pattern)
            for lid, j in zip(free_loops, idx):
                c = graph.circumference(lid)
                chips.append((graph.canonical_point(lid, c * Fraction(j, resolution)), 1))
            D = Divisor(graph, chips)
            witness = rank(D, max_r=r)
            ranks[idx] = witness.rank
            ok = witness.rank >= r
            mark_table[idx] = ok
            if ok:
                marked.append(idx)
        runs = []
        for axis in range(f):
            best_axis_runs: list = []
            other_axes = [range(resolution)] * (f - 1)
            for rest in product(*other_axes):
                line = []
                for j in range(resolution):
                    idx = rest[:axis] + (j,) + rest[axis:]
                    line.append(mark_table[idx])
                best_axis_runs.extend(_cyclic_runs(line))
            runs.append(tuple(sorted(best_axis_runs, reverse=True)))
        stratum = Stratum(
            stratum_id=sid,
            fixed_pattern=fixed_pattern,
            free_loops=free_loops,
            resolution=resolution,
            marked=tuple(marked),
            ranks=ranks,
            runs=tuple(runs),
        )
        if any(lengths and lengths[0] >= 3 for lengths in stratum.runs):
            found = True
        strata.append(stratum)

    return ScanReport(
        r=r,
        d=d,
        resolution=resolution,
        max_free=max_free,
        strata=tuple(strata),
        found_positive_dimensional=found,
        evaluations=total_evals,
    )


# ---------------------------------------------------------------------------
# local dimension probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimProbe:
    """Persistence of rank >= r under class perturbations.

    subset_results maps each tested subset of loop directions to whether all
    perturbation vectors at both magnitudes kept the rank; the estimated
    local dimension is the largest persistent subset size.
    """

    base_class: DivisorClass
    r: int
    persistent_directions: tuple
    estimated_local_dim: int
    subset_results: dict

    def rows(self):
        """(direction_subset, magnitude, persisted) rows for CSV output."""
        out = []
        for subset, per_mag in sorted(self.subset_results.items()):
            for mag, ok in per_mag.items():
                out.append((subset, mag, ok))
        return out


def local_dim_probe(D: Divisor, r: int, subset_limit: int | None = None) -> DimProbe:
    """Estimate the local dimension of W^r_d at D by class perturbation.

    For each subset S of loop directions up to subset_limit, the class of D
    is shifted by every probe pattern on S at magnitudes c_i/64 and c_i/128;
    S persists when every shifted class still has game rank >= r.
    """
    graph = D.graph
    if not rank_at_least(D, r):
        raise ValueError(f"divisor has rank below {r}; nothing to probe")
    if subset_limit is None:
        subset_limit = min(3, graph.genus)
    subset_limit = min(subset_limit, graph.genus)
    cls = class_coordinates(D)

    subset_results: dict = {}
    for size in range(1, subset_limit + 1):
        for subset in combinations(graph.loop_ids, size):
            per_mag = {}
            for mag in PROBE_MAGNITUDES:
                ok = True
                for pattern in PROBE_PATTERNS:
                    mu = list(cls.mu)
                    for j, lid in enumerate(subset):
                        i = graph.loop_index(lid)
                        c = graph.circumference(lid)
                        mu[i] = (mu[i] + pattern[j % len(pattern)] * mag * c) % c
                    shifted = DivisorClass(graph, cls.degree, tuple(mu))
                    if not rank_at_least(representative_from_class(graph, shifted), r):
                        ok = False
                        break
                per_mag[mag] = ok
            subset_results[subset] = per_mag

    persistent = [s for s, per_mag in subset_results.items() if all(per_mag.values())]
    best: tuple = ()
    for s in persistent:
        if len(s) > len(best):
            best = s
    return DimProbe(
        base_class=cls,
        r=r,
        persistent_directions=best,
        estimated_local_dim=len(best),
        subset_results=subset_results,
    )


# ---------------------------------------------------------------------------
# Brill-Noether rank bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BNRankBounds:
    """Bracketing of w^r_d by finite games.

    lower is certified against the candidate adversary family; upper comes
    from an explicit uncovered adversary (degree r + upper + 1) or the
    degree bound d - r.  upper_certified is False when the counterexample
    only defeats the searched cover family; widened means the budget ran out.
    """

    r: int
    d: int
    lower: int
    upper: int
    counterexample_E: Divisor | None
    upper_certified: bool
    widened: bool


def _adversary_pool(graph: CactusGraph) -> tuple:
    pool = []
    seen = set()
    for p in (graph.base_point,) + graph.wedge_points:
        if p not in seen:
            seen.add(p)
            pool.append(p)
    q = graph.base_point
    for lid in graph.loop_ids:
        special = {Fraction(0)}
        for child, off in graph.children_of(lid):
            special.add(off)
        if q.loop == lid:
            special.add(q.offset)
        for x in _generic_offsets(graph, lid, special):
            p = graph.canonical_point(lid, x)
            if p not in seen:
                seen.add(p)
                pool.append(p)
    return tuple(pool)


def _cover_pool(graph: CactusGraph, resolution: int = 8) -> tuple:
    pool = []
    seen = set()
    for p in (graph.base_point,) + graph.wedge_points:
        if p not in seen:
            seen.add(p)
            pool.append(p)
    for lid in graph.loop_ids:
        c = graph.circumference(lid)
        for j in range(resolution):
            p = graph.canonical_point(lid, c * Fraction(j, resolution))
            if p not in seen:
                seen.add(p)
                pool.append(p)
    return tuple(pool)


def bn_rank_bounds(
    graph: CactusGraph,
    r: int,
    d: int,
    budget: int = 200_000,
    cover_resolution: int = 8,
) -> BNRankBounds:
    """Bracket w^r_d: every candidate adversary E of degree r+k must be
    covered by some rank-r divisor E + X with X drawn from a grid pool.

    k grows until an adversary survives; the first failure yields the upper
    bound (certified only at k > d - r, where degrees alone forbid a cover),
    and the last fully-covered k the lower bound.  w = -1 (empty locus) is
    reported when even k = 0 fails.
    """
    if r < 0 or d < 0:
        raise ValueError("r and d must be nonnegative")
    adversaries = _adversary_pool(graph)
    covers = _cover_pool(graph, cover_resolution)

    checks = 0
    lower = -1
    upper = d - r
    counterexample = None
    upper_certified = True
    widened = False

    for k in range(0, d - r + 1):
        all_covered = True
        for e_points in combinations_with_replacement(adversaries, r + k):
            E = Divisor(graph, [(p, 1) for p in e_points])
            covered = False
            extra = d - (r + k)
            for x_points in combinations_with_replacement(covers, extra):
                checks += 1
                if checks > budget:
                    return BNRankBounds(
                        r=r,
                        d=d,
                        lower=lower,
                        upper=upper,
                        counterexample_E=None,
                        upper_certified=False,
                        widened=True,
                    )
                D = Divisor(graph, list(E.items()) + [(p, 1) for p in x_points])
                if rank_at_least(D, r):
                    covered = True
                    break
            if not covered:
                all_covered = False
                counterexample = E
                break
        if not all_covered:
            upper = k - 1
            # with no extra chips the only possible cover of E is E itself,
            # so a failure at k == d - r refutes rigorously; below that the
            # finite cover pool may just have missed a dominating divisor
            upper_certified = (d - (r + k)) == 0
            break
        lower = k

    return BNRankBounds(
        r=r,
        d=d,
        lower=lower,
        upper=upper,
        counterexample_E=counterexample,
        upper_certified=upper_certified,
        widened=widened,
    )
