"""Reduced divisors on cacti: closed form, Dhar burning, and iterated firing.

A divisor is v-reduced when it is effective away from v and no closed set
avoiding v can fire without going negative; every class has exactly one such
representative.  This module computes it two independent ways:

* `q_reduce` sweeps the loop tree from the leaves toward v, putting each
  loop's accumulated chips into circle normal form toward its exit wedge
  (closed-form arithmetic per loop).
* `reduce_by_burning` plays the actual chip-firing game: it first restores
  effectiveness away from v with elementary principal moves, then repeatedly
  fires the maximal unburnt set found by Dhar's burning algorithm, advancing
  fire fronts event to event.

Both return identical chip maps (and a third, integer-subdivision reducer in
`discrete` gives the same answer again); that agreement is checked by the
test suite rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .divisors import Divisor
from .graphs import CactusGraph, PointRef


class BurnPreconditionError(ValueError):
    """Dhar burning needs the divisor effective away from the fire source."""


class IterationCapError(RuntimeError):
    """The firing loop exceeded its cap; rational data should terminate, so
    this signals a defect, not a bad input."""


@dataclass(frozen=True)
class BurnReport:
    """Outcome of one Dhar burn.

    unburnt_arcs are closed arcs (loop, start, end) running from start to end
    in the loop orientation (start == end means the whole loop);
    blocking_points maps each unburnt point to (chips, arriving burnt
    directions).  fully_burnt iff nothing survived, which certifies
    v-reducedness for divisors effective away from v.
    """

    fully_burnt: bool
    unburnt_points: tuple
    unburnt_arcs: tuple
    blocking_points: dict

    @property
    def isolated_points(self) -> tuple:
        on_arcs = set()
        for loop, start, end in self.unburnt_arcs:
            on_arcs.add((loop, start))
            on_arcs.add((loop, end))
        return tuple(p for p in self.unburnt_points if not self._touches(p, on_arcs))

    def _touches(self, p: PointRef, on_arcs) -> bool:
        return any((loop, off) in on_arcs for loop, off in [(p.loop, p.offset)]) or any(
            key[1] == p.offset and key[0] == p.loop for key in on_arcs
        )


def circle_reduce(circumference, chips, v) -> dict:
    """Normal form of a chip configuration on a single circle, toward v.

    With total degree d and position sum mu (mod c), the unique v-reduced
    equivalent is d*(v) when mu == d*v, else (d-1)*(v) + (p) with
    p == mu - (d-1)*v; this holds for every degree, including nonpositive
    ones.  Returns the chip map as {offset: multiplicity}.
    """
    c = Fraction(circumference)
    if c <= 0:
        raise ValueError("circumference must be positive")
    v = Fraction(v) % c
    d = 0
    mu = Fraction(0)
    for off, m in chips:
        d += m
        mu += m * Fraction(off)
    mu %= c
    out: dict[Fraction, int] = {}
    if (mu - d * v) % c == 0:
        if d != 0:
            out[v] = d
        return out
    p = (mu - (d - 1) * v) % c
    if d - 1 != 0:
        out[v] = d - 1
    out[p] = out.get(p, 0) + 1
    return out


def _gather_on_loop(graph: CactusGraph, W: dict, loop: str, exit_point: PointRef):
    """Chips of W lying on `loop`, as (offset-on-loop, mult, key) triples.

    A canonical point lies on `loop` iff its canonical loop is `loop` or it
    is the loop's own attachment point; the exit point is excluded, since its
    chips belong to the next loop toward v.
    """
    origin = graph.canonical_point(loop, 0)
    out = []
    for p, m in W.items():
        if p == exit_point:
            continue
        if p.loop == loop:
            out.append((p.offset, m, p))
        elif p == origin:
            out.append((Fraction(0), m, p))
    return out


def q_reduce(D: Divisor, v: PointRef) -> Divisor:
    """The unique v-reduced divisor equivalent to D (closed-form sweep).

    Loops are processed by decreasing tree distance from v's loop; each
    loop's accumulated chips are circle-reduced toward its exit wedge, the
    (d-1)-pile lands on the exit point (feeding the next loop), and v's own
    loop is reduced last, toward v itself.  The result is effective away
    from v with at most one free chip per loop, and the class is preserved.
    """
    graph = D.graph
    v = graph.canonical_point(v.loop, v.offset)
    W = dict(D._chips)
    for loop, exit_off in graph.reduction_plan(v.loop):
        if exit_off is None:
            exit_off = v.offset
        exit_point = graph.canonical_point(loop, exit_off)
        gathered = _gather_on_loop(graph, W, loop, exit_point)
        if not gathered:
            continue
        for _, _, key in gathered:
            del W[key]
        reduced = circle_reduce(
            graph.circumference(loop), [(o, m) for o, m, _ in gathered], exit_off
        )
        for off, m in reduced.items():
            p = graph.canonical_point(loop, off)
            new = W.get(p, 0) + m
            if new == 0:
                W.pop(p, None)
            else:
                W[p] = new
    return Divisor._from_canonical(graph, W)


# ---------------------------------------------------------------------------
# Dhar burning on the metric graph
# ---------------------------------------------------------------------------


class _SiteGraph:
    """Finite model of the cactus for burning: marked points and gap arcs.

    Marked offsets on each loop are its origin, its child attachments, the
    chips of the divisor, and v; consecutive marks bound arcs with no events
    inside, so fire crossing into an arc always reaches the far endpoint.
    """

    def __init__(self, graph: CactusGraph, chips: dict, v: PointRef):
        self.graph = graph
        marks: dict[str, set] = {lid: {Fraction(0)} for lid in graph.loop_ids}
        for child in graph.loop_ids:
            parent = graph.parent_of(child)
            if parent is not None:
                marks[parent[0]].add(parent[1])
        for p in chips:
            marks[p.loop].add(p.offset)
        marks[v.loop].add(v.offset)

        # edges: (loop, start, end, p_start, p_end, length); self-arcs allowed
        self.edges = []
        self.incidence: dict[PointRef, list] = {}
        for lid in graph.loop_ids:
            c = graph.circumference(lid)
            offs = sorted(marks[lid])
            n = len(offs)
            for i, o1 in enumerate(offs):
                o2 = offs[(i + 1) % n]
                length = (o2 - o1) % c
                if length == 0:
                    length = c
                p1 = graph.canonical_point(lid, o1)
                p2 = graph.canonical_point(lid, o2)
                idx = len(self.edges)
                self.edges.append((lid, o1, o2, p1, p2, length))
                self.incidence.setdefault(p1, []).append((idx, 0))
                self.incidence.setdefault(p2, []).append((idx, 1))
        self.vertices = set(self.incidence)

    def other_end(self, idx: int, end: int) -> PointRef:
        edge = self.edges[idx]
        return edge[4] if end == 0 else edge[3]

    def burn(self, chips: dict, v: PointRef):
        """Fire from v; returns (burnt set, arriving-direction counts)."""
        burnt = {v}
        arrived: dict[PointRef, int] = {}
        queue = [v]
        while queue:
            b = queue.pop()
            for idx, end in self.incidence.get(b, ()):
                other = self.other_end(idx, end)
                if other in burnt:
                    continue
                arrived[other] = arrived.get(other, 0) + 1
                if arrived[other] > chips.get(other, 0):
                    burnt.add(other)
                    queue.append(other)
        return burnt, arrived


def _burn_state(graph: CactusGraph, chips: dict, v: PointRef):
    site = _SiteGraph(graph, chips, v)
    burnt, arrived = site.burn(chips, v)
    return site, burnt, arrived


def dhar_burn(D: Divisor, v: PointRef) -> BurnReport:
    """Simulate fire spreading from v through the metric graph.

    Fire passes a point only once more burnt directions arrive than the
    point has chips.  For divisors effective away from v, full burning is
    equivalent to v-reducedness; otherwise the unburnt set is a maximal
    closed set that can fire without losing effectiveness.
    """
    graph = D.graph
    v = graph.canonical_point(v.loop, v.offset)
    for p, m in D.items():
        if m < 0 and p != v:
            raise BurnPreconditionError(
                f"divisor has a negative chip at {p} away from {v}; burning undefined"
            )
    site, burnt, arrived = _burn_state(graph, D._chips, v)
    unburnt = sorted(site.vertices - burnt, key=graph.point_sort_key)
    unburnt_set = set(unburnt)
    arcs = []
    for lid, o1, o2, p1, p2, _length in site.edges:
        if p1 in unburnt_set and p2 in unburnt_set:
            arcs.append((lid, o1, o2))
    arcs.sort(key=lambda a: (graph.loop_index(a[0]), a[1], a[2]))
    blocking = {p: (D._chips.get(p, 0), arrived.get(p, 0)) for p in unburnt}
    return BurnReport(
        fully_burnt=not unburnt,
        unburnt_points=tuple(unburnt),
        unburnt_arcs=tuple(arcs),
        blocking_points=blocking,
    )


# ---------------------------------------------------------------------------
# Game-based reducer
# ---------------------------------------------------------------------------


def _slide_moves_phase(graph: CactusGraph, W: dict, v: PointRef, stats: dict):
    """Make W effective away from v using elementary principal moves.

    Working leaf-to-root toward v, chips on one loop are combined by the two
    legal pair moves on a circle (two like chips sliding oppositely, or a
    chip/anti-chip pair marching together) until at most one unit chip is
    left in the loop interior; a leftover anti-chip is cancelled by sliding
    a fresh pair out of the exit point.  Every step adds a principal divisor
    of the circle (degree 0 and position sum 0 mod c), so the class never
    changes; each step also strictly shrinks the interior chip mass, so the
    pass terminates.
    """

    def bump(point: PointRef, delta: int):
        new = W.get(point, 0) + delta
        if new == 0:
            W.pop(point, None)
        else:
            W[point] = new

    for loop, exit_off in graph.reduction_plan(v.loop):
        if exit_off is None:
            exit_off = v.offset
        c = graph.circumference(loop)
        exit_point = graph.canonical_point(loop, exit_off)
        gathered = _gather_on_loop(graph, W, loop, exit_point)
        if all(m >= 0 for _, m, _ in gathered):
            continue
        # local picture: positions relative to the exit, interior in (0, c)
        interior: dict[Fraction, int] = {}
        exit_pile = 0
        for off, m, key in gathered:
            del W[key]
            u = (off - exit_off) % c
            if u == 0:
                exit_pile += m
            else:
                interior[u] = interior.get(u, 0) + m

        def drop(u: Fraction, delta: int):
            nonlocal exit_pile
            if u % c == 0:
                exit_pile += delta
            else:
                new = interior.get(u, 0) + delta
                if new == 0:
                    interior.pop(u, None)
                else:
                    interior[u] = new

        while True:
            sites = sorted(u for u, m in interior.items() if m != 0)
            mass = sum(abs(m) for m in interior.values())
            if mass == 0:
                break
            if mass == 1:
                u = sites[0]
                if interior[u] > 0:
                    break
                # lone anti-chip: slide a +pair out of the exit; one half
                # lands on it, the other stays at the mirror position
                exit_pile -= 2
                drop(u, 1)
                drop((c - u) % c, 1)
                stats["phase1_moves"] = stats.get("phase1_moves", 0) + 1
                break
            heavy = next((u for u in sites if abs(interior[u]) >= 2), None)
            if heavy is not None:
                sgn = 1 if interior[heavy] > 0 else -1
                drop(heavy, -2 * sgn)
                drop(Fraction(0), sgn)
                drop((2 * heavy) % c, sgn)
            else:
                pos = [u for u in sites if interior[u] > 0]
                neg = [u for u in sites if interior[u] < 0]
                if len(pos) >= 2:
                    u1, u2 = pos[0], pos[1]
                    drop(u1, -1)
                    drop(u2, -1)
                    drop(Fraction(0), 1)
                    drop((u1 + u2) % c, 1)
                elif len(neg) >= 2:
                    u1, u2 = neg[0], neg[1]
                    drop(u1, 1)
                    drop(u2, 1)
                    drop(Fraction(0), -1)
                    drop((u1 + u2) % c, -1)
                else:
                    up, un = pos[0], neg[0]
                    drop(up, -1)
                    drop(Fraction(0), 1)
                    drop(un, 1)
                    drop((un - up) % c, -1)
            stats["phase1_moves"] = stats.get("phase1_moves", 0) + 1

        if exit_pile != 0:
            bump(exit_point, exit_pile)
        for u, m in interior.items():
            if m != 0:
                bump(graph.canonical_point(loop, (exit_off + u) % c), m)


def reduce_by_burning(D: Divisor, v: PointRef, max_iterations: int | None = None, stats: dict | None = None) -> Divisor:
    """Reduce toward v by playing the chip-firing game.

    Phase one restores effectiveness away from v with elementary principal
    moves (no-op when D already qualifies); phase two repeatedly runs Dhar's
    burning algorithm and fires the surviving closed set, each front
    advancing by the full gap to the next chip or wedge site.  Agrees with
    `q_reduce` exactly; the iteration cap exists only to turn a termination
    bug into a loud failure.
    """
    graph = D.graph
    v = graph.canonical_point(v.loop, v.offset)
    if stats is None:
        stats = {}
    stats.setdefault("phase1_moves", 0)
    stats.setdefault("firings", 0)

    W = dict(D._chips)
    if any(m < 0 and p != v for p, m in W.items()):
        _slide_moves_phase(graph, W, v, stats)
        assert all(m >= 0 or p == v for p, m in W.items())

    chip_mass = sum(abs(m) for m in W.values())
    cap = max_iterations if max_iterations is not None else 10 * (chip_mass + graph.genus) ** 2

    iterations = 0
    while True:
        site, burnt, _arrived = _burn_state(graph, W, v)
        unburnt = site.vertices - burnt
        if not unburnt:
            break
        iterations += 1
        if iterations > cap:
            raise IterationCapError(
                f"burn-and-fire exceeded {cap} iterations; this is a bug, not bad input"
            )
        # boundary directions: edge-ends at unburnt vertices whose far side burnt
        fires = []
        for u in unburnt:
            for idx, end in site.incidence.get(u, ()):
                other = site.other_end(idx, end)
                if other in burnt:
                    lid, o1, o2, _p1, _p2, length = site.edges[idx]
                    start = o1 if end == 0 else o2
                    sgn = 1 if end == 0 else -1
                    fires.append((u, lid, start, sgn, length))
        step = min(f[4] for f in fires)
        for u, lid, start, sgn, _length in fires:
            c = graph.circumference(lid)
            landing = graph.canonical_point(lid, (start + sgn * step) % c)
            W[u] = W.get(u, 0) - 1
            if W[u] == 0:
                del W[u]
            W[landing] = W.get(landing, 0) + 1
            if W[landing] == 0:
                del W[landing]
        stats["firings"] += 1

    return Divisor._from_canonical(graph, W)
