"""Integer-graph reduction oracle via scaling and subdivision.

Clearing denominators with M = lcm of every rational in sight (circumference,
attachment, chip and target offsets) turns the cactus into a finite
multigraph whose edges all have length 1/M: loop i becomes a cycle on
M * c_i nodes, wedge points become shared nodes, and every chip sits on a
node.  Reducing on that multigraph with the textbook two-phase integer
algorithm (ball firings to restore effectiveness, then iterated discrete
Dhar) and mapping node chips back to rational offsets gives a third,
independent computation of the v-reduced divisor.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .divisors import Divisor
from .graphs import CactusGraph, PointRef
from .reduction import IterationCapError


def _scale_denominator(graph: CactusGraph, D: Divisor, v: PointRef) -> int:
    dens = []
    for lid in graph.loop_ids:
        dens.append(graph.circumference(lid).denominator)
        parent = graph.parent_of(lid)
        if parent is not None:
            dens.append(parent[1].denominator)
    for p in D._chips:
        dens.append(p.offset.denominator)
    dens.append(v.offset.denominator)
    return lcm(*dens)


class _UnitGraph:
    """The subdivided multigraph: nodes are canonical points at offsets k/M."""

    def __init__(self, graph: CactusGraph, M: int):
        self.graph = graph
        self.M = M
        self.nodes: list[PointRef] = []
        seen = set()
        self.adj: dict[PointRef, list[PointRef]] = {}
        for lid in graph.loop_ids:
            n = graph.circumference(lid) * M
            if n.denominator != 1:
                raise ValueError("scale does not clear the circumference")
            n = int(n)
            ring = [graph.canonical_point(lid, Fraction(k, M)) for k in range(n)]
            for p in ring:
                if p not in seen:
                    seen.add(p)
                    self.nodes.append(p)
                    self.adj[p] = []
            for k in range(n):
                a, b = ring[k], ring[(k + 1) % n]
                self.adj[a].append(b)
                self.adj[b].append(a)

    def bfs_distances(self, v: PointRef) -> dict:
        dist = {v: 0}
        queue = [v]
        while queue:
            cur = queue.pop(0)
            for nxt in self.adj[cur]:
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
        return dist

    def fire_set(self, chips: dict, members: set, times: int = 1):
        """Fire every node of `members` simultaneously, `times` times over."""
        if times <= 0:
            return
        for a in members:
            for b in self.adj[a]:
                if b not in members:
                    chips[a] = chips.get(a, 0) - times
                    chips[b] = chips.get(b, 0) + times

    def burn(self, chips: dict, v: PointRef):
        burnt = {v}
        arrived: dict[PointRef, int] = {}
        queue = [v]
        while queue:
            b = queue.pop()
            for other in self.adj[b]:
                if other in burnt or other == b:
                    continue
                arrived[other] = arrived.get(other, 0) + 1
                if arrived[other] > chips.get(other, 0):
                    burnt.add(other)
                    queue.append(other)
        return burnt, arrived


def discrete_reduce(D: Divisor, v: PointRef, max_rounds: int | None = None) -> Divisor:
    """v-reduced divisor computed on the scaled, subdivided integer graph."""
    graph = D.graph
    v = graph.canonical_point(v.loop, v.offset)
    M = _scale_denominator(graph, D, v)
    unit = _UnitGraph(graph, M)
    chips = dict(D._chips)

    # phase A: restore effectiveness away from v by firing balls around v,
    # fixing shells outside-in so already-clean shells stay untouched
    dist = unit.bfs_distances(v)
    if any(m < 0 and p != v for p, m in chips.items()):
        max_d = max(dist.values())
        for k in range(max_d, 0, -1):
            shell = [p for p in unit.nodes if dist[p] == k]
            deficit = max((-chips.get(p, 0) for p in shell), default=0)
            if deficit > 0:
                ball = {p for p in unit.nodes if dist[p] < k}
                unit.fire_set(chips, ball, times=deficit)
    assert all(m >= 0 or p == v for p, m in chips.items())

    # phase B: iterated discrete Dhar; fire the unburnt set as many times as
    # effectiveness allows before burning again
    cap = max_rounds if max_rounds is not None else 10 * (sum(abs(m) for m in chips.values()) + len(unit.nodes)) ** 2
    rounds = 0
    while True:
        burnt, _arrived = unit.burn(chips, v)
        unburnt = {p for p in unit.nodes if p not in burnt}
        if not unburnt:
            break
        rounds += 1
        if rounds > cap:
            raise IterationCapError(f"discrete reduction exceeded {cap} rounds")
        times = None
        for a in unburnt:
            outdeg = sum(1 for b in unit.adj[a] if b not in unburnt)
            if outdeg:
                allowed = chips.get(a, 0) // outdeg
                times = allowed if times is None else min(times, allowed)
        unit.fire_set(chips, unburnt, times=max(1, times or 1))

    return Divisor._from_canonical(graph, {p: m for p, m in chips.items() if m != 0})
