"""Divisors, piecewise-linear functions, and Jacobian torus coordinates.

A divisor is a finite integer chip configuration on canonical points of a
cactus.  Linear equivalence is chip-firing equivalence: D ~ D' iff D - D' is
the divisor of a continuous piecewise-linear function with integer slopes.
On a tree of loops the degree-0 class group is the product of the loop
circles, so a class is pinned down exactly by its degree together with one
rational coordinate mu_i per loop: mu_i is the sum, mod the circumference
c_i, of the retractions of all chips onto loop i.  `class_coordinates` and
`representative_from_class` convert between divisors and these coordinates,
exactly and in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .graphs import CactusGraph, GraphFormatError, PointRef, format_rational, parse_rational


class Divisor:
    """An integer chip configuration on canonical points of a cactus.

    Immutable; keys are canonicalized and zero multiplicities dropped at
    construction, so equality of divisors is equality of metric chip maps.
    """

    __slots__ = ("graph", "_chips", "_degree")

    def __init__(self, graph: CactusGraph, chips=None):
        acc: dict[PointRef, int] = {}
        if chips:
            items = chips.items() if hasattr(chips, "items") else chips
            for key, mult in items:
                if mult == 0:
                    continue
                if isinstance(key, PointRef):
                    p = graph.canonical_point(key.loop, key.offset)
                else:
                    p = graph.canonical_point(key[0], key[1])
                acc[p] = acc.get(p, 0) + int(mult)
        self.graph = graph
        self._chips = {p: m for p, m in acc.items() if m != 0}
        self._degree = sum(self._chips.values())

    @classmethod
    def _from_canonical(cls, graph: CactusGraph, chips: dict) -> "Divisor":
        """Construct from an already-canonical, zero-free chip map."""
        d = object.__new__(cls)
        d.graph = graph
        d._chips = dict(chips)
        d._degree = sum(chips.values())
        return d

    @classmethod
    def zero(cls, graph: CactusGraph) -> "Divisor":
        return cls._from_canonical(graph, {})

    @property
    def degree(self) -> int:
        return self._degree

    @property
    def chips(self) -> dict:
        return dict(self._chips)

    @property
    def support(self) -> tuple[PointRef, ...]:
        return tuple(sorted(self._chips, key=self.graph.point_sort_key))

    def coefficient(self, point) -> int:
        if isinstance(point, PointRef):
            p = self.graph.canonical_point(point.loop, point.offset)
        else:
            p = self.graph.canonical_point(point[0], point[1])
        return self._chips.get(p, 0)

    def is_effective(self) -> bool:
        return all(m >= 0 for m in self._chips.values())

    def is_effective_away_from(self, v: PointRef) -> bool:
        v = self.graph.canonical_point(v.loop, v.offset)
        return all(m >= 0 for p, m in self._chips.items() if p != v)

    def items(self):
        return self._chips.items()

    def __iter__(self):
        return iter(self._chips.items())

    def __len__(self) -> int:
        return len(self._chips)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Divisor)
            and self.graph is other.graph
            and self._chips == other._chips
        )

    def __hash__(self) -> int:
        return hash((id(self.graph), frozenset(self._chips.items())))

    def __add__(self, other: "Divisor") -> "Divisor":
        return divisor_combine(self, other, 1, 1)

    def __sub__(self, other: "Divisor") -> "Divisor":
        return divisor_combine(self, other, 1, -1)

    def __neg__(self) -> "Divisor":
        return Divisor._from_canonical(self.graph, {p: -m for p, m in self._chips.items()})

    def __rmul__(self, k: int) -> "Divisor":
        if k == 0:
            return Divisor.zero(self.graph)
        return Divisor._from_canonical(self.graph, {p: k * m for p, m in self._chips.items()})

    def __repr__(self) -> str:
        body = ", ".join(f"{p}:{m}" for p, m in sorted(self._chips.items(), key=lambda kv: self.graph.point_sort_key(kv[0])))
        return f"Divisor({{{body}}})"


def point_divisor(graph: CactusGraph, p: PointRef, mult: int = 1) -> Divisor:
    """The divisor mult * (p)."""
    return Divisor(graph, {p: mult})


def divisor_combine(a: Divisor, b: Divisor, s: int, t: int) -> Divisor:
    """The pointwise integer combination s*a + t*b."""
    if a.graph is not b.graph:
        raise ValueError("divisors live on different graphs")
    out = {p: s * m for p, m in a._chips.items() if s * m != 0}
    for p, m in b._chips.items():
        new = out.get(p, 0) + t * m
        if new == 0:
            out.pop(p, None)
        else:
            out[p] = new
    return Divisor._from_canonical(a.graph, out)


def restrict(D: Divisor, loops) -> Divisor:
    """Keep the chips whose canonical point lies on one of the given loops.

    Wedge points count as lying on their most-ancestral (canonical) loop.
    """
    loops = set(loops)
    if not loops:
        raise ValueError("restriction needs a nonempty loop set")
    for lid in loops:
        if lid not in D.graph.loop_ids:
            raise ValueError(f"unknown loop id {lid!r}")
    return Divisor._from_canonical(
        D.graph, {p: m for p, m in D._chips.items() if p.loop in loops}
    )


@dataclass(frozen=True)
class DivisorClass:
    """Degree plus one torus coordinate per loop (in graph loop order).

    Two divisors are linearly equivalent iff their DivisorClass values agree.
    """

    graph: CactusGraph
    degree: int
    mu: tuple

    def key(self):
        return (self.degree, self.mu)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DivisorClass)
            and self.graph is other.graph
            and self.degree == other.degree
            and self.mu == other.mu
        )

    def __hash__(self) -> int:
        return hash((id(self.graph), self.degree, self.mu))

    def __str__(self) -> str:
        mus = ", ".join(
            f"mu_{lid}={format_rational(m)}" for lid, m in zip(self.graph.loop_ids, self.mu)
        )
        return f"[deg={self.degree}, {mus}]"


def class_coordinates(D: Divisor) -> DivisorClass:
    """Jacobian coordinates of a divisor: mu_i = sum of chip retractions mod c_i."""
    g = D.graph
    mu = []
    for lid in g.loop_ids:
        c = g.circumference(lid)
        total = Fraction(0)
        for p, m in D._chips.items():
            total += m * g.retract_point(p, lid)
        mu.append(total % c)
    return DivisorClass(g, D.degree, tuple(mu))


def free_chip_offsets(cls: DivisorClass) -> dict:
    """Per-loop offset of the free chip of the normal-form representative.

    The representative puts one chip at offset x_i on each loop i and the
    degree surplus (d - g) at the base point; x_i solves
        mu_i = x_i + sum_{j != i} w_ij + (d - g) * r_i(q)   (mod c_i)
    where w_ij is the wedge offset on loop i toward loop j and r_i(q) the
    retraction of the base point.
    """
    g = cls.graph
    d = cls.degree
    out = {}
    for i, lid in enumerate(g.loop_ids):
        c = g.circumference(lid)
        x = (cls.mu[i] - g._wedge_sums[lid] - (d - g.genus) * g._base_retract[lid]) % c
        out[lid] = x
    return out


def representative_from_class(graph: CactusGraph, cls: DivisorClass) -> Divisor:
    """A divisor with the given class: one chip per loop plus (d-g) at q."""
    if cls.graph is not graph:
        raise ValueError("class belongs to a different graph")
    for lid, m in zip(graph.loop_ids, cls.mu):
        if not (0 <= m < graph.circumference(lid)):
            raise ValueError(f"mu coordinate {m} outside [0, c) on loop {lid!r}")
    chips: dict[PointRef, int] = {}
    for lid, x in free_chip_offsets(cls).items():
        p = graph.canonical_point(lid, x)
        chips[p] = chips.get(p, 0) + 1
    surplus = cls.degree - graph.genus
    if surplus != 0:
        q = graph.base_point
        chips[q] = chips.get(q, 0) + surplus
    return Divisor._from_canonical(graph, {p: m for p, m in chips.items() if m != 0})


def canonical_divisor(graph: CactusGraph) -> Divisor:
    """The canonical divisor: (valence - 2) chips at every wedge point.

    A wedge where m + 1 loops meet has valence 2(m + 1), so it carries 2m
    chips; the total degree is 2*genus - 2, and a single loop gets the zero
    divisor.
    """
    chips = {w: 2 * len(graph.wedge_children(w)) for w in graph.wedge_points}
    return Divisor._from_canonical(graph, {p: m for p, m in chips.items() if m != 0})


class PLFunction:
    """A continuous piecewise-linear function with integer slopes.

    Per loop, a sorted list of (offset, value) breakpoints interpreted by
    linear interpolation around the circle.  A loop without breakpoints is
    constant, inheriting the value at its attachment point from the parent
    (the root defaults to 0).  Construction rejects non-integer slopes and
    value mismatches at wedge points.
    """

    def __init__(self, graph: CactusGraph, breakpoints: dict):
        self.graph = graph
        breaks: dict[str, tuple] = {}
        for lid, pts in breakpoints.items():
            if lid not in graph.loop_ids:
                raise ValueError(f"unknown loop id {lid!r}")
            c = graph.circumference(lid)
            cleaned = sorted((Fraction(o), Fraction(v)) for o, v in pts)
            offs = [o for o, _ in cleaned]
            if len(set(offs)) != len(offs):
                raise ValueError(f"duplicate breakpoint offsets on loop {lid!r}")
            if cleaned and not (0 <= offs[0] and offs[-1] < c):
                raise ValueError(f"breakpoint offsets outside [0, {c}) on loop {lid!r}")
            if cleaned:
                breaks[lid] = tuple(cleaned)
        self._breaks = breaks
        self._check_slopes()
        self._check_continuity()

    def _segments(self, lid: str):
        """Consecutive breakpoint pairs around the loop, including the wrap."""
        pts = self._breaks[lid]
        c = self.graph.circumference(lid)
        n = len(pts)
        for i in range(n):
            o1, v1 = pts[i]
            if i + 1 < n:
                o2, v2 = pts[i + 1]
            else:
                o2, v2 = pts[0][0] + c, pts[0][1]
            yield (o1, v1, o2, v2)

    def _check_slopes(self):
        for lid in self._breaks:
            for o1, v1, o2, v2 in self._segments(lid):
                if o2 == o1:  # single breakpoint: constant loop
                    continue
                slope = (v2 - v1) / (o2 - o1)
                if slope.denominator != 1:
                    raise ValueError(
                        f"non-integer slope {slope} on loop {lid!r} between offsets {o1} and {o2 % self.graph.circumference(lid)}"
                    )

    def _check_continuity(self):
        for w in self.graph.wedge_points:
            base = self.value_at(w.loop, w.offset)
            for child in self.graph.wedge_children(w):
                if self.value_at(child, Fraction(0)) != base:
                    raise ValueError(
                        f"discontinuity at wedge point {w}: loop {child!r} disagrees"
                    )

    def value_at(self, loop: str, offset) -> Fraction:
        """Evaluate the function at (loop, offset)."""
        c = self.graph.circumference(loop)
        off = Fraction(offset) % c
        pts = self._breaks.get(loop)
        if not pts:
            parent = self.graph.parent_of(loop)
            if parent is None:
                return Fraction(0)
            return self.value_at(parent[0], parent[1])
        if len(pts) == 1:
            return pts[0][1]
        for o1, v1, o2, v2 in self._segments(loop):
            x = off if off >= o1 else off + c
            if o1 <= x <= o2:
                return v1 + (v2 - v1) * (x - o1) / (o2 - o1)
        raise AssertionError("interpolation fell through")  # pragma: no cover

    def breakpoints(self, loop: str) -> tuple:
        return self._breaks.get(loop, ())


def divisor_of_function(f: PLFunction) -> Divisor:
    """div(f): at each point, the sum of the outgoing slopes of f.

    Only breakpoints can contribute (slopes cancel where f is locally
    linear), and on each loop the contributions telescope to zero, so the
    result always has degree 0.
    """
    g = f.graph
    chips: dict[PointRef, int] = {}
    for lid, pts in f._breaks.items():
        if len(pts) <= 1:
            continue
        segs = list(f._segments(lid))
        n = len(segs)
        for i in range(n):
            o1, v1, o2, v2 = segs[i]
            s_right = (v2 - v1) / (o2 - o1)
            po1, pv1, po2, pv2 = segs[(i - 1) % n]
            s_left = (pv2 - pv1) / (po2 - po1)
            ord_here = int(s_right - s_left)
            if ord_here != 0:
                p = g.canonical_point(lid, o1)
                chips[p] = chips.get(p, 0) + ord_here
    return Divisor._from_canonical(g, {p: m for p, m in chips.items() if m != 0})


def tent_function(graph: CactusGraph, loop: str, center, radius) -> PLFunction:
    """A unit tent on one loop: peak `radius` at `center`, zero outside.

    The support must avoid wrapping (radius < min(center, c - center)); any
    subtree glued inside the support inherits the tent value at its wedge,
    which keeps the function continuous with no extra breakpoints.
    """
    c = graph.circumference(loop)
    center, radius = Fraction(center), Fraction(radius)
    if not (0 < radius and radius < center and center + radius < c):
        raise ValueError("tent support must avoid the loop origin")
    return PLFunction(
        graph,
        {loop: [(center - radius, Fraction(0)), (center, radius), (center + radius, Fraction(0))]},
    )


def parse_divisor(graph: CactusGraph, text: str) -> Divisor:
    """Parse the line-oriented divisor file format.

        chip <loop-id> <offset p/q> <multiplicity>

    Repeated lines accumulate; `#` starts a comment.
    """
    chips: list[tuple[tuple[str, Fraction], int]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] != "chip" or len(fields) != 4:
            raise GraphFormatError(ln, f"expected 'chip <loop> <offset> <mult>', got {raw!r}")
        lid = fields[1]
        if lid not in graph.loop_ids:
            raise GraphFormatError(ln, f"unknown loop id {lid!r}")
        try:
            off = parse_rational(fields[2])
        except ValueError:
            raise GraphFormatError(ln, f"malformed rational {fields[2]!r}") from None
        try:
            mult = int(fields[3])
        except ValueError:
            raise GraphFormatError(ln, f"malformed multiplicity {fields[3]!r}") from None
        if mult == 0:
            raise GraphFormatError(ln, "multiplicity must be nonzero")
        chips.append(((lid, off), mult))
    return Divisor(graph, chips)


def serialize_divisor(D: Divisor) -> str:
    """Divisor file representation, chips sorted by (loop, offset)."""
    lines = [
        f"chip {p.loop} {format_rational(p.offset)} {m}"
        for p, m in sorted(D.items(), key=lambda kv: D.graph.point_sort_key(kv[0]))
    ]
    return "\n".join(lines) + ("\n" if lines else "")
