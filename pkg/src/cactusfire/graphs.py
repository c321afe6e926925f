"""Exact-rational tree-of-loops (cactus) metric graphs.

A cactus here is a wedge of circles glued along a tree pattern: every loop
except the root is attached to a parent loop at a single point, and all
circumferences and offsets are exact rationals.  Each loop carries a fixed
orientation; offsets on a loop are measured along that orientation starting
from the loop's own attachment point (for the root, from an arbitrary fixed
origin).  Every point of the graph is addressed as a (loop, offset) pair, and
a wedge point is always represented on the most-ancestral loop through it,
so point equality is decidable by comparing canonical forms.

No floating point is used anywhere: all geometry is `fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class GraphFormatError(ValueError):
    """Raised for malformed graph/divisor description files.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


def parse_rational(text: str) -> Fraction:
    """Parse `p` or `p/q` into an exact Fraction.

    Raises ValueError on anything else (including `q == 0`).
    """
    text = text.strip()
    if "/" in text:
        num_s, _, den_s = text.partition("/")
        num, den = int(num_s), int(den_s)
        if den == 0:
            raise ValueError(f"zero denominator in rational {text!r}")
        return Fraction(num, den)
    return Fraction(int(text))


def format_rational(x: Fraction) -> str:
    """Serialize a Fraction as `p/q`, omitting `/q` when q == 1."""
    return str(x)


@dataclass(frozen=True, order=True)
class PointRef:
    """A location on a cactus: a loop id plus a rational offset.

    Only canonical PointRefs (as produced by CactusGraph.canonical_point)
    compare meaningfully: two canonical refs are equal iff they denote the
    same metric point.
    """

    loop: str
    offset: Fraction

    def __str__(self) -> str:
        return f"{self.loop}:{format_rational(self.offset)}"


@dataclass(frozen=True)
class GraphStats:
    """Structural summary of a cactus.

    longest_loop_path counts loops on the longest simple path of the
    loop-adjacency tree (so a path of g loops scores g and any star scores
    3).  loop_distances holds tree distances in hops, and wedge_valences the
    number of arc-directions at each wedge point (2m when m loops meet).
    """

    genus: int
    longest_loop_path: int
    loop_distances: dict
    wedge_valences: dict


class CactusGraph:
    """A rooted tree of oriented loops with rational circumferences.

    Instances are immutable after construction and safe to share between
    threads; derived data (wedge points, retraction tables, distances) is
    precomputed once.  Mutating operations such as ``wedge_with_loop`` return
    new graphs and keep all existing PointRefs valid.
    """

    def __init__(self, loops, attachments, base_point=None):
        """Build and validate a cactus.

        loops: iterable of (loop_id, circumference) in declaration order.
        attachments: mapping child_id -> (parent_id, parent_offset).
        base_point: optional (loop_id, offset); defaults to the root origin.
        """
        self._loops: dict[str, Fraction] = {}
        for lid, circ in loops:
            circ = Fraction(circ)
            if lid in self._loops:
                raise ValueError(f"duplicate loop id {lid!r}")
            if circ <= 0:
                raise ValueError(f"loop {lid!r} has nonpositive circumference {circ}")
            self._loops[lid] = circ
        if not self._loops:
            raise ValueError("a cactus needs at least one loop")

        self._parent: dict[str, tuple[str, Fraction]] = {}
        for child, (parent, off) in attachments.items():
            if child not in self._loops:
                raise ValueError(f"attachment references unknown loop {child!r}")
            if parent not in self._loops:
                raise ValueError(f"attachment references unknown loop {parent!r}")
            off = Fraction(off)
            if not (0 <= off < self._loops[parent]):
                raise ValueError(
                    f"attachment offset {off} for {child!r} outside [0, {self._loops[parent]})"
                )
            self._parent[child] = (parent, off)

        roots = [lid for lid in self._loops if lid not in self._parent]
        if len(roots) == 0:
            raise ValueError("attachment cycle: every loop has a parent")
        if len(roots) > 1:
            raise ValueError(f"attachments do not form one tree; roots {roots}")
        self.root = roots[0]

        # walk each loop to the root to reject rho-shaped parent cycles
        for lid in self._loops:
            seen = {lid}
            cur = lid
            while cur != self.root:
                cur = self._parent[cur][0]
                if cur in seen:
                    raise ValueError(f"attachment cycle involving {cur!r}")
                seen.add(cur)

        self.loop_ids: tuple[str, ...] = tuple(self._loops)
        self._index = {lid: i for i, lid in enumerate(self.loop_ids)}
        self._children: dict[str, list[tuple[str, Fraction]]] = {lid: [] for lid in self.loop_ids}
        for child, (parent, off) in self._parent.items():
            self._children[parent].append((child, off))

        if base_point is None:
            self.base_point = PointRef(self.root, Fraction(0))
        else:
            lid, off = base_point
            self.base_point = self.canonical_point(lid, off)

        self._build_tables()
        self._caches: dict[str, dict] = {}

    # -- construction helpers -------------------------------------------------

    def _build_tables(self):
        # wedge points: canonical attachment point -> child loops glued there
        wedges: dict[PointRef, list[str]] = {}
        for child, (parent, off) in self._parent.items():
            w = self.canonical_point(parent, off)
            wedges.setdefault(w, []).append(child)
        self._wedges = {w: tuple(sorted(cs, key=self._index.__getitem__)) for w, cs in wedges.items()}

        # loop-tree adjacency, distances, and per-target first steps
        adj: dict[str, list[str]] = {lid: [] for lid in self.loop_ids}
        for child, (parent, _) in self._parent.items():
            adj[parent].append(child)
            adj[child].append(parent)
        self._adjacency = adj

        self._dist: dict[tuple[str, str], int] = {}
        self._retract: dict[tuple[str, str], Fraction] = {}
        for src in self.loop_ids:
            # BFS over the loop tree, remembering the first hop out of src
            dist = {src: 0}
            first: dict[str, str] = {}
            queue = [src]
            while queue:
                cur = queue.pop(0)
                for nxt in adj[cur]:
                    if nxt in dist:
                        continue
                    dist[nxt] = dist[cur] + 1
                    first[nxt] = nxt if cur == src else first[cur]
                    queue.append(nxt)
            for other, d in dist.items():
                self._dist[(src, other)] = d
                if other == src:
                    continue
                hop = first[other]
                if hop == self._parent.get(src, (None, None))[0]:
                    self._retract[(src, other)] = Fraction(0)
                else:
                    # hop is a child of src; exit through its attachment point
                    self._retract[(src, other)] = self._parent[hop][1]

        # per-loop sum of wedge offsets toward every other loop, and the
        # retraction of the base point, both used by the class coordinates
        self._wedge_sums = {
            lid: sum(
                (self._retract[(lid, other)] for other in self.loop_ids if other != lid),
                Fraction(0),
            )
            for lid in self.loop_ids
        }
        self._base_retract = {lid: self.retract_point(self.base_point, lid) for lid in self.loop_ids}

    # -- basic queries ---------------------------------------------------------

    @property
    def genus(self) -> int:
        return len(self._loops)

    def circumference(self, loop: str) -> Fraction:
        if loop not in self._loops:
            raise ValueError(f"unknown loop id {loop!r}")
        return self._loops[loop]

    def loop_index(self, loop: str) -> int:
        return self._index[loop]

    def parent_of(self, loop: str):
        """(parent_id, parent_offset) for a non-root loop, else None."""
        return self._parent.get(loop)

    def children_of(self, loop: str) -> tuple[tuple[str, Fraction], ...]:
        return tuple(self._children[loop])

    @property
    def wedge_points(self) -> tuple[PointRef, ...]:
        return tuple(sorted(self._wedges, key=self.point_sort_key))

    def wedge_children(self, w: PointRef) -> tuple[str, ...]:
        return self._wedges.get(w, ())

    def point_sort_key(self, p: PointRef):
        return (self._index[p.loop], p.offset)

    def cache(self, name: str) -> dict:
        """A per-graph memo table; writers must be idempotent."""
        return self._caches.setdefault(name, {})

    # -- geometry ---------------------------------------------------------------

    def canonical_point(self, loop: str, offset) -> PointRef:
        """Reduce offset mod circumference and hoist wedge points.

        Offset 0 on a non-root loop denotes the attachment point, which is
        re-expressed on the parent (recursively, so canonical wedge points
        live on the most-ancestral loop through them).
        """
        if loop not in self._loops:
            raise ValueError(f"unknown loop id {loop!r}")
        off = Fraction(offset) % self._loops[loop]
        while off == 0 and loop != self.root:
            loop, off = self._parent[loop]
        return PointRef(loop, off)

    def retract_point(self, p: PointRef, target: str) -> Fraction:
        """Offset on `target` of the retraction of p onto that loop.

        Collapsing every branch hanging off `target` to its attachment point
        is a deformation retraction of the graph onto the loop; the image of
        p is the wedge through which the tree path from `target` reaches p.
        """
        if target not in self._loops:
            raise ValueError(f"unknown loop id {target!r}")
        if p.loop == target:
            return p.offset
        return self._retract[(target, p.loop)]

    def loop_distance(self, a: str, b: str) -> int:
        return self._dist[(a, b)]

    def loops_through(self, p: PointRef) -> tuple[str, ...]:
        """All loops containing the (canonical) point p."""
        return (p.loop,) + self._wedges.get(p, ())

    def longest_path_loops(self) -> tuple[str, ...]:
        """Loop ids along one longest simple path of the loop tree.

        Deterministic: endpoints are the lexicographically-least (by
        declaration index) pair realizing the maximum tree distance.
        """
        best = None
        for a in self.loop_ids:
            for b in self.loop_ids:
                d = self._dist[(a, b)]
                key = (-d, self._index[a], self._index[b])
                if best is None or key < best[0]:
                    best = (key, a, b)
        _, a, b = best
        # reconstruct the a..b path by BFS parents
        prev = {a: None}
        queue = [a]
        while queue:
            cur = queue.pop(0)
            for nxt in self._adjacency[cur]:
                if nxt not in prev:
                    prev[nxt] = cur
                    queue.append(nxt)
        path = [b]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        path.reverse()
        return tuple(path)

    # -- reduction support -------------------------------------------------------

    def reduction_plan(self, v_loop: str):
        """Leaf-to-root processing order for reductions toward a point on v_loop.

        Returns a tuple of (loop_id, exit_offset) with loops ordered by
        decreasing tree distance from v_loop; exit_offset is the offset on
        the loop of the wedge through which chips leave toward v_loop, and is
        None for v_loop itself (the caller supplies the target offset there).
        """
        memo = self.cache("reduction_plan")
        if v_loop in memo:
            return memo[v_loop]
        if v_loop not in self._loops:
            raise ValueError(f"unknown loop id {v_loop!r}")
        order = [v_loop]
        hop_parent = {v_loop: None}
        queue = [v_loop]
        while queue:
            cur = queue.pop(0)
            for nxt in self._adjacency[cur]:
                if nxt not in hop_parent:
                    hop_parent[nxt] = cur
                    order.append(nxt)
                    queue.append(nxt)
        plan = []
        for loop in reversed(order):
            toward = hop_parent[loop]
            if toward is None:
                plan.append((loop, None))
            elif self._parent.get(loop, (None, None))[0] == toward:
                plan.append((loop, Fraction(0)))
            else:
                # the v-side neighbor is one of this loop's own children
                plan.append((loop, self._parent[toward][1]))
        memo[v_loop] = tuple(plan)
        return memo[v_loop]

    # -- serialization -------------------------------------------------------------

    def to_text(self) -> str:
        """Graph file representation (see parse_graph)."""
        lines = [f"loop {lid} {format_rational(c)}" for lid, c in self._loops.items()]
        for child, (parent, off) in self._parent.items():
            lines.append(f"attach {child} {parent} {format_rational(off)}")
        if self.base_point != PointRef(self.root, Fraction(0)):
            lines.append(
                f"basepoint {self.base_point.loop} {format_rational(self.base_point.offset)}"
            )
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return f"CactusGraph(genus={self.genus}, root={self.root!r})"


def canonical_point(graph: CactusGraph, loop: str, offset) -> PointRef:
    """Functional alias for CactusGraph.canonical_point."""
    return graph.canonical_point(loop, offset)


def retract_point(graph: CactusGraph, p: PointRef, target: str) -> Fraction:
    """Functional alias for CactusGraph.retract_point."""
    return graph.retract_point(p, target)


def graph_stats(graph: CactusGraph) -> GraphStats:
    """Genus, longest loop path, loop distances and wedge valences."""
    longest = 1
    for (a, b), d in graph._dist.items():
        longest = max(longest, d + 1)
    valences = {w: 2 * (len(graph.wedge_children(w)) + 1) for w in graph.wedge_points}
    return GraphStats(
        genus=graph.genus,
        longest_loop_path=longest,
        loop_distances=dict(graph._dist),
        wedge_valences=valences,
    )


def wedge_with_loop(graph: CactusGraph, at: PointRef, circumference, new_id: str | None = None) -> CactusGraph:
    """Glue a fresh loop onto the graph at the point `at`.

    Genus goes up by one; loop ids, offsets and the base point are carried
    over unchanged, so PointRefs into the old graph stay valid on the result.
    """
    circumference = Fraction(circumference)
    if circumference <= 0:
        raise ValueError(f"nonpositive circumference {circumference}")
    host = graph.canonical_point(at.loop, at.offset)
    if new_id is None:
        n = graph.genus + 1
        new_id = f"w{n}"
        while new_id in graph._loops:
            n += 1
            new_id = f"w{n}"
    elif new_id in graph._loops:
        raise ValueError(f"loop id {new_id!r} already in use")
    loops = list(graph._loops.items()) + [(new_id, circumference)]
    attachments = dict(graph._parent)
    attachments[new_id] = (host.loop, host.offset)
    base = (graph.base_point.loop, graph.base_point.offset)
    return CactusGraph(loops, attachments, base_point=base)


def parse_graph(text: str) -> CactusGraph:
    """Parse the line-oriented graph file format.

        loop <id> <circumference p/q>
        attach <child-id> <parent-id> <offset p/q>
        basepoint <loop-id> <offset p/q>     (optional)

    `#` starts a comment.  The root is the unique loop never appearing as a
    child.  Every format violation is reported with its line number.
    """
    loops: dict[str, tuple[Fraction, int]] = {}
    attach: dict[str, tuple[str, Fraction, int]] = {}
    base: tuple[str, Fraction, int] | None = None

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "loop":
            if len(fields) != 3:
                raise GraphFormatError(ln, f"expected 'loop <id> <circumference>', got {raw!r}")
            lid = fields[1]
            if lid in loops:
                raise GraphFormatError(ln, f"duplicate loop id {lid!r}")
            try:
                circ = parse_rational(fields[2])
            except ValueError:
                raise GraphFormatError(ln, f"malformed rational {fields[2]!r}") from None
            if circ <= 0:
                raise GraphFormatError(ln, f"circumference must be positive, got {circ}")
            loops[lid] = (circ, ln)
        elif kind == "attach":
            if len(fields) != 4:
                raise GraphFormatError(ln, f"expected 'attach <child> <parent> <offset>', got {raw!r}")
            child, parent = fields[1], fields[2]
            if child in attach:
                raise GraphFormatError(ln, f"loop {child!r} attached twice")
            try:
                off = parse_rational(fields[3])
            except ValueError:
                raise GraphFormatError(ln, f"malformed rational {fields[3]!r}") from None
            attach[child] = (parent, off, ln)
        elif kind == "basepoint":
            if len(fields) != 3:
                raise GraphFormatError(ln, f"expected 'basepoint <loop> <offset>', got {raw!r}")
            if base is not None:
                raise GraphFormatError(ln, "duplicate basepoint line")
            try:
                off = parse_rational(fields[2])
            except ValueError:
                raise GraphFormatError(ln, f"malformed rational {fields[2]!r}") from None
            base = (fields[1], off, ln)
        else:
            raise GraphFormatError(ln, f"unknown directive {kind!r}")

    if not loops:
        raise GraphFormatError(1, "no loops declared")

    for child, (parent, off, ln) in attach.items():
        if child not in loops:
            raise GraphFormatError(ln, f"attach references undeclared loop {child!r}")
        if parent not in loops:
            raise GraphFormatError(ln, f"attach references undeclared loop {parent!r}")
        if not (0 <= off < loops[parent][0]):
            raise GraphFormatError(
                ln, f"offset {off} outside [0, {loops[parent][0]}) on loop {parent!r}"
            )

    roots = [lid for lid in loops if lid not in attach]
    if not roots:
        # every loop is someone's child: the attachments contain a cycle
        start = next(iter(attach))
        seen = {start}
        cur = start
        while True:
            cur = attach[cur][0]
            if cur in seen:
                raise GraphFormatError(attach[cur][2], f"attachment cycle involving {cur!r}")
            seen.add(cur)
    if len(roots) > 1:
        extra = roots[1]
        raise GraphFormatError(loops[extra][1], f"multiple root loops {roots}; attachments must form one tree")
    root = roots[0]
    for lid in loops:
        seen = {lid}
        cur = lid
        while cur != root:
            nxt = attach[cur][0]
            if nxt in seen:
                raise GraphFormatError(attach[cur][2], f"attachment cycle involving {nxt!r}")
            seen.add(nxt)
            cur = nxt

    base_point = None
    if base is not None:
        blid, boff, bln = base
        if blid not in loops:
            raise GraphFormatError(bln, f"basepoint references undeclared loop {blid!r}")
        if not (0 <= boff < loops[blid][0]):
            raise GraphFormatError(bln, f"basepoint offset {boff} outside [0, {loops[blid][0]})")
        base_point = (blid, boff)

    return CactusGraph(
        [(lid, circ) for lid, (circ, _) in loops.items()],
        {child: (parent, off) for child, (parent, off, _) in attach.items()},
        base_point=base_point,
    )
