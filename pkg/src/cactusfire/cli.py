"""Command-line front end.

Exit codes: 0 success/verified, 1 verification failed, 2 input or usage
error, 3 resource cap exceeded.  All randomized commands derive from a
single --seed flag (default 0) and identical invocations produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from .brill_noether import ResourceCapError, bn_rank_bounds, local_dim_probe, rho, stratified_scan
from .divisors import (
    Divisor,
    class_coordinates,
    canonical_divisor,
    parse_divisor,
    representative_from_class,
    serialize_divisor,
    DivisorClass,
)
from .graphs import (
    CactusGraph,
    GraphFormatError,
    PointRef,
    format_rational,
    graph_stats,
    parse_graph,
    parse_rational,
    wedge_with_loop,
)
from .ranks import rank, riemann_roch_residual
from .reduction import BurnPreconditionError, dhar_burn, q_reduce
from .verifiers import (
    verify_lemma_w13,
    verify_oracle_check,
    verify_prop_weak,
    verify_rank_sandwich,
    verify_rr_random,
    verify_tree_chain,
    verify_wedge_dim,
)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE_CAP = 3


class UsageError(ValueError):
    pass


def _load_graph(path: str) -> CactusGraph:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_graph(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read graph file: {exc}") from exc


def _load_divisor(graph: CactusGraph, path: str) -> Divisor:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_divisor(graph, fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read divisor file: {exc}") from exc


def _parse_point(graph: CactusGraph, text: str) -> PointRef:
    loop, sep, off = text.partition(":")
    if not sep:
        raise UsageError(f"point must be written loop:offset, got {text!r}")
    try:
        offset = parse_rational(off)
    except ValueError:
        raise UsageError(f"malformed rational {off!r}") from None
    return graph.canonical_point(loop, offset)


def _write_output(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _reduced_text(graph: CactusGraph, reduced: Divisor) -> str:
    cls = class_coordinates(reduced)
    lines = [f"# degree {cls.degree}"]
    for lid, mu in zip(graph.loop_ids, cls.mu):
        lines.append(f"# mu_{lid} {format_rational(mu)}")
    body = serialize_divisor(reduced)
    return "\n".join(lines) + "\n" + body


def _cmd_info(args) -> int:
    graph = _load_graph(args.graph)
    stats = graph_stats(graph)
    out = [
        f"genus={stats.genus}",
        f"root={graph.root}",
        f"basepoint={graph.base_point}",
        f"longest_loop_path={stats.longest_loop_path}",
    ]
    for lid in graph.loop_ids:
        out.append(f"loop {lid} circumference={format_rational(graph.circumference(lid))}")
    for w in graph.wedge_points:
        out.append(f"wedge {w} valence={stats.wedge_valences[w]}")
    out.append(f"canonical_divisor: {serialize_divisor(canonical_divisor(graph)).strip() or '(zero)'}")
    _write_output("\n".join(out) + "\n", args.out)
    return EXIT_OK


def _cmd_reduce(args) -> int:
    graph = _load_graph(args.graph)
    D = _load_divisor(graph, args.divisor)
    base = _parse_point(graph, args.base) if args.base else graph.base_point
    reduced = q_reduce(D, base)
    _write_output(_reduced_text(graph, reduced), args.out)
    return EXIT_OK


def _cmd_burn(args) -> int:
    graph = _load_graph(args.graph)
    D = _load_divisor(graph, args.divisor)
    base = _parse_point(graph, args.base) if args.base else graph.base_point
    report = dhar_burn(D, base)
    rows = [
        (str(p), chips, arriving, 0)
        for p, (chips, arriving) in sorted(
            report.blocking_points.items(), key=lambda kv: graph.point_sort_key(kv[0])
        )
    ]
    _write_output(_csv_text(("point", "chips", "arriving_directions", "burnt"), rows), args.out)
    return EXIT_OK


def _cmd_rank(args) -> int:
    graph = _load_graph(args.graph)
    D = _load_divisor(graph, args.divisor)
    witness = rank(D, max_r=args.max_r)
    lines = [f"rank={witness.rank}"]
    if witness.lower_bound_only:
        lines.append("lower_bound_only=true")
    if args.witness and witness.refuting_sequence:
        for p in witness.refuting_sequence:
            lines.append(f"chip {p.loop} {format_rational(p.offset)} 1")
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_equiv(args) -> int:
    graph = _load_graph(args.graph)
    a = _load_divisor(graph, args.divisor_a)
    b = _load_divisor(graph, args.divisor_b)
    same = class_coordinates(a) == class_coordinates(b)
    _write_output(f"equivalent={'true' if same else 'false'}\n", args.out)
    return EXIT_OK if same else EXIT_VERIFICATION_FAILED


def _cmd_class(args) -> int:
    graph = _load_graph(args.graph)
    D = _load_divisor(graph, args.divisor)
    cls = class_coordinates(D)
    lines = [f"degree={cls.degree}"]
    for lid, mu in zip(graph.loop_ids, cls.mu):
        lines.append(f"mu_{lid}={format_rational(mu)}")
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_rep(args) -> int:
    graph = _load_graph(args.graph)
    mus = [parse_rational(m) for m in args.mu]
    if len(mus) != graph.genus:
        raise UsageError(f"need {graph.genus} --mu values (one per loop, in file order), got {len(mus)}")
    for lid, mu in zip(graph.loop_ids, mus):
        if not (0 <= mu < graph.circumference(lid)):
            raise UsageError(f"mu for loop {lid} outside [0, {graph.circumference(lid)})")
    cls = DivisorClass(graph, args.degree, tuple(mus))
    D = representative_from_class(graph, cls)
    _write_output(serialize_divisor(D), args.out)
    return EXIT_OK


def _cmd_rr_check(args) -> int:
    graph = _load_graph(args.graph)
    D = _load_divisor(graph, args.divisor)
    residual = riemann_roch_residual(D)
    _write_output(f"residual={residual}\n", args.out)
    return EXIT_OK if residual == 0 else EXIT_VERIFICATION_FAILED


def _cmd_scan(args) -> int:
    graph = _load_graph(args.graph)
    report = stratified_scan(graph, args.r, args.d, args.N, max_free=args.max_free, budget=args.budget)
    lines = [
        f"r={report.r} d={report.d} N={report.resolution} strata={len(report.strata)} evaluations={report.evaluations}",
    ]
    for stratum in report.strata:
        if stratum.marked:
            best = max((lengths[0] for lengths in stratum.runs if lengths), default=0)
            lines.append(
                f"stratum {stratum.stratum_id} {stratum.pattern_label()}: "
                f"{len(stratum.marked)} marked, longest run {best}"
            )
    lines.append(f"found_positive_dimensional={'true' if report.found_positive_dimensional else 'false'}")
    _write_output("\n".join(lines) + "\n", args.out)
    if args.csv:
        rows = []
        for stratum in report.strata:
            coord_names = ";".join(stratum.free_loops)
            for idx, rk in sorted(stratum.ranks.items()):
                rows.append(
                    (
                        stratum.stratum_id,
                        stratum.pattern_label(),
                        coord_names,
                        ";".join(str(j) for j in idx),
                        rk,
                        1 if idx in set(stratum.marked) else 0,
                    )
                )
        _write_output(
            _csv_text(("stratum_id", "pattern", "coord_names", "grid_point", "rank", "marked"), rows),
            args.csv,
        )
    return EXIT_OK


def _cmd_probe(args) -> int:
    graph = _load_graph(args.graph)
    D = _load_divisor(graph, args.divisor)
    probe = local_dim_probe(D, args.r, subset_limit=args.subset_limit)
    lines = [
        f"estimated_local_dim={probe.estimated_local_dim}",
        f"persistent_directions={','.join(probe.persistent_directions) or '-'}",
    ]
    _write_output("\n".join(lines) + "\n", args.out)
    if args.csv:
        rows = [
            (";".join(subset), format_rational(mag), 1 if ok else 0)
            for subset, mag, ok in probe.rows()
        ]
        _write_output(_csv_text(("direction_subset", "magnitude", "persisted"), rows), args.csv)
    return EXIT_OK


def _cmd_wrd(args) -> int:
    graph = _load_graph(args.graph)
    bounds = bn_rank_bounds(graph, args.r, args.d, budget=args.budget)
    lines = [
        f"w_lower={bounds.lower}",
        f"w_upper={bounds.upper}",
        f"upper_certified={'true' if bounds.upper_certified else 'false'}",
        f"widened={'true' if bounds.widened else 'false'}",
    ]
    if bounds.counterexample_E is not None:
        lines.append("counterexample:")
        lines.append(serialize_divisor(bounds.counterexample_E).rstrip("\n"))
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_wedge(args) -> int:
    graph = _load_graph(args.graph)
    at = _parse_point(graph, args.at)
    new = wedge_with_loop(graph, at, parse_rational(args.c2), new_id=args.id)
    _write_output(new.to_text(), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    which = args.what
    if which == "lemma-w13":
        graph = _load_graph(args.graph)
        report = verify_lemma_w13(graph, resolution=args.N)
    elif which == "prop-weak":
        graph = _load_graph(args.graph)
        report = verify_prop_weak(graph)
    elif which == "wedge-dim":
        graph = _load_graph(args.graph)
        report = verify_wedge_dim(
            graph, _parse_point(graph, args.at), parse_rational(args.c2), args.r, args.d, samples=args.samples
        )
    elif which == "rank-sandwich":
        graph = _load_graph(args.graph)
        report = verify_rank_sandwich(
            graph, _parse_point(graph, args.at), parse_rational(args.c2), args.r, args.d, budget=args.budget
        )
    elif which == "tree-chain":
        graph = _load_graph(args.graph)
        report = verify_tree_chain(graph, steps=args.steps)
    elif which == "rr-random":
        report = verify_rr_random(seed=args.seed, count=args.count, genus_max=args.genus_max)
    elif which == "oracle-check":
        report = verify_oracle_check(seed=args.seed, count=args.count, genus_max=args.genus_max)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown verifier {which!r}")
    if args.json:
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    else:
        text = "\n".join(report.lines + [f"passed={'true' if report.passed else 'false'}"]) + "\n"
    _write_output(text, args.out)
    return EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cactusfire",
        description="Chip-firing divisor theory on tree-of-loops metric graphs, in exact arithmetic.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="write output to this path instead of stdout")

    p = sub.add_parser("info", help="graph summary: genus, stats, canonical divisor")
    p.add_argument("graph")
    add_out(p)
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("reduce", help="v-reduced divisor (closed-form sweep)")
    p.add_argument("graph")
    p.add_argument("divisor")
    p.add_argument("--base", help="reduction target point loop:offset (default: basepoint)")
    add_out(p)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("burn", help="Dhar burning report as CSV")
    p.add_argument("graph")
    p.add_argument("divisor")
    p.add_argument("--base", help="fire source loop:offset (default: basepoint)")
    add_out(p)
    p.set_defaults(func=_cmd_burn)

    p = sub.add_parser("rank", help="exact divisor rank via the adversary game")
    p.add_argument("graph")
    p.add_argument("divisor")
    p.add_argument("--max-r", type=int, default=None, dest="max_r")
    p.add_argument("--witness", action="store_true", help="print the refuting removals")
    add_out(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("equiv", help="are two divisors linearly equivalent?")
    p.add_argument("graph")
    p.add_argument("divisor_a")
    p.add_argument("divisor_b")
    add_out(p)
    p.set_defaults(func=_cmd_equiv)

    p = sub.add_parser("class", help="degree and per-loop torus coordinates")
    p.add_argument("graph")
    p.add_argument("divisor")
    add_out(p)
    p.set_defaults(func=_cmd_class)

    p = sub.add_parser("rep", help="normal-form representative of a class")
    p.add_argument("graph")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--mu", action="append", default=[], help="one per loop, in file order")
    add_out(p)
    p.set_defaults(func=_cmd_rep)

    p = sub.add_parser("rr-check", help="Riemann-Roch residual; exit 1 if nonzero")
    p.add_argument("graph")
    p.add_argument("divisor")
    add_out(p)
    p.set_defaults(func=_cmd_rr_check)

    p = sub.add_parser("scan", help="stratified scan of the W^r_d locus")
    p.add_argument("graph")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--max-free", type=int, default=3, dest="max_free")
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--csv", help="also write per-grid-point CSV here")
    add_out(p)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("probe", help="local dimension probe at a witness divisor")
    p.add_argument("graph")
    p.add_argument("divisor")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--subset-limit", type=int, default=None, dest="subset_limit")
    p.add_argument("--csv", help="also write per-subset CSV here")
    add_out(p)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("wrd", help="Brill-Noether rank bounds for (r, d)")
    p.add_argument("graph")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--budget", type=int, default=200_000)
    add_out(p)
    p.set_defaults(func=_cmd_wrd)

    p = sub.add_parser("wedge", help="glue a fresh loop and print the new graph")
    p.add_argument("graph")
    p.add_argument("--at", required=True, help="attachment point loop:offset")
    p.add_argument("--c2", required=True, help="circumference of the new loop")
    p.add_argument("--id", default=None, help="id for the new loop")
    add_out(p)
    p.set_defaults(func=_cmd_wedge)

    p = sub.add_parser("verify", help="run a named verifier")
    p.add_argument(
        "what",
        choices=[
            "lemma-w13",
            "prop-weak",
            "wedge-dim",
            "rank-sandwich",
            "tree-chain",
            "rr-random",
            "oracle-check",
        ],
    )
    p.add_argument("graph", nargs="?", help="graph file (not used by rr-random/oracle-check)")
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--at", help="attachment point for wedge verifiers")
    p.add_argument("--c2", default="1", help="circumference of the glued loop")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--genus-max", type=int, default=4, dest="genus_max")
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--json", action="store_true", help="structured output (schema=1)")
    add_out(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        needs_graph = args.command == "verify" and args.what not in ("rr-random", "oracle-check")
        if needs_graph and not args.graph:
            raise UsageError(f"verifier {args.what} needs a graph file")
        if args.command == "verify" and args.what in ("wedge-dim", "rank-sandwich") and not args.at:
            raise UsageError(f"verifier {args.what} needs --at")
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: resource-cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE_CAP
    except (UsageError, GraphFormatError, BurnPreconditionError, ValueError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
