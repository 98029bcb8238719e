"""Command-line interface: build a graph from a manifest, query it, and
report stats.

    skygraph build testbed/manifest.yaml --out graph.json
    skygraph query graph.json @queries/weak-transport-encryption.cypher
    skygraph stats graph.json
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from skygraph.build import build_graph, graph_counts, load_manifest
from skygraph.errors import SkygraphError
from skygraph.graph import Path as GraphPath
from skygraph.graph import PropertyGraph, export_graph, import_graph
from skygraph.query import evaluate, parse_query


def render_path(graph: PropertyGraph, path: GraphPath) -> str:
    """`name(Class) -[TYPE]-> name(Class) ...` with direction-aware arrows."""

    def node_text(node_id: int) -> str:
        node = graph.node(node_id)
        return f"{node.name}({node.class_name})"

    parts = [node_text(path.node_ids[0])]
    for i, edge_id in enumerate(path.edge_ids):
        edge_type = graph.edge(edge_id).type
        arrow = f"-[{edge_type}]->" if path.forward[i] else f"<-[{edge_type}]-"
        parts.append(arrow)
        parts.append(node_text(path.node_ids[i + 1]))
    return " ".join(parts)


def _cmd_build(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    graph, _ontology, report = build_graph(manifest)
    out = Path(args.out)
    out.write_text(export_graph(graph, {"star_max": manifest.star_max}), encoding="utf-8")
    print(report.render())
    print(f"Wrote {out}")
    return 0


def _load_query_text(raw: str) -> str:
    if raw.startswith("@"):
        return Path(raw[1:]).read_text(encoding="utf-8")
    return raw


def _cmd_query(args: argparse.Namespace) -> int:
    graph = import_graph(Path(args.graph).read_text(encoding="utf-8"))
    text = _load_query_text(args.query)
    ast = parse_query(text)
    star_max = args.star_max
    if star_max is None:
        star_max = graph.settings.get("star_max", 10)
    results = evaluate(graph, ast, star_max=star_max)
    if args.format == "paths":
        for result in results:
            if result.path is not None:
                print(render_path(graph, result.path))
            else:
                shown = ", ".join(
                    f"{var}={graph.node(node_id).name}({graph.node(node_id).class_name})"
                    for var, node_id in sorted(result.bindings.items())
                )
                print(shown)
    print(f"{len(results)} results")
    if args.fail_if_found and results:
        return 1
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    graph = import_graph(Path(args.graph).read_text(encoding="utf-8"))
    node_counts, edge_counts = graph_counts(graph)
    print(f"Nodes: {graph.node_count}")
    for name, count in sorted(node_counts.items()):
        print(f"  {name}: {count}")
    print(f"Edges: {graph.edge_count}")
    for name, count in sorted(edge_counts.items()):
        print(f"  {name}: {count}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skygraph",
        description="Build and query a property graph of a cloud deployment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a graph from a manifest")
    p_build.add_argument("manifest")
    p_build.add_argument("--out", default="graph.json", help="export file path")
    p_build.set_defaults(fn=_cmd_build)

    p_query = sub.add_parser("query", help="run a query against an exported graph")
    p_query.add_argument("graph")
    p_query.add_argument("query", help="query text, or @file to read it from a file")
    p_query.add_argument("--format", choices=("paths", "count"), default="paths")
    p_query.add_argument("--star-max", type=int, default=None, dest="star_max")
    p_query.add_argument(
        "--fail-if-found",
        action="store_true",
        help="exit nonzero when the query returns any result (CI gating)",
    )
    p_query.set_defaults(fn=_cmd_query)

    p_stats = sub.add_parser("stats", help="node and edge counts of an exported graph")
    p_stats.add_argument("graph")
    p_stats.set_defaults(fn=_cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SkygraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
