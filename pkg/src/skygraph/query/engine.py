"""Pattern evaluation against a frozen property graph.

Matching semantics:

* labels match through the ontology (and the universal `Node` label),
* directed relationship patterns follow edge direction, undirected ones
  match either orientation, untyped ones match every edge type,
* variable-length segments expand to simple edge sequences within bounds,
* one match never uses the same edge twice (relationship isomorphism),
* a comparison on a property the bound node lacks is false, not an error,
* `a <> b` compares bound nodes by value: class, name and properties.

Results are deterministic: ordered by the bound node ids in pattern
order, then by the path's edge ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from skygraph.graph import Edge, Path, PropertyGraph
from skygraph.query.syntax import (
    BoolExpr,
    NodeComparison,
    NodePattern,
    PropertyComparison,
    QueryAst,
    RelPattern,
)

DEFAULT_STAR_MAX = 10


@dataclass
class MatchResult:
    bindings: dict[str, int]
    path: Path | None = None


@dataclass
class _Step:
    edge: Edge
    forward: bool  # True when the edge points along the pattern left-to-right


@dataclass
class _State:
    nodes: list[int | None]
    segments: list[list[_Step] | None]
    used_edges: set[int] = field(default_factory=set)


def _expand(
    graph: PropertyGraph,
    node_id: int,
    rel: RelPattern,
    toward_right: bool,
) -> Iterator[tuple[Edge, int, bool]]:
    """Single hops from `node_id` honoring the pattern's direction.

    Yields (edge, neighbor, forward) with `forward` relative to the
    pattern's left-to-right orientation.
    """
    if toward_right:
        if rel.direction in ("right", "undirected"):
            for edge in graph.out_edges(node_id, rel.type):
                yield edge, edge.to_id, True
        if rel.direction in ("left", "undirected"):
            for edge in graph.in_edges(node_id, rel.type):
                if rel.direction == "undirected" and edge.from_id == edge.to_id:
                    continue  # self-loop already seen through out_edges
                yield edge, edge.from_id, False
    else:
        if rel.direction in ("right", "undirected"):
            for edge in graph.in_edges(node_id, rel.type):
                yield edge, edge.from_id, True
        if rel.direction in ("left", "undirected"):
            for edge in graph.out_edges(node_id, rel.type):
                if rel.direction == "undirected" and edge.from_id == edge.to_id:
                    continue
                yield edge, edge.to_id, False


def _routes(
    graph: PropertyGraph,
    start: int,
    rel: RelPattern,
    toward_right: bool,
    used: set[int],
    star_max: int,
) -> Iterator[tuple[list[_Step], int]]:
    """Simple edge sequences walking one relationship pattern.

    Steps come back in walk order; leftward walks are reversed by the
    caller. Edges already used anywhere in the match are excluded.
    """
    lo = rel.hops.min
    hi = rel.hops.max if rel.hops.max is not None else star_max

    def rec(node: int, steps: list[_Step]) -> Iterator[tuple[list[_Step], int]]:
        if lo <= len(steps):
            yield list(steps), node
        if len(steps) >= hi:
            return
        taken = {s.edge.id for s in steps}
        for edge, neighbor, forward in _expand(graph, node, rel, toward_right):
            if edge.id in used or edge.id in taken:
                continue
            steps.append(_Step(edge, forward))
            yield from rec(neighbor, steps)
            steps.pop()

    yield from rec(start, [])


def _scalar_equal(a, b) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _nodes_equal(graph: PropertyGraph, left: int, right: int) -> bool:
    if left == right:
        return True
    a, b = graph.node(left), graph.node(right)
    return a.class_name == b.class_name and a.name == b.name and a.properties == b.properties


def _predicate_holds(graph: PropertyGraph, pred, bindings: dict[str, int]) -> bool:
    if isinstance(pred, PropertyComparison):
        node_id = bindings.get(pred.var)
        if node_id is None:
            return False
        value = graph.property_value(node_id, pred.key)
        if value is None:
            return False
        equal = _scalar_equal(value, pred.literal)
        return equal if pred.op == "=" else not equal
    if isinstance(pred, NodeComparison):
        left = bindings.get(pred.left)
        right = bindings.get(pred.right)
        if left is None or right is None:
            return False
        return not _nodes_equal(graph, left, right)
    if isinstance(pred, BoolExpr):
        results = (_predicate_holds(graph, op, bindings) for op in pred.operands)
        return all(results) if pred.op == "AND" else any(results)
    raise TypeError(f"unknown predicate {pred!r}")


def _anchor_index(graph: PropertyGraph, nodes: list[NodePattern]) -> tuple[int, list[list[int]]]:
    candidates = [
        graph.label_candidates(np.label) if np.label else sorted(n.id for n in graph.nodes())
        for np in nodes
    ]
    anchor = min(range(len(nodes)), key=lambda i: (len(candidates[i]), i))
    return anchor, candidates


def evaluate(
    graph: PropertyGraph,
    ast: QueryAst,
    star_max: int = DEFAULT_STAR_MAX,
) -> list[MatchResult]:
    """Every assignment of graph nodes and edge routes to the pattern."""
    node_patterns = ast.node_patterns
    rel_patterns = ast.rel_patterns
    anchor, candidates = _anchor_index(graph, node_patterns)
    k = len(node_patterns)

    results: list[tuple[tuple[int, ...], tuple[int, ...], MatchResult]] = []

    def var_conflict(state: _State, index: int, node_id: int) -> bool:
        var = node_patterns[index].var
        if var is None:
            return False
        for j, np in enumerate(node_patterns):
            if np.var == var and state.nodes[j] is not None and state.nodes[j] != node_id:
                return True
        return False

    def emit(state: _State) -> None:
        bindings: dict[str, int] = {}
        for np, node_id in zip(node_patterns, state.nodes):
            if np.var is not None:
                bindings[np.var] = node_id
        if ast.where is not None and not _predicate_holds(graph, ast.where, bindings):
            return
        node_ids = [state.nodes[0]]
        edge_ids: list[int] = []
        flags: list[bool] = []
        for segment in state.segments:
            cur = node_ids[-1]
            for step in segment:
                cur = step.edge.to_id if step.forward else step.edge.from_id
                node_ids.append(cur)
                edge_ids.append(step.edge.id)
                flags.append(step.forward)
        path = Path(tuple(node_ids), tuple(edge_ids), tuple(flags))
        result = MatchResult(bindings=bindings, path=path if ast.path_var else None)
        sort_key = tuple(state.nodes)
        results.append((sort_key, tuple(edge_ids), result))

    def extend_right(state: _State, index: int) -> None:
        if index == k - 1:
            extend_left(state, anchor)
            return
        rel = rel_patterns[index]
        start = state.nodes[index]
        for steps, end in _routes(graph, start, rel, True, state.used_edges, star_max):
            target = node_patterns[index + 1]
            if target.label and not graph.node_matches_label(end, target.label):
                continue
            if var_conflict(state, index + 1, end):
                continue
            state.nodes[index + 1] = end
            state.segments[index] = steps
            state.used_edges.update(s.edge.id for s in steps)
            extend_right(state, index + 1)
            state.used_edges.difference_update(s.edge.id for s in steps)
            state.segments[index] = None
            state.nodes[index + 1] = None

    def extend_left(state: _State, index: int) -> None:
        if index == 0:
            emit(state)
            return
        rel = rel_patterns[index - 1]
        start = state.nodes[index]
        for steps, end in _routes(graph, start, rel, False, state.used_edges, star_max):
            target = node_patterns[index - 1]
            if target.label and not graph.node_matches_label(end, target.label):
                continue
            if var_conflict(state, index - 1, end):
                continue
            state.nodes[index - 1] = end
            state.segments[index - 1] = list(reversed(steps))
            state.used_edges.update(s.edge.id for s in steps)
            extend_left(state, index - 1)
            state.used_edges.difference_update(s.edge.id for s in steps)
            state.segments[index - 1] = None
            state.nodes[index - 1] = None

    for seed in candidates[anchor]:
        np = node_patterns[anchor]
        if np.label and not graph.node_matches_label(seed, np.label):
            continue
        state = _State(nodes=[None] * k, segments=[None] * (k - 1))
        state.nodes[anchor] = seed
        extend_right(state, anchor)

    results.sort(key=lambda item: (item[0], item[1]))
    return [result for _, _, result in results]


def explain(graph: PropertyGraph, ast: QueryAst, star_max: int = DEFAULT_STAR_MAX) -> str:
    """Describe the evaluation plan: seed choice and expansion order."""
    node_patterns = ast.node_patterns
    rel_patterns = ast.rel_patterns
    anchor, candidates = _anchor_index(graph, node_patterns)
    lines = []
    for i, np in enumerate(node_patterns):
        label = np.label or "(any)"
        var = np.var or "_"
        lines.append(f"  node #{i} {var}:{label} candidates={len(candidates[i])}")
    np = node_patterns[anchor]
    lines.insert(
        0,
        f"seed at node #{anchor} {np.var or '_'}:{np.label or '(any)'} "
        f"({len(candidates[anchor])} candidates)",
    )
    order = [f"right #{i}" for i in range(anchor, len(rel_patterns))]
    order += [f"left #{i}" for i in reversed(range(anchor))]
    if order:
        lines.append("expansion order: " + ", ".join(order))
    else:
        lines.append("expansion order: none (single node pattern)")
    for i, rel in enumerate(rel_patterns):
        if not rel.hops.is_single:
            hi = rel.hops.max if rel.hops.max is not None else star_max
            lines.append(
                f"variable-length rel #{i} type={rel.type or '(any)'} "
                f"bounds {rel.hops.min}..{hi}"
            )
    return "\n".join(lines)
