"""Reference implementations used as oracles by the test suite.

Everything here is deliberately naive and shares no traversal code with
the engine: labels are matched by walking parent links one at a time,
matching enumerates assignments left to right with plain edge-list scans,
and `naive_matches` additionally tries every node assignment up front.
"""

from __future__ import annotations

import itertools
import random

from skygraph.graph import PropertyGraph
from skygraph.query.syntax import (
    BoolExpr,
    NodeComparison,
    PropertyComparison,
    QueryAst,
)


def oracle_label_match(graph: PropertyGraph, node_id: int, label: str) -> bool:
    cls = graph.node(node_id).class_name
    if label == "Node" or label == cls:
        return True
    if label == "Expression" and cls in ("Expression", "CallExpression", "Literal"):
        return True
    ontology = graph.ontology
    if ontology.has_class(cls) and ontology.has_class(label):
        cur = cls
        while cur is not None:
            if cur == label:
                return True
            cur = ontology.classes[cur].parent
    return False


def _scalar_equal(a, b) -> bool:
    return isinstance(a, bool) == isinstance(b, bool) and a == b


def _nodes_equal(graph, left, right) -> bool:
    a, b = graph.node(left), graph.node(right)
    return (a.class_name, a.name, a.properties) == (b.class_name, b.name, b.properties)


def oracle_predicate(graph: PropertyGraph, pred, bindings: dict[str, int]) -> bool:
    if isinstance(pred, PropertyComparison):
        if pred.var not in bindings:
            return False
        node = graph.node(bindings[pred.var])
        if pred.key in node.properties:
            value = node.properties[pred.key]
        elif pred.key == "name":
            value = node.name
        else:
            return False
        equal = _scalar_equal(value, pred.literal)
        return equal if pred.op == "=" else not equal
    if isinstance(pred, NodeComparison):
        if pred.left not in bindings or pred.right not in bindings:
            return False
        return not _nodes_equal(graph, bindings[pred.left], bindings[pred.right])
    if isinstance(pred, BoolExpr):
        values = [oracle_predicate(graph, p, bindings) for p in pred.operands]
        return all(values) if pred.op == "AND" else any(values)
    raise TypeError(pred)


def _bindings(node_patterns, assigned) -> dict[str, int]:
    return {
        np.var: assigned[i] for i, np in enumerate(node_patterns) if np.var is not None
    }


def _label_ok(graph, node_id, label) -> bool:
    return label is None or oracle_label_match(graph, node_id, label)


def _var_ok(node_patterns, assigned, index, node_id) -> bool:
    var = node_patterns[index].var
    if var is None:
        return True
    for j in range(index):
        if node_patterns[j].var == var and assigned[j] != node_id:
            return False
    return True


def _hops(graph, rel, cur):
    """Single hops from `cur` under the rel pattern's constraints."""
    for edge in graph.edges():
        if rel.type is not None and edge.type != rel.type:
            continue
        if rel.direction in ("right", "undirected") and edge.from_id == cur:
            yield edge.id, edge.to_id
        if rel.direction in ("left", "undirected") and edge.to_id == cur:
            yield edge.id, edge.from_id


def oracle_matches(graph: PropertyGraph, ast: QueryAst, star_max: int = 10) -> set[frozenset]:
    """Set of binding maps by exhaustive left-to-right enumeration."""
    node_patterns = ast.node_patterns
    rel_patterns = ast.rel_patterns
    out: set[frozenset] = set()

    def rec(index: int, assigned: list[int], used: frozenset) -> None:
        if index == len(node_patterns) - 1:
            bindings = _bindings(node_patterns, assigned)
            if ast.where is None or oracle_predicate(graph, ast.where, bindings):
                out.add(frozenset(bindings.items()))
            return
        rel = rel_patterns[index]
        lo = rel.hops.min
        hi = rel.hops.max if rel.hops.max is not None else star_max

        def walk(cur: int, steps: frozenset, depth: int) -> None:
            if lo <= depth:
                if _label_ok(graph, cur, node_patterns[index + 1].label) and _var_ok(
                    node_patterns, assigned, index + 1, cur
                ):
                    assigned.append(cur)
                    rec(index + 1, assigned, used | steps)
                    assigned.pop()
            if depth >= hi:
                return
            for edge_id, neighbor in _hops(graph, rel, cur):
                if edge_id in used or edge_id in steps:
                    continue
                walk(neighbor, steps | {edge_id}, depth + 1)

        walk(assigned[index], frozenset(), 0)

    for node in graph.nodes():
        if _label_ok(graph, node.id, node_patterns[0].label):
            rec(0, [node.id], frozenset())
    return out


def naive_matches(graph: PropertyGraph, ast: QueryAst, star_max: int = 10) -> set[frozenset]:
    """Even blunter oracle: try every node assignment, then every

    combination of simple edge routes between consecutive assignments.
    Only usable on small graphs and short patterns."""
    node_patterns = ast.node_patterns
    rel_patterns = ast.rel_patterns
    ids = [n.id for n in graph.nodes()]
    out: set[frozenset] = set()

    for combo in itertools.product(ids, repeat=len(node_patterns)):
        ok = True
        for i, np in enumerate(node_patterns):
            if not _label_ok(graph, combo[i], np.label):
                ok = False
                break
            if np.var is not None:
                for j in range(i):
                    if node_patterns[j].var == np.var and combo[j] != combo[i]:
                        ok = False
                        break
            if not ok:
                break
        if not ok:
            continue

        def connect(ri: int, used: frozenset) -> None:
            if ri == len(rel_patterns):
                bindings = _bindings(node_patterns, list(combo))
                if ast.where is None or oracle_predicate(graph, ast.where, bindings):
                    out.add(frozenset(bindings.items()))
                return
            rel = rel_patterns[ri]
            lo = rel.hops.min
            hi = rel.hops.max if rel.hops.max is not None else star_max

            def walk(cur: int, steps: frozenset, depth: int) -> None:
                if lo <= depth and cur == combo[ri + 1]:
                    connect(ri + 1, used | steps)
                if depth >= hi:
                    return
                for edge_id, neighbor in _hops(graph, rel, cur):
                    if edge_id in used or edge_id in steps:
                        continue
                    walk(neighbor, steps | {edge_id}, depth + 1)

            walk(combo[ri], frozenset(), 0)

        connect(0, frozenset())
    return out


# -- randomized inputs ---------------------------------------------------------


def random_graph(rng: random.Random, ontology, max_nodes: int = 12) -> PropertyGraph:
    """Small random graph over the test ontology plus code classes."""
    graph = PropertyGraph(ontology)
    classes = ["Thing", "Sub", "SubSub", "Other", "CallExpression", "Literal", "Expression"]
    names = ["alpha", "beta", "gamma"]
    node_count = rng.randint(1, max_nodes)
    for _ in range(node_count):
        cls = rng.choice(classes)
        props = {}
        if rng.random() < 0.6:
            props["p"] = rng.choice([1, 2])
        if rng.random() < 0.4:
            props["q"] = rng.choice(["x", "y"])
        if rng.random() < 0.3:
            props["flag"] = rng.choice([True, False])
        graph.add_node(cls, rng.choice(names), props)
    edge_count = rng.randint(0, 2 * node_count)
    types = ["DFG", "TO", "CALLS", "CONTAINS"]
    for _ in range(edge_count):
        graph.add_edge(
            rng.randrange(node_count), rng.randrange(node_count), rng.choice(types)
        )
    graph.freeze()
    return graph


def random_query(rng: random.Random, max_nodes: int = 3) -> str:
    """Random query text over the same vocabulary as `random_graph`."""
    labels = [None, "Node", "Thing", "Sub", "SubSub", "Other", "Expression", "CallExpression"]
    types = [None, "DFG", "TO", "CALLS"]
    count = rng.randint(1, max_nodes)
    vars_used = []
    parts = []
    for i in range(count):
        if i == 0:
            var = "v0"
        elif vars_used and rng.random() < 0.15:
            var = rng.choice(vars_used)  # repeated variable: same node twice
        elif rng.random() < 0.7:
            var = f"v{i}"
        else:
            var = None
        if var and var not in vars_used:
            vars_used.append(var)
        label = rng.choice(labels)
        inner = (var or "") + (f":{label}" if label else "")
        parts.append(f"({inner})")
        if i < count - 1:
            rtype = rng.choice(types)
            hop = rng.choice(["", "", "*", "*2"])
            body = ""
            if rtype or hop:
                body = "[" + (f":{rtype}" if rtype else "") + hop + "]"
            elif rng.random() < 0.3:
                body = "[]"
            arrow = rng.choice([f"-{body}->", f"<-{body}-", f"-{body}-"])
            parts.append(arrow)
    text = "MATCH p=" + "".join(parts)
    if rng.random() < 0.5 and vars_used:
        clauses = []
        for _ in range(rng.randint(1, 2)):
            var = rng.choice(vars_used)
            kind = rng.random()
            if kind < 0.4:
                clauses.append(f"{var}.p {rng.choice(['=', '<>'])} {rng.choice([1, 2])}")
            elif kind < 0.6:
                clauses.append(f'{var}.q {rng.choice(["=", "<>"])} "x"')
            elif kind < 0.8 and len(vars_used) > 1:
                other = rng.choice([v for v in vars_used if v != var] or vars_used)
                clauses.append(f"{var} <> {other}")
            else:
                clauses.append(f"{var}.flag = {rng.choice(['true', 'false'])}")
        text += " WHERE " + f" {rng.choice(['AND', 'OR'])} ".join(clauses)
    text += f" RETURN {vars_used[0]}"
    return text


def small_ontology_documents() -> tuple[dict, list]:
    doc = {
        "classes": [
            {"name": "Thing", "kind": "resource", "data_properties": {"p": "integer", "q": "string", "flag": "boolean"}},
            {"name": "Sub", "kind": "resource", "parent": "Thing"},
            {"name": "SubSub", "kind": "resource", "parent": "Sub"},
            {"name": "Other", "kind": "resource", "data_properties": {"p": "integer", "q": "string", "flag": "boolean"}},
        ]
    }
    return doc, []
