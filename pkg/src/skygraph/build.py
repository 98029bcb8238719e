"""Full graph construction from a build manifest.

Pass order: ontology load, code facts, inventories, workflows, application
linking, then the data-flow resolution passes; the graph is frozen at the
end. Two builds from the same manifest produce byte-identical exports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from skygraph import codefacts, dataflow
from skygraph.discovery import Discovery, load_inventory, load_workflow
from skygraph.errors import ManifestError
from skygraph.graph import PropertyGraph
from skygraph.ontology import Ontology, load_ontology

_MANIFEST_KEYS = {
    "ontology",
    "mappings",
    "inventories",
    "workflows",
    "codefacts",
    "registry_locations",
    "star_max",
}


@dataclass
class BuildManifest:
    ontology: Path
    mappings: list[Path] = field(default_factory=list)
    inventories: list[Path] = field(default_factory=list)
    workflows: list[Path] = field(default_factory=list)
    codefacts: list[Path] = field(default_factory=list)
    registry_locations: dict[str, str] = field(default_factory=dict)
    star_max: int = 10


def load_manifest(path: str | Path) -> BuildManifest:
    """Read a manifest; relative paths resolve against the manifest file."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a mapping")
    unknown = set(doc) - _MANIFEST_KEYS
    if unknown:
        raise ManifestError(f"unknown manifest keys {sorted(unknown)}")
    if "ontology" not in doc:
        raise ManifestError("manifest needs an 'ontology' path")
    base = path.parent

    def resolve(raw: str) -> Path:
        candidate = base / raw
        if not candidate.exists():
            raise ManifestError(f"manifest references missing file {candidate}")
        return candidate

    star_max = doc.get("star_max", 10)
    if not isinstance(star_max, int) or star_max < 1:
        raise ManifestError(f"star_max must be a positive integer, got {star_max!r}")
    return BuildManifest(
        ontology=resolve(doc["ontology"]),
        mappings=[resolve(p) for p in doc.get("mappings") or []],
        inventories=[resolve(p) for p in doc.get("inventories") or []],
        workflows=[resolve(p) for p in doc.get("workflows") or []],
        codefacts=[resolve(p) for p in doc.get("codefacts") or []],
        registry_locations=dict(doc.get("registry_locations") or {}),
        star_max=star_max,
    )


@dataclass
class BuildReport:
    node_counts: dict[str, int]
    edge_counts: dict[str, int]
    pass_timings: list[tuple[str, float]]

    def render(self) -> str:
        lines = [f"Nodes: {sum(self.node_counts.values())}"]
        for name, count in sorted(self.node_counts.items()):
            lines.append(f"  {name}: {count}")
        lines.append(f"Edges: {sum(self.edge_counts.values())}")
        for name, count in sorted(self.edge_counts.items()):
            lines.append(f"  {name}: {count}")
        lines.append("Pass timings:")
        for name, seconds in self.pass_timings:
            lines.append(f"  {name}: {seconds * 1000:.1f} ms")
        return "\n".join(lines)


def graph_counts(graph: PropertyGraph) -> tuple[dict[str, int], dict[str, int]]:
    nodes: dict[str, int] = {}
    for node in graph.nodes():
        nodes[node.class_name] = nodes.get(node.class_name, 0) + 1
    edges: dict[str, int] = {}
    for edge in graph.edges():
        edges[edge.type] = edges.get(edge.type, 0) + 1
    return nodes, edges


def build_graph(manifest: BuildManifest) -> tuple[PropertyGraph, Ontology, BuildReport]:
    """Run the whole pipeline and freeze the resulting graph."""
    timings: list[tuple[str, float]] = []

    def timed(name: str, fn):
        start = time.perf_counter()
        result = fn()
        timings.append((name, time.perf_counter() - start))
        return result

    ontology = timed("ontology", lambda: load_ontology(manifest.ontology, manifest.mappings))
    graph = PropertyGraph(ontology)

    def run_codefacts() -> None:
        for path in manifest.codefacts:
            bundle = codefacts.load_code_facts(path)
            app_id = codefacts.ingest_code_facts(graph, bundle)
            codefacts.build_http_server_nodes(graph, app_id)
            codefacts.build_http_client_nodes(graph, app_id)
            codefacts.build_storage_request_nodes(graph, app_id)

    timed("codefacts", run_codefacts)

    discovery = Discovery(graph, ontology, manifest.registry_locations)

    def run_inventories() -> None:
        for path in manifest.inventories:
            discovery.ingest_inventory(load_inventory(path))
        discovery.resolve_inventory_links()

    timed("inventories", run_inventories)
    timed(
        "workflows",
        lambda: [discovery.ingest_workflow(load_workflow(p)) for p in manifest.workflows],
    )
    timed("link_applications", discovery.link_applications)
    timed("create_proxied_endpoints", lambda: dataflow.create_proxied_endpoints(graph))
    timed("resolve_http_requests", lambda: dataflow.resolve_http_requests(graph))
    timed("resolve_storage_requests", lambda: dataflow.resolve_storage_requests(graph))
    timed("propagate_log_flows", lambda: dataflow.propagate_log_flows(graph))
    graph.freeze()

    node_counts, edge_counts = graph_counts(graph)
    return graph, ontology, BuildReport(node_counts, edge_counts, timings)
