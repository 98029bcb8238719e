"""Recorded cloud inventories and CI/CD workflow files.

Inventory documents are credential-free snapshots of one provider's
resources; they replace live provider API discovery. Each resource is
classified through the ontology, gets its offered security features
attached, and is wired to other resources via structural links
(cluster membership, load-balancer targets, image usage, log forwarding).
Workflow files contribute container images and registries.
"""

from __future__ import annotations

import logging
import shlex
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from skygraph.errors import DiscoveryError
from skygraph.graph import PropertyGraph
from skygraph.ontology import Ontology

log = logging.getLogger(__name__)

RECOGNIZED_PROPERTIES = frozenset(
    {
        "public_access",
        "at_rest_encryption_enabled",
        "at_rest_algorithm",
        "tls_enabled",
        "tls_version",
        "http_url",
        "auth",
    }
)
RECOGNIZED_LINKS = frozenset({"member_of", "targets", "image", "forwards_logs_to"})
AUTH_VALUES = ("none", "token")

DEFAULT_REGISTRY_HOST = "ghcr.io"


@dataclass
class InventoryResource:
    id: str
    name: str
    provider_type: str
    region: str | None = None
    properties: dict = field(default_factory=dict)
    links: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class InventoryDocument:
    provider: str
    resources: list[InventoryResource]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for res in self.resources:
            if res.id in seen:
                raise DiscoveryError(f"duplicate resource id {res.id!r}")
            seen.add(res.id)


@dataclass
class WorkflowStep:
    run: str


@dataclass
class WorkflowJob:
    name: str
    steps: list[WorkflowStep]


@dataclass
class WorkflowDocument:
    name: str
    jobs: list[WorkflowJob]


# -- document loading ---------------------------------------------------------


def inventory_from_document(doc: dict) -> InventoryDocument:
    if not isinstance(doc, dict):
        raise DiscoveryError("inventory document must be a mapping")
    unknown = set(doc) - {"provider", "resources"}
    if unknown:
        raise DiscoveryError(f"unknown inventory keys {sorted(unknown)}")
    if not isinstance(doc.get("provider"), str):
        raise DiscoveryError("inventory needs a string 'provider'")
    resources = []
    for entry in doc.get("resources") or []:
        unknown = set(entry) - {"id", "name", "provider_type", "region", "properties", "links"}
        if unknown:
            raise DiscoveryError(
                f"unknown keys {sorted(unknown)} on resource {entry.get('id')!r}"
            )
        props = entry.get("properties") or {}
        bad = set(props) - RECOGNIZED_PROPERTIES
        if bad:
            raise DiscoveryError(
                f"unrecognized properties {sorted(bad)} on resource {entry.get('id')!r}"
            )
        if "auth" in props and props["auth"] not in AUTH_VALUES:
            raise DiscoveryError(
                f"resource {entry.get('id')!r} has unknown auth value {props['auth']!r}"
            )
        links: dict[str, list[str]] = {}
        for key, value in (entry.get("links") or {}).items():
            if key not in RECOGNIZED_LINKS:
                raise DiscoveryError(
                    f"unrecognized link {key!r} on resource {entry.get('id')!r}"
                )
            links[key] = [value] if isinstance(value, str) else list(value)
        resources.append(
            InventoryResource(
                id=str(entry["id"]),
                name=str(entry["name"]),
                provider_type=str(entry["provider_type"]),
                region=entry.get("region"),
                properties=dict(props),
                links=links,
            )
        )
    return InventoryDocument(provider=doc["provider"], resources=resources)


def load_inventory(path: str | Path) -> InventoryDocument:
    with open(path, encoding="utf-8") as fh:
        return inventory_from_document(yaml.safe_load(fh))


def workflow_from_document(doc: dict) -> WorkflowDocument:
    if not isinstance(doc, dict):
        raise DiscoveryError("workflow document must be a mapping")
    jobs = []
    for job in doc.get("jobs") or []:
        steps = [WorkflowStep(run=str(s.get("run", ""))) for s in job.get("steps") or []]
        jobs.append(WorkflowJob(name=str(job.get("name", "")), steps=steps))
    return WorkflowDocument(name=str(doc.get("name", "")), jobs=jobs)


def load_workflow(path: str | Path) -> WorkflowDocument:
    with open(path, encoding="utf-8") as fh:
        return workflow_from_document(yaml.safe_load(fh))


# -- security feature attachment ----------------------------------------------


def _resource_endpoint(graph: PropertyGraph, resource_id: int) -> int | None:
    for edge in graph.out_edges(resource_id, "HAS_ENDPOINT"):
        if graph.node(edge.to_id).class_name == "HttpEndpoint":
            return edge.to_id
    return None


def _is_authenticity(ontology: Ontology, feature: str) -> bool:
    return ontology.has_class("Authenticity") and ontology.is_subclass(
        feature, "Authenticity"
    )


def attach_security_features(
    graph: PropertyGraph,
    ontology: Ontology,
    resource_id: int,
    inv: InventoryResource,
) -> int:
    """Materialize the security features the ontology sanctions for the
    resource's class, fed from the recorded configuration. Features whose
    inputs are entirely absent are not created."""
    cls = graph.node(resource_id).class_name
    props = inv.properties
    created = 0
    for feature in ontology.offered_features(cls):
        if feature == "GeoLocation":
            if inv.region is None:
                continue
            geo = graph.add_node("GeoLocation", inv.region, {"region": inv.region})
            graph.add_edge(resource_id, geo, "GEO_LOCATION")
            created += 1
        elif feature == "AtRestEncryption":
            if "at_rest_encryption_enabled" not in props and "at_rest_algorithm" not in props:
                continue
            feature_props = {}
            if "at_rest_encryption_enabled" in props:
                feature_props["enabled"] = props["at_rest_encryption_enabled"]
            if "at_rest_algorithm" in props:
                feature_props["algorithm"] = props["at_rest_algorithm"]
            node = graph.add_node("AtRestEncryption", "AtRestEncryption", feature_props)
            graph.add_edge(resource_id, node, "AT_REST_ENCRYPTION")
            created += 1
        elif feature == "TransportEncryption":
            if "tls_enabled" not in props and "tls_version" not in props:
                continue
            feature_props = {}
            if "tls_enabled" in props:
                feature_props["enabled"] = props["tls_enabled"]
            if "tls_version" in props:
                feature_props["tlsVersion"] = props["tls_version"]
            node = graph.add_node(
                "TransportEncryption", "TransportEncryption", feature_props
            )
            anchor = _resource_endpoint(graph, resource_id)
            graph.add_edge(
                anchor if anchor is not None else resource_id,
                node,
                "TRANSPORT_ENCRYPTION",
            )
            created += 1
        elif _is_authenticity(ontology, feature):
            if "auth" not in props:
                continue
            cls_name = "NoAuthentication" if props["auth"] == "none" else "TokenBasedAuthentication"
            node = graph.add_node(cls_name, cls_name)
            anchor = _resource_endpoint(graph, resource_id)
            graph.add_edge(
                anchor if anchor is not None else resource_id, node, "AUTHENTICITY"
            )
            created += 1
    return created


# -- discovery pipeline --------------------------------------------------------


class Discovery:
    """Stateful ingestion across multiple inventory and workflow documents.

    Structural links may cross documents, so they are collected during
    ingestion and resolved once every document has been read.
    """

    def __init__(
        self,
        graph: PropertyGraph,
        ontology: Ontology,
        registry_locations: dict[str, str] | None = None,
    ):
        self.graph = graph
        self.ontology = ontology
        self.registry_locations = dict(registry_locations or {})
        self._pending_links: list[tuple[int, str, str]] = []
        self._built_images: set[str] = set()

    # -- inventories ----------------------------------------------------

    def ingest_inventory(self, doc: InventoryDocument) -> int:
        """Create one classified resource node per inventory entry.

        An unknown (provider, provider_type) pair raises immediately: an
        unclassifiable resource must surface, not be skipped.
        """
        count = 0
        for inv in doc.resources:
            cls = self.ontology.resolve_instance_class(doc.provider, inv.provider_type)
            node_props: dict = {"provider_id": inv.id}
            declared = self.ontology.data_property_keys(cls)
            if "public_access" in inv.properties and "public_access" in declared:
                node_props["public_access"] = inv.properties["public_access"]
            if "http_url" in inv.properties and "url" in declared:
                node_props["url"] = inv.properties["http_url"]
            resource_id = self.graph.add_node(cls, inv.name, node_props)
            if "http_url" in inv.properties:
                endpoint = self.graph.add_node(
                    "HttpEndpoint",
                    str(inv.properties["http_url"]),
                    {"url": inv.properties["http_url"], "method": "ANY"},
                )
                self.graph.add_edge(resource_id, endpoint, "HAS_ENDPOINT")
            attach_security_features(self.graph, self.ontology, resource_id, inv)
            for key, targets in inv.links.items():
                for target in targets:
                    self._pending_links.append((resource_id, key, target))
            count += 1
        return count

    def resolve_inventory_links(self) -> None:
        """Create structural edges once all inventories are ingested."""
        for resource_id, key, target in self._pending_links:
            if key == "image":
                image_id = self._image_node(target)
                self.graph.add_edge(resource_id, image_id, "USES_IMAGE")
                continue
            target_id = self.graph.find_by_provider_id(target)
            if target_id is None:
                raise DiscoveryError(
                    f"resource {self.graph.node(resource_id).name!r} links to "
                    f"unknown resource id {target!r}"
                )
            if key == "member_of":
                self.graph.add_edge(target_id, resource_id, "CONTAINS")
            elif key == "targets":
                self.graph.add_edge(resource_id, target_id, "TARGETS")
            elif key == "forwards_logs_to":
                self.graph.add_edge(resource_id, target_id, "LOGS_TO")
                request = self.graph.add_node(
                    "ObjectStorageRequest",
                    f"{self.graph.node(resource_id).name}-append",
                    {"type": "append"},
                )
                self.graph.add_edge(request, resource_id, "SOURCE")
                self.graph.add_edge(request, target_id, "TO")
        self._pending_links.clear()

    # -- workflows ------------------------------------------------------

    def _image_node(self, name: str) -> int:
        existing = self.graph.find_by_name("ContainerImage", name)
        if existing is not None:
            return existing
        return self.graph.add_node("ContainerImage", name)

    def _registry_node(self, host: str) -> int:
        existing = self.graph.find_by_name("ContainerRegistry", host)
        if existing is not None:
            return existing
        registry = self.graph.add_node("ContainerRegistry", host)
        region = self.registry_locations.get(host)
        if region is not None:
            geo = self.graph.add_node("GeoLocation", region, {"region": region})
            self.graph.add_edge(registry, geo, "GEO_LOCATION")
        return registry

    def ingest_workflow(self, doc: WorkflowDocument) -> int:
        """Scan job steps for docker build/push commands; returns the
        number of container image nodes created."""
        created = 0
        for job in doc.jobs:
            for step in job.steps:
                command = step.run.strip()
                if command.startswith("docker build"):
                    name = _build_image_name(command)
                    if name is None:
                        continue
                    if self.graph.find_by_name("ContainerImage", name) is None:
                        self._image_node(name)
                        created += 1
                    self._built_images.add(name)
                elif command.startswith("docker push"):
                    parts = _split_command(command)
                    if len(parts) < 3:
                        continue
                    name = parts[2]
                    if name not in self._built_images:
                        log.warning(
                            "workflow %r pushes image %r that no scanned workflow builds",
                            doc.name,
                            name,
                        )
                    if self.graph.find_by_name("ContainerImage", name) is None:
                        self._image_node(name)
                        created += 1
                    image_id = self._image_node(name)
                    registry_id = self._registry_node(_registry_host(name))
                    if not self.graph.has_edge(image_id, registry_id, "PUSHES_TO"):
                        self.graph.add_edge(image_id, registry_id, "PUSHES_TO")
        return created

    # -- application anchoring -------------------------------------------

    def link_applications(self) -> int:
        """Anchor applications to the compute resources they run on and
        record registry pulls as data flows into the pulling containers.
        Returns the number of RUNS_ON edges created."""
        created = 0
        for app_id in self.graph.nodes_with_class("Application"):
            app = self.graph.node(app_id)
            image = app.properties.get("image")
            host = app.properties.get("host")
            anchored = False
            if image is not None:
                image_node = self.graph.find_by_name("ContainerImage", str(image))
                if image_node is not None:
                    for edge in self.graph.in_edges(image_node, "USES_IMAGE"):
                        self.graph.add_edge(app_id, edge.from_id, "RUNS_ON")
                        created += 1
                        anchored = True
            elif host is not None:
                host_node = self.graph.find_by_provider_id(str(host))
                if host_node is not None:
                    self.graph.add_edge(app_id, host_node, "RUNS_ON")
                    created += 1
                    anchored = True
            if not anchored:
                log.warning(
                    "application %r has no resolvable image or host; "
                    "location-based queries will not see it",
                    app.name,
                )
        for registry_id in self.graph.nodes_with_class("ContainerRegistry"):
            for push in self.graph.in_edges(registry_id, "PUSHES_TO"):
                for use in self.graph.in_edges(push.from_id, "USES_IMAGE"):
                    if not self.graph.has_edge(registry_id, use.from_id, "DFG"):
                        self.graph.add_edge(registry_id, use.from_id, "DFG")
        return created


def _split_command(command: str) -> list[str]:
    try:
        return shlex.split(command)
    except ValueError:
        log.warning("cannot tokenize workflow command %r; skipped", command)
        return []


def _build_image_name(command: str) -> str | None:
    parts = _split_command(command)
    for i, part in enumerate(parts):
        if part in ("-t", "--tag") and i + 1 < len(parts):
            return parts[i + 1]
        if part.startswith("--tag="):
            return part.split("=", 1)[1]
    return None


def _registry_host(image_name: str) -> str:
    head = image_name.split("/", 1)[0]
    if "/" in image_name and ("." in head or ":" in head):
        return head
    return DEFAULT_REGISTRY_HOST
