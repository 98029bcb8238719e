"""Cross-service data-flow resolution.

Four passes run in a fixed order once code facts, inventories and
workflows are in the graph:

1. `create_proxied_endpoints` mirrors application endpoints behind load
   balancers under the balancer's URL.
2. `resolve_http_requests` connects HTTP client requests to matching
   endpoints and splices code-level DFG edges between caller and handler.
3. `resolve_storage_requests` connects storage-SDK requests to the storage
   resources they address.
4. `propagate_log_flows` extends application log output into the
   infrastructure log sinks.

Each pass is idempotent: rerunning it leaves the edge multiset unchanged.
URL matching compares host (without port) and path (duplicate slashes
collapsed); scheme is ignored. Endpoints built from application code carry
no host and match on path alone.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from skygraph.errors import AmbiguousStorageError
from skygraph.graph import PropertyGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UrlParts:
    scheme: str
    host: str
    path: str

    @property
    def host_key(self) -> str:
        """Host with any port stripped, for comparisons."""
        return self.host.split(":", 1)[0]


def parse_url(text: str) -> UrlParts:
    """Split a URL into scheme, host and a normalized path."""
    scheme = ""
    rest = text
    if "://" in text:
        scheme, rest = text.split("://", 1)
    if "/" in rest:
        host, path = rest.split("/", 1)
        path = "/" + path
    else:
        host, path = rest, "/"
    return UrlParts(scheme=scheme, host=host, path=re.sub("/+", "/", path))


def format_url(parts: UrlParts) -> str:
    prefix = f"{parts.scheme}://" if parts.scheme else ""
    return f"{prefix}{parts.host}{parts.path}"


# -- pass 1: proxied endpoints -------------------------------------------------


def _endpoints_of_application(graph: PropertyGraph, app_id: int) -> list[int]:
    endpoints = []
    for offer in graph.out_edges(app_id, "OFFERS"):
        if graph.node(offer.to_id).class_name != "HttpRequestHandler":
            continue
        for has in graph.out_edges(offer.to_id, "HAS_ENDPOINT"):
            endpoints.append(has.to_id)
    return endpoints


def _already_proxied(graph: PropertyGraph, balancer_id: int, endpoint_id: int) -> bool:
    for has in graph.out_edges(balancer_id, "HAS_ENDPOINT"):
        candidate = graph.node(has.to_id)
        if candidate.class_name != "ProxiedEndpoint":
            continue
        if any(p.to_id == endpoint_id for p in graph.out_edges(has.to_id, "PROXIES")):
            return True
    return False


def create_proxied_endpoints(graph: PropertyGraph) -> int:
    """Mirror each local endpoint of every application running behind a
    load balancer as a ProxiedEndpoint named balancer-url + path."""
    created = 0
    for balancer_id in graph.label_candidates("LoadBalancer"):
        balancer = graph.node(balancer_id)
        url = graph.property_value(balancer_id, "url")
        if url is None:
            log.warning("load balancer %r has no url; skipped", balancer.name)
            continue
        seen: set[int] = set()
        for target in graph.out_edges(balancer_id, "TARGETS"):
            for runs in graph.in_edges(target.to_id, "RUNS_ON"):
                app_id = runs.from_id
                for endpoint_id in _endpoints_of_application(graph, app_id):
                    if endpoint_id in seen:
                        continue
                    seen.add(endpoint_id)
                    if _already_proxied(graph, balancer_id, endpoint_id):
                        continue
                    endpoint = graph.node(endpoint_id)
                    proxied_url = f"{url}{endpoint.properties['path']}"
                    proxied_id = graph.add_node(
                        "ProxiedEndpoint",
                        proxied_url,
                        {"url": proxied_url, "method": endpoint.properties["method"]},
                    )
                    graph.add_edge(balancer_id, proxied_id, "HAS_ENDPOINT")
                    graph.add_edge(proxied_id, endpoint_id, "PROXIES")
                    created += 1
    return created


# -- pass 2: HTTP request resolution -------------------------------------------


def _endpoint_matches(graph: PropertyGraph, endpoint_id: int, url: UrlParts, method: str) -> bool:
    endpoint = graph.node(endpoint_id)
    endpoint_method = endpoint.properties.get("method")
    if endpoint_method not in ("ANY", method):
        return False
    endpoint_url = endpoint.properties.get("url")
    if endpoint_url is not None:
        parts = parse_url(str(endpoint_url))
        return parts.host_key == url.host_key and parts.path == url.path
    endpoint_path = endpoint.properties.get("path")
    if endpoint_path is not None:
        # application-local endpoint: host is unknowable, match the path
        return re.sub("/+", "/", str(endpoint_path)) == url.path
    return False


def _handler_function(graph: PropertyGraph, endpoint_id: int) -> int | None:
    if graph.node(endpoint_id).class_name == "ProxiedEndpoint":
        proxies = graph.out_edges(endpoint_id, "PROXIES")
        if not proxies:
            return None
        endpoint_id = proxies[0].to_id
    calls = graph.out_edges(endpoint_id, "CALLS")
    return calls[0].to_id if calls else None


def resolve_http_requests(graph: PropertyGraph) -> int:
    """Connect each HttpRequest to every endpoint matching its URL and
    method, and splice DFG edges between the calling expression and the
    handler function. Unmatched requests stay in the graph. Returns the
    number of TO edges added."""
    added = 0
    endpoint_ids = graph.label_candidates("HttpEndpoint")
    for request_id in graph.nodes_with_class("HttpRequest"):
        request = graph.node(request_id)
        url = parse_url(str(request.properties.get("url", "")))
        method = str(request.properties.get("method", ""))
        sources = graph.out_edges(request_id, "SOURCE")
        call_id = sources[0].to_id if sources else None
        for endpoint_id in endpoint_ids:
            if not _endpoint_matches(graph, endpoint_id, url, method):
                continue
            if not graph.has_edge(request_id, endpoint_id, "TO"):
                graph.add_edge(request_id, endpoint_id, "TO")
                added += 1
            handler = _handler_function(graph, endpoint_id)
            if handler is not None and call_id is not None:
                if not graph.has_edge(call_id, handler, "DFG"):
                    graph.add_edge(call_id, handler, "DFG")
                if not graph.has_edge(handler, call_id, "DFG"):
                    graph.add_edge(handler, call_id, "DFG")
    return added


# -- pass 3: storage request resolution ----------------------------------------


def _owning_application(graph: PropertyGraph, request_id: int) -> int | None:
    for source in graph.out_edges(request_id, "SOURCE"):
        if graph.node(source.to_id).class_name != "CallExpression":
            continue
        for fn_edge in graph.in_edges(source.to_id, "CONTAINS"):
            for app_edge in graph.in_edges(fn_edge.from_id, "CONTAINS"):
                if graph.node(app_edge.from_id).class_name == "Application":
                    return app_edge.from_id
    return None


def resolve_storage_requests(graph: PropertyGraph) -> int:
    """Connect storage requests to the storage whose endpoint host and
    container name they address; anchor each request to the compute its
    application runs on. Returns the number of TO edges added."""
    added = 0
    storage_ids = graph.label_candidates("ObjectStorage")
    for request_id in graph.nodes_with_class("ObjectStorageRequest"):
        request = graph.node(request_id)
        account_url = request.properties.get("account_url")
        container = request.properties.get("container")
        if account_url is None or container is None:
            continue
        host = parse_url(str(account_url)).host_key
        matches = []
        for storage_id in storage_ids:
            storage = graph.node(storage_id)
            if storage.name != container:
                continue
            for has in graph.out_edges(storage_id, "HAS_ENDPOINT"):
                endpoint_url = graph.node(has.to_id).properties.get("url")
                if endpoint_url is not None and parse_url(str(endpoint_url)).host_key == host:
                    matches.append(storage_id)
                    break
        if len(matches) > 1:
            names = ", ".join(repr(graph.node(m).name) for m in matches)
            raise AmbiguousStorageError(
                f"storage request {request.name!r} matches multiple storages: {names}"
            )
        if not matches:
            continue
        if not graph.has_edge(request_id, matches[0], "TO"):
            graph.add_edge(request_id, matches[0], "TO")
            added += 1
        app_id = _owning_application(graph, request_id)
        if app_id is not None:
            for runs in graph.out_edges(app_id, "RUNS_ON"):
                if not graph.has_edge(request_id, runs.to_id, "SOURCE"):
                    graph.add_edge(request_id, runs.to_id, "SOURCE")
    return added


# -- pass 4: log flow propagation ----------------------------------------------


def _log_sinks(graph: PropertyGraph, compute_id: int) -> list[int]:
    sinks = [edge.to_id for edge in graph.out_edges(compute_id, "LOGS_TO")]
    for contains in graph.in_edges(compute_id, "CONTAINS"):
        sinks.extend(edge.to_id for edge in graph.out_edges(contains.from_id, "LOGS_TO"))
    return sinks


def propagate_log_flows(graph: PropertyGraph) -> int:
    """Extend application LogOutput into infrastructure log sinks: the
    compute a logging application runs on flows into every storage that
    it (or its containing cluster) forwards logs to. Returns the number
    of DFG edges added."""
    added = 0
    for app_id in graph.nodes_with_class("Application"):
        log_nodes = [
            offer.to_id
            for offer in graph.out_edges(app_id, "OFFERS")
            if graph.node(offer.to_id).class_name == "LogOutput"
        ]
        if not log_nodes:
            continue
        for runs in graph.out_edges(app_id, "RUNS_ON"):
            compute_id = runs.to_id
            sinks = _log_sinks(graph, compute_id)
            if not sinks:
                continue
            for log_id in log_nodes:
                if not graph.has_edge(log_id, compute_id, "DFG"):
                    graph.add_edge(log_id, compute_id, "DFG")
                    added += 1
            for sink_id in sinks:
                if not graph.has_edge(compute_id, sink_id, "DFG"):
                    graph.add_edge(compute_id, sink_id, "DFG")
                    added += 1
    return added


def run_all_passes(graph: PropertyGraph) -> dict[str, int]:
    """Run the four resolution passes in their required order."""
    return {
        "create_proxied_endpoints": create_proxied_endpoints(graph),
        "resolve_http_requests": resolve_http_requests(graph),
        "resolve_storage_requests": resolve_storage_requests(graph),
        "propagate_log_flows": propagate_log_flows(graph),
    }
