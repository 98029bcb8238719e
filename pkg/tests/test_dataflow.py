from collections import Counter, deque

import pytest

from skygraph.codefacts import (
    bundle_from_document,
    build_http_client_nodes,
    build_http_server_nodes,
    ingest_code_facts,
)
from skygraph.dataflow import (
    UrlParts,
    create_proxied_endpoints,
    format_url,
    parse_url,
    propagate_log_flows,
    resolve_http_requests,
    resolve_storage_requests,
    run_all_passes,
)
from skygraph.errors import AmbiguousStorageError
from skygraph.graph import PropertyGraph


class TestUrlParts:
    def test_parse_full(self):
        parts = parse_url("https://example.io:443/login")
        assert parts == UrlParts("https", "example.io:443", "/login")
        assert parts.host_key == "example.io"

    def test_bare_host(self):
        assert parse_url("example.io") == UrlParts("", "example.io", "/")

    def test_duplicate_slashes_collapse(self):
        assert parse_url("http://h//a///b").path == "/a/b"

    def test_round_trip(self):
        import random

        rng = random.Random(7)
        schemes = ["", "http", "https"]
        hosts = ["example.io", "svc:9080", "a.b.c"]
        paths = ["/", "/x", "/x/y"]
        for _ in range(50):
            parts = UrlParts(rng.choice(schemes), rng.choice(hosts), rng.choice(paths))
            assert parse_url(format_url(parts)) == parts


def two_app_graph(core_ontology):
    """Fig-style scenario: app1 behind a load balancer, app2 on a VM

    calling app1's login endpoint through the balancer URL."""
    graph = PropertyGraph(core_ontology)
    app1 = ingest_code_facts(
        graph,
        bundle_from_document(
            {
                "application": "app1",
                "image": "ghcr.io/acme/app1",
                "functions": [
                    {"name": "app1.index", "http_handler": {"path": "/", "method": "GET"}},
                    {"name": "app1.login", "http_handler": {"path": "/login", "method": "POST"}},
                ],
            }
        ),
    )
    app2 = ingest_code_facts(
        graph,
        bundle_from_document(
            {
                "application": "app2",
                "host": "vm1",
                "functions": [{"name": "app2.call_home"}],
                "calls": [
                    {
                        "id": "login_call",
                        "inside": "app2.call_home",
                        "kind": "http_client",
                        "http": {"url": "https://example.io/login", "method": "POST"},
                    }
                ],
            }
        ),
    )
    for app in (app1, app2):
        build_http_server_nodes(graph, app)
        build_http_client_nodes(graph, app)
    balancer = graph.add_node("LoadBalancer", "lb", {"url": "example.io"})
    compute = graph.add_node("Container", "c1", {"provider_id": "c1"})
    vm = graph.add_node("VirtualMachine", "vm1", {"provider_id": "vm1"})
    graph.add_edge(balancer, compute, "TARGETS")
    graph.add_edge(app1, compute, "RUNS_ON")
    graph.add_edge(app2, vm, "RUNS_ON")
    return graph, app1, app2, balancer


class TestCreateProxiedEndpoints:
    def test_prefixes_balancer_url(self, core_ontology):
        graph, app1, _, balancer = two_app_graph(core_ontology)
        count = create_proxied_endpoints(graph)
        assert count == 2
        names = {graph.node(n).name for n in graph.nodes_with_class("ProxiedEndpoint")}
        assert names == {"example.io/", "example.io/login"}
        for proxied_id in graph.nodes_with_class("ProxiedEndpoint"):
            assert graph.has_edge(balancer, proxied_id, "HAS_ENDPOINT")
            assert len(graph.out_edges(proxied_id, "PROXIES")) == 1

    def test_balancer_without_applications(self, core_ontology):
        graph = PropertyGraph(core_ontology)
        balancer = graph.add_node("LoadBalancer", "lb", {"url": "example.io"})
        compute = graph.add_node("Container", "c1", {})
        graph.add_edge(balancer, compute, "TARGETS")
        assert create_proxied_endpoints(graph) == 0

    def test_balancer_without_url_is_skipped(self, core_ontology, caplog):
        graph = PropertyGraph(core_ontology)
        graph.add_node("LoadBalancer", "lb", {})
        with caplog.at_level("WARNING"):
            assert create_proxied_endpoints(graph) == 0
        assert "lb" in caplog.text

    def test_url_concatenation_invariant(self, testbed_graph):
        g = testbed_graph
        for proxied_id in g.nodes_with_class("ProxiedEndpoint"):
            balancer = g.in_edges(proxied_id, "HAS_ENDPOINT")[0].from_id
            local = g.out_edges(proxied_id, "PROXIES")[0].to_id
            expected = str(g.property_value(balancer, "url")) + str(
                g.node(local).properties["path"]
            )
            assert g.node(proxied_id).properties["url"] == expected


class TestResolveHttpRequests:
    def test_proxied_match_and_splice(self, core_ontology):
        graph, _, _, _ = two_app_graph(core_ontology)
        create_proxied_endpoints(graph)
        count = resolve_http_requests(graph)
        request = graph.nodes_with_class("HttpRequest")[0]
        to_targets = {e.to_id for e in graph.out_edges(request, "TO")}
        proxied = graph.find_by_name("ProxiedEndpoint", "example.io/login")
        assert proxied in to_targets
        # data flow spliced through to the handler function, both directions
        call = graph.find_by_name("CallExpression", "login_call")
        handler_fn = graph.find_by_name("FunctionDeclaration", "app1.login")
        assert graph.has_edge(call, handler_fn, "DFG")
        assert graph.has_edge(handler_fn, call, "DFG")
        assert count == len(to_targets)

    def test_unmatched_request_kept(self, core_ontology):
        graph = PropertyGraph(core_ontology)
        app = ingest_code_facts(
            graph,
            bundle_from_document(
                {
                    "application": "a",
                    "functions": [{"name": "f"}],
                    "calls": [
                        {
                            "id": "c",
                            "inside": "f",
                            "kind": "http_client",
                            "http": {"url": "http://nowhere.example/none", "method": "GET"},
                        }
                    ],
                }
            ),
        )
        build_http_client_nodes(graph, app)
        assert resolve_http_requests(graph) == 0
        request = graph.nodes_with_class("HttpRequest")[0]
        assert graph.out_edges(request, "TO") == []

    def test_method_mismatch(self, core_ontology):
        # oracle: brute-force cross product of requests and endpoints with
        # the documented matching predicate
        graph = PropertyGraph(core_ontology)
        app = ingest_code_facts(
            graph,
            bundle_from_document(
                {
                    "application": "a",
                    "functions": [
                        {"name": "handler", "http_handler": {"path": "/x", "method": "POST"}},
                        {"name": "caller"},
                    ],
                    "calls": [
                        {
                            "id": "c",
                            "inside": "caller",
                            "kind": "http_client",
                            "http": {"url": "http://svc/x", "method": "GET"},
                        }
                    ],
                }
            ),
        )
        build_http_server_nodes(graph, app)
        build_http_client_nodes(graph, app)
        assert resolve_http_requests(graph) == 0

    def test_any_method_wildcard(self, core_ontology):
        graph = PropertyGraph(core_ontology)
        storage = graph.add_node("ObjectStorage", "s", {})
        endpoint = graph.add_node(
            "HttpEndpoint", "https://h/x", {"url": "https://h/x", "method": "ANY"}
        )
        graph.add_edge(storage, endpoint, "HAS_ENDPOINT")
        app = ingest_code_facts(
            graph,
            bundle_from_document(
                {
                    "application": "a",
                    "functions": [{"name": "f"}],
                    "calls": [
                        {
                            "id": "c",
                            "inside": "f",
                            "kind": "http_client",
                            "http": {"url": "http://h/x", "method": "POST"},
                        }
                    ],
                }
            ),
        )
        build_http_client_nodes(graph, app)
        # scheme differs, host and path match, ANY accepts POST
        assert resolve_http_requests(graph) == 1

    def test_local_endpoint_matches_on_path(self, core_ontology):
        graph, _, _, _ = two_app_graph(core_ontology)
        create_proxied_endpoints(graph)
        resolve_http_requests(graph)
        request = graph.nodes_with_class("HttpRequest")[0]
        local = graph.find_by_name("HttpEndpoint", "/login")
        assert local in {e.to_id for e in graph.out_edges(request, "TO")}


class TestResolveStorageRequests:
    def storage_graph(self, core_ontology, containers=("am-containerlog",)):
        graph = PropertyGraph(core_ontology)
        for i, name in enumerate(containers):
            storage = graph.add_node("ObjectStorage", name, {"provider_id": f"s{i}"})
            endpoint = graph.add_node(
                "HttpEndpoint",
                f"https://logs.blob.example/{name}",
                {"url": f"https://logs.blob.example/{name}", "method": "ANY"},
            )
            graph.add_edge(storage, endpoint, "HAS_ENDPOINT")
        app = ingest_code_facts(
            graph,
            bundle_from_document(
                {
                    "application": "a",
                    "functions": [{"name": "f"}],
                    "calls": [
                        {
                            "id": "c",
                            "inside": "f",
                            "kind": "storage_sdk",
                            "storage": {
                                "account_url": "https://logs.blob.example",
                                "container": "am-containerlog",
                                "operation": "append",
                            },
                        }
                    ],
                }
            ),
        )
        from skygraph.codefacts import build_storage_request_nodes

        build_storage_request_nodes(graph, app)
        compute = graph.add_node("VirtualMachine", "vm", {})
        graph.add_edge(app, compute, "RUNS_ON")
        return graph

    def test_matches_host_and_container(self, core_ontology):
        graph = self.storage_graph(core_ontology)
        assert resolve_storage_requests(graph) == 1
        request = graph.nodes_with_class("ObjectStorageRequest")[0]
        storage = graph.find_by_name("ObjectStorage", "am-containerlog")
        assert graph.has_edge(request, storage, "TO")
        # anchored to the application's compute for resource-level queries
        vm = graph.find_by_name("VirtualMachine", "vm")
        assert graph.has_edge(request, vm, "SOURCE")

    def test_no_match(self, core_ontology):
        graph = self.storage_graph(core_ontology, containers=("other",))
        assert resolve_storage_requests(graph) == 0

    def test_ambiguous_match_names_both(self, core_ontology):
        graph = self.storage_graph(core_ontology)
        dup = graph.add_node("ObjectStorage", "am-containerlog", {"provider_id": "dup"})
        endpoint = graph.add_node(
            "HttpEndpoint",
            "https://logs.blob.example/dup",
            {"url": "https://logs.blob.example/dup", "method": "ANY"},
        )
        graph.add_edge(dup, endpoint, "HAS_ENDPOINT")
        with pytest.raises(AmbiguousStorageError, match="am-containerlog"):
            resolve_storage_requests(graph)

    def test_synthesized_request_untouched(self, testbed_graph):
        # the log-forwarding request has no account_url; reruns add nothing
        assert resolve_storage_requests(testbed_graph) == 0


class TestPropagateLogFlows:
    def test_full_chain_exists(self, testbed_graph):
        g = testbed_graph
        log_output = g.find_by_name("LogOutput", "productpage-logs")
        container = g.find_by_name("Container", "productpage-v1")
        storage = g.find_by_name("ObjectStorage", "am-containerlog")
        assert g.has_edge(log_output, container, "DFG")
        assert g.has_edge(container, storage, "DFG")

    def test_no_sink_no_edges(self, core_ontology):
        graph = PropertyGraph(core_ontology)
        app = ingest_code_facts(
            graph,
            bundle_from_document(
                {
                    "application": "a",
                    "functions": [{"name": "f", "log_calls": ["c"]}],
                    "calls": [{"id": "c", "inside": "f", "kind": "plain"}],
                }
            ),
        )
        compute = graph.add_node("VirtualMachine", "vm", {})
        graph.add_edge(app, compute, "RUNS_ON")
        assert propagate_log_flows(graph) == 0

    def test_shared_compute_deduplicates(self, core_ontology):
        graph = PropertyGraph(core_ontology)
        apps = []
        for name in ("a1", "a2"):
            apps.append(
                ingest_code_facts(
                    graph,
                    bundle_from_document(
                        {
                            "application": name,
                            "functions": [{"name": f"{name}.f", "log_calls": [f"{name}c"]}],
                            "calls": [{"id": f"{name}c", "inside": f"{name}.f", "kind": "plain"}],
                        }
                    ),
                )
            )
        compute = graph.add_node("Container", "shared", {})
        storage = graph.add_node("ObjectStorage", "sink", {})
        graph.add_edge(compute, storage, "LOGS_TO")
        for app in apps:
            graph.add_edge(app, compute, "RUNS_ON")
        propagate_log_flows(graph)
        # oracle: multiset of DFG edges contains compute->storage exactly once
        counts = Counter(
            (e.from_id, e.to_id) for e in graph.edges_of_type("DFG")
        )
        assert counts[(compute, storage)] == 1


class TestIdempotency:
    PASSES = [
        create_proxied_endpoints,
        resolve_http_requests,
        resolve_storage_requests,
        propagate_log_flows,
    ]

    def edge_multiset(self, graph):
        return Counter((e.type, e.from_id, e.to_id) for e in graph.edges())

    @pytest.mark.parametrize("run_pass", PASSES, ids=lambda f: f.__name__)
    def test_each_pass_idempotent(self, core_ontology, run_pass):
        graph, *_ = two_app_graph(core_ontology)
        storage = graph.add_node("ObjectStorage", "sink", {})
        endpoint = graph.add_node(
            "HttpEndpoint", "https://h/sink", {"url": "https://h/sink", "method": "ANY"}
        )
        graph.add_edge(storage, endpoint, "HAS_ENDPOINT")
        run_all_passes(graph)
        before = self.edge_multiset(graph)
        count = run_pass(graph)
        assert count == 0
        assert self.edge_multiset(graph) == before


def test_to_edges_land_on_http_endpoints(testbed_graph):
    g = testbed_graph
    for request_id in g.nodes_with_class("HttpRequest"):
        for edge in g.out_edges(request_id, "TO"):
            assert g.node_matches_label(edge.to_id, "HttpEndpoint")


def test_request_resolution_matches_cross_product_oracle(testbed_graph):
    # independent matching predicate applied to every (request, endpoint) pair
    g = testbed_graph

    def split(url):
        rest = url.split("://", 1)[1] if "://" in url else url
        host, _, path = rest.partition("/")
        path = "/" + path
        while "//" in path:
            path = path.replace("//", "/")
        return host.split(":")[0], path

    expected = set()
    for request_id in g.nodes_with_class("HttpRequest"):
        req = g.node(request_id)
        req_host, req_path = split(str(req.properties["url"]))
        for node in g.nodes():
            if not g.node_matches_label(node.id, "HttpEndpoint"):
                continue
            ep = node.properties
            if ep.get("method") not in ("ANY", req.properties["method"]):
                continue
            if "url" in ep:
                ep_host, ep_path = split(str(ep["url"]))
                if ep_host == req_host and ep_path == req_path:
                    expected.add((request_id, node.id))
            elif "path" in ep and str(ep["path"]) == req_path:
                expected.add((request_id, node.id))
    actual = {
        (r, e.to_id)
        for r in g.nodes_with_class("HttpRequest")
        for e in g.out_edges(r, "TO")
    }
    assert actual == expected


def test_login_expression_reaches_storage(testbed_graph):
    # independent breadth-first search over DFG edges
    g = testbed_graph
    source = g.find_by_name("CallExpression", "request_values")
    target = g.find_by_name("ObjectStorage", "am-containerlog")
    distances = {source: 0}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        for edge in g.out_edges(cur, "DFG"):
            if edge.to_id not in distances:
                distances[edge.to_id] = distances[cur] + 1
                queue.append(edge.to_id)
    assert target in distances
    assert distances[target] >= 3
