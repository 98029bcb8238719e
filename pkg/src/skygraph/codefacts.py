"""Per-application code-fact bundles and the passes that lower them into
code nodes, intra-application data-flow edges, and framework functionality
nodes (HTTP endpoints, HTTP client requests, storage requests, log output).

Bundles are a language-independent stand-in for source-code frontends: an
upstream extractor is assumed to have reduced framework annotations and SDK
call chains to `http_handler`, `http_client` and `storage_sdk` facts.

Expression references are strings scoped to one bundle and resolve to:

* a call id,
* `<function>.<parameter>` for a declared parameter,
* `<function>.return` for a function's return value,
* a literal id declared on a function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from skygraph.errors import CodeFactsError
from skygraph.graph import PropertyGraph, Scalar

HTTP_METHODS = ("GET", "POST", "PUT", "DELETE")
STORAGE_OPERATIONS = ("create", "append", "read")
CALL_KINDS = ("plain", "http_client", "storage_sdk")

_BUNDLE_KEYS = {"application", "language", "image", "host", "functions", "calls", "dfg"}
_FUNCTION_KEYS = {"name", "parameters", "http_handler", "handler_class", "log_calls", "literals"}
_CALL_KEYS = {"id", "inside", "kind", "http", "storage", "arguments"}


@dataclass(frozen=True)
class HttpHandlerFact:
    path: str
    method: str


@dataclass(frozen=True)
class LiteralFact:
    id: str
    value: Scalar


@dataclass
class FunctionFact:
    qualified_name: str
    parameters: list[str] = field(default_factory=list)
    http_handler: HttpHandlerFact | None = None
    handler_class: str | None = None
    log_calls: list[str] = field(default_factory=list)
    literals: list[LiteralFact] = field(default_factory=list)


@dataclass(frozen=True)
class HttpCallFact:
    url: str
    method: str


@dataclass(frozen=True)
class StorageCallFact:
    account_url: str
    container: str
    operation: str


@dataclass
class CallFact:
    id: str
    inside: str
    kind: str
    http: HttpCallFact | None = None
    storage: StorageCallFact | None = None
    arguments: list[str] = field(default_factory=list)


@dataclass
class CodeFactsBundle:
    application: str
    language: str = ""
    image: str | None = None
    host: str | None = None
    functions: list[FunctionFact] = field(default_factory=list)
    calls: list[CallFact] = field(default_factory=list)
    dfg: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        seen_functions: set[str] = set()
        for fn in self.functions:
            if fn.qualified_name in seen_functions:
                raise CodeFactsError(
                    f"duplicate function {fn.qualified_name!r} "
                    f"in bundle {self.application!r}"
                )
            seen_functions.add(fn.qualified_name)
            if fn.http_handler is not None:
                if not fn.http_handler.path.startswith("/"):
                    raise CodeFactsError(
                        f"handler path {fn.http_handler.path!r} must begin with '/'"
                    )
                if fn.http_handler.method not in HTTP_METHODS:
                    raise CodeFactsError(
                        f"unknown HTTP method {fn.http_handler.method!r}"
                    )
        for call in self.calls:
            if call.kind not in CALL_KINDS:
                raise CodeFactsError(f"unknown call kind {call.kind!r}")
            if (call.http is not None) != (call.kind == "http_client"):
                raise CodeFactsError(
                    f"call {call.id!r}: http details present iff kind is http_client"
                )
            if (call.storage is not None) != (call.kind == "storage_sdk"):
                raise CodeFactsError(
                    f"call {call.id!r}: storage details present iff kind is storage_sdk"
                )
            if call.http is not None and call.http.method not in HTTP_METHODS:
                raise CodeFactsError(f"unknown HTTP method {call.http.method!r}")
            if call.storage is not None and call.storage.operation not in STORAGE_OPERATIONS:
                raise CodeFactsError(
                    f"unknown storage operation {call.storage.operation!r}"
                )
            if call.inside not in seen_functions:
                raise CodeFactsError(
                    f"call {call.id!r} declared inside unknown function {call.inside!r}"
                )
        refs = self.expression_refs()
        for call in self.calls:
            for arg in call.arguments:
                if arg not in refs:
                    raise CodeFactsError(
                        f"call {call.id!r} argument {arg!r} does not resolve"
                    )
        for fn in self.functions:
            for ref in fn.log_calls:
                if ref not in refs:
                    raise CodeFactsError(
                        f"log call ref {ref!r} in {fn.qualified_name!r} does not resolve"
                    )
        for src, dst in self.dfg:
            for ref in (src, dst):
                if ref not in refs:
                    raise CodeFactsError(f"dfg ref {ref!r} does not resolve")

    def expression_refs(self) -> dict[str, tuple]:
        """All resolvable expression refs, keyed by ref string.

        Values are ("call", CallFact), ("param", function, name),
        ("return", function) or ("literal", function, LiteralFact).
        """
        refs: dict[str, tuple] = {}

        def put(ref: str, value: tuple) -> None:
            if ref in refs:
                raise CodeFactsError(f"expression ref {ref!r} declared twice")
            refs[ref] = value

        for call in self.calls:
            put(call.id, ("call", call))
        for fn in self.functions:
            for param in fn.parameters:
                put(f"{fn.qualified_name}.{param}", ("param", fn, param))
            put(f"{fn.qualified_name}.return", ("return", fn))
            for lit in fn.literals:
                put(lit.id, ("literal", fn, lit))
        return refs


# -- bundle loading ---------------------------------------------------------


def _check_keys(entry: dict, allowed: set[str], where: str) -> None:
    unknown = set(entry) - allowed
    if unknown:
        raise CodeFactsError(f"unknown keys {sorted(unknown)} in {where}")


def bundle_from_document(doc: dict) -> CodeFactsBundle:
    if not isinstance(doc, dict):
        raise CodeFactsError("code-facts bundle must be a mapping")
    _check_keys(doc, _BUNDLE_KEYS, "bundle")
    if not isinstance(doc.get("application"), str):
        raise CodeFactsError("bundle needs a string 'application' name")
    functions = []
    for entry in doc.get("functions") or []:
        _check_keys(entry, _FUNCTION_KEYS, f"function {entry.get('name')!r}")
        handler = None
        if entry.get("http_handler") is not None:
            raw = entry["http_handler"]
            _check_keys(raw, {"path", "method"}, f"http_handler of {entry.get('name')!r}")
            handler = HttpHandlerFact(path=raw["path"], method=raw["method"])
        literals = [
            LiteralFact(id=lit["id"], value=lit["value"])
            for lit in entry.get("literals") or []
        ]
        functions.append(
            FunctionFact(
                qualified_name=entry["name"],
                parameters=list(entry.get("parameters") or []),
                http_handler=handler,
                handler_class=entry.get("handler_class"),
                log_calls=list(entry.get("log_calls") or []),
                literals=literals,
            )
        )
    calls = []
    for entry in doc.get("calls") or []:
        _check_keys(entry, _CALL_KEYS, f"call {entry.get('id')!r}")
        http = None
        if entry.get("http") is not None:
            raw = entry["http"]
            _check_keys(raw, {"url", "method"}, f"http of call {entry.get('id')!r}")
            http = HttpCallFact(url=raw["url"], method=raw["method"])
        storage = None
        if entry.get("storage") is not None:
            raw = entry["storage"]
            _check_keys(
                raw,
                {"account_url", "container", "operation"},
                f"storage of call {entry.get('id')!r}",
            )
            storage = StorageCallFact(
                account_url=raw["account_url"],
                container=raw["container"],
                operation=raw["operation"],
            )
        calls.append(
            CallFact(
                id=entry["id"],
                inside=entry["inside"],
                kind=entry.get("kind", "plain"),
                http=http,
                storage=storage,
                arguments=list(entry.get("arguments") or []),
            )
        )
    dfg = []
    for entry in doc.get("dfg") or []:
        _check_keys(entry, {"from", "to"}, "dfg pair")
        dfg.append((entry["from"], entry["to"]))
    return CodeFactsBundle(
        application=doc["application"],
        language=doc.get("language", ""),
        image=doc.get("image"),
        host=doc.get("host"),
        functions=functions,
        calls=calls,
        dfg=dfg,
    )


def load_code_facts(path: str | Path) -> CodeFactsBundle:
    with open(path, encoding="utf-8") as fh:
        return bundle_from_document(yaml.safe_load(fh))


# -- graph construction ------------------------------------------------------


def ingest_code_facts(graph: PropertyGraph, bundle: CodeFactsBundle) -> int:
    """Create the Application node, its declarations, calls, referenced
    expressions and intra-application DFG edges. Returns the node id of
    the Application."""
    app_props: dict[str, Scalar] = {}
    if bundle.language:
        app_props["language"] = bundle.language
    if bundle.image is not None:
        app_props["image"] = bundle.image
    if bundle.host is not None:
        app_props["host"] = bundle.host
    app_id = graph.add_node("Application", bundle.application, app_props)

    fn_nodes: dict[str, int] = {}
    for fn in bundle.functions:
        props: dict[str, Scalar] = {}
        if fn.http_handler is not None:
            props["handler_path"] = fn.http_handler.path
            props["handler_method"] = fn.http_handler.method
        if fn.handler_class is not None:
            props["handler_class"] = fn.handler_class
        fn_id = graph.add_node("FunctionDeclaration", fn.qualified_name, props)
        graph.add_edge(app_id, fn_id, "CONTAINS")
        fn_nodes[fn.qualified_name] = fn_id

    refs = bundle.expression_refs()
    ref_nodes: dict[str, int] = {}
    for call in bundle.calls:
        props = {"kind": call.kind}
        if call.http is not None:
            props["url"] = call.http.url
            props["method"] = call.http.method
        if call.storage is not None:
            props["account_url"] = call.storage.account_url
            props["container"] = call.storage.container
            props["operation"] = call.storage.operation
        call_id = graph.add_node("CallExpression", call.id, props)
        graph.add_edge(fn_nodes[call.inside], call_id, "CONTAINS")
        ref_nodes[call.id] = call_id

    def node_for_ref(ref: str) -> int:
        if ref in ref_nodes:
            return ref_nodes[ref]
        entry = refs[ref]
        fn = entry[1]
        if entry[0] == "literal":
            lit = entry[2]
            node_id = graph.add_node("Literal", str(lit.value), {"value": lit.value})
        else:  # parameter or return value
            node_id = graph.add_node("Expression", ref)
        graph.add_edge(fn_nodes[fn.qualified_name], node_id, "CONTAINS")
        ref_nodes[ref] = node_id
        return node_id

    # materialize every referenced expression before wiring flows
    for call in bundle.calls:
        if call.arguments:
            arg_ids = [node_for_ref(arg) for arg in call.arguments]
            graph.node(ref_nodes[call.id]).properties["argument_nodes"] = ",".join(
                str(i) for i in arg_ids
            )
    for src, dst in bundle.dfg:
        node_for_ref(src)
        node_for_ref(dst)
    for fn in bundle.functions:
        for ref in fn.log_calls:
            node_for_ref(ref)

    for src, dst in bundle.dfg:
        graph.add_edge(ref_nodes[src], ref_nodes[dst], "DFG")

    log_node: int | None = None
    for fn in bundle.functions:
        for ref in fn.log_calls:
            if log_node is None:
                log_node = graph.add_node("LogOutput", f"{bundle.application}-logs")
                graph.add_edge(app_id, log_node, "OFFERS")
            graph.add_edge(ref_nodes[ref], log_node, "DFG")
    return app_id


def _functions_of(graph: PropertyGraph, app_id: int) -> list[int]:
    return [
        e.to_id
        for e in graph.out_edges(app_id, "CONTAINS")
        if graph.node(e.to_id).class_name == "FunctionDeclaration"
    ]


def _calls_of(graph: PropertyGraph, fn_id: int) -> list[int]:
    return [
        e.to_id
        for e in graph.out_edges(fn_id, "CONTAINS")
        if graph.node(e.to_id).class_name == "CallExpression"
    ]


def build_http_server_nodes(graph: PropertyGraph, app_id: int) -> int:
    """Create HttpRequestHandler and HttpEndpoint nodes for framework
    handler functions. Returns the number of endpoints created.

    Functions without a controller class share one per-application
    handler node.
    """
    app = graph.node(app_id)
    handlers: dict[str | None, int] = {}
    created = 0
    for fn_id in _functions_of(graph, app_id):
        fn = graph.node(fn_id)
        path = fn.properties.get("handler_path")
        if path is None:
            continue
        group = fn.properties.get("handler_class")
        if group not in handlers:
            handler_name = group if group is not None else f"{app.name}-handlers"
            handler_id = graph.add_node("HttpRequestHandler", str(handler_name))
            graph.add_edge(app_id, handler_id, "OFFERS")
            handlers[group] = handler_id
        endpoint_id = graph.add_node(
            "HttpEndpoint",
            str(path),
            {"path": path, "method": fn.properties["handler_method"]},
        )
        graph.add_edge(handlers[group], endpoint_id, "HAS_ENDPOINT")
        graph.add_edge(endpoint_id, fn_id, "CALLS")
        created += 1
    return created


def build_http_client_nodes(graph: PropertyGraph, app_id: int) -> int:
    """Create one HttpRequest node per http_client call expression."""
    created = 0
    for fn_id in _functions_of(graph, app_id):
        for call_id in _calls_of(graph, fn_id):
            call = graph.node(call_id)
            if call.properties.get("kind") != "http_client":
                continue
            request_id = graph.add_node(
                "HttpRequest",
                str(call.properties["url"]),
                {"url": call.properties["url"], "method": call.properties["method"]},
            )
            graph.add_edge(request_id, call_id, "SOURCE")
            graph.add_edge(app_id, request_id, "OFFERS")
            created += 1
    return created


def build_storage_request_nodes(graph: PropertyGraph, app_id: int) -> int:
    """Create one ObjectStorageRequest node per storage_sdk call.

    Write operations (create/append) get DFG edges from their argument
    expressions; connection to the actual storage resource is left to the
    data-flow resolution passes.
    """
    created = 0
    for fn_id in _functions_of(graph, app_id):
        for call_id in _calls_of(graph, fn_id):
            call = graph.node(call_id)
            if call.properties.get("kind") != "storage_sdk":
                continue
            operation = str(call.properties["operation"])
            container = str(call.properties["container"])
            request_id = graph.add_node(
                "ObjectStorageRequest",
                f"{operation} {container}",
                {
                    "type": operation,
                    "account_url": call.properties["account_url"],
                    "container": container,
                },
            )
            graph.add_edge(request_id, call_id, "SOURCE")
            if operation in ("create", "append"):
                for arg_id in _argument_nodes(graph, call_id):
                    graph.add_edge(arg_id, request_id, "DFG")
            created += 1
    return created


def _argument_nodes(graph: PropertyGraph, call_id: int) -> list[int]:
    """Expression nodes recorded as arguments of a call at ingest time."""
    recorded = graph.node(call_id).properties.get("argument_nodes")
    if not recorded:
        return []
    return [int(part) for part in str(recorded).split(",")]
