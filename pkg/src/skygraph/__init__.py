"""Property-graph security analysis for cloud deployments.

Builds one graph out of three sources: per-application code facts,
recorded cloud inventories, and CI/CD workflow files. Resources are
classified through an ontology, security features are attached as nodes,
cross-service data flows are resolved, and the result can be searched
with a Cypher-subset query language.
"""

from skygraph.build import BuildManifest, BuildReport, build_graph, load_manifest
from skygraph.graph import PropertyGraph, export_graph, import_graph
from skygraph.ontology import Ontology, load_ontology
from skygraph.query import MatchResult, evaluate, explain, parse_query

__version__ = "0.1.0"

__all__ = [
    "BuildManifest",
    "BuildReport",
    "MatchResult",
    "Ontology",
    "PropertyGraph",
    "build_graph",
    "evaluate",
    "explain",
    "export_graph",
    "import_graph",
    "load_manifest",
    "load_ontology",
    "parse_query",
    "__version__",
]
