import importlib.resources

import pytest

from skygraph.build import build_graph, load_manifest
from skygraph.ontology import load_ontology

DATA = importlib.resources.files("skygraph") / "data"

LISTING_FILES = {
    "public-storage-writes": "public-storage-writes.cypher",
    "expression-to-public-storage": "expression-to-public-storage.cypher",
    "weak-transport-encryption": "weak-transport-encryption.cypher",
    "cross-region-resource-flows": "cross-region-resource-flows.cypher",
    "cross-region-service-calls": "cross-region-service-calls.cypher",
}


def data_path(relative: str) -> str:
    return str(DATA / relative)


def listing_text(name: str) -> str:
    return (DATA / "queries" / LISTING_FILES[name]).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def core_ontology():
    return load_ontology(
        data_path("ontology/core.yaml"),
        [data_path("ontology/aws.yaml"), data_path("ontology/azure.yaml"), data_path("ontology/k8s.yaml")],
    )


@pytest.fixture(scope="session")
def testbed():
    """(graph, ontology, report) for the misconfigured fixture."""
    manifest = load_manifest(data_path("fixtures/bookinfo/manifest.yaml"))
    return build_graph(manifest)


@pytest.fixture(scope="session")
def testbed_graph(testbed):
    return testbed[0]


@pytest.fixture(scope="session")
def clean_testbed():
    manifest = load_manifest(data_path("fixtures/bookinfo_clean/manifest.yaml"))
    return build_graph(manifest)
