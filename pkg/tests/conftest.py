import json
from pathlib import Path

import pytest

from schemafuzz.demo import DemoService, load_ground_truth, load_openapi_document
from schemafuzz.document import extract_operations, load_document, resolve_references
from schemafuzz.transport import InProcessTransport

CORPUS_DIR = Path(__file__).parent / "corpus"
SUITE_DIR = Path(__file__).parent / "jsonschema_suite"


def corpus_paths():
    return sorted(CORPUS_DIR.iterdir())


def suite_cases():
    """Flattened official-suite-style fixtures: (file, group, case) triples."""
    for path in sorted(SUITE_DIR.glob("*.json")):
        for group in json.loads(path.read_text()):
            for case in group["tests"]:
                yield (path.stem, group["description"], group["schema"],
                       case["description"], case["data"], case["valid"])


@pytest.fixture(scope="session")
def corpus_documents():
    docs = {}
    for path in corpus_paths():
        doc = resolve_references(load_document(path.read_bytes()), 3)
        docs[path.name] = doc
    return docs


@pytest.fixture(scope="session")
def corpus_operations(corpus_documents):
    return {name: extract_operations(doc) for name, doc in corpus_documents.items()}


@pytest.fixture()
def demo_app():
    return DemoService(slow_delay=0.0)


@pytest.fixture()
def demo_transport(demo_app):
    return InProcessTransport(demo_app)


@pytest.fixture(scope="session")
def demo_schema():
    return load_openapi_document()


@pytest.fixture(scope="session")
def demo_manifest():
    return load_ground_truth()
