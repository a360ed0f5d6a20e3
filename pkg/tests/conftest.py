import pytest

from queryboost.corpus import Document, build_index
from queryboost.embedding import HashingEmbedder
from queryboost.synthetic import make_synthetic_dataset


@pytest.fixture
def small_docs():
    return [
        Document("d1", "", "cat sat mat"),
        Document("d2", "", "dog sat log"),
        Document("d3", "", "cat cat cat"),
    ]


@pytest.fixture
def small_index(small_docs):
    return build_index(small_docs)


@pytest.fixture
def embedder():
    return HashingEmbedder(dimension=64, seed=3)


@pytest.fixture(scope="session")
def synthetic_dataset():
    return make_synthetic_dataset()
