import pytest

from gcot import EncoderConfig
from gcot.encoder import init_weights

from toygraphs import make_graph_collection, make_node_collection


@pytest.fixture
def toy_collection():
    return make_node_collection()


@pytest.fixture
def toy_graph(toy_collection):
    return toy_collection.single()


@pytest.fixture
def toy_graph_collection():
    return make_graph_collection()


@pytest.fixture
def small_frozen_weights():
    return init_weights(EncoderConfig(num_layers=3, input_dim=5, hidden_dim=8), seed=1).freeze()
