import os

import numpy as np
import pytest

from cluster_consensus.assumptions import close_friendship_check, homogeneity_certificate
from cluster_consensus.designer import ConsensusDesigner
from cluster_consensus.enums import ValidationRule
from cluster_consensus.exceptions import GraphFormatError, InvalidPartition
from cluster_consensus.file_parsers.graph_parser import GraphParser
from cluster_consensus.graph import (
    ClusterPartition,
    SignedClusteredGraph,
    build_complete_unweighted,
    build_random_homogeneous,
    is_complete_unweighted,
    validate_graph,
)

TEST_DIRECTORY = os.path.dirname(os.path.abspath(__file__))
GRAPH_DIRECTORY = os.path.join(TEST_DIRECTORY, "resources", "graphs")
EXAMPLE_1_PATH = os.path.join(ConsensusDesigner.EXAMPLE_GRAPH_DIRECTORY, "example_1.json")


@pytest.fixture(scope="module")
def graph_parser():
    yield GraphParser()


@pytest.fixture(scope="module")
def example_1(graph_parser):
    yield graph_parser.load_graph(EXAMPLE_1_PATH)


def test_load_example_1(example_1):
    assert example_1.num_agents == 7
    assert example_1.num_clusters == 3
    assert example_1.partition.sizes == (2, 4, 1)
    assert example_1.partition.offsets == (0, 2, 6)


def test_example_1_is_valid(example_1):
    report = validate_graph(example_1)
    assert report.passed
    assert report.to_text() == "passed"


@pytest.mark.parametrize(
    "file_name, rule, message",
    [
        ("asymmetric.json", ValidationRule.SYMMETRY, "symmetry violation at (0,2)"),
        ("disconnected.json", ValidationRule.DISCONNECTED, "disconnected"),
    ],
)
def test_invalid_graph_files(graph_parser, file_name, rule, message):
    """
    Test that an invalid graph file yields one violation of the expected rule
    :param graph_parser: GraphParser fixture
    :param file_name: file under tests/resources/graphs
    :param rule: expected ValidationRule
    :param message: expected message prefix
    :return: None
    """
    report = validate_graph(graph_parser.load_graph(os.path.join(GRAPH_DIRECTORY, file_name)))
    assert not report.passed
    assert report.has_rule(rule)
    assert any(violation.message.startswith(message) for violation in report)


def test_sign_pattern_and_diagonal_violations():
    adjacency = np.array([[1.0, -1.0, -1.0], [-1.0, 0.0, 1.0], [-1.0, 1.0, 0.0]])
    report = validate_graph(SignedClusteredGraph(ClusterPartition((1, 1, 1)), adjacency))
    assert report.has_rule(ValidationRule.ZERO_DIAGONAL)
    assert report.has_rule(ValidationRule.SIGN_PATTERN)
    sign_violation = [v for v in report if v.rule == ValidationRule.SIGN_PATTERN.label][0]
    assert (sign_violation.row, sign_violation.col) == (1, 2)


def test_single_cluster_violation():
    graph = SignedClusteredGraph(ClusterPartition((2,)), np.array([[0.0, 1.0], [1.0, 0.0]]))
    report = validate_graph(graph)
    assert report.has_rule(ValidationRule.CLUSTER_COUNT)
    assert len(report) == 1


@pytest.mark.parametrize(
    "sizes, expected",
    [
        ([1, 1], [[0, -1], [-1, 0]]),
        ([2, 1], [[0, 1, -1], [1, 0, -1], [-1, -1, 0]]),
    ],
)
def test_build_complete_unweighted(sizes, expected):
    graph = build_complete_unweighted(sizes)
    assert np.array_equal(graph.adjacency, np.array(expected, dtype=float))
    assert validate_graph(graph).passed
    assert is_complete_unweighted(graph)


def test_complete_graph_file(graph_parser):
    graph = graph_parser.load_graph(os.path.join(GRAPH_DIRECTORY, "complete_2_3_2.json"))
    assert is_complete_unweighted(graph)


def test_example_1_is_not_complete(example_1):
    assert not is_complete_unweighted(example_1)


def test_empty_sizes_rejected():
    with pytest.raises(InvalidPartition):
        build_complete_unweighted([])
    with pytest.raises(InvalidPartition):
        ClusterPartition((2, 0, 1))


def test_partition_lift_and_means():
    partition = ClusterPartition((2, 4, 1))
    lifted = partition.lift([1.0, 0.0, -1.0])
    assert lifted.tolist() == [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0]
    assert partition.cluster_means(lifted).tolist() == [1.0, 0.0, -1.0]
    assert partition.cluster_spreads(lifted).tolist() == [0.0, 0.0, 0.0]
    assert partition.labels.tolist() == [0, 0, 1, 1, 1, 1, 2]


def test_save_load_round_trip(graph_parser, tmp_path):
    rng = np.random.default_rng(3)
    graph = build_random_homogeneous([3, 3, 2], seed=5)
    weights = rng.uniform(0.1, 1.0) * graph.adjacency / 3.0
    graph = SignedClusteredGraph(graph.partition, weights)
    output_path = tmp_path / "graph.json"
    graph_parser.save_graph(graph, output_path)
    loaded = graph_parser.load_graph(output_path)
    assert loaded.partition == graph.partition
    assert np.array_equal(loaded.adjacency, graph.adjacency)


@pytest.mark.parametrize(
    "text, field",
    [
        ('{"clusters": [2, 1], "adjacency": [[0, 1], [1, 0]]}', "adjacency"),
        ('{"clusters": [1, 1], "adjacency": [[0, -1, 0], [-1, 0]]}', "adjacency[0]"),
        ('{"adjacency": [[0]]}', "clusters"),
        ('{"clusters": [1, 1], "adjacency": [[0, "x"], [-1, 0]]}', "adjacency[0][1]"),
        ('{"clusters": [0, 2], "adjacency": [[0, 1], [1, 0]]}', "clusters[0]"),
    ],
)
def test_parse_graph_errors(graph_parser, text, field):
    with pytest.raises(GraphFormatError) as error:
        graph_parser.parse_graph(text)
    assert error.value.field == field


def test_malformed_document_reports_line(graph_parser):
    with pytest.raises(GraphFormatError) as error:
        graph_parser.load_graph(os.path.join(GRAPH_DIRECTORY, "malformed.json"))
    assert error.value.line is not None


def test_non_square_message(graph_parser):
    with pytest.raises(GraphFormatError, match="non-square matrix"):
        graph_parser.parse_graph('{"clusters": [1, 1], "adjacency": [[0, -1, 0], [-1, 0]]}')


def test_size_mismatch_message(graph_parser):
    with pytest.raises(GraphFormatError, match="size mismatch"):
        graph_parser.parse_graph('{"clusters": [2, 1], "adjacency": [[0, 1], [1, 0]]}')


def test_load_initial_state(graph_parser):
    x0 = graph_parser.load_initial_state(os.path.join(TEST_DIRECTORY, "resources", "x0_example_1.json"), 7)
    assert x0.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
    with pytest.raises(GraphFormatError):
        graph_parser.load_initial_state(os.path.join(TEST_DIRECTORY, "resources", "x0_short.json"), 7)


@pytest.mark.parametrize("seed", range(10))
def test_random_homogeneous_graphs_satisfy_assumptions(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 5, size=int(rng.integers(3, 5))).tolist()
    graph = build_random_homogeneous(sizes, seed=seed)
    assert validate_graph(graph).passed
    homogeneity_certificate(graph)
    assert all(close_friendship_check(graph, 0).values())


def test_to_networkx_positive_only(example_1):
    positive = example_1.to_networkx(positive_only=True)
    assert positive.number_of_edges() == 5
    assert positive.nodes[6]["cluster"] == 2
