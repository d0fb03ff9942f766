from dataclasses import dataclass

import networkx as nx
import numpy as np

from cluster_consensus.base import BaseCollection, BaseItem
from cluster_consensus.enums import ValidationRule
from cluster_consensus.exceptions import InvalidArgument, InvalidPartition


@dataclass(frozen=True, eq=False)
class ClusterPartition:
    """
    Class to represent the split of N agents into k consecutive clusters
    """

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(size) for size in self.sizes)
        if any(size < 1 for size in sizes):
            raise InvalidPartition(f"cluster sizes must be positive, got {list(sizes)}")
        object.__setattr__(self, "sizes", sizes)

    def __repr__(self):
        return f"ClusterPartition: {list(self.sizes)}"

    def __eq__(self, other):
        return isinstance(other, ClusterPartition) and self.sizes == other.sizes

    def __hash__(self):
        return hash(self.sizes)

    @property
    def num_clusters(self):
        return len(self.sizes)

    @property
    def num_agents(self):
        return sum(self.sizes)

    @property
    def offsets(self):
        """
        Index of the first agent of each cluster
        """
        return tuple(int(offset) for offset in np.cumsum((0,) + self.sizes[:-1]))

    def cluster_slice(self, cluster):
        offset = self.offsets[cluster]
        return slice(offset, offset + self.sizes[cluster])

    def cluster_indices(self, cluster):
        return list(range(self.num_agents))[self.cluster_slice(cluster)]

    @property
    def labels(self):
        """
        Cluster index of every agent
        """
        return np.repeat(np.arange(self.num_clusters), self.sizes)

    def block(self, matrix, row_cluster, col_cluster):
        return matrix[self.cluster_slice(row_cluster), self.cluster_slice(col_cluster)]

    def lift(self, cluster_values):
        """
        Method to expand one value per cluster to a block-constant agent vector
        :param cluster_values: k values
        :return: N-vector
        """
        cluster_values = np.asarray(cluster_values, dtype=float)
        if cluster_values.shape != (self.num_clusters,):
            raise InvalidArgument(f"expected {self.num_clusters} cluster values, got {cluster_values.shape}")
        return np.repeat(cluster_values, self.sizes)

    def cluster_means(self, state):
        state = np.asarray(state, dtype=float)
        return np.array([state[self.cluster_slice(c)].mean() for c in range(self.num_clusters)])

    def cluster_spreads(self, state):
        state = np.asarray(state, dtype=float)
        return np.array(
            [np.ptp(state[self.cluster_slice(c)]) for c in range(self.num_clusters)]
        )


@dataclass(frozen=True, eq=False)
class SignedClusteredGraph:
    """
    Class to represent a signed weighted undirected graph whose agents are ordered cluster by cluster
    """

    partition: ClusterPartition
    adjacency: np.ndarray

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=float)
        n = self.partition.num_agents
        if adjacency.shape != (n, n):
            raise InvalidPartition(
                f"adjacency shape {adjacency.shape} does not match {n} agents of {self.partition}"
            )
        adjacency.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)

    def __repr__(self):
        return f"SignedClusteredGraph: N={self.num_agents} k={self.num_clusters} sizes={list(self.partition.sizes)}"

    @property
    def num_agents(self):
        return self.partition.num_agents

    @property
    def num_clusters(self):
        return self.partition.num_clusters

    def block(self, row_cluster, col_cluster):
        return self.partition.block(self.adjacency, row_cluster, col_cluster)

    def to_networkx(self, positive_only=False):
        """
        Method to build the networkx graph of the nonzero pattern, weights kept as edge attributes
        :param positive_only: keep positive weights only
        :return: networkx Graph
        """
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_agents), cluster=None)
        for agent, cluster in enumerate(self.partition.labels):
            graph.nodes[agent]["cluster"] = int(cluster)
        rows, cols = np.nonzero(np.triu(self.adjacency > 0 if positive_only else self.adjacency != 0, k=1))
        graph.add_weighted_edges_from(
            (int(i), int(j), float(self.adjacency[i, j])) for i, j in zip(rows, cols)
        )
        return graph


@dataclass(eq=False)
class Violation(BaseItem):
    rule: str
    row: int
    col: int
    message: str

    def get_key(self):
        return self.rule, self.row, self.col


class ValidationReport(BaseCollection):
    """
    Class to represent the outcome of validating a graph, one violation per failed rule
    """

    ITEM_CLASS = Violation

    @property
    def passed(self):
        return len(self) == 0

    def add_violation(self, rule, row, col, message):
        return self.add_item({"rule": rule.label, "row": row, "col": col, "message": message})

    def has_rule(self, rule):
        return any(violation.rule == rule.label for violation in self)

    def to_text(self):
        if self.passed:
            return "passed"
        return "\n".join(violation.message for violation in self)


def validate_graph(graph):
    """
    Function to check that a graph is symmetric, has a zero diagonal, nonnegative intra-cluster and
    nonpositive inter-cluster weights, at least two clusters and a connected nonzero pattern
    :param graph: SignedClusteredGraph
    :return: ValidationReport
    """
    report = ValidationReport()
    adjacency = graph.adjacency
    if graph.num_clusters < 2:
        report.add_violation(
            ValidationRule.CLUSTER_COUNT, -1, -1,
            f"cluster-count: at least 2 clusters required, found {graph.num_clusters}",
        )
    asymmetric = np.argwhere(np.triu(adjacency != adjacency.T, k=1))
    if len(asymmetric):
        i, j = asymmetric[0]
        report.add_violation(
            ValidationRule.SYMMETRY, int(i), int(j),
            f"symmetry violation at ({i},{j}): {adjacency[i, j]} != {adjacency[j, i]}",
        )
    diagonal = np.flatnonzero(np.diag(adjacency))
    if len(diagonal):
        i = int(diagonal[0])
        report.add_violation(
            ValidationRule.ZERO_DIAGONAL, i, i, f"zero-diagonal violation at ({i},{i})"
        )
    labels = graph.partition.labels
    same_cluster = labels[:, None] == labels[None, :]
    wrong_sign = (same_cluster & (adjacency < 0)) | (~same_cluster & (adjacency > 0))
    bad_entries = np.argwhere(wrong_sign)
    if len(bad_entries):
        i, j = bad_entries[0]
        report.add_violation(
            ValidationRule.SIGN_PATTERN, int(i), int(j),
            f"sign-pattern at ({i},{j}): weight {adjacency[i, j]} "
            f"between clusters {labels[i]} and {labels[j]}",
        )
    components = list(nx.connected_components(graph.to_networkx()))
    if len(components) > 1:
        report.add_violation(
            ValidationRule.DISCONNECTED, -1, -1,
            f"disconnected: {len(components)} connected components",
        )
    return report


def build_complete_unweighted(sizes):
    """
    Function to build the complete unweighted clustered graph, +1 inside clusters and -1 between them
    :param sizes: cluster sizes
    :return: SignedClusteredGraph
    """
    if len(sizes) == 0:
        raise InvalidPartition("sizes must not be empty")
    partition = ClusterPartition(tuple(sizes))
    labels = partition.labels
    same_cluster = labels[:, None] == labels[None, :]
    adjacency = np.where(same_cluster, 1.0, -1.0)
    np.fill_diagonal(adjacency, 0.0)
    return SignedClusteredGraph(partition, adjacency)


def is_complete_unweighted(graph):
    """
    Function to test whether a graph is exactly the complete unweighted clustered graph of its partition
    :param graph: SignedClusteredGraph
    :return: bool
    """
    expected = build_complete_unweighted(graph.partition.sizes)
    return bool(np.array_equal(graph.adjacency, expected.adjacency))


def build_random_homogeneous(sizes, seed=None):
    """
    Function to build a random graph that is a connected signed clustering with constant block row
    sums and close friendship relative to cluster 0. Intra-cluster blocks are complete or, for
    clusters of four or more agents, a cycle, with one positive weight per cluster. Blocks between
    cluster 0 and every other cluster are full; remaining inter-cluster blocks are full, empty or,
    for equal sizes, a negated permutation.
    :param sizes: cluster sizes
    :param seed: seed for numpy default_rng
    :return: SignedClusteredGraph
    """
    rng = np.random.default_rng(seed)
    partition = ClusterPartition(tuple(sizes))
    n = partition.num_agents
    adjacency = np.zeros((n, n))
    for p, size in enumerate(partition.sizes):
        weight = rng.uniform(1.0, 2.0)
        if size >= 4 and rng.random() < 0.5:
            block = np.zeros((size, size))
            for i in range(size):
                block[i, (i + 1) % size] = block[(i + 1) % size, i] = weight
        else:
            block = weight * (np.ones((size, size)) - np.eye(size))
        adjacency[partition.cluster_slice(p), partition.cluster_slice(p)] = block
    for p in range(partition.num_clusters):
        for q in range(p + 1, partition.num_clusters):
            n_p, n_q = partition.sizes[p], partition.sizes[q]
            weight = rng.uniform(0.5, 1.5)
            choice = "full" if p == 0 else rng.choice(["full", "empty", "permutation"])
            if choice == "permutation" and n_p != n_q:
                choice = "full"
            if choice == "full":
                block = -weight * np.ones((n_p, n_q))
            elif choice == "permutation":
                block = -weight * np.eye(n_p)[rng.permutation(n_p)]
            else:
                block = np.zeros((n_p, n_q))
            adjacency[partition.cluster_slice(p), partition.cluster_slice(q)] = block
            adjacency[partition.cluster_slice(q), partition.cluster_slice(p)] = block.T
    return SignedClusteredGraph(partition, adjacency)
