import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
import pandas as pd

from cluster_consensus.exceptions import (
    CloseFriendshipViolation,
    HomogeneityViolation,
    InconsistentOrdering,
    InvalidArgument,
    NotPositiveDefinite,
    TooFewClusters,
)
from cluster_consensus.graph import ClusterPartition, SignedClusteredGraph
from cluster_consensus.linalg import PATTERN_THRESHOLD, metzler_pd_certificate, solve_symmetric

logger = logging.getLogger(__name__)

HOMOGENEITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TrustMatrix:
    """
    k x k matrix of common block row sums: c_ii >= 0 is the trust inside cluster i, c_ij <= 0 the
    mistrust of cluster i towards cluster j. Not necessarily symmetric.
    """

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __repr__(self):
        return f"TrustMatrix: {self.c.tolist()}"

    @property
    def num_clusters(self):
        return self.c.shape[0]

    def permuted(self, order):
        return TrustMatrix(self.c[np.ix_(order, order)])

    def to_dataframe(self):
        labels = [f"cluster_{i + 1}" for i in range(self.num_clusters)]
        return pd.DataFrame(self.c, index=labels, columns=labels)


@dataclass(frozen=True, eq=False)
class ClusterOrdering:
    """
    Cluster order used by gain synthesis: the hub first, the exempt cluster second, then the
    remaining clusters in their original relative order
    """

    hub: int
    exempt: int
    order: tuple
    agent_permutation: np.ndarray

    def __repr__(self):
        return f"ClusterOrdering: hub={self.hub} exempt={self.exempt} order={list(self.order)}"

    @classmethod
    def from_order(cls, order, partition):
        """
        Method to build an ordering and its induced agent permutation from a cluster order
        :param order: permutation of cluster indices
        :param partition: ClusterPartition of the original graph
        :return: ClusterOrdering
        """
        order = tuple(int(cluster) for cluster in order)
        if sorted(order) != list(range(partition.num_clusters)):
            raise InconsistentOrdering(f"{list(order)} is not a permutation of {partition.num_clusters} clusters")
        permutation = np.concatenate([partition.cluster_indices(cluster) for cluster in order]).astype(int)
        exempt = order[1] if len(order) > 1 else order[0]
        return cls(hub=order[0], exempt=exempt, order=order, agent_permutation=permutation)

    @property
    def inverse_agent_permutation(self):
        return np.argsort(self.agent_permutation)

    def is_identity(self):
        return self.order == tuple(range(len(self.order)))


def homogeneity_certificate(graph, tol=HOMOGENEITY_TOL):
    """
    Function to certify that every adjacency block has constant row sums and return them
    :param graph: SignedClusteredGraph
    :param tol: tolerance relative to the largest |row sum|
    :return: TrustMatrix
    """
    k = graph.num_clusters
    row_sums = [
        [graph.block(i, j).sum(axis=1) for j in range(k)] for i in range(k)
    ]
    scale = max(float(np.max(np.abs(sums))) for block_row in row_sums for sums in block_row)
    threshold = tol * scale if scale > 0 else tol
    c = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            sums = row_sums[i][j]
            spread = float(np.ptp(sums))
            if spread > threshold:
                raise HomogeneityViolation(i, j, spread)
            c[i, j] = sums.mean()
    return TrustMatrix(c)


def familiarity_components(graph, cluster):
    """
    Function to split a cluster into the connected components of its positive-weight subgraph
    :param graph: SignedClusteredGraph
    :param cluster: cluster index
    :return: list of sets of agent indices, ordered by smallest member
    """
    if not 0 <= cluster < graph.num_clusters:
        raise InvalidArgument(f"cluster {cluster} out of range")
    positive_graph = graph.to_networkx(positive_only=True)
    subgraph = positive_graph.subgraph(graph.partition.cluster_indices(cluster))
    return sorted((set(component) for component in nx.connected_components(subgraph)), key=min)


def close_friendship_check(graph, hub):
    """
    Function to test, for every cluster other than the hub, that each pair of its agents is either
    linked by a positive edge or has enemies in one familiarity component of the hub cluster
    :param graph: SignedClusteredGraph
    :param hub: hub cluster index
    :return: dict {cluster: bool}
    """
    adjacency = graph.adjacency
    component_of = {}
    for component_id, component in enumerate(familiarity_components(graph, hub)):
        for agent in component:
            component_of[agent] = component_id
    hub_agents = graph.partition.cluster_indices(hub)
    verdicts = {}
    for cluster in range(graph.num_clusters):
        if cluster == hub:
            continue
        agents = graph.partition.cluster_indices(cluster)
        enemy_components = {
            i: {component_of[r] for r in hub_agents if adjacency[i, r] < 0} for i in agents
        }
        verdicts[cluster] = all(
            adjacency[i, j] > 0 or bool(enemy_components[i] & enemy_components[j])
            for index, i in enumerate(agents)
            for j in agents[index + 1:]
        )
    return verdicts


def friendship_matrix_form(graph, hub, cluster, delta_hub, threshold=PATTERN_THRESHOLD):
    """
    Function to check the matrix form of close friendship: the off-diagonal entries of
    A_hh + A_h,hub (delta_hub I - A_hub,hub)^-1 A_hub,h are all strictly positive
    :param graph: SignedClusteredGraph
    :param hub: hub cluster index
    :param cluster: checked cluster index h
    :param delta_hub: stubbornness of the hub cluster
    :param threshold: strict positivity threshold
    :return: bool
    """
    hub_block = graph.block(hub, hub)
    is_pd, _ = metzler_pd_certificate(np.full(hub_block.shape[0], float(delta_hub)), hub_block)
    if not is_pd:
        raise NotPositiveDefinite(f"delta_hub={delta_hub} does not make the hub block positive definite")
    shifted = delta_hub * np.eye(hub_block.shape[0]) - hub_block
    coupling = graph.block(cluster, hub)
    combined = graph.block(cluster, cluster) + coupling @ solve_symmetric(shifted, coupling.T)
    n = combined.shape[0]
    if n < 2:
        return True
    return bool(np.all(combined[~np.eye(n, dtype=bool)] > threshold))


def find_ordering(graph):
    """
    Function to search for a hub cluster relative to which all but at most one other cluster pass
    close friendship. The lowest feasible hub wins; the failing cluster, or the lowest non-hub
    cluster when none fails, becomes the exempt cluster placed second.
    :param graph: SignedClusteredGraph
    :return: ClusterOrdering
    """
    k = graph.num_clusters
    if k < 3:
        raise TooFewClusters(k)
    failures = {}
    for hub in range(k):
        verdicts = close_friendship_check(graph, hub)
        failing = [cluster for cluster, passed in verdicts.items() if not passed]
        if len(failing) <= 1:
            exempt = failing[0] if failing else min(cluster for cluster in range(k) if cluster != hub)
            order = [hub, exempt] + [cluster for cluster in range(k) if cluster not in (hub, exempt)]
            ordering = ClusterOrdering.from_order(order, graph.partition)
            logger.info(f"Cluster ordering found: {ordering}")
            return ordering
        failures[hub] = failing
    raise CloseFriendshipViolation(failures)


def relabel(graph, ordering):
    """
    Function to permute the clusters of a graph into the given order
    :param graph: SignedClusteredGraph
    :param ordering: ClusterOrdering
    :return: (relabelled graph, agent permutation) with new agent m equal to old agent permutation[m]
    """
    expected = ClusterOrdering.from_order(ordering.order, graph.partition)
    if (
        ordering.hub != ordering.order[0]
        or ordering.exempt != expected.exempt
        or not np.array_equal(ordering.agent_permutation, expected.agent_permutation)
    ):
        raise InconsistentOrdering(f"{ordering} does not match partition {graph.partition}")
    permutation = expected.agent_permutation
    partition = ClusterPartition(tuple(graph.partition.sizes[cluster] for cluster in ordering.order))
    adjacency = graph.adjacency[np.ix_(permutation, permutation)]
    return SignedClusteredGraph(partition, adjacency), permutation
