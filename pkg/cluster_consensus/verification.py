import logging
from dataclasses import dataclass

import numpy as np

from cluster_consensus.exceptions import InvalidArgument, NotPSD
from cluster_consensus.linalg import ensure_symmetric, sym_eigen

logger = logging.getLogger(__name__)

KERNEL_TOL = 1e-8
ALPHA_ZERO = 1e-12


def build_M(graph, deltas):
    """
    Function to build M = D - A with D = diag(delta_1 I_n1, ..., delta_k I_nk)
    :param graph: SignedClusteredGraph
    :param deltas: k stubbornness values
    :return: N x N symmetric numpy array
    """
    deltas = np.asarray(deltas, dtype=float).reshape(-1)
    if deltas.shape[0] != graph.num_clusters:
        raise InvalidArgument(f"expected {graph.num_clusters} deltas, got {deltas.shape[0]}")
    return np.diag(graph.partition.lift(deltas)) - graph.adjacency


def signed_laplacian(graph):
    """
    Function to build the signed DeGroot Laplacian L = C - A, C the diagonal of absolute row sums.
    Under this law a graph that needs three or more clusters can only agree on zero.
    :param graph: SignedClusteredGraph
    :return: N x N symmetric numpy array
    """
    return np.diag(np.abs(graph.adjacency).sum(axis=1)) - graph.adjacency


def normalise_direction(vector):
    """
    Function to scale a vector to unit norm with its first nonzero entry positive
    :param vector: numpy vector
    :return: numpy vector
    """
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        return vector
    vector = vector / norm
    nonzero = np.flatnonzero(np.abs(vector) > ALPHA_ZERO)
    if len(nonzero) and vector[nonzero[0]] < 0:
        vector = -vector
    return vector


@dataclass(eq=False)
class KernelReport:
    """
    Spectral verdict on M: positive semidefiniteness, zero eigenvalue multiplicity and whether the
    kernel is spanned by block-constant vectors, with the per-cluster alpha coefficients
    """

    is_psd: bool
    min_eigenvalue: float
    zero_multiplicity: int
    kernel_basis: np.ndarray
    block_constant: bool
    alphas: list
    eigenvalues: np.ndarray

    def __repr__(self):
        return (
            f"KernelReport: psd={self.is_psd} min_eigenvalue={self.min_eigenvalue:.3e} "
            f"zero_multiplicity={self.zero_multiplicity} block_constant={self.block_constant}"
        )

    @property
    def consensus_ready(self):
        return self.is_psd and self.zero_multiplicity > 0 and self.block_constant

    @property
    def spectral_gap(self):
        """
        Smallest eigenvalue of M above the zero cluster, the slowest decay rate towards the kernel
        """
        if self.zero_multiplicity >= len(self.eigenvalues):
            return float("inf")
        return float(self.eigenvalues[self.zero_multiplicity])

    def to_dict(self):
        return {
            "is_psd": self.is_psd,
            "min_eigenvalue": self.min_eigenvalue,
            "zero_multiplicity": self.zero_multiplicity,
            "block_constant": self.block_constant,
            "alphas": [list(alpha) for alpha in self.alphas],
        }


def verify_kernel(matrix, partition, tol=KERNEL_TOL):
    """
    Function to check that M is positive semidefinite and singular with a kernel spanned by
    block-constant vectors [alpha_1 1_n1; ...; alpha_k 1_nk]
    :param matrix: N x N symmetric matrix
    :param partition: ClusterPartition
    :param tol: zero eigenvalue tolerance relative to ||M||_F
    :return: KernelReport
    """
    m = ensure_symmetric(matrix, "M")
    if m.shape[0] != partition.num_agents:
        raise InvalidArgument(f"M has dimension {m.shape[0]}, partition has {partition.num_agents} agents")
    decomposition = sym_eigen(m)
    threshold = tol * np.linalg.norm(m)
    basis = decomposition.null_space(threshold)
    if basis.shape[1]:
        basis = np.column_stack([normalise_direction(vector) for vector in basis.T])
    block_constant = basis.shape[1] > 0 and all(
        np.max(partition.cluster_spreads(vector)) <= tol * np.linalg.norm(vector) for vector in basis.T
    )
    alphas = []
    if block_constant:
        alphas = [tuple(normalise_direction(partition.cluster_means(vector))) for vector in basis.T]
    report = KernelReport(
        is_psd=bool(decomposition.min_value >= -threshold),
        min_eigenvalue=decomposition.min_value,
        zero_multiplicity=basis.shape[1],
        kernel_basis=basis,
        block_constant=block_constant,
        alphas=alphas,
        eigenvalues=decomposition.values,
    )
    logger.debug(f"{report}")
    return report


@dataclass(eq=False)
class ReducedSystem:
    """
    The k x k matrix D - C acting on per-cluster values, with its smallest singular value and a
    unit null vector when singular
    """

    matrix: np.ndarray
    smallest_singular_value: float
    null_vector: object

    def __repr__(self):
        return f"ReducedSystem: sigma_min={self.smallest_singular_value:.3e} null_vector={self.null_vector}"

    @property
    def is_singular(self):
        return self.null_vector is not None


def reduced_system(trust, deltas, tol=KERNEL_TOL):
    """
    Function to build D - C and test its singularity. The smallest singular value is read from the
    symmetric matrix [[0, B], [B^T, 0]] whose eigenvalues are +/- the singular values of B.
    :param trust: TrustMatrix
    :param deltas: k stubbornness values
    :param tol: singularity tolerance relative to ||D - C||_F
    :return: ReducedSystem
    """
    c = trust.c
    k = c.shape[0]
    deltas = np.asarray(deltas, dtype=float).reshape(-1)
    if deltas.shape[0] != k:
        raise InvalidArgument(f"expected {k} deltas, got {deltas.shape[0]}")
    b = np.diag(deltas) - c
    augmented = np.zeros((2 * k, 2 * k))
    augmented[:k, k:] = b
    augmented[k:, :k] = b.T
    sigma_min = float(np.min(np.abs(sym_eigen(augmented).values)))
    scale = np.linalg.norm(b)
    null_vector = None
    if sigma_min <= tol * scale or scale == 0.0:
        gram = b.T @ b
        gram = (gram + gram.T) / 2.0
        null_vector = normalise_direction(sym_eigen(gram).vectors[:, 0])
    return ReducedSystem(matrix=b, smallest_singular_value=sigma_min, null_vector=null_vector)


def predict_steady_state(matrix, x0, partition, tol=KERNEL_TOL):
    """
    Function to predict the limit of x' = -M x, the projection of x0 onto the kernel of M
    :param matrix: positive semidefinite M
    :param x0: initial state
    :param partition: ClusterPartition
    :param tol: zero eigenvalue tolerance relative to ||M||_F
    :return: N-vector
    """
    report = verify_kernel(matrix, partition, tol)
    if not report.is_psd:
        raise NotPSD(f"M is not positive semidefinite, min eigenvalue {report.min_eigenvalue:.3e}")
    basis = report.kernel_basis
    x0 = np.asarray(x0, dtype=float)
    return basis @ (basis.T @ x0)
