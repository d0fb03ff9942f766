"""
Dense symmetric linear algebra used by the synthesis and verification layers: a cyclic Jacobi
eigensolver, Schur complements, positive-definiteness certificates for matrices of the form
D - A with A Metzler, and the diagonal margin that makes C (D - A)^-1 B arbitrarily small.
"""
import logging
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from cluster_consensus.exceptions import (
    EigenNotConverged,
    InvalidArgument,
    LeadingBlockNotPD,
    NotMetzler,
    NotPositiveDefinite,
    NotSymmetric,
)

logger = logging.getLogger(__name__)

EIGEN_TOL = 1e-14
MAX_SWEEPS = 100
PD_TOL = 1e-10
PSD_TOL = 1e-9
PATTERN_THRESHOLD = 1e-12


def ensure_symmetric(matrix, name="matrix"):
    """
    Function to coerce a square array to float64 and check exact symmetry
    :param matrix: array like
    :param name: name used in error messages
    :return: float64 numpy array
    """
    array = np.array(matrix, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise NotSymmetric(f"{name} must be square, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NotSymmetric(f"{name} has non-finite entries")
    if not np.array_equal(array, array.T):
        i, j = np.argwhere(array != array.T)[0]
        raise NotSymmetric(f"{name} is not symmetric at ({i},{j})")
    return array


def max_off_diagonal(matrix):
    if matrix.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(matrix - np.diag(np.diag(matrix)))))


@dataclass(eq=False)
class EigenDecomposition:
    """
    Eigenvalues in ascending order with orthonormal eigenvectors as columns
    """

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int

    def __repr__(self):
        return f"EigenDecomposition: n={len(self.values)} sweeps={self.sweeps}"

    @property
    def min_value(self):
        return float(self.values[0])

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T

    def null_space(self, threshold):
        """
        Orthonormal basis of the eigenvectors whose eigenvalue is within threshold of zero
        :param threshold: absolute eigenvalue threshold
        :return: N x m array, m possibly 0
        """
        mask = np.abs(self.values) <= threshold
        return self.vectors[:, mask]


def sym_eigen(matrix, tol=EIGEN_TOL, max_sweeps=MAX_SWEEPS):
    """
    Cyclic Jacobi eigensolver for symmetric matrices. Rotations sweep every (p, q) pair until
    the largest off-diagonal magnitude is at most tol * ||S||_F.
    :param matrix: symmetric matrix
    :param tol: relative off-diagonal tolerance
    :param max_sweeps: sweep cap
    :return: EigenDecomposition
    """
    a = ensure_symmetric(matrix).copy()
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * np.linalg.norm(a)
    sweeps = 0
    off = max_off_diagonal(a)
    while off > threshold:
        if sweeps == max_sweeps:
            raise EigenNotConverged(sweeps, off)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rotation = np.array([[c, -s], [s, c]])
                a[[p, q], :] = rotation @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rotation.T
                a[p, q] = a[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ rotation.T
        off = max_off_diagonal(a)
        logger.debug(f"Jacobi sweep {sweeps}: max off-diagonal {off:.3e}")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values=values[order], vectors=v[:, order], sweeps=sweeps)


def is_positive_definite(matrix, tol=PD_TOL):
    s = ensure_symmetric(matrix)
    scale = np.linalg.norm(s)
    if scale == 0.0:
        return False
    return sym_eigen(s).min_value > tol * scale


def is_positive_semidefinite(matrix, tol=PSD_TOL):
    s = ensure_symmetric(matrix)
    scale = np.linalg.norm(s)
    if scale == 0.0:
        return True
    return sym_eigen(s).min_value > -tol * scale


def inertia(matrix, tol=PD_TOL):
    """
    Function to count positive, negative and zero eigenvalues, zero meaning within tol * ||S||_F
    :param matrix: symmetric matrix
    :param tol: relative zero threshold
    :return: (positive, negative, zero) counts
    """
    s = ensure_symmetric(matrix)
    if s.shape[0] == 0:
        return 0, 0, 0
    values = sym_eigen(s).values
    threshold = tol * np.linalg.norm(s)
    positive = int(np.sum(values > threshold))
    negative = int(np.sum(values < -threshold))
    return positive, negative, len(values) - positive - negative


def solve_symmetric(matrix, rhs):
    """
    Function to solve S x = rhs, by Cholesky when S is positive definite and otherwise by the
    eigendecomposition pseudo-inverse
    :param matrix: symmetric matrix
    :param rhs: right hand side vector or matrix
    :return: solution
    """
    s = ensure_symmetric(matrix)
    try:
        return cho_solve(cho_factor(s), rhs)
    except LinAlgError:
        logger.debug("Cholesky factorisation failed, using spectral pseudo-solve")
        decomposition = sym_eigen(s)
        threshold = PD_TOL * max(np.linalg.norm(s), 1.0)
        inverse_values = np.array(
            [1.0 / value if abs(value) > threshold else 0.0 for value in decomposition.values]
        )
        vectors = decomposition.vectors
        return (vectors * inverse_values) @ (vectors.T @ rhs)


def schur_split(matrix, block_size):
    """
    Function to split a symmetric matrix [[R, S], [S^T, Q]] into its leading block R and the Schur
    complement H = Q - S^T R^-1 S
    :param matrix: symmetric matrix
    :param block_size: size of the leading block
    :return: (R, H)
    """
    m = ensure_symmetric(matrix)
    n = m.shape[0]
    if not 0 < block_size <= n:
        raise InvalidArgument(f"block size {block_size} out of range for dimension {n}")
    r = m[:block_size, :block_size]
    s = m[:block_size, block_size:]
    q = m[block_size:, block_size:]
    if not is_positive_definite(r):
        raise LeadingBlockNotPD(f"leading {block_size}x{block_size} block is not positive definite")
    try:
        factor = cho_factor(r)
    except LinAlgError:
        raise LeadingBlockNotPD(f"leading {block_size}x{block_size} block is not positive definite")
    h = q - s.T @ cho_solve(factor, s)
    return r, (h + h.T) / 2.0


def is_metzler(matrix, strict=False, threshold=PATTERN_THRESHOLD):
    """
    Function to test the Metzler property, off-diagonal entries nonnegative (strictly positive
    above threshold when strict)
    :param matrix: square matrix
    :param strict: require strictly positive off-diagonal entries
    :param threshold: positivity threshold used when strict
    :return: bool
    """
    array = np.asarray(matrix, dtype=float)
    n = array.shape[0]
    if n < 2:
        return True
    off_diagonal = array[~np.eye(n, dtype=bool)]
    if strict:
        return bool(np.all(off_diagonal > threshold))
    return bool(np.all(off_diagonal >= 0.0))


def is_irreducible(matrix, threshold=PATTERN_THRESHOLD):
    """
    Function to test irreducibility of a symmetric matrix through connectedness of its
    off-diagonal nonzero pattern
    :param matrix: symmetric matrix
    :param threshold: entries with magnitude at or below threshold count as zero
    :return: bool
    """
    array = np.asarray(matrix, dtype=float)
    n = array.shape[0]
    if n < 2:
        return True
    pattern = (np.abs(array) > threshold).astype(int)
    np.fill_diagonal(pattern, 0)
    return nx.is_connected(nx.from_numpy_array(pattern))


def metzler_pd_certificate(diagonal, metzler, tol=PD_TOL):
    """
    Function to decide whether D - A is positive definite for diagonal D and symmetric Metzler A.
    When it is, z = (D - A)^-1 1 is a strictly positive vector with (D - A) z = 1 and (D - A)^-1
    is entrywise nonnegative.
    :param diagonal: diagonal entries of D
    :param metzler: symmetric Metzler matrix A
    :param tol: relative positive definiteness threshold
    :return: (is_pd, z or None)
    """
    a = ensure_symmetric(metzler, "A")
    d = np.asarray(diagonal, dtype=float).reshape(-1)
    if d.shape[0] != a.shape[0]:
        raise InvalidArgument(f"diagonal has {d.shape[0]} entries, matrix has dimension {a.shape[0]}")
    if not is_metzler(a):
        raise NotMetzler("matrix has a negative off-diagonal entry")
    m = np.diag(d) - a
    if not is_positive_definite(m, tol):
        return False, None
    try:
        factor = cho_factor(m)
    except LinAlgError:
        return False, None
    n = m.shape[0]
    z = cho_solve(factor, np.ones(n))
    inverse = cho_solve(factor, np.eye(n))
    inverse_floor = -tol * max(1.0, float(np.max(np.abs(inverse))))
    if np.any(z <= 0.0) or np.min(inverse) < inverse_floor:
        raise NotPositiveDefinite("positive definite verdict without a positive certificate")
    return True, z


def laplacian_of_off_diagonal(metzler):
    """
    Function to build the Laplacian of A with its diagonal removed
    :param metzler: symmetric Metzler matrix
    :return: Laplacian matrix
    """
    a_bar = np.array(metzler, dtype=float)
    np.fill_diagonal(a_bar, 0.0)
    return np.diag(a_bar.sum(axis=1)) - a_bar


def small_gain_margin(metzler, b, c, eps):
    """
    Function to choose a scalar delta such that, with L the Laplacian of the off-diagonal part A_bar
    of A and D = delta I + L + A (diagonal, since L + A = diag(A_bar 1) + diag(A)), every entry of
    C (D - A)^-1 B is below eps in magnitude.
    Since D - A = delta I + L, C (D - A)^-1 B = sum_i c_i b_i^T / (delta + lambda_i) over an
    orthonormal eigenbasis of L.
    :param metzler: symmetric Metzler matrix A (n x n)
    :param b: n x m matrix
    :param c: p x n matrix
    :param eps: required bound, > 0
    :return: (delta, psi), psi the largest mode entry over the nonzero Laplacian modes
    """
    if eps <= 0:
        raise InvalidArgument(f"eps must be positive, got {eps}")
    a = ensure_symmetric(metzler, "A")
    if not is_metzler(a):
        raise NotMetzler("matrix has a negative off-diagonal entry")
    n = a.shape[0]
    b = np.asarray(b, dtype=float).reshape(n, -1)
    c = np.asarray(c, dtype=float).reshape(-1, n)
    laplacian = laplacian_of_off_diagonal(a)
    decomposition = sym_eigen(laplacian)
    ct = c @ decomposition.vectors
    tb = decomposition.vectors.T @ b
    zero_threshold = PD_TOL * max(np.linalg.norm(laplacian), 1.0)
    psi, psi_zero, zero_modes = 0.0, 0.0, 0
    for i, value in enumerate(decomposition.values):
        peak = float(np.max(np.abs(ct[:, i]), initial=0.0) * np.max(np.abs(tb[i, :]), initial=0.0))
        if abs(value) <= zero_threshold:
            zero_modes += 1
            psi_zero = max(psi_zero, peak)
        else:
            psi = max(psi, peak)
    # zero modes are damped by delta alone, so they enter the bound as well
    delta = max(1.0, 10.0 * ((n - 1) * psi + zero_modes * psi_zero) / eps)
    return delta, psi


def small_gain_diagonal(metzler, delta):
    """
    Function to build the diagonal entries of D = delta I + L + diag(A) for a margin delta
    :param metzler: symmetric Metzler matrix A
    :param delta: margin returned by small_gain_margin
    :return: 1D array of diagonal entries
    """
    a = np.asarray(metzler, dtype=float)
    a_bar = a - np.diag(np.diag(a))
    return delta + a_bar.sum(axis=1) + np.diag(a)
