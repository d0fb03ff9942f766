"""
Stubbornness gain synthesis. Gains are built cluster by cluster along a block Gaussian elimination
of M = D - A: every leading Schur block Phi_h must be positive definite, the opposite of the blocks
from the third onwards must be Metzler with positive off-diagonal entries, and the last block must
be singular, which puts a block-constant vector in the kernel of M. Accepted gains must also leave
M a spectral gap of at least MIN_SPECTRAL_GAP without growing past the trust scale.
"""
import logging
from dataclasses import dataclass

import numpy as np

from cluster_consensus.assumptions import (
    ClusterOrdering,
    close_friendship_check,
    find_ordering,
    homogeneity_certificate,
    relabel,
)
from cluster_consensus.base import BaseCollection, BaseItem
from cluster_consensus.enums import MarginSchedule
from cluster_consensus.exceptions import (
    CloseFriendshipViolation,
    IntermediateBlockNotPD,
    InvalidArgument,
    InvalidClusteredGraph,
    InvalidPartition,
    LeadingBlockNotPD,
    SynthesisFailed,
    TooFewClusters,
    ZeroPivot,
)
from cluster_consensus.graph import ClusterPartition, validate_graph
from cluster_consensus.linalg import is_irreducible, is_metzler, schur_split
from cluster_consensus.verification import KERNEL_TOL, build_M, verify_kernel

logger = logging.getLogger(__name__)

DEFAULT_Q0 = 1.0
MAX_DOUBLINGS = 60
MIN_SPECTRAL_GAP = 0.5
GAIN_GROWTH = 10.0
GAP_PROGRESS = 0.01
PLATEAU_PATIENCE = 3


@dataclass(eq=False)
class ScalarTableau:
    """
    Staged values of the scalar elimination of D - C: stages[h] holds m^(h) (stages[0] = C) and
    phi[h] is the pivot of stage h
    """

    stages: list
    phi: np.ndarray

    def __repr__(self):
        return f"ScalarTableau: phi={self.phi.tolist()}"

    def m(self, stage, i, j):
        return float(self.stages[stage][i, j])

    def stage_bound(self, h):
        """
        Smallest delta_h above which the pivot of stage h is positive
        """
        return self.m(h, h, h)


def eliminate(stage_values, h, pivot):
    return stage_values + np.outer(stage_values[:, h], stage_values[h, :]) / pivot


def scalar_recursion(trust, deltas):
    """
    Function to run the scalar pivot recursion m^(h)_ij = m^(h-1)_ij + m^(h-1)_ih m^(h-1)_hj / phi_h
    with phi_h = delta_h - m^(h-1)_hh
    :param trust: TrustMatrix
    :param deltas: k stubbornness values in cluster order
    :return: ScalarTableau
    """
    c = trust.c
    k = c.shape[0]
    deltas = np.asarray(deltas, dtype=float).reshape(-1)
    if deltas.shape[0] != k:
        raise InvalidArgument(f"expected {k} deltas, got {deltas.shape[0]}")
    stages = [c.copy()]
    phi = np.zeros(k)
    for h in range(k):
        phi[h] = deltas[h] - stages[h][h, h]
        if h == k - 1:
            break
        if phi[h] == 0.0:
            raise ZeroPivot(h)
        stages.append(eliminate(stages[h], h, phi[h]))
    return ScalarTableau(stages=stages, phi=phi)


def margin_recursion(trust, margins):
    """
    Function to choose deltas from margins: delta_h = m^(h-1)_hh + q_h for the first k - 1 clusters
    and delta_k = m^(k-1)_kk exactly, so the pivots are the margins and the last pivot is zero
    :param trust: TrustMatrix in synthesis order
    :param margins: k - 1 positive margins
    :return: (deltas, ScalarTableau)
    """
    c = trust.c
    k = c.shape[0]
    stages = [c.copy()]
    deltas = np.zeros(k)
    phi = np.zeros(k)
    for h in range(k - 1):
        deltas[h] = stages[h][h, h] + margins[h]
        phi[h] = margins[h]
        stages.append(eliminate(stages[h], h, phi[h]))
    deltas[k - 1] = stages[k - 1][k - 1, k - 1]
    phi[k - 1] = 0.0
    return deltas, ScalarTableau(stages=stages, phi=phi)


def stage_lower_bounds(trust, deltas):
    """
    Function to list the thresholds m^(h-1)_hh; the pivot of stage h is positive iff delta_h exceeds
    its threshold. Each threshold depends on the earlier deltas only.
    :param trust: TrustMatrix
    :param deltas: k stubbornness values
    :return: list of k thresholds
    """
    tableau = scalar_recursion(trust, deltas)
    return [tableau.stage_bound(h) for h in range(trust.num_clusters)]


def explicit_k3_bounds(trust, delta1, delta2):
    """
    Function to evaluate the closed-form three cluster thresholds: delta_2 must exceed
    c22 + c12 c21 / (delta_1 - c11), and delta_3 making the last pivot vanish is
    c33 + c31 c13 / p1 + (c32 + c31 c12 / p1) (delta_2 - c22 - c21 c12 / p1)^-1 (c23 + c21 c13 / p1)
    with p1 = delta_1 - c11
    :param trust: TrustMatrix with k = 3
    :param delta1: stubbornness of the first cluster
    :param delta2: stubbornness of the second cluster
    :return: (delta2 threshold, delta3)
    """
    if trust.num_clusters != 3:
        raise InvalidArgument(f"closed-form bounds need 3 clusters, got {trust.num_clusters}")
    c = trust.c
    p1 = delta1 - c[0, 0]
    delta2_bound = c[1, 1] + c[0, 1] * c[1, 0] / p1
    p2 = delta2 - c[1, 1] - c[1, 0] * c[0, 1] / p1
    delta3 = (
        c[2, 2]
        + c[2, 0] * c[0, 2] / p1
        + (c[2, 1] + c[2, 0] * c[0, 1] / p1) * (c[1, 2] + c[1, 0] * c[0, 2] / p1) / p2
    )
    return delta2_bound, delta3


@dataclass(eq=False)
class PhiBlocks:
    """
    Leading Schur blocks Phi_1..Phi_k of the block elimination of M = D - A
    """

    blocks: list

    def __repr__(self):
        return f"PhiBlocks: sizes={[block.shape[0] for block in self.blocks]}"

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, h):
        return self.blocks[h]

    def metzler_verdicts(self, strict=True):
        """
        Whether -Phi_h is Metzler, with strictly positive off-diagonal entries when strict
        """
        return [is_metzler(-block, strict=strict) for block in self.blocks]

    def irreducible_verdicts(self):
        return [is_irreducible(-block) for block in self.blocks]


def matrix_phi_blocks(graph, deltas):
    """
    Function to run the matrix recursion M^(h)_ij = M^(h-1)_ij + M^(h-1)_ih Phi_h^-1 M^(h-1)_hj with
    Phi_h = D_h - M^(h-1)_hh, realised as repeated Schur complements of M = D - A
    :param graph: SignedClusteredGraph in synthesis order
    :param deltas: k stubbornness values in the same order
    :return: PhiBlocks
    """
    remaining = build_M(graph, deltas)
    blocks = []
    for h, size in enumerate(graph.partition.sizes[:-1]):
        try:
            leading, remaining = schur_split(remaining, size)
        except LeadingBlockNotPD:
            raise IntermediateBlockNotPD(h)
        blocks.append(leading)
    blocks.append(remaining)
    return PhiBlocks(blocks)


@dataclass(eq=False)
class StageCheck(BaseItem):
    stage: int
    check: str
    passed: bool

    def get_key(self):
        return self.stage, self.check


class StageChecks(BaseCollection):
    """
    Per-stage verdicts of the last synthesis attempt
    """

    ITEM_CLASS = StageCheck
    spectral_gap = None

    def record(self, stage, check, passed):
        self.add_item({"stage": stage, "check": check, "passed": bool(passed)})
        return passed

    @property
    def first_failure(self):
        for stage_check in self:
            if not stage_check.passed:
                return stage_check
        return None


@dataclass(eq=False)
class GainVector:
    """
    Stubbornness gains delta_i per cluster in original cluster labels. margins and tableau are in
    synthesis order; both are empty for the closed-form complete graph gains.
    """

    deltas: np.ndarray
    margins: tuple
    ordering: ClusterOrdering
    tableau: object = None
    retries: int = 0
    checks: object = None

    def __repr__(self):
        return f"GainVector: deltas={self.deltas.tolist()} margins={list(self.margins)} retries={self.retries}"

    @property
    def ordered_deltas(self):
        return self.deltas[list(self.ordering.order)]

    def to_dict(self):
        return {
            "deltas": self.deltas.tolist(),
            "margins": list(self.margins),
            "order": list(self.ordering.order),
            "hub": self.ordering.hub,
            "exempt": self.ordering.exempt,
            "retries": self.retries,
        }


def check_candidate(graph, deltas, kernel_tol=KERNEL_TOL):
    """
    Function to run the matrix checks on candidate gains, stopping at the first failure
    :param graph: SignedClusteredGraph in synthesis order
    :param deltas: candidate deltas in synthesis order
    :param kernel_tol: tolerance for the kernel verdict
    :return: StageChecks
    """
    checks = StageChecks()
    k = graph.num_clusters
    try:
        phi_blocks = matrix_phi_blocks(graph, deltas)
    except IntermediateBlockNotPD as error:
        for h in range(error.stage):
            checks.record(h, "positive-definite", True)
        checks.record(error.stage, "positive-definite", False)
        return checks
    for h in range(k - 1):
        checks.record(h, "positive-definite", True)
    metzler = phi_blocks.metzler_verdicts(strict=True)
    for h in range(2, k):
        if not checks.record(h, "metzler", metzler[h]):
            return checks
    if not checks.record(k - 1, "irreducible", is_irreducible(-phi_blocks[k - 1])):
        return checks
    report = verify_kernel(build_M(graph, deltas), graph.partition, kernel_tol)
    checks.spectral_gap = report.spectral_gap
    checks.record(k - 1, "kernel", report.consensus_ready)
    return checks


def gain_bound(trust, margins, gain_growth=GAIN_GROWTH):
    """
    Function to bound acceptable gains by the trust scale: gain_growth times the largest absolute
    row sum of C plus the largest margin
    :param trust: TrustMatrix
    :param margins: current margins
    :param gain_growth: multiplier
    :return: float
    """
    return gain_growth * (float(np.max(np.abs(trust.c).sum(axis=1))) + float(np.max(margins)))


def conditioning_checks(deltas, spectral_gap, bound, min_spectral_gap=MIN_SPECTRAL_GAP):
    """
    Function to check that gains which already pass the matrix checks are usable: M must decay
    towards its kernel at rate min_spectral_gap or faster and no gain may exceed bound
    :param deltas: candidate deltas
    :param spectral_gap: smallest nonzero eigenvalue of M
    :param bound: largest acceptable gain
    :param min_spectral_gap: required decay rate
    :return: StageChecks, recorded at the last stage
    """
    checks = StageChecks()
    stage = len(deltas) - 1
    checks.spectral_gap = spectral_gap
    checks.record(stage, "spectral-gap", spectral_gap >= min_spectral_gap)
    checks.record(stage, "gain-size", float(np.max(np.abs(deltas))) <= bound)
    return checks


def synthesize_gains(
    graph,
    trust=None,
    ordering=None,
    q0=DEFAULT_Q0,
    max_doublings=MAX_DOUBLINGS,
    schedule=MarginSchedule.DOUBLING,
    kernel_tol=KERNEL_TOL,
    min_spectral_gap=MIN_SPECTRAL_GAP,
    gain_growth=GAIN_GROWTH,
):
    """
    Function to compute stubbornness gains that give k-partite consensus. Margins start at q0; after
    each failed matrix check q_2..q_{k-1} are doubled (or, for the staged schedule, only those before
    the failing stage). Candidates passing the matrix checks must also pass the conditioning checks
    (spectral gap and gain size); a conditioning failure doubles every margin, q_1 included. When the
    gap stops growing for PLATEAU_PATIENCE doublings, or max_doublings is reached, the candidate with
    the largest gap among those of acceptable size is returned with a warning.
    :param graph: SignedClusteredGraph
    :param trust: TrustMatrix, certified from the graph when None
    :param ordering: ClusterOrdering, searched when None
    :param q0: initial margin, > 0
    :param max_doublings: retry cap
    :param schedule: MarginSchedule
    :param kernel_tol: tolerance for the kernel verdict
    :param min_spectral_gap: required smallest nonzero eigenvalue of M
    :param gain_growth: gains above gain_growth * (max absolute row sum of C + max margin) are rejected
    :return: GainVector in original cluster labels
    """
    report = validate_graph(graph)
    if not report.passed:
        raise InvalidClusteredGraph(report)
    k = graph.num_clusters
    if k < 3:
        raise TooFewClusters(k)
    if q0 <= 0:
        raise InvalidArgument(f"q0 must be positive, got {q0}")
    trust = trust if trust is not None else homogeneity_certificate(graph)
    ordering = ordering if ordering is not None else find_ordering(graph)
    verdicts = close_friendship_check(graph, ordering.hub)
    uncovered = [cluster for cluster in ordering.order[2:] if not verdicts[cluster]]
    if uncovered:
        raise CloseFriendshipViolation({ordering.hub: uncovered})

    ordered_graph, _ = relabel(graph, ordering)
    ordered_trust = trust.permuted(list(ordering.order))
    margins = np.full(k - 1, float(q0))
    best = None
    stalled = 0
    for attempt in range(max_doublings + 1):
        deltas, tableau = margin_recursion(ordered_trust, margins)
        checks = check_candidate(ordered_graph, deltas, kernel_tol)
        failure = checks.first_failure
        if failure is None:
            gains = np.zeros(k)
            gains[list(ordering.order)] = deltas
            candidate = GainVector(
                deltas=gains,
                margins=tuple(margins.tolist()),
                ordering=ordering,
                tableau=tableau,
                retries=attempt,
                checks=checks,
            )
            bound = gain_bound(ordered_trust, margins, gain_growth)
            conditioning = conditioning_checks(deltas, checks.spectral_gap, bound, min_spectral_gap)
            failure = conditioning.first_failure
            if failure is None:
                logger.info(f"Gains accepted after {attempt} margin doublings: {gains.tolist()}")
                return candidate
            if conditioning.get_by_key((k - 1, "gain-size")).passed:
                if best is None or checks.spectral_gap > best.checks.spectral_gap * (1.0 + GAP_PROGRESS):
                    best = candidate
                    stalled = 0
                else:
                    stalled += 1
            if best is not None and stalled >= PLATEAU_PATIENCE:
                break
        logger.debug(
            f"Attempt {attempt}: check {failure.check} failed at stage {failure.stage}, margins {margins.tolist()}"
        )
        if attempt == max_doublings:
            if best is not None:
                break
            raise SynthesisFailed(attempt, f"{failure.check} at stage {failure.stage}")
        if failure.check in ("spectral-gap", "gain-size"):
            margins *= 2.0
        elif schedule == MarginSchedule.STAGED:
            margins[1:min(max(failure.stage, 2), k - 1)] *= 2.0
        else:
            margins[1:] *= 2.0
    logger.warning(
        f"Spectral gap stopped growing below {min_spectral_gap}; accepting gains {best.deltas.tolist()} "
        f"with gap {best.checks.spectral_gap:.3e} after {best.retries} margin doublings"
    )
    return best


def complete_graph_gains(sizes):
    """
    Function to return the closed-form gains delta_i = 2 n_i - 1 for complete unweighted graphs
    :param sizes: cluster sizes
    :return: GainVector
    """
    if len(sizes) < 2:
        raise InvalidPartition(f"at least 2 clusters required, got {list(sizes)}")
    partition = ClusterPartition(tuple(sizes))
    deltas = 2.0 * np.array(partition.sizes, dtype=float) - 1.0
    return GainVector(
        deltas=deltas,
        margins=(),
        ordering=ClusterOrdering.from_order(range(partition.num_clusters), partition),
    )
