class ClusterConsensusError(Exception):
    """
    Base class for all errors raised by cluster_consensus
    """


class GraphFormatError(ClusterConsensusError):
    """
    Graph or initial state document does not match the expected schema
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        location = ""
        if field is not None:
            location += f" [field: {field}]"
        if line is not None:
            location += f" [line: {line}]"
        super().__init__(f"{message}{location}")


class InvalidPartition(ClusterConsensusError):
    pass


class InvalidArgument(ClusterConsensusError):
    pass


class TooFewClusters(ClusterConsensusError):
    def __init__(self, num_clusters, required=3):
        self.num_clusters = num_clusters
        self.required = required
        super().__init__(f"At least {required} clusters required, graph has {num_clusters}")


class InvalidClusteredGraph(ClusterConsensusError):
    def __init__(self, report):
        self.report = report
        super().__init__(
            "Graph is not a connected signed clustered graph: "
            + "; ".join(violation.message for violation in report)
        )


class HomogeneityViolation(ClusterConsensusError):
    def __init__(self, row_cluster, col_cluster, max_spread):
        self.row_cluster = row_cluster
        self.col_cluster = col_cluster
        self.max_spread = max_spread
        super().__init__(
            f"Row sums of block ({row_cluster}, {col_cluster}) differ by {max_spread:.6g}"
        )


class CloseFriendshipViolation(ClusterConsensusError):
    def __init__(self, failures):
        # failures: {hub: [failing clusters]}
        self.failures = failures
        details = ", ".join(f"hub {hub}: {clusters}" for hub, clusters in failures.items())
        super().__init__(f"No hub cluster satisfies close friendship ({details})")


class InconsistentOrdering(ClusterConsensusError):
    pass


class NotSymmetric(ClusterConsensusError):
    pass


class NotPositiveDefinite(ClusterConsensusError):
    pass


class LeadingBlockNotPD(ClusterConsensusError):
    pass


class NotMetzler(ClusterConsensusError):
    pass


class NotPSD(ClusterConsensusError):
    pass


class EigenNotConverged(ClusterConsensusError):
    def __init__(self, sweeps, off_norm):
        self.sweeps = sweeps
        self.off_norm = off_norm
        super().__init__(f"Jacobi iteration not converged after {sweeps} sweeps, off-norm {off_norm:.3e}")


class ZeroPivot(ClusterConsensusError):
    def __init__(self, stage):
        self.stage = stage
        super().__init__(f"Scalar pivot at stage {stage} is zero")


class IntermediateBlockNotPD(ClusterConsensusError):
    def __init__(self, stage):
        self.stage = stage
        super().__init__(f"Schur block at stage {stage} is not positive definite")


class SynthesisFailed(ClusterConsensusError):
    def __init__(self, iterations, failing_check):
        self.iterations = iterations
        self.failing_check = failing_check
        super().__init__(
            f"Gain synthesis failed after {iterations} margin doublings, last failing check: {failing_check}"
        )


class NotCompleteGraph(ClusterConsensusError):
    def __init__(self):
        super().__init__("closed form requires complete unweighted graph")


class DivergenceDetected(ClusterConsensusError):
    def __init__(self, time, norm):
        self.time = time
        self.norm = norm
        super().__init__(f"State diverged at t={time:.6g}, max |x| = {norm:.3e}")


class WindowTooLong(ClusterConsensusError):
    pass


class InvalidProfile(ClusterConsensusError):
    pass
