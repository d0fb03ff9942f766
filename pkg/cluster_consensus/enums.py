from enum import IntEnum


class ValidationRule(IntEnum):
    """
    Rules checked when validating a signed clustered graph
    """

    SYMMETRY = 1
    ZERO_DIAGONAL = 2
    SIGN_PATTERN = 3  # intra-cluster >= 0, inter-cluster <= 0
    DISCONNECTED = 4
    CLUSTER_COUNT = 5

    @property
    def label(self):
        return self.name.lower().replace("_", "-")


class Nonlinearity(IntEnum):
    """
    Registry names of the monotone maps usable as per-cluster nonlinearities
    """

    IDENTITY = 1
    TANH = 2
    CUBIC = 3
    SHIFTED_ARCTAN = 4

    @classmethod
    def from_name(cls, name):
        return cls[name.strip().upper().replace("-", "_")]


class IntegrationMethod(IntEnum):
    EXACT = 1
    RK4 = 2


class MarginSchedule(IntEnum):
    """
    Margin enlargement strategy used when a synthesis check fails
    """

    DOUBLING = 1  # double q_2..q_{k-1}
    STAGED = 2  # double only the stages before the first failing one


class Command(IntEnum):
    VALIDATE = 1
    ANALYZE = 2
    SYNTHESIZE = 3
    VERIFY = 4
    SIMULATE = 5
    REPRODUCE = 6
    SWEEP = 7


class ExitCode(IntEnum):
    SUCCESS = 0
    ASSUMPTION_FAILURE = 1
    SYNTHESIS_FAILURE = 2
    IO_ERROR = 3
