"""
Per-cluster monotone maps h_i used by the nonlinear law x_i' = -(D_i h_i(x_i) - sum_j A_ij h_j(x_j))
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from cluster_consensus.enums import Nonlinearity
from cluster_consensus.exceptions import InvalidArgument, InvalidProfile

QUADRATURE_TOL = 1e-10
GROWTH_FLOOR = 1e-8
ARCTAN_ONE = float(np.arctan(1.0))


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """
    A strictly increasing map with h(0) = 0, its inverse on the open image (lower, upper) and,
    when known in closed form, a primitive used for the integral terms of the Lyapunov function
    """

    name: str
    function: object
    inverse: object = None
    primitive: object = None
    lower: float = -np.inf
    upper: float = np.inf

    def __repr__(self):
        return f"MonotoneMap: {self.name}"

    def __call__(self, z):
        return self.function(np.asarray(z, dtype=float))

    def invert(self, y):
        if self.inverse is None:
            raise InvalidProfile(f"{self.name} has no inverse")
        return self.inverse(np.asarray(y, dtype=float))

    def in_image(self, y):
        y = np.asarray(y, dtype=float)
        return (y > self.lower) & (y < self.upper)

    def integral(self, base, upper, quadrature_tol=QUADRATURE_TOL):
        """
        Method to evaluate int_base^upper (h(z) - h(base)) dz entrywise, always nonnegative
        :param base: array of lower limits
        :param upper: array of upper limits
        :param quadrature_tol: absolute tolerance for the numerical fallback
        :return: array
        """
        base = np.asarray(base, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if self.primitive is not None:
            return self.primitive(upper) - self.primitive(base) - self.function(base) * (upper - base)
        values = [
            quad(lambda z, a=a: float(self.function(np.float64(z)) - self.function(np.float64(a))), a, x,
                 epsabs=quadrature_tol)[0]
            for a, x in zip(base.reshape(-1), upper.reshape(-1))
        ]
        return np.array(values).reshape(base.shape)


def log_cosh(z):
    return np.logaddexp(z, -z) - math.log(2.0)


def arctan_primitive(z):
    u = z + 1.0
    return u * np.arctan(u) - 0.5 * np.log1p(u * u) - ARCTAN_ONE * z


MAPS = {
    Nonlinearity.IDENTITY: MonotoneMap(
        name="identity", function=lambda z: z * 1.0, inverse=lambda y: y * 1.0, primitive=lambda z: z * z / 2.0
    ),
    Nonlinearity.TANH: MonotoneMap(
        name="tanh", function=np.tanh, inverse=np.arctanh, primitive=log_cosh, lower=-1.0, upper=1.0
    ),
    Nonlinearity.CUBIC: MonotoneMap(
        name="cubic", function=lambda z: z ** 3, inverse=np.cbrt, primitive=lambda z: z ** 4 / 4.0
    ),
    Nonlinearity.SHIFTED_ARCTAN: MonotoneMap(
        name="shifted-arctan",
        function=lambda z: np.arctan(z + 1.0) - ARCTAN_ONE,
        inverse=lambda y: np.tan(y + ARCTAN_ONE) - 1.0,
        primitive=arctan_primitive,
        lower=-np.pi / 2.0 - ARCTAN_ONE,
        upper=np.pi / 2.0 - ARCTAN_ONE,
    ),
}


def get_map(name):
    """
    Function to look up a registered map by name or Nonlinearity member
    :param name: str or Nonlinearity
    :return: MonotoneMap
    """
    if isinstance(name, MonotoneMap):
        return name
    try:
        key = name if isinstance(name, Nonlinearity) else Nonlinearity.from_name(name)
    except (KeyError, AttributeError):
        raise InvalidProfile(f"unknown nonlinearity {name!r}")
    return MAPS[key]


def class_R_check(function, sample_range=10.0, samples=2001):
    """
    Function to sample a scalar map on [-R, R] and test h(0) = 0, strict monotonicity and a growth
    proxy: |h(z) - h(0)| must stay away from zero at z = +/- R / 2
    :param function: scalar callable
    :param sample_range: R
    :param samples: number of grid points, at least 2
    :return: bool
    """
    if samples < 2 or sample_range <= 0:
        raise InvalidArgument(f"need samples >= 2 and a positive range, got {samples}, {sample_range}")
    try:
        if float(function(0.0)) != 0.0:
            return False
        grid = np.linspace(-sample_range, sample_range, samples)
        values = np.array([float(function(z)) for z in grid])
        half = [abs(float(function(z))) for z in (-sample_range / 2.0, sample_range / 2.0)]
    except (ArithmeticError, ValueError):
        return False
    if not np.all(np.isfinite(values)):
        return False
    return bool(np.all(np.diff(values) > 0.0) and min(half) > GROWTH_FLOOR)


@dataclass(frozen=True, eq=False)
class NonlinearProfile:
    """
    One monotone map per cluster of a partition
    """

    partition: object
    maps: tuple

    def __post_init__(self):
        maps = tuple(get_map(item) for item in self.maps)
        if len(maps) != self.partition.num_clusters:
            raise InvalidProfile(f"{len(maps)} maps given for {self.partition.num_clusters} clusters")
        object.__setattr__(self, "maps", maps)

    def __repr__(self):
        return f"NonlinearProfile: {[item.name for item in self.maps]}"

    @classmethod
    def from_names(cls, names, partition):
        """
        Method to build a profile from map names, a single name applying to every cluster
        :param names: list of names
        :param partition: ClusterPartition
        :return: NonlinearProfile
        """
        names = list(names)
        if len(names) == 1:
            names = names * partition.num_clusters
        return cls(partition, tuple(names))

    @property
    def is_linear(self):
        return all(item.name == "identity" for item in self.maps)

    def apply(self, state):
        return self.map_clusters(state, lambda item, values: item(values))

    def invert(self, values):
        return self.map_clusters(values, lambda item, part: item.invert(part))

    def map_clusters(self, state, operation):
        state = np.asarray(state, dtype=float)
        result = np.empty_like(state)
        for cluster, item in enumerate(self.maps):
            window = self.partition.cluster_slice(cluster)
            result[..., window] = operation(item, state[..., window])
        return result

    def range_violations(self, values):
        """
        Method to list clusters with a value outside the image of their map
        :param values: N-vector of h values
        :return: list of cluster indices
        """
        values = np.asarray(values, dtype=float)
        return [
            cluster
            for cluster, item in enumerate(self.maps)
            if not np.all(item.in_image(values[self.partition.cluster_slice(cluster)]))
        ]

    def integral(self, base, state):
        """
        Method to sum the per-agent integrals int_base^x (h(z) - h(base)) dz over all agents
        """
        base = np.asarray(base, dtype=float)
        state = np.asarray(state, dtype=float)
        return float(
            sum(
                np.sum(item.integral(base[self.partition.cluster_slice(c)], state[self.partition.cluster_slice(c)]))
                for c, item in enumerate(self.maps)
            )
        )
