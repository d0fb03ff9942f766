"""
Integration of x' = -M x (exact spectral solution and fixed step RK4) and of the nonlinear law
x' = -M h(x), consensus detection and the Lyapunov function of the nonlinear law
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from cluster_consensus.base import BaseCollection, BaseItem
from cluster_consensus.enums import IntegrationMethod
from cluster_consensus.exceptions import DivergenceDetected, InvalidArgument, WindowTooLong
from cluster_consensus.linalg import ensure_symmetric, sym_eigen
from cluster_consensus.utilities.utility_functions import dict_to_json_file
from cluster_consensus.verification import KERNEL_TOL, verify_kernel

logger = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e12
CONSENSUS_TOL = 1e-6
WINDOW = 1.0
X0_STD = 2.0


@dataclass(eq=False)
class Trajectory:
    """
    States recorded at strictly increasing times, one row per time
    """

    times: np.ndarray
    states: np.ndarray
    method: IntegrationMethod

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if len(self.times) == 0 or self.states.shape[0] != len(self.times):
            raise InvalidArgument(f"{len(self.times)} times for {self.states.shape[0]} states")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("trajectory times must be strictly increasing")

    def __repr__(self):
        return (
            f"Trajectory: method={self.method.name.lower()} N={self.num_agents} "
            f"samples={len(self.times)} t_end={self.times[-1]:.6g}"
        )

    def __len__(self):
        return len(self.times)

    @property
    def num_agents(self):
        return self.states.shape[1]

    @property
    def final_state(self):
        return self.states[-1]

    def to_dataframe(self):
        df = pd.DataFrame(self.states, columns=[f"x_{i}" for i in range(self.num_agents)])
        df.insert(0, "t", self.times)
        return df

    def write_to_csv(self, output_path):
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        self.to_dataframe().to_csv(output_path, index=False)


def check_divergence(time, state, divergence_bound):
    norm = float(np.max(np.abs(state))) if state.size else 0.0
    if not np.isfinite(norm) or norm > divergence_bound:
        raise DivergenceDetected(time, norm)


def sample_times(t_end, dt, stride=1):
    """
    Function to list the recording times 0, stride dt, 2 stride dt, ... up to and including t_end
    """
    if dt <= 0 or t_end < 0 or stride < 1:
        raise InvalidArgument(f"need dt > 0, t_end >= 0, stride >= 1, got {dt}, {t_end}, {stride}")
    step = dt * stride
    count = int(math.floor(t_end / step + 1e-9))
    times = [i * step for i in range(count + 1)]
    if t_end - times[-1] > 1e-9 * max(1.0, t_end):
        times.append(float(t_end))
    return np.array(times)


def simulate_linear_exact(matrix, x0, times, divergence_bound=DIVERGENCE_BOUND):
    """
    Function to evaluate x(t) = V exp(-Lambda t) V^T x0 at the requested times
    :param matrix: symmetric M
    :param x0: initial state
    :param times: strictly increasing times
    :param divergence_bound: largest admissible |x|
    :return: Trajectory
    """
    m = ensure_symmetric(matrix, "M")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (m.shape[0],):
        raise InvalidArgument(f"x0 has shape {x0.shape}, expected ({m.shape[0]},)")
    decomposition = sym_eigen(m)
    times = np.asarray(times, dtype=float)
    modes = decomposition.vectors.T @ x0
    decay = np.exp(-np.outer(times, decomposition.values))
    states = (decay * modes) @ decomposition.vectors.T
    for time, state in zip(times, states):
        check_divergence(time, state, divergence_bound)
    return Trajectory(times, states, IntegrationMethod.EXACT)


def simulate_rk4(field, x0, dt, t_end, stride=1, divergence_bound=DIVERGENCE_BOUND):
    """
    Function to integrate x' = field(x) with the classical fixed step Runge-Kutta scheme, the last
    step shortened to land on t_end
    :param field: state derivative function
    :param x0: initial state
    :param dt: step, > 0
    :param t_end: final time, >= 0
    :param stride: record every stride steps, the final step always recorded
    :param divergence_bound: largest admissible |x|
    :return: Trajectory
    """
    if dt <= 0 or t_end < 0 or stride < 1:
        raise InvalidArgument(f"need dt > 0, t_end >= 0, stride >= 1, got {dt}, {t_end}, {stride}")
    x = np.array(x0, dtype=float)
    num_steps = int(math.ceil(t_end / dt - 1e-9))
    times, states = [0.0], [x.copy()]
    for step in range(1, num_steps + 1):
        h = min(dt, t_end - (step - 1) * dt)
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        time = step * dt if step < num_steps else float(t_end)
        check_divergence(time, x, divergence_bound)
        if step % stride == 0 or step == num_steps:
            times.append(time)
            states.append(x.copy())
    return Trajectory(np.array(times), np.array(states), IntegrationMethod.RK4)


def linear_field(matrix):
    m = np.asarray(matrix, dtype=float)
    return lambda x: -(m @ x)


def nonlinear_field(matrix, profile, partition):
    """
    Function to build f(x) = -M h(x) with h applied cluster by cluster
    :param matrix: symmetric M
    :param profile: NonlinearProfile
    :param partition: ClusterPartition
    :return: state derivative function
    """
    if profile.partition != partition:
        raise InvalidArgument(f"{profile} does not match {partition}")
    m = np.asarray(matrix, dtype=float)
    return lambda x: -(m @ profile.apply(x))


def initial_state(num_agents, seed=None, std=X0_STD):
    return np.random.default_rng(seed).normal(0.0, std, num_agents)


def run_simulation(
    matrix,
    partition,
    x0,
    method=IntegrationMethod.EXACT,
    dt=1e-3,
    t_end=10.0,
    stride=1,
    profile=None,
    divergence_bound=DIVERGENCE_BOUND,
):
    """
    Function to run one simulation: the exact solution for linear runs when requested, RK4 otherwise
    :return: Trajectory
    """
    if profile is not None and not profile.is_linear:
        field = nonlinear_field(matrix, profile, partition)
        return simulate_rk4(field, x0, dt, t_end, stride, divergence_bound)
    if method == IntegrationMethod.EXACT:
        return simulate_linear_exact(matrix, x0, sample_times(t_end, dt, stride), divergence_bound)
    return simulate_rk4(linear_field(matrix), x0, dt, t_end, stride, divergence_bound)


@dataclass(eq=False)
class ClusterOutcome(BaseItem):
    cluster: int
    size: int
    value: float
    spread: float

    def get_key(self):
        return self.cluster


class ConsensusReport(BaseCollection):
    """
    Per-cluster limits c_i and spreads of a trajectory with the overall consensus verdict
    """

    ITEM_CLASS = ClusterOutcome

    def __init__(self, reached, convergence_time, max_intra_cluster_spread, tol, window,
                 predicted_match=None, item_data=None):
        super().__init__(item_data)
        self.reached = reached
        self.convergence_time = convergence_time
        self.max_intra_cluster_spread = max_intra_cluster_spread
        self.tol = tol
        self.window = window
        self.predicted_match = predicted_match

    def __repr__(self):
        return (
            f"ConsensusReport: reached={self.reached} convergence_time={self.convergence_time} "
            f"values={self.cluster_values.tolist()}"
        )

    @property
    def cluster_values(self):
        return np.array([outcome.value for outcome in self])

    def to_dict(self):
        return {
            "reached": self.reached,
            "convergence_time": self.convergence_time,
            "max_intra_cluster_spread": self.max_intra_cluster_spread,
            "predicted_match": self.predicted_match,
            "tol": self.tol,
            "window": self.window,
            "clusters": [
                {field: getattr(outcome, field) for field in ("cluster", "size", "value", "spread")}
                for outcome in self
            ],
        }

    def write_to_json(self, output_path):
        dict_to_json_file(self.to_dict(), output_path)

    def to_text(self):
        lines = [f"reached: {self.reached}", f"convergence_time: {self.convergence_time}"]
        lines += [
            f"c_{outcome.cluster + 1} = {outcome.value:.9g} (spread {outcome.spread:.3e})" for outcome in self
        ]
        lines.append(f"max_intra_cluster_spread: {self.max_intra_cluster_spread:.3e}")
        if self.predicted_match is not None:
            lines.append(f"predicted_match: {self.predicted_match:.3e}")
        return "\n".join(lines)


def detect_consensus(trajectory, partition, tol=CONSENSUS_TOL, window=WINDOW, predicted=None):
    """
    Function to decide whether a trajectory reached k-partite consensus: over the final window
    every intra-cluster spread and every drift of a cluster mean from its final value is within tol
    :param trajectory: Trajectory
    :param partition: ClusterPartition
    :param tol: consensus tolerance
    :param window: length of the final window in time units
    :param predicted: optional predicted steady state, compared with the final state
    :return: ConsensusReport
    """
    times = trajectory.times
    if window > times[-1] - times[0]:
        raise WindowTooLong(f"window {window} longer than trajectory span {times[-1] - times[0]}")
    states = trajectory.states
    offsets = list(partition.offsets)
    sizes = np.array(partition.sizes)
    spreads = np.maximum.reduceat(states, offsets, axis=1) - np.minimum.reduceat(states, offsets, axis=1)
    means = np.add.reduceat(states, offsets, axis=1) / sizes
    drift = np.max(np.abs(means - means[-1]), axis=1)
    good = (np.max(spreads, axis=1) <= tol) & (drift <= tol)
    in_window = times >= times[-1] - window - 1e-12
    reached = bool(np.all(good[in_window]))
    convergence_time = None
    if reached:
        bad = np.flatnonzero(~good)
        convergence_time = float(times[bad[-1] + 1]) if len(bad) else float(times[0])
    predicted_match = None
    if predicted is not None:
        predicted_match = float(np.max(np.abs(trajectory.final_state - np.asarray(predicted, dtype=float))))
    report = ConsensusReport(
        reached=reached,
        convergence_time=convergence_time,
        max_intra_cluster_spread=float(np.max(spreads[-1])),
        tol=tol,
        window=window,
        predicted_match=predicted_match,
        item_data=[
            {"cluster": c, "size": int(sizes[c]), "value": float(means[-1, c]), "spread": float(spreads[-1, c])}
            for c in range(partition.num_clusters)
        ],
    )
    if reached:
        logger.info(f"Consensus reached at t={convergence_time:.6g}: {report.cluster_values.tolist()}")
    else:
        logger.warning(f"Consensus not reached, final spread {report.max_intra_cluster_spread:.3e}")
    return report


def profile_range_violations(profile, values):
    """
    Function to list clusters whose values lie outside the image of their map, where no
    preimage exists
    :param profile: NonlinearProfile
    :param values: N-vector of h values
    :return: list of cluster indices
    """
    return profile.range_violations(values)


def equilibrium_estimate(report, matrix, profile, partition, tol=KERNEL_TOL):
    """
    Function to estimate x* for the Lyapunov function: the final cluster values are lifted, mapped
    through h, projected onto the kernel of M and mapped back through the inverse of h
    :param report: ConsensusReport
    :param matrix: M
    :param profile: NonlinearProfile
    :param partition: ClusterPartition
    :param tol: kernel tolerance
    :return: N-vector
    """
    lifted = partition.lift(report.cluster_values)
    basis = verify_kernel(matrix, partition, tol).kernel_basis
    image = profile.apply(lifted)
    projected = basis @ (basis.T @ image)
    violations = profile_range_violations(profile, projected)
    if violations:
        logger.warning(f"Projected equilibrium outside the range of h for clusters {violations}, using the lifted means")
        return lifted
    return profile.invert(projected)


def lyapunov_V(x, x_star, profile, partition):
    """
    Function to evaluate V(x) = sum over agents of int_{x*}^{x} (h(z) - h(x*)) dz
    :param x: state
    :param x_star: equilibrium
    :param profile: NonlinearProfile
    :param partition: ClusterPartition
    :return: float
    """
    if profile.partition != partition:
        raise InvalidArgument(f"{profile} does not match {partition}")
    return profile.integral(x_star, x)


def lyapunov_series(trajectory, x_star, profile, partition):
    return np.array([lyapunov_V(state, x_star, profile, partition) for state in trajectory.states])


def seed_sweep(
    matrix,
    partition,
    seeds,
    profile=None,
    method=IntegrationMethod.EXACT,
    dt=1e-3,
    t_end=10.0,
    stride=10,
    tol=CONSENSUS_TOL,
    window=WINDOW,
    std=X0_STD,
    divergence_bound=DIVERGENCE_BOUND,
):
    """
    Function to run one simulation per seed and tabulate the consensus outcome
    :return: pandas DataFrame, one row per seed
    """
    rows = []
    for seed in seeds:
        x0 = initial_state(partition.num_agents, seed, std)
        row = {"seed": seed, "diverged": False}
        try:
            trajectory = run_simulation(matrix, partition, x0, method, dt, t_end, stride, profile, divergence_bound)
        except DivergenceDetected as error:
            logger.warning(f"Seed {seed}: {error}")
            row.update({"diverged": True, "reached": False, "convergence_time": None, "max_spread": np.nan})
            rows.append(row)
            continue
        report = detect_consensus(trajectory, partition, tol, window)
        row.update(
            {
                "reached": report.reached,
                "convergence_time": report.convergence_time,
                "max_spread": report.max_intra_cluster_spread,
            }
        )
        row.update({f"c_{c + 1}": value for c, value in enumerate(report.cluster_values)})
        rows.append(row)
    return pd.DataFrame(rows)
