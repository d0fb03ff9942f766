import logging
import os
import sys
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from cluster_consensus.assumptions import find_ordering, homogeneity_certificate
from cluster_consensus.enums import IntegrationMethod, MarginSchedule
from cluster_consensus.exceptions import InvalidArgument, NotCompleteGraph
from cluster_consensus.file_parsers.graph_parser import GraphParser
from cluster_consensus.graph import is_complete_unweighted, validate_graph
from cluster_consensus.linalg import inertia
from cluster_consensus.nonlinearity import NonlinearProfile
from cluster_consensus.simulate import (
    detect_consensus,
    equilibrium_estimate,
    initial_state,
    lyapunov_series,
    run_simulation,
    seed_sweep,
)
from cluster_consensus.synthesis import complete_graph_gains, synthesize_gains
from cluster_consensus.utilities.utility_functions import load_json_to_dict, merge_config
from cluster_consensus.verification import build_M, predict_steady_state, signed_laplacian, verify_kernel

LOG_FORMAT = "[%(asctime)s] {%(pathname)s:%(lineno)d} %(levelname)s - %(message)s"
CONSOLE_FORMAT = "%(name)-12s: %(levelname)-8s %(message)s"
CONSOLE_HANDLER = "cluster_consensus_console"
FILE_HANDLER = "cluster_consensus_file"


@dataclass(eq=False)
class Analysis:
    trust: object
    ordering: object
    laplacian_inertia: tuple

    @property
    def laplacian_positive_definite(self):
        positive, negative, zero = self.laplacian_inertia
        return negative == 0 and zero == 0


@dataclass(eq=False)
class SimulationResult:
    trajectory: object
    report: object
    profile: object = None
    x_star: object = None
    lyapunov: object = None

    @property
    def lyapunov_increase(self):
        """
        Largest increase of V between consecutive recorded times, 0 for a non-increasing series
        """
        if self.lyapunov is None or len(self.lyapunov) < 2:
            return 0.0
        return float(max(np.max(np.diff(self.lyapunov)), 0.0))


class ConsensusDesigner:
    """
    Orchestrates validation, gain synthesis, verification and simulation of one clustered graph
    with settings from a config dict merged over the packaged defaults
    """

    BASE_DIRECTORY = os.path.dirname(__file__)
    DEFAULT_CONFIG_PATH = os.path.join(BASE_DIRECTORY, "resources/configs/default_config.json")
    EXAMPLE_GRAPH_DIRECTORY = os.path.join(BASE_DIRECTORY, "resources/graphs")

    def __init__(self, config=None):
        self.config = merge_config(load_json_to_dict(self.DEFAULT_CONFIG_PATH), config)
        self.logger = self.setup_logger(self.config.get("log_directory"), self.config["console_log_level"])
        self.graph_parser = GraphParser()
        self.graph = None
        if self.config.get("graph_path"):
            self.load_graph(self.config["graph_path"])

    @staticmethod
    def setup_logger(log_directory=None, console_level="INFO"):
        root_logger = logging.getLogger("")
        handler_names = {handler.get_name() for handler in root_logger.handlers}
        if log_directory and FILE_HANDLER not in handler_names:
            os.makedirs(log_directory, exist_ok=True)
            file_handler = logging.FileHandler(
                os.path.join(log_directory, f"{datetime.now().strftime('%Y_%m_%d_%H_%M_%S')}_cluster_consensus.log")
            )
            file_handler.set_name(FILE_HANDLER)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
            root_logger.addHandler(file_handler)
        # the previous console handler may be bound to a replaced sys.stderr
        for handler in [handler for handler in root_logger.handlers if handler.get_name() == CONSOLE_HANDLER]:
            root_logger.removeHandler(handler)
        # set up logging to console
        console = logging.StreamHandler(sys.stderr)
        console.set_name(CONSOLE_HANDLER)
        console.setLevel(console_level)
        console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        root_logger.addHandler(console)
        root_logger.setLevel(logging.INFO)
        return logging.getLogger(__name__)

    def load_graph(self, graph_path):
        self.graph = self.graph_parser.load_graph(graph_path)
        self.logger.info(f"Loaded graph from {graph_path}: {self.graph}")
        return self.graph

    def load_example_graph(self, name="example_1"):
        return self.load_graph(os.path.join(self.EXAMPLE_GRAPH_DIRECTORY, f"{name}.json"))

    def set_graph(self, graph):
        self.graph = graph
        return graph

    def require_graph(self):
        if self.graph is None:
            raise InvalidArgument("no graph loaded")
        return self.graph

    def validate(self):
        report = validate_graph(self.require_graph())
        if report.passed:
            self.logger.info("Graph is a connected signed clustered graph")
        else:
            for violation in report:
                self.logger.warning(violation.message)
        return report

    def analyze(self):
        """
        Method to certify homogeneity, search a cluster ordering and compute the inertia of the
        signed Laplacian baseline
        :return: Analysis
        """
        graph = self.require_graph()
        trust = homogeneity_certificate(graph, self.config["homogeneity_tol"])
        ordering = find_ordering(graph)
        analysis = Analysis(trust=trust, ordering=ordering, laplacian_inertia=inertia(signed_laplacian(graph)))
        self.logger.info(f"Trust matrix {trust.c.tolist()}, {ordering}")
        return analysis

    def synthesize(self, q0=None, complete=False, schedule=None):
        """
        Method to compute stubbornness gains, by the closed form for complete unweighted graphs or
        by margin synthesis otherwise
        :param q0: initial margin, config value when None
        :param complete: use the closed form delta_i = 2 n_i - 1
        :param schedule: MarginSchedule or name, config value when None
        :return: GainVector
        """
        graph = self.require_graph()
        if complete:
            if not is_complete_unweighted(graph):
                raise NotCompleteGraph()
            gains = complete_graph_gains(graph.partition.sizes)
        else:
            schedule = schedule if schedule is not None else self.config["margin_schedule"]
            if isinstance(schedule, str):
                schedule = MarginSchedule[schedule.upper()]
            gains = synthesize_gains(
                graph,
                trust=homogeneity_certificate(graph, self.config["homogeneity_tol"]),
                q0=self.config["q0"] if q0 is None else q0,
                max_doublings=self.config["max_doublings"],
                schedule=schedule,
                kernel_tol=self.config["kernel_tol"],
                min_spectral_gap=self.config["min_spectral_gap"],
                gain_growth=self.config["gain_growth"],
            )
        self.logger.info(f"Synthesized {gains}")
        return gains

    def verify(self, deltas):
        graph = self.require_graph()
        return verify_kernel(build_M(graph, deltas), graph.partition, self.config["kernel_tol"])

    def initial_state(self, seed=None):
        return initial_state(self.require_graph().num_agents, seed, self.config["x0_std"])

    def build_profile(self, profile_names):
        if not profile_names:
            return None
        return NonlinearProfile.from_names(profile_names, self.require_graph().partition)

    def simulate(self, deltas, x0=None, seed=None, method=None, profile_names=None, t_end=None, stride=None):
        """
        Method to simulate the closed loop for given gains and evaluate consensus. Linear runs are
        compared with the predicted steady state; nonlinear runs get the Lyapunov series.
        :param deltas: k stubbornness values
        :param x0: initial state, drawn from seed when None
        :param seed: seed of the initial state draw
        :param method: IntegrationMethod or name, config value when None
        :param profile_names: nonlinearity names, one per cluster or a single shared one
        :param t_end: final time, config value when None
        :param stride: recording stride, config value when None
        :return: SimulationResult
        """
        graph = self.require_graph()
        partition = graph.partition
        m = build_M(graph, deltas)
        x0 = self.initial_state(seed) if x0 is None else np.asarray(x0, dtype=float)
        method = method if method is not None else self.config["method"]
        if isinstance(method, str):
            method = IntegrationMethod[method.upper()]
        profile = self.build_profile(profile_names)
        trajectory = run_simulation(
            m,
            partition,
            x0,
            method=method,
            dt=self.config["dt"],
            t_end=self.config["t_end"] if t_end is None else t_end,
            stride=self.config["stride"] if stride is None else stride,
            profile=profile,
            divergence_bound=self.config["divergence_bound"],
        )
        self.logger.info(f"Simulation finished: {trajectory}")
        predicted = None
        if profile is None or profile.is_linear:
            if verify_kernel(m, partition, self.config["kernel_tol"]).is_psd:
                predicted = predict_steady_state(m, x0, partition, self.config["kernel_tol"])
        report = detect_consensus(
            trajectory, partition, self.config["consensus_tol"], self.config["window"], predicted
        )
        result = SimulationResult(trajectory=trajectory, report=report, profile=profile)
        if profile is not None and not profile.is_linear:
            result.x_star = equilibrium_estimate(report, m, profile, partition, self.config["kernel_tol"])
            result.lyapunov = lyapunov_series(trajectory, result.x_star, profile, partition)
            self.logger.info(f"Largest Lyapunov increase between samples: {result.lyapunov_increase:.3e}")
        return result

    def sweep(self, deltas, seeds, method=None, profile_names=None, t_end=None):
        graph = self.require_graph()
        method = method if method is not None else self.config["method"]
        if isinstance(method, str):
            method = IntegrationMethod[method.upper()]
        return seed_sweep(
            build_M(graph, deltas),
            graph.partition,
            seeds,
            profile=self.build_profile(profile_names),
            method=method,
            dt=self.config["dt"],
            t_end=self.config["t_end"] if t_end is None else t_end,
            stride=self.config["stride"],
            tol=self.config["consensus_tol"],
            window=self.config["window"],
            std=self.config["x0_std"],
            divergence_bound=self.config["divergence_bound"],
        )
