"""
Bundled runs of the four worked examples with pinned inputs, each reduced to the facts that do
not depend on the random initial conditions
"""
import logging
from dataclasses import dataclass

import numpy as np

from cluster_consensus.assumptions import homogeneity_certificate
from cluster_consensus.base import BaseCollection, BaseItem
from cluster_consensus.enums import IntegrationMethod
from cluster_consensus.exceptions import InvalidArgument
from cluster_consensus.graph import build_complete_unweighted
from cluster_consensus.linalg import inertia
from cluster_consensus.nonlinearity import class_R_check, get_map
from cluster_consensus.synthesis import complete_graph_gains, explicit_k3_bounds, scalar_recursion
from cluster_consensus.verification import signed_laplacian

logger = logging.getLogger(__name__)

EXAMPLE_1_TRUST = np.array([[1.0, -2.0, -1.0], [-1.0, 2.0, -1.0], [-2.0, -4.0, 0.0]])
EXAMPLE_2_KERNEL = np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0])
EXAMPLE_2_ALTERNATE_KERNEL = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -2.0])


@dataclass(eq=False)
class ExampleCheck(BaseItem):
    example: int
    name: str
    observed: str
    passed: bool

    def get_key(self):
        return self.example, self.name


class ExampleChecks(BaseCollection):
    ITEM_CLASS = ExampleCheck

    def record(self, example, name, observed, passed):
        passed = bool(passed)
        self.add_item({"example": example, "name": name, "observed": str(observed), "passed": passed})
        if not passed:
            logger.warning(f"Example {example} check {name} failed: {observed}")
        return passed

    @property
    def passed(self):
        return all(check.passed for check in self)

    def to_text(self):
        return "\n".join(
            f"[{'PASS' if check.passed else 'FAIL'}] example {check.example} {check.name}: {check.observed}"
            for check in self
        )


def kernel_direction_error(report, direction):
    """
    Distance between the single kernel basis vector and a unit direction with the same sign convention
    """
    if report.zero_multiplicity != 1:
        return np.inf
    direction = direction / np.linalg.norm(direction)
    return float(np.max(np.abs(report.kernel_basis[:, 0] - direction)))


def reproduce_example_1(designer, checks):
    graph = designer.load_example_graph("example_1")
    trust = homogeneity_certificate(graph)
    checks.record(1, "trust matrix", trust.c.tolist(), np.array_equal(trust.c, EXAMPLE_1_TRUST))
    ordering = designer.analyze().ordering
    checks.record(1, "hub cluster", ordering.hub + 1, ordering.hub == 0)
    positive, negative, zero = inertia(signed_laplacian(graph))
    checks.record(1, "signed Laplacian positive definite", (positive, negative, zero), negative == 0 and zero == 0)


def reproduce_example_2(designer, checks):
    settings = designer.config["examples"]["example_2"]
    graph = designer.load_example_graph("example_1")
    trust = homogeneity_certificate(graph)
    for delta2 in (5.0, 10.0, 100.0):
        delta3 = scalar_recursion(trust, [2.0, delta2, 0.0]).stage_bound(2)
        _, closed_form = explicit_k3_bounds(trust, 2.0, delta2)
        checks.record(
            2, f"delta_3 for delta_2={delta2:g}", delta3, abs(delta3 - 2.0) <= 1e-12 and abs(closed_form - 2.0) <= 1e-12
        )
    gains = designer.synthesize()
    deltas = gains.deltas
    checks.record(
        2, "synthesized gains", deltas.tolist(), deltas[0] == 2.0 and abs(deltas[2] - 2.0) <= 1e-12 and deltas[1] > 4.0
    )
    report = designer.verify(settings["deltas"])
    error = kernel_direction_error(report, EXAMPLE_2_KERNEL)
    checks.record(2, "kernel for deltas (2,5,2)", f"error {error:.2e}", report.is_psd and error <= 1e-8)
    alternate = designer.verify(settings["alternate_deltas"])
    error = kernel_direction_error(alternate, EXAMPLE_2_ALTERNATE_KERNEL)
    checks.record(2, "kernel for deltas (3,4,2)", f"error {error:.2e}", alternate.is_psd and error <= 1e-8)
    result = designer.simulate(settings["deltas"], x0=settings["x0"], t_end=settings["t_end"])
    checks.record(
        2, "steady state matches prediction", result.report.predicted_match, result.report.predicted_match <= 1e-6
    )
    c = designer.simulate(settings["deltas"], seed=settings["seed"], t_end=settings["t_end"]).report.cluster_values
    checks.record(2, "regime structure c2 = 0, c1 = -c3", c.tolist(), abs(c[1]) <= 1e-6 and abs(c[0] + c[2]) <= 1e-6)


def reproduce_complete_example(designer, checks, example, nonlinear=False):
    settings = designer.config["examples"][f"example_{example}"]
    sizes = settings["sizes"]
    designer.set_graph(build_complete_unweighted(sizes))
    gains = complete_graph_gains(sizes)
    checks.record(example, "closed-form gains", gains.deltas.tolist(), np.array_equal(gains.deltas, 2 * np.array(sizes) - 1))
    report = designer.verify(gains.deltas)
    checks.record(example, "positive semidefinite", report.min_eigenvalue, report.is_psd)
    checks.record(
        example, "kernel dimension", report.zero_multiplicity, report.zero_multiplicity == len(sizes) - 1
    )
    weighted = [abs(float(np.dot(alpha, sizes))) for alpha in report.alphas]
    checks.record(
        example, "kernel alphas sum to zero", max(weighted, default=np.inf), report.block_constant and max(weighted) <= 1e-8
    )
    if not nonlinear:
        result = designer.simulate(gains.deltas, seed=settings["seed"], t_end=settings["t_end"])
        time = result.report.convergence_time
        checks.record(example, "consensus reached", time, result.report.reached and time is not None and time < 2.0)
        checks.record(
            example, "steady state matches prediction", result.report.predicted_match, result.report.predicted_match <= 1e-6
        )
        return
    checks.record(example, "class R profile", settings["profile"], class_R_check(get_map(settings["profile"])))
    result = designer.simulate(
        gains.deltas,
        seed=settings["seed"],
        method=IntegrationMethod.RK4,
        profile_names=[settings["profile"]],
        t_end=settings["t_end"],
    )
    spread = result.report.max_intra_cluster_spread
    checks.record(example, "block-constant final state", spread, spread <= 1e-4)
    checks.record(example, "Lyapunov non-increasing", result.lyapunov_increase, result.lyapunov_increase <= 1e-9)


def reproduce_example(designer, example):
    """
    Function to run one bundled example and collect its checks
    :param designer: ConsensusDesigner
    :param example: 1, 2, 3 or 4
    :return: ExampleChecks
    """
    checks = ExampleChecks()
    if example == 1:
        reproduce_example_1(designer, checks)
    elif example == 2:
        reproduce_example_2(designer, checks)
    elif example == 3:
        reproduce_complete_example(designer, checks, 3)
    elif example == 4:
        reproduce_complete_example(designer, checks, 4, nonlinear=True)
    else:
        raise InvalidArgument(f"unknown example {example}, expected 1 to 4")
    logger.info(f"Example {example}: {sum(check.passed for check in checks)}/{len(checks)} checks passed")
    return checks
