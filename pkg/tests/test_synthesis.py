import logging
import os

import numpy as np
import pytest

import cluster_consensus.synthesis as synthesis
from cluster_consensus.assumptions import homogeneity_certificate, relabel
from cluster_consensus.designer import ConsensusDesigner
from cluster_consensus.enums import MarginSchedule
from cluster_consensus.exceptions import (
    HomogeneityViolation,
    IntermediateBlockNotPD,
    InvalidClusteredGraph,
    SynthesisFailed,
    TooFewClusters,
    ZeroPivot,
)
from cluster_consensus.file_parsers.graph_parser import GraphParser
from cluster_consensus.graph import build_complete_unweighted, build_random_homogeneous
from cluster_consensus.simulate import detect_consensus, initial_state, sample_times, simulate_linear_exact
from cluster_consensus.synthesis import (
    MIN_SPECTRAL_GAP,
    StageChecks,
    complete_graph_gains,
    conditioning_checks,
    explicit_k3_bounds,
    gain_bound,
    matrix_phi_blocks,
    scalar_recursion,
    stage_lower_bounds,
    synthesize_gains,
)
from cluster_consensus.verification import build_M, reduced_system, verify_kernel

TEST_DIRECTORY = os.path.dirname(os.path.abspath(__file__))
GRAPH_DIRECTORY = os.path.join(TEST_DIRECTORY, "resources", "graphs")


@pytest.fixture(scope="module")
def example_1():
    yield GraphParser().load_graph(os.path.join(ConsensusDesigner.EXAMPLE_GRAPH_DIRECTORY, "example_1.json"))


@pytest.fixture(scope="module")
def trust(example_1):
    yield homogeneity_certificate(example_1)


@pytest.mark.parametrize("delta2", [5.0, 10.0, 100.0])
def test_third_gain_independent_of_second(trust, delta2):
    tableau = scalar_recursion(trust, [2.0, delta2, 0.0])
    assert tableau.stage_bound(2) == pytest.approx(2.0, abs=1e-12)
    delta2_bound, delta3 = explicit_k3_bounds(trust, 2.0, delta2)
    assert delta2_bound == pytest.approx(4.0, abs=1e-12)
    assert delta3 == pytest.approx(tableau.stage_bound(2), abs=1e-12)


def test_stage_lower_bounds(trust):
    assert stage_lower_bounds(trust, [2.0, 5.0, 2.0]) == pytest.approx([1.0, 4.0, 2.0], abs=1e-12)


def test_scalar_recursion_zero_pivot(trust):
    with pytest.raises(ZeroPivot) as error:
        scalar_recursion(trust, [1.0, 5.0, 2.0])
    assert error.value.stage == 0


def test_synthesize_example_1(example_1):
    gains = synthesize_gains(example_1)
    assert gains.deltas[0] == 2.0
    assert gains.deltas[1] == pytest.approx(5.0, abs=1e-12)
    assert gains.deltas[2] == pytest.approx(2.0, abs=1e-12)
    assert gains.retries == 0
    assert gains.margins == (1.0, 1.0)
    assert gains.tableau.phi.tolist() == [1.0, 1.0, 0.0]
    assert gains.checks.first_failure is None
    assert verify_kernel(build_M(example_1, gains.deltas), example_1.partition).consensus_ready


@pytest.mark.parametrize("schedule", [MarginSchedule.DOUBLING, MarginSchedule.STAGED])
def test_synthesize_schedules_agree_without_retries(example_1, schedule):
    gains = synthesize_gains(example_1, q0=2.0, schedule=schedule, min_spectral_gap=0.0)
    assert gains.margins == (2.0, 2.0)
    assert gains.deltas[0] == 3.0


def test_synthesize_rejects_invalid_graphs():
    parser = GraphParser()
    with pytest.raises(InvalidClusteredGraph):
        synthesize_gains(parser.load_graph(os.path.join(GRAPH_DIRECTORY, "asymmetric.json")))
    with pytest.raises(HomogeneityViolation):
        synthesize_gains(parser.load_graph(os.path.join(GRAPH_DIRECTORY, "inhomogeneous.json")))
    with pytest.raises(TooFewClusters):
        synthesize_gains(build_complete_unweighted([2, 2]))


def failing_checks(stage):
    checks = StageChecks()
    checks.record(stage, "metzler", False)
    return checks


def test_doubling_schedule(example_1, monkeypatch):
    margins_seen = []
    margin_recursion = synthesis.margin_recursion

    def spy(trust, margins):
        margins_seen.append(list(margins))
        return margin_recursion(trust, margins)

    monkeypatch.setattr(synthesis, "margin_recursion", spy)
    monkeypatch.setattr(synthesis, "check_candidate", lambda graph, deltas, tol: failing_checks(2))
    with pytest.raises(SynthesisFailed) as error:
        synthesize_gains(example_1, max_doublings=3)
    assert error.value.iterations == 3
    assert margins_seen == [[1.0, 1.0], [1.0, 2.0], [1.0, 4.0], [1.0, 8.0]]


def test_staged_schedule_keeps_later_margins(monkeypatch):
    graph = build_complete_unweighted([2, 2, 2, 2])
    margins_seen = []
    margin_recursion = synthesis.margin_recursion

    def spy(trust, margins):
        margins_seen.append(list(margins))
        return margin_recursion(trust, margins)

    monkeypatch.setattr(synthesis, "margin_recursion", spy)
    monkeypatch.setattr(synthesis, "check_candidate", lambda graph, deltas, tol: failing_checks(2))
    with pytest.raises(SynthesisFailed):
        synthesize_gains(graph, max_doublings=2, schedule=MarginSchedule.STAGED)
    assert margins_seen == [[1.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 4.0, 1.0]]


def test_complete_graph_gains():
    gains = complete_graph_gains([9, 13, 14, 11, 7])
    assert gains.deltas.tolist() == [17.0, 25.0, 27.0, 21.0, 13.0]
    assert gains.margins == ()


def test_phi_blocks_example_1(example_1):
    phi = matrix_phi_blocks(example_1, [2.0, 5.0, 2.0])
    assert len(phi) == 3
    assert np.allclose(phi[0], 2.0 * np.eye(2) - example_1.block(0, 0))
    assert phi[2] == pytest.approx(np.zeros((1, 1)), abs=1e-12)
    assert np.allclose(phi[1] @ np.ones(4), np.ones(4), atol=1e-12)


def test_phi_blocks_complete_two_clusters():
    phi = matrix_phi_blocks(build_complete_unweighted([2, 2]), [3.0, 3.0])
    assert np.allclose(phi[1], np.array([[2.0, -2.0], [-2.0, 2.0]]), atol=1e-12)


def test_phi_blocks_intermediate_not_pd(example_1):
    with pytest.raises(IntermediateBlockNotPD) as error:
        matrix_phi_blocks(example_1, [0.5, 5.0, 2.0])
    assert error.value.stage == 0


def random_instance(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3, 5))
    sizes = rng.integers(1, 5, size=k).tolist()
    return build_random_homogeneous(sizes, seed=seed)


@pytest.mark.parametrize("seed", range(50))
def test_random_graphs_reach_consensus(seed):
    """
    Test that gains synthesized for a random homogeneous graph give a consensus-ready M whose
    simulation reaches k-partite consensus, and that scalar and matrix pivots agree
    :param seed: random seed
    :return: None
    """
    graph = random_instance(seed)
    gains = synthesize_gains(graph)
    m = build_M(graph, gains.deltas)
    assert verify_kernel(m, graph.partition).consensus_ready

    ordered_graph, _ = relabel(graph, gains.ordering)
    phi = matrix_phi_blocks(ordered_graph, gains.ordered_deltas)
    k = graph.num_clusters
    for h in range(k):
        size = phi[h].shape[0]
        assert np.allclose(phi[h] @ np.ones(size), gains.tableau.phi[h] * np.ones(size), atol=1e-8)
    assert gains.tableau.phi[:-1].tolist() == list(gains.margins)
    assert gains.tableau.phi[-1] == 0.0

    x0 = initial_state(graph.num_agents, seed)
    trajectory = simulate_linear_exact(m, x0, sample_times(50.0, 0.5))
    report = detect_consensus(trajectory, graph.partition, tol=1e-6, window=1.0)
    assert report.reached
    assert report.max_intra_cluster_spread <= 1e-6


@pytest.mark.parametrize("seed", [25, 28, 41, 49])
def test_random_graphs_gains_are_well_conditioned(seed):
    graph = random_instance(seed)
    gains = synthesize_gains(graph)
    report = verify_kernel(build_M(graph, gains.deltas), graph.partition)
    assert report.spectral_gap >= MIN_SPECTRAL_GAP
    assert np.max(np.abs(gains.deltas)) <= gain_bound(homogeneity_certificate(graph), gains.margins)


@pytest.mark.parametrize("seed", range(20))
def test_random_graphs_lift_to_reduced_system(seed):
    """
    Test that M acts on block-constant vectors through D - C and that D - C is singular for the
    synthesized gains, with its null vector lifting into the kernel of M
    :param seed: random seed
    :return: None
    """
    graph = random_instance(seed)
    trust = homogeneity_certificate(graph)
    gains = synthesize_gains(graph)
    m = build_M(graph, gains.deltas)
    w = np.random.default_rng(seed).normal(size=graph.num_clusters)
    reduced = np.diag(gains.deltas) - trust.c
    lifted = graph.partition.lift(w)
    assert np.allclose(m @ lifted, graph.partition.lift(reduced @ w), atol=1e-9 * np.max(np.abs(m)))

    system = reduced_system(trust, gains.deltas)
    assert system.is_singular
    kernel_vector = graph.partition.lift(system.null_vector)
    assert np.max(np.abs(m @ kernel_vector)) <= 1e-7 * np.max(np.abs(m))


def test_synthesize_complete_graph_general_path():
    graph = build_complete_unweighted([2, 2, 2])
    gains = synthesize_gains(graph)
    report = verify_kernel(build_M(graph, gains.deltas), graph.partition)
    assert report.consensus_ready
    assert report.zero_multiplicity == 1
    assert gains.deltas[0] == pytest.approx(1.0 + gains.margins[0], abs=1e-12)
    assert gains.checks.first_failure is None


def test_conditioning_checks():
    assert conditioning_checks(np.array([2.0, 5.0, 2.0]), 0.55, 70.0).first_failure is None
    failure = conditioning_checks(np.array([2.0, 5.0, 2.0]), 0.09, 70.0).first_failure
    assert (failure.stage, failure.check) == (2, "spectral-gap")
    failure = conditioning_checks(np.array([2.0, 2.1e4, 2.0]), 0.6, 70.0).first_failure
    assert (failure.stage, failure.check) == (2, "gain-size")


def test_gain_bound(trust):
    assert gain_bound(trust, np.array([1.0, 1.0])) == 70.0
    assert gain_bound(trust, np.array([1.0, 4.0]), gain_growth=2.0) == 20.0


def slow_gap(attempts):
    checks = StageChecks()
    checks.spectral_gap = float(attempts)
    checks.record(2, "spectral-gap", False)
    checks.record(2, "gain-size", True)
    return checks


def test_conditioning_failure_doubles_every_margin(example_1, monkeypatch):
    margins_seen = []
    margin_recursion = synthesis.margin_recursion
    conditioning = synthesis.conditioning_checks

    def spy(trust, margins):
        margins_seen.append(list(margins))
        return margin_recursion(trust, margins)

    def gap_after_two_doublings(deltas, spectral_gap, bound, min_spectral_gap):
        if len(margins_seen) < 3:
            return slow_gap(len(margins_seen))
        return conditioning(deltas, spectral_gap, bound, min_spectral_gap)

    monkeypatch.setattr(synthesis, "margin_recursion", spy)
    monkeypatch.setattr(synthesis, "conditioning_checks", gap_after_two_doublings)
    gains = synthesize_gains(example_1, min_spectral_gap=0.0)
    assert margins_seen == [[1.0, 1.0], [2.0, 2.0], [4.0, 4.0]]
    assert gains.retries == 2
    assert gains.margins == (4.0, 4.0)
    assert gains.deltas[0] == 5.0


def pin_spectral_gap(monkeypatch, gap):
    check_candidate = synthesis.check_candidate

    def pinned(graph, deltas, tol):
        checks = check_candidate(graph, deltas, tol)
        checks.spectral_gap = gap
        return checks

    monkeypatch.setattr(synthesis, "check_candidate", pinned)


def test_stalled_spectral_gap_keeps_best_candidate(example_1, monkeypatch, caplog):
    pin_spectral_gap(monkeypatch, 0.2)
    with caplog.at_level(logging.WARNING):
        gains = synthesize_gains(example_1)
    assert gains.retries == 0
    assert gains.margins == (1.0, 1.0)
    assert gains.deltas == pytest.approx([2.0, 5.0, 2.0], abs=1e-12)
    assert "stopped growing" in caplog.text


def test_conditioning_cap_returns_best_candidate(example_1, monkeypatch):
    pin_spectral_gap(monkeypatch, 0.2)
    gains = synthesize_gains(example_1, max_doublings=2)
    assert gains.retries == 0
    assert gains.margins == (1.0, 1.0)
