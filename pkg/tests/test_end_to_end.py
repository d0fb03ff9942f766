import io
import json
import logging
import os
import sys

import numpy as np
import pandas as pd
import pytest

from cluster_consensus.designer import CONSOLE_HANDLER, ConsensusDesigner
from cluster_consensus.exceptions import InvalidArgument, NotCompleteGraph
from cluster_consensus.reproduce import reproduce_example
from cluster_consensus.scripts.run_cluster_consensus import run_all
from cluster_consensus.utilities.utility_functions import dict_to_json_file, load_json_to_dict


@pytest.fixture(scope="module")
def designer():
    current_directory = os.path.dirname(os.path.abspath(__file__))
    parent_directory = os.path.dirname(current_directory)
    os.chdir(parent_directory)
    config = load_json_to_dict(json_file_path="tests/resources/cluster_consensus_test_config.json")
    designer = ConsensusDesigner(config=config)
    designer.load_example_graph("example_1")
    yield designer


def test_config_merged_over_defaults(designer):
    assert designer.config["t_end"] == 10.0
    assert designer.config["q0"] == 1.0
    assert designer.config["examples"]["example_2"]["deltas"] == [2.0, 5.0, 2.0]
    defaults = ConsensusDesigner().config
    assert defaults["t_end"] == 40.0
    assert defaults["console_log_level"] == "INFO"
    assert defaults["min_spectral_gap"] == 0.5


def test_console_handler_follows_current_stderr(monkeypatch):
    ConsensusDesigner()
    stream = io.StringIO()
    monkeypatch.setattr(sys, "stderr", stream)
    ConsensusDesigner({"console_log_level": "INFO"}).load_example_graph("example_1")
    consoles = [handler for handler in logging.getLogger().handlers if handler.get_name() == CONSOLE_HANDLER]
    assert len(consoles) == 1
    assert consoles[0].stream is stream
    assert "Loaded graph from" in stream.getvalue()


def test_console_level_from_config(monkeypatch):
    stream = io.StringIO()
    monkeypatch.setattr(sys, "stderr", stream)
    ConsensusDesigner({"console_log_level": "WARNING"}).load_example_graph("example_1")
    assert stream.getvalue() == ""


def test_require_graph():
    with pytest.raises(InvalidArgument):
        ConsensusDesigner().require_graph()


def test_workflow_example_1(designer):
    """
    Test the full workflow on the bundled graph: validate, analyze, synthesize, verify and simulate
    :param designer: designer fixture
    :return: None
    """
    assert designer.validate().passed
    analysis = designer.analyze()
    assert analysis.ordering.hub == 0
    assert analysis.laplacian_positive_definite
    gains = designer.synthesize()
    assert gains.deltas == pytest.approx([2.0, 5.0, 2.0], abs=1e-12)
    assert designer.verify(gains.deltas).consensus_ready
    result = designer.simulate(gains.deltas, seed=42, t_end=40.0)
    assert result.report.reached
    assert result.report.predicted_match <= 1e-6
    assert result.lyapunov is None
    assert abs(result.report.cluster_values[1]) <= 1e-6


def test_synthesize_complete_requires_complete_graph(designer):
    with pytest.raises(NotCompleteGraph):
        designer.synthesize(complete=True)


def test_nonlinear_simulation_records_lyapunov(designer):
    result = designer.simulate([2.0, 5.0, 2.0], seed=3, method="rk4", profile_names=["identity", "tanh", "tanh"])
    assert result.profile is not None
    assert len(result.lyapunov) == len(result.trajectory)
    assert result.lyapunov_increase <= 1e-9


def test_sweep(designer):
    df = designer.sweep([2.0, 5.0, 2.0], [1, 2, 3], t_end=40.0)
    assert len(df) == 3
    assert not df["diverged"].any()
    assert np.allclose(df["c_1"], -df["c_3"], atol=1e-6)


@pytest.mark.parametrize("example", [1, 2, 3, 4])
def test_reproduce_examples(designer, example):
    checks = reproduce_example(ConsensusDesigner(designer.config), example)
    assert len(checks) > 0
    assert checks.passed, checks.to_text()


def test_run_all(tmp_path):
    config_path = tmp_path / "run_config.json"
    output_directory = tmp_path / "output"
    dict_to_json_file(
        {
            "graph_path": os.path.join(ConsensusDesigner.EXAMPLE_GRAPH_DIRECTORY, "example_1.json"),
            "seed": 42,
            "t_end": 40.0,
            "output_directory": str(output_directory),
        },
        config_path,
    )
    result = run_all(str(config_path))
    assert result.report.reached
    gains = json.loads((output_directory / "gains.json").read_text())
    assert gains["hub"] == 0
    assert len(pd.read_csv(output_directory / "trajectory.csv").columns) == 8
    assert json.loads((output_directory / "consensus_report.json").read_text())["reached"]
