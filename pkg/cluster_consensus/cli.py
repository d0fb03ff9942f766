import argparse
import logging
import sys
from dataclasses import dataclass, field

from cluster_consensus.designer import ConsensusDesigner
from cluster_consensus.enums import Command, ExitCode
from cluster_consensus.exceptions import (
    ClusterConsensusError,
    GraphFormatError,
    IntermediateBlockNotPD,
    InvalidArgument,
    SynthesisFailed,
    ZeroPivot,
)
from cluster_consensus.reproduce import reproduce_example
from cluster_consensus.utilities.utility_functions import (
    dict_to_json_file,
    load_json_to_dict,
    parse_float_list,
    parse_name_list,
)

logger = logging.getLogger(__name__)

GRAPH_COMMANDS = (Command.VALIDATE, Command.ANALYZE, Command.SYNTHESIZE, Command.VERIFY, Command.SIMULATE, Command.SWEEP)
DELTA_COMMANDS = (Command.VERIFY, Command.SIMULATE, Command.SWEEP)
CLI_CONSOLE_LOG_LEVEL = "WARNING"


@dataclass
class RunConfig:
    """
    Parsed command line of one run; numeric settings left as None fall back to the config file
    """

    command: Command
    graph_path: str = None
    config_path: str = None
    deltas: list = None
    seed: int = None
    seeds: list = None
    x0_path: str = None
    dt: float = None
    t_end: float = None
    tol: float = None
    method: str = None
    profile: list = None
    q0: float = None
    schedule: str = None
    complete: bool = False
    stride: int = None
    output_path: str = None
    report_path: str = None
    example: int = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.check()
        for key, value in (
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("consensus_tol", self.tol),
            ("method", self.method),
            ("q0", self.q0),
            ("margin_schedule", self.schedule),
            ("stride", self.stride),
        ):
            if value is not None:
                self.overrides[key] = value

    def check(self):
        if self.command in GRAPH_COMMANDS and not self.graph_path:
            raise InvalidArgument(f"{self.command.name.lower()} requires --graph")
        if self.command in DELTA_COMMANDS and not self.deltas:
            raise InvalidArgument(f"{self.command.name.lower()} requires --deltas")
        if self.command == Command.SIMULATE and self.seed is None and self.x0_path is None:
            raise InvalidArgument("simulate requires --seed or --x0")
        if self.command == Command.SWEEP and not self.seeds:
            raise InvalidArgument("sweep requires --seeds")
        if self.command == Command.REPRODUCE and self.example not in (1, 2, 3, 4):
            raise InvalidArgument(f"unknown example {self.example}, expected 1 to 4")

    def build_config(self):
        config = load_json_to_dict(self.config_path) if self.config_path else {}
        config.setdefault("console_log_level", CLI_CONSOLE_LOG_LEVEL)
        config.update(self.overrides)
        return config


class CommandLineParser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidArgument(message)


def build_parser():
    parser = CommandLineParser(prog="cluster-consensus", description="k-partite consensus design for signed clustered graphs")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CommandLineParser)

    def add_command(name, help_text):
        subparser = subparsers.add_parser(name, help=help_text)
        subparser.add_argument("--config", dest="config_path", help="json config merged over the defaults")
        subparser.add_argument("--out", dest="output_path", help="output file")
        return subparser

    def add_graph(subparser):
        subparser.add_argument("--graph", dest="graph_path", help="graph json file")

    def add_dynamics(subparser):
        subparser.add_argument("--deltas", type=parse_float_list, help="stubbornness d1,...,dk")
        subparser.add_argument("--dt", type=float)
        subparser.add_argument("--t-end", dest="t_end", type=float)
        subparser.add_argument("--tol", type=float, help="consensus tolerance")
        subparser.add_argument("--method", choices=["exact", "rk4"])
        subparser.add_argument("--profile", type=parse_name_list, help="nonlinearity f1,...,fk or one shared name")
        subparser.add_argument("--stride", type=int, help="record every stride-th step")

    add_graph(add_command("validate", "check the clustered graph structure"))
    add_graph(add_command("analyze", "print trust matrix, cluster ordering and Laplacian baseline"))
    synthesize = add_command("synthesize", "compute stubbornness gains")
    add_graph(synthesize)
    synthesize.add_argument("--q0", type=float, help="initial margin")
    synthesize.add_argument("--schedule", choices=["doubling", "staged"])
    synthesize.add_argument("--complete", action="store_true", help="closed form for complete unweighted graphs")
    verify = add_command("verify", "check the kernel of M for given gains")
    add_graph(verify)
    verify.add_argument("--deltas", type=parse_float_list, help="stubbornness d1,...,dk")
    simulate = add_command("simulate", "simulate the closed loop")
    add_graph(simulate)
    add_dynamics(simulate)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--x0", dest="x0_path", help="initial state json file")
    simulate.add_argument("--report", dest="report_path", help="consensus report json file")
    reproduce = add_command("reproduce", "run a bundled example")
    reproduce.add_argument("example", type=int)
    sweep = add_command("sweep", "simulate once per seed and tabulate outcomes")
    add_graph(sweep)
    add_dynamics(sweep)
    sweep.add_argument("--seeds", type=lambda value: [int(seed) for seed in parse_float_list(value)])
    return parser


def parse_run_config(argv):
    arguments = vars(build_parser().parse_args(argv))
    arguments["command"] = Command[arguments["command"].upper()]
    return RunConfig(**arguments)


def cluster_label(cluster):
    return cluster + 1


def cmd_validate(designer, run):
    designer.load_graph(run.graph_path)
    report = designer.validate()
    print(report.to_text())
    if run.output_path:
        report.write_to_csv(run.output_path)
    return ExitCode.SUCCESS if report.passed else ExitCode.ASSUMPTION_FAILURE


def cmd_analyze(designer, run):
    designer.load_graph(run.graph_path)
    analysis = designer.analyze()
    k = analysis.trust.num_clusters
    for i in range(k):
        print("  ".join(f"c_{i + 1}{j + 1} = {analysis.trust.c[i, j]:g}" for j in range(k)))
    ordering = analysis.ordering
    print(f"hub = {cluster_label(ordering.hub)}, exempt = {cluster_label(ordering.exempt)}")
    print(f"order = {[cluster_label(cluster) for cluster in ordering.order]}")
    positive, negative, zero = analysis.laplacian_inertia
    verdict = "zero consensus only" if analysis.laplacian_positive_definite else "nontrivial kernel"
    print(f"signed Laplacian inertia (+{positive}, -{negative}, 0:{zero}): {verdict}")
    if run.output_path:
        analysis.trust.to_dataframe().to_csv(run.output_path)
    return ExitCode.SUCCESS


def cmd_synthesize(designer, run):
    designer.load_graph(run.graph_path)
    gains = designer.synthesize(complete=run.complete)
    for cluster, delta in enumerate(gains.deltas):
        print(f"delta_{cluster_label(cluster)} = {delta:.12g}")
    if gains.margins:
        print(f"margins = {[float(q) for q in gains.margins]} after {gains.retries} doublings")
    if run.output_path:
        dict_to_json_file(gains.to_dict(), run.output_path)
    return ExitCode.SUCCESS


def cmd_verify(designer, run):
    designer.load_graph(run.graph_path)
    report = designer.verify(run.deltas)
    print(f"positive semidefinite: {report.is_psd} (min eigenvalue {report.min_eigenvalue:.6e})")
    print(f"zero eigenvalue multiplicity: {report.zero_multiplicity}")
    print(f"kernel block-constant: {report.block_constant}")
    for alpha in report.alphas:
        print(f"alpha = {[round(value, 12) for value in alpha]}")
    if run.output_path:
        dict_to_json_file(report.to_dict(), run.output_path)
    return ExitCode.SUCCESS if report.consensus_ready else ExitCode.ASSUMPTION_FAILURE


def cmd_simulate(designer, run):
    graph = designer.load_graph(run.graph_path)
    x0 = None
    if run.x0_path:
        x0 = designer.graph_parser.load_initial_state(run.x0_path, graph.num_agents)
    result = designer.simulate(run.deltas, x0=x0, seed=run.seed, profile_names=run.profile)
    print(result.report.to_text())
    if result.lyapunov is not None:
        print(f"largest Lyapunov increase: {result.lyapunov_increase:.3e}")
    if run.output_path:
        result.trajectory.write_to_csv(run.output_path)
    if run.report_path:
        result.report.write_to_json(run.report_path)
    return ExitCode.SUCCESS


def cmd_reproduce(designer, run):
    checks = reproduce_example(designer, run.example)
    print(checks.to_text())
    if run.output_path:
        checks.write_to_csv(run.output_path)
    return ExitCode.SUCCESS if checks.passed else ExitCode.ASSUMPTION_FAILURE


def cmd_sweep(designer, run):
    designer.load_graph(run.graph_path)
    df = designer.sweep(run.deltas, run.seeds, profile_names=run.profile)
    print(df.to_string(index=False))
    if run.output_path:
        df.to_csv(run.output_path, index=False)
    return ExitCode.SUCCESS


COMMANDS = {
    Command.VALIDATE: cmd_validate,
    Command.ANALYZE: cmd_analyze,
    Command.SYNTHESIZE: cmd_synthesize,
    Command.VERIFY: cmd_verify,
    Command.SIMULATE: cmd_simulate,
    Command.REPRODUCE: cmd_reproduce,
    Command.SWEEP: cmd_sweep,
}


def exit_code_for(error):
    if isinstance(error, (GraphFormatError, OSError)):
        return ExitCode.IO_ERROR
    if isinstance(error, (SynthesisFailed, ZeroPivot, IntermediateBlockNotPD)):
        return ExitCode.SYNTHESIS_FAILURE
    return ExitCode.ASSUMPTION_FAILURE


def main(argv=None):
    """
    Function to run one command line invocation
    :param argv: argument list, sys.argv[1:] when None
    :return: exit code
    """
    try:
        run = parse_run_config(argv)
        designer = ConsensusDesigner(run.build_config())
        return int(COMMANDS[run.command](designer, run))
    except (ClusterConsensusError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return int(exit_code_for(error))


def run():
    sys.exit(main())
