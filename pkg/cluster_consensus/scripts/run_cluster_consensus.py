from cluster_consensus.designer import ConsensusDesigner
from cluster_consensus.utilities.utility_functions import dict_to_json_file, load_json_to_dict


def run_all(config_path):
    config = load_json_to_dict(json_file_path=config_path)
    designer = ConsensusDesigner(config=config)
    designer.validate()
    designer.analyze()
    gains = designer.synthesize(complete=config.get("complete", False))
    designer.verify(gains.deltas)
    result = designer.simulate(gains.deltas, seed=config.get("seed"), profile_names=config.get("profile"))
    output_directory = config.get("output_directory")
    if output_directory:
        dict_to_json_file(gains.to_dict(), f"{output_directory}/gains.json")
        result.trajectory.write_to_csv(f"{output_directory}/trajectory.csv")
        result.report.write_to_json(f"{output_directory}/consensus_report.json")
    return result


def run_example_1():
    run_all(config_path="cluster_consensus/resources/configs/example_1_run_config.json")


if __name__ == "__main__":
    run_example_1()
