import json
from pathlib import Path


def load_json_to_dict(json_file_path) -> dict:
    """
    Function to load a json file to a dict
    :param json_file_path: json file path
    :return: dict
    """
    with open(json_file_path, "r") as json_file:
        json_data = json.load(json_file)
    return json_data


def dict_to_json_file(data, output_file_path):
    """
    Function to write a dict to json file, creating the parent directory if needed
    :param data: dict data
    :param output_file_path: output file path
    :return: None
    """
    Path(output_file_path).parent.mkdir(parents=True, exist_ok=True)
    with open(output_file_path, "w") as json_file:
        json.dump(data, json_file, indent=4)


def merge_config(defaults, overrides) -> dict:
    """
    Function to merge a user config over the default config, nested dicts merged key by key
    :param defaults: default config dict
    :param overrides: user config dict, may be None
    :return: merged dict
    """
    merged = dict(defaults)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_float_list(value) -> list:
    """
    Function to parse a comma separated list of numbers, as given on the command line
    :param value: string such as "2,5,2"
    :return: list of floats
    """
    return [float(part) for part in value.split(",") if part.strip() != ""]


def parse_name_list(value) -> list:
    """
    Function to parse a comma separated list of names
    :param value: string such as "tanh,tanh,cubic"
    :return: list of stripped names
    """
    return [part.strip() for part in value.split(",") if part.strip() != ""]
