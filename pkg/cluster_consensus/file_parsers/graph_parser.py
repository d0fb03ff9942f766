import json
import numbers

import numpy as np

from cluster_consensus.exceptions import GraphFormatError, InvalidPartition
from cluster_consensus.graph import ClusterPartition, SignedClusteredGraph
from cluster_consensus.utilities.utility_functions import dict_to_json_file


class GraphParser:
    """
    Reads and writes graph documents {"clusters": [n_1, ..., n_k], "adjacency": [[...], ...]} and
    initial state documents (a flat list of N numbers)
    """

    def load_graph(self, graph_path):
        with open(graph_path, "r") as graph_file:
            text = graph_file.read()
        return self.parse_graph(text)

    def parse_graph(self, text):
        """
        Method to build a graph from document text, checking shape only
        :param text: json text
        :return: SignedClusteredGraph
        """
        document = self.decode(text)
        if not isinstance(document, dict):
            raise GraphFormatError("graph document must be an object")
        for field in ("clusters", "adjacency"):
            if field not in document:
                raise GraphFormatError("missing field", field=field)
        sizes = document["clusters"]
        if not isinstance(sizes, list) or len(sizes) == 0:
            raise GraphFormatError("must be a non-empty list", field="clusters")
        for index, size in enumerate(sizes):
            if isinstance(size, bool) or not isinstance(size, int) or size < 1:
                raise GraphFormatError(f"cluster size {size!r} is not a positive integer", field=f"clusters[{index}]")
        adjacency = self.parse_matrix(document["adjacency"])
        if adjacency.shape[0] != sum(sizes):
            raise GraphFormatError(
                f"size mismatch: clusters sum to {sum(sizes)}, adjacency has {adjacency.shape[0]} rows",
                field="adjacency",
            )
        try:
            return SignedClusteredGraph(ClusterPartition(tuple(sizes)), adjacency)
        except InvalidPartition as error:
            raise GraphFormatError(str(error), field="clusters")

    def parse_matrix(self, rows):
        if not isinstance(rows, list) or len(rows) == 0:
            raise GraphFormatError("must be a non-empty list of rows", field="adjacency")
        num_rows = len(rows)
        for i, row in enumerate(rows):
            if not isinstance(row, list):
                raise GraphFormatError("row is not a list", field=f"adjacency[{i}]")
            if len(row) != num_rows:
                raise GraphFormatError(
                    f"non-square matrix: row has {len(row)} entries, expected {num_rows}",
                    field=f"adjacency[{i}]",
                )
            for j, value in enumerate(row):
                self.check_number(value, f"adjacency[{i}][{j}]")
        return np.array(rows, dtype=float)

    def load_initial_state(self, x0_path, num_agents):
        """
        Method to read an initial state file, a flat list of num_agents numbers
        :param x0_path: json file path
        :param num_agents: expected length
        :return: numpy vector
        """
        with open(x0_path, "r") as x0_file:
            document = self.decode(x0_file.read())
        if not isinstance(document, list):
            raise GraphFormatError("initial state must be a flat list of numbers", field="x0")
        if len(document) != num_agents:
            raise GraphFormatError(f"initial state has {len(document)} entries, expected {num_agents}", field="x0")
        for i, value in enumerate(document):
            self.check_number(value, f"x0[{i}]")
        return np.array(document, dtype=float)

    @staticmethod
    def save_graph(graph, output_path):
        """
        Method to write a graph document, floats written with repr precision so loading restores
        the adjacency exactly
        :param graph: SignedClusteredGraph
        :param output_path: json file path
        :return: None
        """
        dict_to_json_file(
            {"clusters": list(graph.partition.sizes), "adjacency": graph.adjacency.tolist()},
            output_path,
        )

    @staticmethod
    def decode(text):
        try:
            return json.loads(text)
        except json.JSONDecodeError as error:
            raise GraphFormatError(f"malformed document: {error.msg}", line=error.lineno)

    @staticmethod
    def check_number(value, field):
        if isinstance(value, bool) or not isinstance(value, numbers.Real) or not np.isfinite(value):
            raise GraphFormatError(f"{value!r} is not a finite number", field=field)
