import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.exceptions import GraphFormatError, ParameterError
from src.models import CouplingGraph
from src.schemas import GraphKind
from src.repository.graphs import (
    dumps_graph, graph_from_model, graph_to_model, load_graph, loads_graph, save_graph
)
from src.services.graph import gen_k, gen_sk


class TestGraphFile(unittest.TestCase):
    def setUp(self):
        self.graph = gen_sk(6, 0.07, seed=12)

    def test_save_and_load_are_exact(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = save_graph(self.graph, Path(tmp) / "nested" / "graph.txt")
            loaded = load_graph(path)
        self.assertEqual(loaded, self.graph)
        self.assertEqual(loaded.digest, self.graph.digest)

    def test_header(self):
        header = dumps_graph(gen_k(3, 0.1, seed=4)).splitlines()[0]
        self.assertEqual(header, "ising-graph v1 n=3 kind=K seed=4")

    def test_custom_graph_without_seed(self):
        g = loads_graph("ising-graph v1 n=3 kind=custom seed=none\n0 2 0.5\n")
        self.assertIsNone(g.seed)
        self.assertEqual(g.kind, GraphKind.CUSTOM)
        np.testing.assert_array_equal(g.J, [[0, 0, 0.5], [0, 0, 0], [0.5, 0, 0]])

    def test_comments_blank_lines_and_repeated_pairs(self):
        text = "ising-graph v1 n=2 kind=custom seed=1\n# couplings\n\n0 1 0.25\n1 0 0.25\n"
        self.assertEqual(loads_graph(text).J[1, 0], 0.25)

    def test_missing_file(self):
        with self.assertRaises(ParameterError):
            load_graph("/nonexistent/graph.txt")


class TestGraphFormatErrors(unittest.TestCase):
    def assertFormatError(self, text, line, field=None):
        with self.assertRaises(GraphFormatError) as ctx:
            loads_graph(text)
        self.assertEqual(ctx.exception.line, line)
        self.assertEqual(ctx.exception.field, field)
        self.assertEqual(ctx.exception.exit_code, 1)

    def test_empty(self):
        self.assertFormatError("", None)

    def test_bad_header(self):
        self.assertFormatError("graph n=2\n", 1)
        self.assertFormatError("ising-graph v2 n=2 kind=SK seed=1\n", 1, "version")
        self.assertFormatError("ising-graph v1 n=x kind=SK seed=1\n", 1, "n")
        self.assertFormatError("ising-graph v1 n=2 kind=XY seed=1\n", 1, "kind")

    def test_asymmetric_pair(self):
        self.assertFormatError("ising-graph v1 n=2 kind=custom seed=1\n0 1 0.25\n1 0 0.5\n", 3, "J_ij")

    def test_diagonal(self):
        self.assertFormatError("ising-graph v1 n=2 kind=custom seed=1\n1 1 0.5\n", 2, "J_ij")

    def test_index_out_of_range(self):
        self.assertFormatError("ising-graph v1 n=2 kind=custom seed=1\n0 2 0.5\n", 2, "j")

    def test_malformed_line(self):
        self.assertFormatError("ising-graph v1 n=2 kind=custom seed=1\n0 1\n", 2)
        self.assertFormatError("ising-graph v1 n=2 kind=custom seed=1\n0 1 abc\n", 2, "J_ij")


class TestGraphModel(unittest.TestCase):
    def test_round_trip_through_model(self):
        g = gen_k(4, 0.1, seed=2)
        self.assertEqual(graph_from_model(graph_to_model(g)), g)

    def test_model_validation_reaches_graph(self):
        model = graph_to_model(CouplingGraph(np.zeros((2, 2))))
        model.couplings[0][1] = 1.0
        with self.assertRaises(ParameterError):
            graph_from_model(model)


if __name__ == "__main__":
    unittest.main()
