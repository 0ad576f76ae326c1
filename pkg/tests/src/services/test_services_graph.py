import unittest

import numpy as np

from src.exceptions import InfeasibleRatesError, ParameterError
from src.models import CouplingGraph
from src.schemas import GraphKind
from src.services.graph import (
    default_scale,
    gen_k,
    gen_sk,
    ising_energy,
    max_eigenvalue,
    max_feasible_scale,
    rescale_to_feasible,
    residual_rates,
    threshold_pump,
    threshold_report,
    validate_rates,
)


class TestGenerators(unittest.TestCase):
    def test_gen_sk_symmetric_zero_diagonal(self):
        g = gen_sk(10, 0.05, seed=42)
        self.assertEqual(g.n, 10)
        self.assertEqual(g.kind, GraphKind.SK)
        np.testing.assert_array_equal(g.J, g.J.T)
        np.testing.assert_array_equal(np.diag(g.J), np.zeros(10))

    def test_gen_sk_reproducible(self):
        self.assertEqual(gen_sk(8, 0.05, seed=1), gen_sk(8, 0.05, seed=1))
        self.assertNotEqual(gen_sk(8, 0.05, seed=1), gen_sk(8, 0.05, seed=2))

    def test_gen_k_magnitudes(self):
        g = gen_k(10, 0.05, seed=42)
        off = g.J[~np.eye(10, dtype=bool)]
        np.testing.assert_array_equal(np.abs(off), np.full(90, 0.05))
        self.assertTrue(np.any(off > 0) and np.any(off < 0))

    def test_gen_sk_variance(self):
        # 1415 modes give just over 10**6 independent couplings
        g = gen_sk(1415, 0.3, seed=11)
        couplings = g.J[np.triu_indices(g.n, k=1)]
        self.assertGreaterEqual(couplings.size, 10**6)
        self.assertAlmostEqual(couplings.var() / 0.09, 1.0, delta=0.01)

    def test_gen_k_sign_balance(self):
        g = gen_k(200, 0.05, seed=3)
        couplings = g.J[np.triu_indices(g.n, k=1)]
        positive = np.mean(couplings > 0)
        self.assertLess(abs(positive - 0.5), 3 * 0.5 / np.sqrt(couplings.size))

    def test_smallest_graph(self):
        g = gen_sk(2, 0.1, seed=0)
        self.assertEqual(g.J[0, 1], g.J[1, 0])

    def test_invalid_arguments(self):
        with self.assertRaises(ParameterError):
            gen_sk(1, 0.1, seed=0)
        with self.assertRaises(ParameterError):
            gen_sk(4, 0.0, seed=0)
        with self.assertRaises(ParameterError):
            gen_k(4, -1.0, seed=0)

    def test_default_scale_is_feasible(self):
        for kind, generate in ((GraphKind.SK, gen_sk), (GraphKind.K, gen_k)):
            g = generate(10, default_scale(kind, 10), 5)
            self.assertTrue(np.all(residual_rates(g, 1.0) >= 0), kind)


class TestCouplingGraph(unittest.TestCase):
    def test_rejects_asymmetric(self):
        with self.assertRaises(ParameterError):
            CouplingGraph(np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_rejects_diagonal(self):
        with self.assertRaises(ParameterError):
            CouplingGraph(np.array([[0.1, 0.0], [0.0, 0.0]]))

    def test_matrix_is_frozen(self):
        g = gen_sk(4, 0.1, seed=0)
        with self.assertRaises(ValueError):
            g.J[0, 1] = 3.0


class TestRates(unittest.TestCase):
    def test_zero_coupling(self):
        g = CouplingGraph(np.zeros((3, 3)))
        np.testing.assert_array_equal(validate_rates(g, 1.0), np.ones(3))

    def test_negative_rate_names_worst_mode(self):
        J = np.array([[0.0, 0.6, 0.0], [0.6, 0.0, 0.7], [0.0, 0.7, 0.0]])
        with self.assertRaises(InfeasibleRatesError) as ctx:
            validate_rates(CouplingGraph(J), 1.0)
        self.assertEqual(ctx.exception.mode, 1)
        self.assertAlmostEqual(ctx.exception.residual, -0.3)
        self.assertAlmostEqual(ctx.exception.max_scale, 1.0 / 1.3)
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_rescale_to_feasible(self):
        g = gen_sk(10, 0.5, seed=4)
        self.assertLess(residual_rates(g, 1.0).min(), 0)
        scaled, factor = rescale_to_feasible(g, 1.0, margin=0.01)
        self.assertAlmostEqual(factor, 0.99 * max_feasible_scale(g, 1.0))
        self.assertTrue(np.all(validate_rates(scaled, 1.0) >= 0))

    def test_rescale_keeps_feasible_graph(self):
        g = gen_sk(6, 0.01, seed=4)
        scaled, factor = rescale_to_feasible(g, 1.0)
        self.assertIs(scaled, g)
        self.assertEqual(factor, 1.0)


class TestThreshold(unittest.TestCase):
    def test_zero_coupling(self):
        g = CouplingGraph(np.zeros((4, 4)))
        self.assertEqual(threshold_pump(g, 1.0), 0.5)

    def test_single_mode(self):
        self.assertEqual(threshold_pump(CouplingGraph(np.zeros((1, 1))), 2.0), 1.0)

    def test_two_mode_ferromagnet(self):
        g = CouplingGraph(np.array([[0.0, 0.2], [0.2, 0.0]]))
        self.assertAlmostEqual(threshold_pump(g, 1.0), 0.4, places=14)

    def test_matches_full_eigendecomposition(self):
        rng = np.random.default_rng(123)
        for _ in range(20):
            n = int(rng.integers(2, 17))
            g = gen_sk(n, 0.3 / n, seed=int(rng.integers(1 << 30)))
            expected = (1.0 - np.linalg.eigvalsh(g.J).max()) / 2.0
            self.assertAlmostEqual(threshold_pump(g, 1.0) / expected, 1.0, delta=1e-10)

    def test_report(self):
        g = gen_k(5, 0.05, seed=0)
        report = threshold_report(g, 1.0)
        self.assertAlmostEqual(report["lambda_max"], max_eigenvalue(g))
        self.assertAlmostEqual(report["threshold_pump"], (1.0 - report["lambda_max"]) / 2)
        self.assertEqual(len(report["residual_rates"]), 5)


class TestIsingEnergy(unittest.TestCase):
    def test_two_spin(self):
        g = CouplingGraph(np.array([[0.0, 1.0], [1.0, 0.0]]))
        self.assertEqual(ising_energy(g, [1, 1]), -1.0)
        self.assertEqual(ising_energy(g, [1, -1]), 1.0)

    def test_global_flip(self):
        g = gen_sk(7, 0.1, seed=9)
        sigma = np.array([1, -1, 1, 1, -1, -1, 1])
        self.assertEqual(ising_energy(g, sigma), ising_energy(g, -sigma))

    def test_rejects_bad_spins(self):
        g = gen_sk(3, 0.1, seed=9)
        with self.assertRaises(ParameterError):
            ising_energy(g, [1, 0, 1])
        with self.assertRaises(ParameterError):
            ising_energy(g, [1, 1])


if __name__ == "__main__":
    unittest.main()
