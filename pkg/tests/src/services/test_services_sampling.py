import unittest
from collections import Counter

import numpy as np

from src.exceptions import (
    GraphMismatchError,
    InsufficientDataError,
    NoThermalFitError,
    ParameterError,
)
from src.models import CouplingGraph, EnergyHistogram, TempFit
from src.schemas import FitProbability, TieBreak
from src.services.experiments import synthetic_samples
from src.services.graph import gen_k, gen_sk, ising_energy
from src.services.oracle import boltzmann_exact, enumerate_spectrum
from src.services.sampling import (
    SpinRecorder,
    accumulate,
    crossing_energy,
    energy_series,
    fit_points,
    fit_temperature,
    merge_histograms,
    most_visited,
    new_histogram,
    per_energy_probabilities,
    read_spins,
    running_success,
    spin_sample,
    success_probability,
)


class TestReadSpins(unittest.TestCase):
    def test_signs(self):
        spins = read_spins(np.array([0.3 + 1j, -2.0, 1e-12 - 5j]))
        np.testing.assert_array_equal(spins, [1, -1, 1])
        self.assertEqual(spins.dtype, np.int8)

    def test_tie_break(self):
        alpha = np.array([0.0 + 0.5j, 1.0])
        np.testing.assert_array_equal(read_spins(alpha, TieBreak.PLUS), [1, 1])
        np.testing.assert_array_equal(read_spins(alpha, TieBreak.MINUS), [-1, 1])

    def test_non_finite(self):
        with self.assertRaises(ParameterError):
            read_spins(np.array([np.nan, 1.0]))


class TestHistogram(unittest.TestCase):
    def setUp(self):
        self.graph = gen_sk(4, 0.1, seed=1)

    def test_partners_share_a_bin(self):
        hist = new_histogram(self.graph)
        accumulate(hist, np.array([1, -1, 1, 1]))
        accumulate(hist, np.array([-1, 1, -1, -1]))
        self.assertEqual(hist.total, 2)
        self.assertEqual(dict(hist.counts), {1: 2})

    def test_dimension_mismatch(self):
        with self.assertRaises(ParameterError):
            accumulate(new_histogram(self.graph), np.array([1, 1, 1]))

    def test_merge_is_count_addition(self):
        a, b = new_histogram(self.graph), new_histogram(self.graph)
        for sigma in ([1, 1, 1, 1], [1, -1, 1, 1]):
            accumulate(a, np.array(sigma))
        accumulate(b, np.array([1, 1, 1, 1]))
        merged = merge_histograms(a, b)
        self.assertEqual(merged.total, 3)
        self.assertEqual(merged.counts[0], 2)
        self.assertEqual(merge_histograms(b, a).counts, merged.counts)

    def test_merge_rejects_other_graph(self):
        other = new_histogram(gen_sk(4, 0.1, seed=2))
        with self.assertRaises(GraphMismatchError):
            merge_histograms(new_histogram(self.graph), other)

    def test_merge_w_undigested_histogram(self):
        signed = new_histogram(self.graph)
        accumulate(signed, np.array([1, 1, 1, 1]))
        unsigned = EnergyHistogram(n=4, graph_digest="", counts=Counter({3: 2}), total=2)
        for merged in (merge_histograms(unsigned, signed), merge_histograms(signed, unsigned)):
            self.assertEqual(merged.graph_digest, self.graph.digest)
            self.assertEqual(merged.total, 3)
            self.assertEqual(merged.counts[3], 2)
        self.assertEqual(merge_histograms(unsigned, unsigned).graph_digest, "")

    def test_merge_w_undigested_histogram_still_checks_graphs(self):
        unsigned = EnergyHistogram(n=4, graph_digest="", counts=Counter(), total=0)
        other = new_histogram(gen_sk(4, 0.1, seed=2))
        with self.assertRaises(GraphMismatchError):
            merge_histograms(new_histogram(self.graph), unsigned, other)
        with self.assertRaises(GraphMismatchError):
            merge_histograms(unsigned, EnergyHistogram(n=5, graph_digest="", counts=Counter(), total=0))

    def test_recorder(self):
        recorder = SpinRecorder(self.graph)
        sink = []
        recorder.sinks.append(lambda t, a: sink.append(t))
        recorder(0.1, np.array([1.0, -1.0, 1.0, 1.0]))
        recorder(0.2, np.array([-1.0, 1.0, -1.0, -1.0]))
        self.assertEqual(recorder.histogram.total, 2)
        self.assertEqual(recorder.indices, [1, 1])
        self.assertEqual(recorder.energies[0], recorder.energies[1])
        self.assertEqual(sink, [0.1, 0.2])

    def test_energy_series(self):
        samples = [spin_sample(self.graph, 0.1 * k, np.array([1.0, -1.0, k - 0.5, 1.0])) for k in range(2)]
        energies = energy_series(samples)
        self.assertEqual(energies.shape, (2,))
        self.assertAlmostEqual(energies[0], ising_energy(self.graph, np.array([1, -1, -1, 1])))


class TestPerEnergy(unittest.TestCase):
    def test_probabilities(self):
        g = CouplingGraph(np.array([[0.0, 1.0], [1.0, 0.0]]))
        spectrum = enumerate_spectrum(g)
        hist = new_histogram(g)
        for _ in range(3):
            accumulate(hist, np.array([1, 1]))
        accumulate(hist, np.array([1, -1]))
        stats = per_energy_probabilities(hist, spectrum)
        self.assertEqual([s.count for s in stats], [3, 1])
        self.assertAlmostEqual(stats[0].p_energy, 0.75)
        self.assertAlmostEqual(stats[0].p_per_config, 0.375)
        self.assertAlmostEqual(success_probability(hist, spectrum), 0.75)
        self.assertEqual(most_visited(hist), (0, 3))

    def test_unvisited_levels_are_zero(self):
        g = gen_k(5, 0.05, seed=0)
        stats = per_energy_probabilities(new_histogram(g), enumerate_spectrum(g))
        self.assertTrue(all(s.count == 0 and s.p_energy == 0 for s in stats))

    def test_rejects_other_graph(self):
        hist = new_histogram(gen_sk(5, 0.1, seed=1))
        with self.assertRaises(GraphMismatchError):
            per_energy_probabilities(hist, enumerate_spectrum(gen_sk(5, 0.1, seed=2)))
        with self.assertRaises(GraphMismatchError):
            per_energy_probabilities(hist, enumerate_spectrum(gen_sk(4, 0.1, seed=1)))


class TestFitTemperature(unittest.TestCase):
    def test_exact_boltzmann_recovers_temperature(self):
        spectrum = enumerate_spectrum(gen_sk(8, 0.05, seed=3))
        temperature = 0.07
        p = boltzmann_exact(spectrum, temperature)
        levels = [
            (level.energy, prob / level.multiplicity, 1000)
            for level, prob in zip(spectrum.levels, p)
        ]
        fit = fit_temperature(levels)
        self.assertAlmostEqual(fit.t_eff / temperature, 1.0, delta=1e-6)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=9)
        self.assertEqual(fit.n_points, len(levels))

    def test_multinomial_samples_within_error(self):
        g = gen_sk(8, 0.05, seed=3)
        spectrum = enumerate_spectrum(g)
        temperature = 0.5 * float(np.abs(g.J).max()) * g.n
        stats = synthetic_samples(spectrum, temperature, 200_000, base_seed=9)
        fit = fit_temperature(fit_points(stats, FitProbability.PER_CONFIG), min_count=20)
        self.assertLess(abs(fit.t_eff - temperature), 3 * fit.std_err)

    def test_invariant_under_count_rescaling(self):
        spectrum = enumerate_spectrum(gen_sk(8, 0.05, seed=3))
        stats = synthetic_samples(spectrum, 0.2, 100_000, base_seed=4)
        levels = fit_points(stats)
        base = fit_temperature(levels, min_count=20)
        scaled = fit_temperature([(e, p, 10 * c) for e, p, c in levels], min_count=200)
        self.assertAlmostEqual(scaled.t_eff / base.t_eff, 1.0, delta=1e-12)
        self.assertAlmostEqual(scaled.r_squared, base.r_squared, delta=1e-12)
        self.assertEqual(scaled.n_points, base.n_points)
        self.assertAlmostEqual(scaled.std_err / base.std_err, 1 / np.sqrt(10), delta=1e-12)

    def test_temperature_follows_coupling_scale(self):
        g = gen_sk(8, 0.05, seed=3)
        levels = fit_points(synthetic_samples(enumerate_spectrum(g), 0.2, 100_000, base_seed=5))
        base = fit_temperature(levels)
        for c in (0.5, 3.0):
            # energies of cJ are c times those of J
            scaled = fit_temperature([(c * e, p, n) for e, p, n in levels])
            self.assertAlmostEqual(scaled.t_eff / (c * base.t_eff), 1.0, delta=1e-12)
            self.assertAlmostEqual(scaled.std_err / (c * base.std_err), 1.0, delta=1e-12)
            self.assertAlmostEqual(scaled.r_squared, base.r_squared, delta=1e-12)
        spectrum = enumerate_spectrum(g.scaled(3.0))
        exact = [(level.energy, p / level.multiplicity, 1000)
                 for level, p in zip(spectrum.levels, boltzmann_exact(spectrum, 0.6))]
        self.assertAlmostEqual(fit_temperature(exact).t_eff / 0.6, 1.0, delta=1e-6)

    def test_total_samples_counts_every_level(self):
        levels = [(-1.0, 0.5, 100), (0.0, 0.3, 60), (1.0, 0.1, 30), (2.0, 0.01, 3)]
        self.assertEqual(fit_temperature(levels).total_samples, 193)
        self.assertEqual(fit_temperature(levels, total_samples=500).total_samples, 500)

    def test_three_point_line(self):
        levels = [(-1.0, np.exp(2.0), 50), (0.0, 1.0, 50), (1.0, np.exp(-2.0), 50)]
        fit = fit_temperature(levels)
        self.assertAlmostEqual(fit.t_eff, 0.5)
        self.assertAlmostEqual(fit.intercept, 0.0)
        self.assertAlmostEqual(float(fit.log_probability(1.0)), -2.0)

    def test_sparse_levels_dropped(self):
        levels = [(-1.0, 0.5, 100), (0.0, 0.3, 100), (1.0, 0.1, 5)]
        with self.assertRaises(InsufficientDataError):
            fit_temperature(levels, min_count=20)

    def test_zero_probability_dropped(self):
        levels = [(-1.0, 0.5, 100), (0.0, 0.3, 100), (1.0, 0.0, 100)]
        with self.assertRaises(InsufficientDataError):
            fit_temperature(levels)

    def test_inverted_population(self):
        levels = [(-1.0, 0.1, 100), (0.0, 0.3, 100), (1.0, 0.5, 100)]
        with self.assertRaises(NoThermalFitError) as ctx:
            fit_temperature(levels)
        self.assertEqual(ctx.exception.exit_code, 3)


class TestCrossing(unittest.TestCase):
    def test_two_lines(self):
        # ln p = 1 - E / 0.5 and ln p = 0 - E / 1.0 cross at E = 1, ln p = -1
        fits = [
            TempFit(t_eff=0.5, std_err=0.0, intercept=1.0, intercept_err=0.0, r_squared=1.0, n_points=3),
            TempFit(t_eff=1.0, std_err=0.0, intercept=0.0, intercept_err=0.0, r_squared=1.0, n_points=3),
        ]
        energy, logp = crossing_energy(fits)
        self.assertAlmostEqual(energy, 1.0)
        self.assertAlmostEqual(logp, -1.0)

    def test_parallel_lines(self):
        fit = TempFit(t_eff=0.5, std_err=0.0, intercept=1.0, intercept_err=0.0, r_squared=1.0, n_points=3)
        with self.assertRaises(InsufficientDataError):
            crossing_energy([fit, fit])


class TestRunningSuccess(unittest.TestCase):
    def test_cumulative_fraction(self):
        np.testing.assert_allclose(
            running_success([-1.0, 0.5, -1.0, -1.0], ground_energy=-1.0),
            [1.0, 0.5, 2 / 3, 0.75],
        )


if __name__ == "__main__":
    unittest.main()
