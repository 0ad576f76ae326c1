import csv
import json
import math
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

from src.exceptions import ParameterError
from src.models import TempFit
from src.schemas import TrajectoryFormat
from src.repository import manifests
from src.repository.histograms import LEVEL_FIELDS, load_counts, save_counts, save_levels
from src.repository.spectra import ground_state_report, save_spectrum
from src.repository.trajectories import MAGIC, TrajectoryWriter, load_trajectory
from src.services.graph import gen_k, gen_sk
from src.services.oracle import enumerate_spectrum
from src.services.sampling import accumulate, new_histogram, per_energy_probabilities


class OutputTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class TestSpectra(OutputTestCase):
    def test_save_spectrum(self):
        spectrum = enumerate_spectrum(gen_k(5, 0.1, seed=1))
        path = save_spectrum(spectrum, self.dir / "spectrum.csv")
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), len(spectrum.levels))
        self.assertEqual(sum(int(r["multiplicity"]) for r in rows), 2**5)
        self.assertEqual(float(rows[0]["energy"]), spectrum.ground_energy)
        self.assertEqual(len(rows[0]["example_configuration"]), 5)

    def test_ground_state_report(self):
        spectrum = enumerate_spectrum(gen_sk(6, 0.1, seed=2))
        report = ground_state_report(spectrum)
        self.assertEqual(report["configurations"], 64)
        self.assertEqual(report["ground_state_count"] % 2, 0)
        self.assertEqual(report["ground_energy"], spectrum.ground_energy)


class TestHistograms(OutputTestCase):
    def setUp(self):
        super().setUp()
        self.graph = gen_sk(4, 0.1, seed=1)
        self.hist = new_histogram(self.graph)
        for sigma in ([1, 1, 1, 1], [1, -1, 1, 1], [-1, -1, -1, -1], [1, 1, -1, -1]):
            accumulate(self.hist, np.array(sigma))

    def test_counts_reload(self):
        loaded = load_counts(save_counts(self.hist, self.dir / "counts.csv"))
        self.assertEqual(loaded, self.hist)

    def test_counts_without_digest(self):
        self.hist.graph_digest = ""
        loaded = load_counts(save_counts(self.hist, self.dir / "counts.csv"))
        self.assertEqual(loaded.graph_digest, "")

    def test_not_a_counts_file(self):
        path = self.dir / "other.csv"
        path.write_text("energy,count\n")
        with self.assertRaises(ParameterError):
            load_counts(path)

    def test_out_of_range_index(self):
        path = self.dir / "counts.csv"
        path.write_text("# ising-counts v1 n=3 graph=none\ncanonical_index,count\n4,1\n")
        with self.assertRaises(ParameterError) as ctx:
            load_counts(path)
        self.assertIn("line 3", ctx.exception.message)

    def test_missing_file(self):
        with self.assertRaises(ParameterError):
            load_counts(self.dir / "missing.csv")

    def test_save_levels(self):
        stats = per_energy_probabilities(self.hist, enumerate_spectrum(self.graph))
        with open(save_levels(stats, self.dir / "histogram.csv"), newline="") as f:
            reader = csv.reader(f)
            self.assertEqual(next(reader), LEVEL_FIELDS)
            rows = list(reader)
        self.assertEqual(sum(int(r[2]) for r in rows), 4)
        self.assertAlmostEqual(sum(float(r[3]) for r in rows), 1.0)


class TestTrajectories(OutputTestCase):
    def _write(self, fmt):
        rng = np.random.default_rng(0)
        alphas = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        path = self.dir / f"trajectory.{fmt.value}"
        with TrajectoryWriter(path, 3, fmt) as writer:
            for k, alpha in enumerate(alphas):
                writer(0.1 * k, alpha)
        self.assertEqual(writer.rows, 5)
        return path, alphas

    def test_csv(self):
        path, alphas = self._write(TrajectoryFormat.CSV)
        self.assertTrue(path.read_text().startswith("t,re_alpha_0,im_alpha_0"))
        t, loaded = load_trajectory(path)
        np.testing.assert_array_equal(loaded, alphas)
        np.testing.assert_allclose(t, 0.1 * np.arange(5))

    def test_binary(self):
        path, alphas = self._write(TrajectoryFormat.BINARY)
        raw = path.read_bytes()
        self.assertEqual(raw[:8], MAGIC)
        self.assertEqual(len(raw), 8 + 4 + 5 * 7 * 8)
        _, loaded = load_trajectory(path)
        np.testing.assert_array_equal(loaded, alphas)

    def test_truncated_binary(self):
        path, _ = self._write(TrajectoryFormat.BINARY)
        path.write_bytes(path.read_bytes()[:-8])
        with self.assertRaises(ParameterError):
            load_trajectory(path)


class TestManifests(OutputTestCase):
    def test_jsonable(self):
        value = {"a": math.nan, "b": [np.float64(1.5), np.int64(2)], "c": (math.inf,)}
        self.assertEqual(manifests.jsonable(value), {"a": None, "b": [1.5, 2], "c": [None]})

    def test_fit_report(self):
        fit = TempFit(t_eff=0.1, std_err=0.01, intercept=-2.0, intercept_err=0.1, r_squared=0.98, n_points=7)
        report = manifests.fit_report(fit)
        self.assertIsNone(report["autocorrelation_time"])
        self.assertEqual(report["n_points"], 7)

    def test_write_manifest(self):
        path = manifests.write_manifest(
            self.dir,
            "simulate",
            params={"pump": 0.3, "pump_ratio": 1.25},
            graph_digest="abc",
            seeds={"base": 42, "trajectory": 7},
            status="partial",
            outputs=["fit.json", "counts.csv"],
            extra={"error": "blowup"},
        )
        manifest = manifests.read_manifest(path)
        self.assertEqual(manifest["status"], "partial")
        self.assertEqual(manifest["outputs"], ["counts.csv", "fit.json"])
        self.assertEqual(manifest["seeds"]["trajectory"], 7)
        self.assertEqual(manifest["error"], "blowup")
        self.assertIn("numpy", manifest["versions"])
        json.loads(path.read_text())

    def test_version_fallback(self):
        with patch.object(manifests.metadata, "version", side_effect=manifests.metadata.PackageNotFoundError):
            self.assertEqual(manifests.package_version(), "0.1.0+local")


if __name__ == "__main__":
    unittest.main()
