from __future__ import annotations

import csv
import logging
from pathlib import Path

from src.models import SpectrumTable

logger = logging.getLogger(__name__)

SPECTRUM_FIELDS = ["energy", "multiplicity", "example_configuration"]


def save_spectrum(spectrum: SpectrumTable, path: str | Path) -> Path:
    """
    Write one row per energy level.

    :param spectrum: Enumerated spectrum.
    :type spectrum: SpectrumTable
    :param path: Target CSV file.
    :type path: str | Path
    :return: The written path.
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(SPECTRUM_FIELDS)
        for level in spectrum.levels:
            writer.writerow([repr(level.energy), level.multiplicity, level.example])
    logger.info("wrote %d levels to %s", len(spectrum.levels), path)
    return path


def ground_state_report(spectrum: SpectrumTable) -> dict:
    return {
        "n": spectrum.n,
        "configurations": 2**spectrum.n,
        "levels": len(spectrum.levels),
        "ground_energy": spectrum.ground_energy,
        "ground_state_count": len(spectrum.ground_states),
        "ground_states": list(spectrum.ground_states),
    }
