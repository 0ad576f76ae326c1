from __future__ import annotations

import csv
import logging
from collections import Counter
from pathlib import Path
from typing import Iterable

from src.exceptions import ParameterError
from src.models import EnergyHistogram, LevelStat

logger = logging.getLogger(__name__)

LEVEL_FIELDS = ["energy", "multiplicity", "count", "p_energy", "p_per_config"]
COUNTS_HEADER = "# ising-counts v1"


def save_levels(stats: Iterable[LevelStat], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(LEVEL_FIELDS)
        for s in stats:
            writer.writerow([repr(s.energy), s.multiplicity, s.count, repr(s.p_energy), repr(s.p_per_config)])
    return path


def save_counts(hist: EnergyHistogram, path: str | Path) -> Path:
    """
    Raw configuration counts, reloadable by :func:`load_counts` for re-fitting
    and merging. The first line carries the mode count and graph digest.

    :param hist: Histogram to store.
    :type hist: EnergyHistogram
    :param path: Target CSV file.
    :type path: str | Path
    :return: The written path.
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"{COUNTS_HEADER} n={hist.n} graph={hist.graph_digest or 'none'}\n")
        writer = csv.writer(f)
        writer.writerow(["canonical_index", "count"])
        for index in sorted(hist.counts):
            writer.writerow([index, hist.counts[index]])
    logger.info("wrote %d samples over %d configurations to %s", hist.total, len(hist.counts), path)
    return path


def load_counts(path: str | Path) -> EnergyHistogram:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ParameterError(f"cannot read histogram file {path}: {err}")
    if not lines or not lines[0].startswith(COUNTS_HEADER):
        raise ParameterError(f"{path} is not a counts file (missing '{COUNTS_HEADER}' header)")
    fields = dict(token.split("=", 1) for token in lines[0][len(COUNTS_HEADER):].split())
    try:
        n = int(fields["n"])
    except (KeyError, ValueError):
        raise ParameterError(f"{path}: missing or invalid mode count in header")
    digest = fields.get("graph", "none")
    counts = Counter()
    for number, row in enumerate(csv.reader(lines[2:]), start=3):
        if not row:
            continue
        try:
            index, count = int(row[0]), int(row[1])
        except (IndexError, ValueError):
            raise ParameterError(f"{path}: line {number}: expected '<index>,<count>'")
        if not 0 <= index < 2 ** (n - 1) or count < 0:
            raise ParameterError(f"{path}: line {number}: entry out of range")
        counts[index] += count
    return EnergyHistogram(
        n=n,
        graph_digest="" if digest == "none" else digest,
        counts=counts,
        total=sum(counts.values()),
    )
