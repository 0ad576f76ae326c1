from __future__ import annotations

import json
import logging
import math
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from src.models import TempFit

logger = logging.getLogger(__name__)

PACKAGE = "ising-trajectory-sampler"


def package_version() -> str:
    try:
        return metadata.version(PACKAGE)
    except metadata.PackageNotFoundError:
        return "0.1.0+local"


def versions() -> dict[str, str]:
    return {
        "package": package_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return jsonable(value.item())
    return value


def fit_report(fit: TempFit) -> dict:
    return jsonable(
        {
            "t_eff": fit.t_eff,
            "std_err": fit.std_err,
            "intercept": fit.intercept,
            "intercept_err": fit.intercept_err,
            "r_squared": fit.r_squared,
            "n_points": fit.n_points,
            "autocorrelation_time": fit.autocorrelation_time,
            "total_samples": fit.total_samples,
        }
    )


def write_json(payload: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True), encoding="utf-8")
    return path


def write_manifest(
    output_dir: str | Path,
    command: str,
    params: dict,
    graph_digest: str | None,
    seeds: dict,
    status: str,
    outputs: list[str],
    extra: dict | None = None,
) -> Path:
    """
    Record everything needed to reproduce a run.

    :param output_dir: Run directory.
    :type output_dir: str | Path
    :param command: Subcommand name.
    :type command: str
    :param params: Resolved parameters, including absolute pump and ratio.
    :type params: dict
    :param graph_digest: SHA-256 of the coupling matrix.
    :type graph_digest: str | None
    :param seeds: Base seed and every derived seed.
    :type seeds: dict
    :param status: ``ok``, ``partial`` or ``failed``.
    :type status: str
    :param outputs: File names written next to the manifest.
    :type outputs: list[str]
    :return: Path of ``manifest.json``.
    :rtype: Path
    """
    manifest = {
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(),
        "params": params,
        "graph_sha256": graph_digest,
        "seeds": seeds,
        "versions": versions(),
        "status": status,
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    path = write_json(manifest, Path(output_dir) / "manifest.json")
    logger.info("manifest written to %s (status %s)", path, status)
    return path


def read_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
