"""
Sample streams of ``alpha``.

CSV: header ``t, re_alpha_0, im_alpha_0, ...`` and one row per sample.

Binary: 8-byte magic ``b"ISTRAJ\\x00\\x01"`` (format version 1 in the last byte),
a little-endian uint32 mode count, then per sample ``2n + 1`` little-endian
float64 values ``t, re_0, im_0, ..., re_{n-1}, im_{n-1}``.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from src.exceptions import ParameterError
from src.schemas import TrajectoryFormat

logger = logging.getLogger(__name__)

MAGIC = b"ISTRAJ\x00\x01"
RECORD_DTYPE = np.dtype("<f8")


def _row(t: float, alpha: np.ndarray) -> np.ndarray:
    row = np.empty(2 * alpha.shape[0] + 1, dtype=RECORD_DTYPE)
    row[0] = t
    row[1::2] = alpha.real
    row[2::2] = alpha.imag
    return row


class TrajectoryWriter:
    """Sink for :class:`src.services.sampling.SpinRecorder`; use as a context manager."""

    def __init__(self, path: str | Path, n: int, fmt: TrajectoryFormat = TrajectoryFormat.CSV):
        self.path = Path(path)
        self.n = n
        self.format = fmt
        self.rows = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == TrajectoryFormat.CSV:
            self._file = open(self.path, "w", newline="", encoding="utf-8")
            self._csv = csv.writer(self._file)
            header = ["t"]
            for i in range(n):
                header += [f"re_alpha_{i}", f"im_alpha_{i}"]
            self._csv.writerow(header)
        else:
            self._file = open(self.path, "wb")
            self._file.write(MAGIC)
            self._file.write(np.array([n], dtype="<u4").tobytes())

    def __call__(self, t: float, alpha: np.ndarray) -> None:
        row = _row(t, alpha)
        if self.format == TrajectoryFormat.CSV:
            self._csv.writerow([repr(float(x)) for x in row])
        else:
            self._file.write(row.tobytes())
        self.rows += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()
            logger.info("wrote %d trajectory samples to %s", self.rows, self.path)

    def __enter__(self) -> TrajectoryWriter:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def load_trajectory(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """
    Read either format back.

    :return: Sample times and amplitudes of shape ``(samples, n)``.
    :rtype: tuple[np.ndarray, np.ndarray]
    """
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    if head == MAGIC:
        raw = path.read_bytes()
        n = int(np.frombuffer(raw, dtype="<u4", count=1, offset=len(MAGIC))[0])
        data = np.frombuffer(raw, dtype=RECORD_DTYPE, offset=len(MAGIC) + 4)
        if data.shape[0] % (2 * n + 1):
            raise ParameterError(f"{path}: truncated trajectory record")
        data = data.reshape(-1, 2 * n + 1)
    else:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1::2] + 1j * data[:, 2::2]
