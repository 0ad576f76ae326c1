from __future__ import annotations

import numpy as np


def autocorrelation(series: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation function of a 1-d series (FFT, biased estimator)."""
    x = np.asarray(series, dtype=np.float64)
    x = x - x.mean()
    n = x.shape[0]
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(x, size)
    acf = np.fft.irfft(spectrum * spectrum.conj(), size)[:n]
    return acf / acf[0]


def integrated_autocorrelation_time(
    series, spacing: float = 1.0, window: float = 5.0
) -> float:
    """
    Integrated autocorrelation time ``1 + 2 sum_k rho(k)`` with Sokal's automatic
    window (smallest M with M >= window * tau(M)), in units of ``spacing``.

    A constant series has no defined correlation time; 0.0 is returned.

    :param series: Observations at equal spacing.
    :type series: array-like
    :param spacing: Time between observations.
    :type spacing: float
    :param window: Sokal window constant.
    :type window: float
    :return: tau_int * spacing.
    :rtype: float
    """
    x = np.asarray(series, dtype=np.float64)
    if x.shape[0] < 2 or np.all(x == x[0]):
        return 0.0
    rho = autocorrelation(x)
    taus = 2.0 * np.cumsum(rho) - 1.0
    lags = np.arange(taus.shape[0])
    inside = lags >= window * taus
    cut = int(np.argmax(inside)) if np.any(inside) else taus.shape[0] - 1
    return float(taus[cut] * spacing)
