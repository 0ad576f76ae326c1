"""
Gaussian quantum trajectories of N two-photon driven modes under heterodyne
unraveling of three decay channels:

1. one-photon loss ``sqrt(kappa_i) a_i`` with ``kappa_i = gamma - sum_k |J_ik|``,
2. two-photon loss ``sqrt(eta) a_i^2``,
3. dissipative coupling ``sqrt(|J_ij|) (a_i - sign(J_ij) a_j)`` for every pair i > j.

The state is ``(alpha, u, v)``; the stochastic equations are integrated with an
explicit Euler-Maruyama scheme in the Ito convention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.exceptions import IntegrationBlowupError, ParameterError
from src.models import CouplingGraph, GaussianState, NoiseDraw
from src.schemas import MomentForm, RateIndex, SimParams
from src.services.graph import validate_rates

logger = logging.getLogger(__name__)

Observer = Callable[[float, np.ndarray], None]

NOISE_CHUNK = 4096


@dataclass(frozen=True)
class DissipationChannels:
    """
    Rates and pair structure of the decay channels of one graph, computed once
    per trajectory. Only pairs with ``J_ij != 0`` are listed; ``pair_slot`` maps
    them into the full ``n(n-1)/2`` channel-3 noise vector.
    """

    n: int
    gamma: float
    coupling: np.ndarray
    kappa: np.ndarray
    row_abs: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    pair_sign: np.ndarray
    pair_weight: np.ndarray
    pair_slot: np.ndarray
    transfer: np.ndarray

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2


def all_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Channel-3 pairs ``(i, j)`` with ``i > j`` in noise-vector order."""
    return np.tril_indices(n, k=-1)


def build_channels(g: CouplingGraph, gamma: float) -> DissipationChannels:
    kappa = validate_rates(g, gamma)
    rows, cols = all_pairs(g.n)
    values = g.J[rows, cols]
    nonzero = np.flatnonzero(values != 0.0)
    rates = np.abs(values[nonzero])
    # sum over pairs of |J| (e_i - s e_j)(e_i - s e_j)^T, i.e. diag(row sums) - J
    row_abs = np.abs(g.J).sum(axis=1)
    transfer = np.diag(row_abs) - g.J
    return DissipationChannels(
        n=g.n,
        gamma=gamma,
        coupling=g.J,
        kappa=kappa,
        row_abs=row_abs,
        pair_i=rows[nonzero],
        pair_j=cols[nonzero],
        pair_sign=np.sign(values[nonzero]),
        pair_weight=np.sqrt(rates),
        pair_slot=nonzero,
        transfer=transfer,
    )


def _channels(g: CouplingGraph, params: SimParams, channels: DissipationChannels | None):
    if channels is not None:
        return channels
    return build_channels(g, params.gamma)


def init_vacuum(n: int) -> GaussianState:
    """
    Vacuum state: all moments zero at t = 0.

    :param n: Mode count, at least 1.
    :type n: int
    :return: The vacuum.
    :rtype: GaussianState
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"mode count must be a positive integer, got {n!r}")
    return GaussianState(
        alpha=np.zeros(n, dtype=complex),
        u=np.zeros((n, n), dtype=complex),
        v=np.zeros((n, n), dtype=complex),
        t=0.0,
    )


def _pair_rows(x: np.ndarray, ch: DissipationChannels) -> np.ndarray:
    # rows x_i - s_ij x_j of every coupled pair
    return x[ch.pair_i] - ch.pair_sign[:, None] * x[ch.pair_j]


def _back_action(state: GaussianState, params: SimParams, ch: DissipationChannels):
    """Measurement back-action (Riccati) terms of du/dt and dv/dt."""
    a, u, v = state.alpha, state.u, state.v
    two_photon = 4.0 * params.eta * np.abs(a) ** 2

    if params.rate_index == RateIndex.J:
        weights = ch.kappa + two_photon
        p = u.T @ (weights[:, None] * v)
        du = -(p + p.T)
        dv = -(v @ (weights[:, None] * v) + u.conj().T @ (weights[:, None] * u))
    else:
        p1 = u.T @ v
        p2 = u.T @ (two_photon[:, None] * v)
        du = -ch.kappa[:, None] * (p1 + p1.T) - (p2 + p2.T)
        dv = -ch.kappa[:, None] * (v @ v + u.conj().T @ u)
        dv -= v @ (two_photon[:, None] * v) + u.conj().T @ (two_photon[:, None] * u)

    if ch.pair_i.size == 0:
        return du, dv

    if params.moment_form == MomentForm.LINDBLAD:
        pm = u.T @ ch.transfer @ v
        du -= pm + pm.T
        dv -= v.conj().T @ ch.transfer @ v + u.conj().T @ ch.transfer @ u
    else:
        bv = _pair_rows(v, ch)
        bu = _pair_rows(u, ch)
        lt = bv.T @ bu
        du += lt + lt.T
        s = ch.pair_sign[:, None]
        uc, vc = u.conj(), v.conj()
        u1 = uc[ch.pair_i, :] - s * uc[:, ch.pair_j].T
        u2 = u[:, ch.pair_i].T - s * uc[:, ch.pair_j].T
        v1 = vc[:, ch.pair_i].T - s * vc[:, ch.pair_j].T
        v2 = v[:, ch.pair_i].T - s * vc[:, ch.pair_j].T
        dv += u1.T @ u2 + v2.T @ v1
    return du, dv


def drift(
    state: GaussianState,
    params: SimParams,
    g: CouplingGraph,
    *,
    channels: DissipationChannels | None = None,
    conditional: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Deterministic rates ``(dalpha/dt, du/dt, dv/dt)``.

    With ``conditional=False`` the measurement back-action terms are left out and
    the moments follow the unconditional master-equation moment equations.

    :param state: Current state.
    :type state: GaussianState
    :param params: Rates and integration controls.
    :type params: SimParams
    :param g: Coupling graph.
    :type g: CouplingGraph
    :param channels: Precomputed channels of ``g``.
    :type channels: DissipationChannels | None
    :param conditional: Include the back-action terms of the heterodyne record.
    :type conditional: bool
    :return: Drift of alpha, u and v.
    :rtype: tuple[np.ndarray, np.ndarray, np.ndarray]
    """
    ch = _channels(g, params, channels)
    a, u, v = state.alpha, state.u, state.v
    G, eta, gamma = params.pump, params.eta, params.gamma
    J = ch.coupling
    eye = np.eye(ch.n)
    abs2 = np.abs(a) ** 2
    ud, vd = np.diag(u), np.diag(v)
    a2 = a**2

    dalpha = (
        -0.5 * gamma * a
        + G * a.conj()
        - eta * (abs2 * a + 2.0 * a * vd + a.conj() * ud)
        + 0.5 * J @ a
    )

    if params.moment_form == MomentForm.LINDBLAD:
        du = -gamma * u + 0.5 * (J @ u + u @ J)
        dv = -gamma * v + 0.5 * (J @ v + v @ J)
    else:
        r = ch.row_abs
        du = -ch.kappa[:, None] * u - 0.5 * (r[:, None] + r[None, :]) * u + 0.5 * (u @ J + J @ u)
        dv = -ch.kappa[:, None] * v - 0.25 * (r[:, None] + r[None, :]) * v + 0.25 * (v @ J + J @ v)

    du += G * (eye + v + v.T)
    du -= eta * (
        ud[:, None] * (eye + v) + 2.0 * u * vd[:, None] + a2[:, None] * (eye + v) + 2.0 * abs2[:, None] * u
    )
    du -= eta * (
        ud[None, :] * v.T + 2.0 * u * vd[None, :] + a2[None, :] * v.T + 2.0 * abs2[None, :] * u
    )

    uc = u.conj()
    dv += G * (uc + u)
    dv -= eta * (
        ud.conj()[:, None] * u + 2.0 * vd[:, None] * v + 2.0 * abs2[:, None] * v + a2.conj()[:, None] * u
    )
    dv -= eta * (
        ud[None, :] * uc + 2.0 * vd[None, :] * v + 2.0 * abs2[None, :] * v + a2[None, :] * uc
    )

    if conditional:
        bu, bv = _back_action(state, params, ch)
        du += bu
        dv += bv
    return dalpha, du, dv


def _check_noise(noise: NoiseDraw, n: int) -> None:
    expected = {"z1": (n,), "z2": (n,), "z3": (n * (n - 1) // 2,)}
    for name, shape in expected.items():
        got = np.shape(getattr(noise, name))
        if got != shape:
            raise ParameterError(f"noise {name} has shape {got}, expected {shape}")


def diffusion(
    state: GaussianState,
    params: SimParams,
    g: CouplingGraph,
    noise: NoiseDraw,
    *,
    channels: DissipationChannels | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Stochastic increments for one draw of the channel noises. The first moments
    get all three channels; the second moments only the two-photon channel, the
    other jump operators being linear in the field.

    :param state: Current state.
    :type state: GaussianState
    :param params: Rates.
    :type params: SimParams
    :param g: Coupling graph.
    :type g: CouplingGraph
    :param noise: Wiener increments (variance dt already included).
    :type noise: NoiseDraw
    :return: Increments of alpha, u and v.
    :rtype: tuple[np.ndarray, np.ndarray, np.ndarray]
    """
    ch = _channels(g, params, channels)
    _check_noise(noise, ch.n)
    a, u, v = state.alpha, state.u, state.v
    z1, z2 = np.asarray(noise.z1), np.asarray(noise.z2)
    sqrt_kappa = np.sqrt(ch.kappa)
    root_eta = np.sqrt(params.eta)

    dalpha = v.T @ (sqrt_kappa * z1) + u.T @ (sqrt_kappa * z1.conj())
    dalpha += 2.0 * root_eta * (v.T @ (a.conj() * z2) + u.T @ (a * z2.conj()))
    if ch.pair_i.size:
        zp = np.asarray(noise.z3)[ch.pair_slot]
        dalpha += (ch.pair_weight * zp) @ _pair_rows(v, ch)
        dalpha += (ch.pair_weight * zp.conj()) @ _pair_rows(u, ch)

    du = 2.0 * root_eta * (v.T @ (z2[:, None] * v) + u.T @ (z2.conj()[:, None] * u))
    dv = 2.0 * root_eta * (
        u.conj().T @ (z2[:, None] * v) + v.conj().T @ (z2.conj()[:, None] * u)
    )
    return dalpha, du, dv


def draw_noise(rng: np.random.Generator, n: int, dt: float) -> NoiseDraw:
    return NoiseSource(rng, n, dt, chunk=1).draw()


class NoiseSource:
    """
    Complex Wiener increments ``dZ = (dW_x + i dW_p) / sqrt(2)`` with
    ``E|dZ|^2 = dt``, drawn in chunks. The stream does not depend on the chunk size.
    """

    def __init__(self, rng: np.random.Generator, n: int, dt: float, chunk: int = NOISE_CHUNK):
        self.rng = rng
        self.n = n
        self.width = 2 * n + n * (n - 1) // 2
        self.scale = np.sqrt(dt / 2.0)
        self.chunk = chunk
        self._buffer = np.empty((0, self.width), dtype=complex)
        self._next = 0

    def _refill(self) -> None:
        raw = self.rng.standard_normal((self.chunk, 2, self.width))
        self._buffer = self.scale * (raw[:, 0, :] + 1j * raw[:, 1, :])
        self._next = 0

    def draw(self) -> NoiseDraw:
        if self._next >= self._buffer.shape[0]:
            self._refill()
        row = self._buffer[self._next]
        self._next += 1
        n = self.n
        return NoiseDraw(z1=row[:n], z2=row[n : 2 * n], z3=row[2 * n :])


def raw_update(
    state: GaussianState,
    params: SimParams,
    g: CouplingGraph,
    noise: NoiseDraw | None,
    *,
    channels: DissipationChannels | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euler-Maruyama update before the symmetry of u and v is restored."""
    ch = _channels(g, params, channels)
    conditional = params.noise
    da, du, dv = drift(state, params, g, channels=ch, conditional=conditional)
    alpha = state.alpha + da * params.dt
    u = state.u + du * params.dt
    v = state.v + dv * params.dt
    if conditional and noise is not None:
        sa, su, sv = diffusion(state, params, g, noise, channels=ch)
        alpha += sa
        u += su
        v += sv
    return alpha, u, v


def _guard(state: GaussianState, params: SimParams) -> None:
    if not state.is_finite():
        raise IntegrationBlowupError(state.t, "non-finite moment")
    peak = float(np.abs(state.alpha).max(initial=0.0))
    if peak > params.blowup_amplitude:
        raise IntegrationBlowupError(state.t, f"|alpha| reached {peak:.3g}")


def step(
    state: GaussianState,
    params: SimParams,
    g: CouplingGraph,
    rng: np.random.Generator | None = None,
    *,
    channels: DissipationChannels | None = None,
    noise: NoiseDraw | None = None,
    source: NoiseSource | None = None,
) -> GaussianState:
    """
    One Ito Euler-Maruyama step of length ``params.dt``. u is symmetrised and v
    Hermitised afterwards. With ``params.noise`` off no noise is drawn and the
    back-action terms are dropped.

    The noise comes from ``noise`` (replay), else ``source``, else ``rng``.

    :param state: Current state.
    :type state: GaussianState
    :param params: Rates and integration controls.
    :type params: SimParams
    :param g: Coupling graph.
    :type g: CouplingGraph
    :param rng: Generator for a fresh draw.
    :type rng: np.random.Generator | None
    :return: The advanced state.
    :rtype: GaussianState
    :raises IntegrationBlowupError: On non-finite moments or runaway amplitudes.
    """
    ch = _channels(g, params, channels)
    if params.noise and noise is None:
        if source is not None:
            noise = source.draw()
        elif rng is not None:
            noise = draw_noise(rng, ch.n, params.dt)
        else:
            raise ParameterError("a noisy step needs a generator, a noise source or a draw")
    alpha, u, v = raw_update(state, params, g, noise, channels=ch)
    new = GaussianState(
        alpha=alpha,
        u=0.5 * (u + u.T),
        v=0.5 * (v + v.conj().T),
        t=state.t + params.dt,
    )
    _guard(new, params)
    return new


def mean_field_drift(alpha: np.ndarray, params: SimParams, J: np.ndarray) -> np.ndarray:
    return (
        -0.5 * params.gamma * alpha
        + params.pump * alpha.conj()
        - params.eta * np.abs(alpha) ** 2 * alpha
        + 0.5 * J @ alpha
    )


def mean_field_step(state: GaussianState, params: SimParams, g: CouplingGraph) -> GaussianState:
    """
    Noiseless classical step of the coupled oscillators with the second moments
    held at zero.

    :param state: State with u == v == 0.
    :type state: GaussianState
    :param params: Rates and step.
    :type params: SimParams
    :param g: Coupling graph.
    :type g: CouplingGraph
    :return: The advanced state.
    :rtype: GaussianState
    """
    if np.any(state.u != 0) or np.any(state.v != 0):
        raise ParameterError("mean-field steps need vanishing second moments")
    alpha = state.alpha + mean_field_drift(state.alpha, params, g.J) * params.dt
    new = GaussianState(alpha, state.u, state.v, state.t + params.dt)
    _guard(new, params)
    return new


@dataclass
class TrajectoryResult:
    final_state: GaussianState
    steps: int
    samples: int


def run_trajectory(
    params: SimParams,
    g: CouplingGraph,
    observer: Observer,
    *,
    rng: np.random.Generator | None = None,
    initial: GaussianState | None = None,
    mean_field: bool = False,
) -> TrajectoryResult:
    """
    Integrate one trajectory from the vacuum (or ``initial``) to ``t_max`` and hand
    ``(t, alpha)`` to ``observer`` at the steps of :func:`sample_steps`.

    :param params: Rates, integration controls and seed.
    :type params: SimParams
    :param g: Coupling graph.
    :type g: CouplingGraph
    :param observer: Sample callback.
    :type observer: Callable[[float, np.ndarray], None]
    :param rng: Generator; defaults to one seeded with ``params.seed``.
    :type rng: np.random.Generator | None
    :param initial: Start state instead of the vacuum.
    :type initial: GaussianState | None
    :param mean_field: Use the noiseless mean-field equations.
    :type mean_field: bool
    :return: Final state and counters.
    :rtype: TrajectoryResult
    :raises IntegrationBlowupError: With the number of samples already emitted.
    """
    ch = build_channels(g, params.gamma)
    state = init_vacuum(g.n) if initial is None else initial.copy()
    rng = np.random.default_rng(params.seed) if rng is None else rng
    source = NoiseSource(rng, g.n, params.dt) if params.noise and not mean_field else None

    total = params.n_steps
    schedule = sample_steps(params)
    wanted = schedule.size
    progress_every = max(1, total // 10)

    emitted = 0
    k = 0
    try:
        for k in range(1, total + 1):
            if mean_field:
                state = mean_field_step(state, params, g)
            else:
                state = step(state, params, g, channels=ch, source=source)
            if emitted < wanted and k == schedule[emitted]:
                observer(k * params.dt, state.alpha.copy())
                emitted += 1
            if k % progress_every == 0:
                logger.info("t=%.6g (%d%%), %d samples", k * params.dt, 100 * k // total, emitted)
    except IntegrationBlowupError as err:
        err.samples_collected = emitted
        logger.error("%s after %d samples", err.message, emitted)
        raise
    return TrajectoryResult(final_state=state, steps=k, samples=emitted)


def sample_steps(params: SimParams) -> np.ndarray:
    """
    Step indices at which samples are taken: the first step whose time reaches
    ``burn_in + m * sample_interval`` for ``m = 1 .. n_samples``.

    :param params: Integration controls.
    :type params: SimParams
    :return: Strictly increasing step indices in ``1 .. n_steps``.
    :rtype: np.ndarray
    """
    targets = params.burn_in + params.sample_interval * np.arange(1, params.n_samples + 1)
    steps = np.ceil(targets / params.dt - 1e-6).astype(int)
    return np.minimum(steps, params.n_steps)


def mean_field_fixed_point(
    params: SimParams,
    g: CouplingGraph,
    initial: np.ndarray,
    max_time: Optional[float] = None,
    tol: float = 1e-12,
) -> tuple[np.ndarray, bool]:
    """
    Integrate the mean-field equations until ``|dalpha/dt|`` drops below ``tol``
    or ``max_time`` (default ``t_max``) is reached.

    :return: Final amplitudes and whether the tolerance was met.
    :rtype: tuple[np.ndarray, bool]
    """
    max_time = params.t_max if max_time is None else max_time
    state = GaussianState(
        np.asarray(initial, dtype=complex).copy(),
        np.zeros((g.n, g.n), dtype=complex),
        np.zeros((g.n, g.n), dtype=complex),
    )
    for _ in range(int(round(max_time / params.dt))):
        rate = mean_field_drift(state.alpha, params, g.J)
        if np.abs(rate).max() < tol:
            return state.alpha, True
        state = mean_field_step(state, params, g)
    return state.alpha, False
