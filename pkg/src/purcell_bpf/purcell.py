"""Purcell-limited qubit lifetime through a filtered readout chain.

The qubit is treated as one more linear mode: it couples to a readout
resonator, which couples to one filter stage.  T1 follows from the complex
eigenfrequency of the qubit-like normal mode, either in the rotating-wave
model (``rwa``) or in the full second-order oscillator model (``full``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coupled_mode import (
    QUBIT,
    READOUT_RESONATOR,
    CoupledModeNetwork,
    attach_mode,
    build_filter_network,
    calibrate_coupling,
    ldos,
)
from .errors import DomainError, HybridizationError, InsufficientDataError
from .prototype import synth_maximally_flat

MODELS = ("rwa", "full")
# two candidate modes whose qubit weights differ by less than this fraction are ambiguous
HYBRIDIZATION_TOL = 0.01
INFINITE_T1_RATE = 1e-12  # relative to the last filter stage's decay rate
MIN_FIT_POINTS = 5
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ReadoutChain:
    """Filter + readout resonator + qubit.

    Give either ``resonator_coupling`` (rad/s) or ``kappa_r``; in the latter
    case the resonator-filter coupling is calibrated from the filter LDOS at
    the resonator frequency.  ``resonator_stage`` is 1-based; ``None`` picks
    the middle stage of a symmetric filter and stage 1 otherwise.
    """

    filter: CoupledModeNetwork
    resonator_frequency: float
    qubit_frequency: float
    qubit_coupling: float
    resonator_stage: int | None = None
    resonator_coupling: float | None = None
    kappa_r: float | None = None
    model: str = "rwa"

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        if (self.resonator_coupling is None) == (self.kappa_r is None):
            raise DomainError("give exactly one of resonator_coupling and kappa_r")
        if self.kappa_r is not None and not self.kappa_r > 0:
            raise DomainError("kappa_r must be positive")
        n = self.filter.n_modes
        if self.resonator_stage is not None and not 1 <= self.resonator_stage <= n:
            raise DomainError(f"resonator stage must lie in 1..{n}")
        if not self.qubit_frequency > 0:
            raise DomainError("qubit frequency must be positive")

    @property
    def stage(self) -> int:
        if self.resonator_stage is not None:
            return self.resonator_stage
        return default_resonator_stage(self.filter, self.qubit_frequency)

    def resonator_filter_coupling(self) -> float:
        if self.resonator_coupling is not None:
            return float(self.resonator_coupling)
        return calibrate_coupling(self.filter, self.stage - 1, self.resonator_frequency, self.kappa_r)

    def network(self) -> CoupledModeNetwork:
        """Filter modes, then the resonator, then the qubit (last index)."""
        net = attach_mode(
            self.filter,
            self.resonator_frequency,
            self.stage - 1,
            self.resonator_filter_coupling(),
            READOUT_RESONATOR,
        )
        return attach_mode(net, self.qubit_frequency, net.n_modes - 1, self.qubit_coupling, QUBIT)


def _is_symmetric(net: CoupledModeNetwork) -> bool:
    k = net.external_decay
    return net.n_modes > 1 and math.isclose(k[0], k[-1], rel_tol=1e-9)


def default_resonator_stage(filter_net: CoupledModeNetwork, qubit_frequency: float) -> int:
    """Middle stage for symmetric filters, first stage otherwise (1-based).

    For an even symmetric filter the two middle stages are compared by their
    LDOS at the qubit frequency; the smaller wins, ties go to the lower one.
    """
    n = filter_net.n_modes
    if not _is_symmetric(filter_net):
        return 1
    lower = (n + 1) // 2
    if n % 2:
        return lower
    rho_lo = float(ldos(filter_net, lower - 1, [qubit_frequency]).values[0])
    rho_hi = float(ldos(filter_net, lower, [qubit_frequency]).values[0])
    if rho_hi < rho_lo and not math.isclose(rho_hi, rho_lo, rel_tol=1e-9):
        return lower + 1
    return lower


def bare_purcell_t1(detuning: float, kappa_r: float, coupling: float) -> float:
    """Unfiltered Purcell limit ``Delta^2 / (kappa_r c^2)``."""
    if detuning == 0:
        raise DomainError("bare Purcell formula is invalid on resonance")
    if not kappa_r > 0 or not coupling > 0:
        raise DomainError("kappa_r and coupling must be positive")
    return detuning**2 / (kappa_r * coupling**2)


def _pick_qubit_mode(weights: np.ndarray) -> int:
    order = np.argsort(weights)[::-1]
    best = int(order[0])
    if weights.size > 1:
        second = int(order[1])
        if weights[best] - weights[second] <= HYBRIDIZATION_TOL * weights[best]:
            raise HybridizationError("qubit weight shared between two modes", (best, second))
    return best


def _rwa_decay_rate(net: CoupledModeNetwork, qubit: int) -> float:
    evals, evecs = np.linalg.eig(net.effective_hamiltonian())
    weights = np.abs(evecs[qubit]) ** 2 / np.sum(np.abs(evecs) ** 2, axis=0)
    i = _pick_qubit_mode(weights)
    return -2.0 * evals[i].imag


def _full_decay_rate(net: CoupledModeNetwork, qubit: int) -> float:
    # x'' + kappa x' + w^2 x + sum_n 2 c_mn sqrt(w_m w_n) x_n = 0, linearized
    # to first order in (x, v).
    n = net.n_modes
    w = net.mode_frequencies
    stiffness = np.diag(w**2) + 2.0 * net.coupling * np.sqrt(np.outer(w, w))
    a = np.zeros((2 * n, 2 * n))
    a[:n, n:] = np.eye(n)
    a[n:, :n] = -stiffness
    a[n:, n:] = -np.diag(net.external_decay)
    evals, evecs = np.linalg.eig(a)
    positive = evals.imag > 0
    evals = evals[positive]
    x = evecs[:n, positive]
    weights = np.abs(x[qubit]) ** 2 / np.sum(np.abs(x) ** 2, axis=0)
    i = _pick_qubit_mode(weights)
    return -2.0 * evals[i].real


def qubit_t1(chain: ReadoutChain) -> float:
    """Purcell-limited T1 (seconds) of the qubit in ``chain``; ``inf`` if decoupled."""
    net = chain.network()
    qubit = net.n_modes - 1
    rate = _rwa_decay_rate(net, qubit) if chain.model == "rwa" else _full_decay_rate(net, qubit)
    scale = float(chain.filter.external_decay[-1])
    if rate < INFINITE_T1_RATE * scale:
        return math.inf
    return 1.0 / rate


@dataclass(frozen=True)
class T1Curve:
    qubit_frequencies: np.ndarray
    t1: np.ndarray  # nan where the point is a gap
    gaps: np.ndarray  # True where mode assignment failed

    def detunings(self, resonator_frequency: float) -> np.ndarray:
        return self.qubit_frequencies - resonator_frequency


def t1_sweep(chain: ReadoutChain, qubit_frequencies) -> T1Curve:
    """``qubit_t1`` over a grid of qubit frequencies; hybridized points become gaps."""
    freqs = np.asarray(qubit_frequencies, dtype=float).ravel()
    t1 = np.full(freqs.size, np.nan)
    gaps = np.zeros(freqs.size, dtype=bool)
    # freeze the resonator coupling so every point sees the same chain
    if chain.kappa_r is not None:
        stage = chain.stage
        chain = replace(
            chain,
            resonator_stage=stage,
            resonator_coupling=chain.resonator_filter_coupling(),
            kappa_r=None,
        )
    for i, wq in enumerate(freqs):
        try:
            t1[i] = qubit_t1(replace(chain, qubit_frequency=float(wq)))
        except HybridizationError:
            gaps[i] = True
    return T1Curve(freqs, t1, gaps)


@dataclass(frozen=True)
class ScalingFit:
    """``T1 = prefactor * |Delta|**exponent`` fitted in log-log space."""

    prefactor: float
    exponent: float
    residual: float
    window: tuple

    def __call__(self, detuning):
        return self.prefactor * np.abs(detuning) ** self.exponent


def fit_power_law(detunings, t1, window=None) -> ScalingFit:
    """Least-squares line through ``(log|Delta|, log T1)`` inside ``window``.

    ``window`` is ``(min |Delta|, max |Delta|)``; points with non-finite T1 are
    dropped before counting.
    """
    d = np.asarray(detunings, dtype=float)
    t = np.asarray(t1, dtype=float)
    mag = np.abs(d)
    if window is None:
        window = (float(mag.min()), float(mag.max())) if mag.size else (0.0, 0.0)
    lo, hi = window
    if not hi >= lo:
        raise DomainError("window must be (low, high)")
    mask = (mag >= lo) & (mag <= hi) & np.isfinite(t)
    if np.count_nonzero(mask) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need at least {MIN_FIT_POINTS} finite points in the window")
    if np.any(t[mask] <= 0):
        raise DomainError("T1 values must be positive")
    signs = np.sign(d[mask])
    if np.any(signs == 0) or np.any(signs != signs[0]):
        raise DomainError("detunings in the window must share one sign")
    x = np.log(mag[mask])
    y = np.log(t[mask])
    b, log_a = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (b * x + log_a)) ** 2)))
    return ScalingFit(float(np.exp(log_a)), float(b), residual, (float(lo), float(hi)))


def combine_intrinsic(t1_purcell: float, t1_intrinsic: float) -> float:
    """Add decay rates: ``1/T1 = 1/T1_purcell + 1/T1_intrinsic``."""
    if not t1_purcell > 0 or not t1_intrinsic > 0:
        raise DomainError("lifetimes must be positive")
    rate = 1.0 / t1_purcell + 1.0 / t1_intrinsic
    return math.inf if rate == 0 else 1.0 / rate


def default_detuning_grid(points: int = 60, low: float = TWO_PI * 0.4e9, high: float = TWO_PI * 1.0e9) -> np.ndarray:
    """Log-spaced detuning magnitudes (rad/s) used for the scaling fits."""
    return np.geomspace(low, high, points)


@dataclass(frozen=True)
class ScalingStudy:
    order: int
    insertion_loss: float
    detunings: np.ndarray
    t1: np.ndarray
    fit: ScalingFit


def scaling_study(
    order: int,
    insertion_loss: float,
    *,
    center: float = TWO_PI * 6e9,
    bandwidth: float = TWO_PI * 600e6,
    resonator_frequency: float | None = None,
    kappa_r: float = TWO_PI * 15e6,
    qubit_coupling: float = TWO_PI * 100e6,
    detunings=None,
    side: int = -1,
    model: str = "full",
    window=None,
) -> ScalingStudy:
    """Sweep ``|Delta|`` on one side of the resonator and fit the power law.

    Defaults reproduce the reference readout chain: 6 GHz filter, 600 MHz
    bandwidth, resonator at band center with 15 MHz linewidth, 100 MHz qubit
    coupling, qubit below the resonator.
    """
    if side not in (-1, 1):
        raise DomainError("side must be -1 (qubit below) or +1 (qubit above)")
    wr = center if resonator_frequency is None else resonator_frequency
    mags = default_detuning_grid() if detunings is None else np.abs(np.asarray(detunings, dtype=float))
    mags = np.sort(mags)
    filt = build_filter_network(synth_maximally_flat(order, insertion_loss), center, bandwidth)
    chain = ReadoutChain(
        filter=filt,
        resonator_frequency=wr,
        qubit_frequency=wr + side * mags[-1],
        qubit_coupling=qubit_coupling,
        kappa_r=kappa_r,
        model=model,
    )
    qubit_freqs = wr + side * mags
    order_idx = np.argsort(qubit_freqs)
    curve = t1_sweep(chain, qubit_freqs[order_idx])
    t1 = np.empty_like(curve.t1)
    t1[order_idx] = curve.t1
    d = side * mags
    if window is None:
        window = (float(mags[0]), float(mags[-1]))
    fit = fit_power_law(d, t1, window)
    return ScalingStudy(order, insertion_loss, d, t1, fit)
