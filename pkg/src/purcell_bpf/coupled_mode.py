"""Chain-of-resonators model of a bandpass filter and attached modes.

Conventions
-----------
All frequencies and rates are angular (rad/s).  The non-Hermitian effective
Hamiltonian is ``H = diag(w) + C - (i/2) diag(kappa)`` and the retarded
Green's function is ``G(w) = (w - H)^-1``.  Amplitudes evolve as
``a(t) ~ exp(-i H t)``; the scattering matrix between ports p, q is
``S_pq = delta_pq - i sqrt(kappa_p kappa_q) G_pq``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import (
    BroadeningRequiredError,
    CalibrationError,
    DomainError,
    FitError,
    SingularityError,
    StabilityError,
)
from .prototype import PrototypeCoefficients, coupling_rates

FILTER_STAGE = "filter-stage"
READOUT_RESONATOR = "readout-resonator"
QUBIT = "qubit"

# dt * (largest eigenvalue magnitude of the rotating-frame generator) must not exceed this.
STABILITY_LIMIT = 0.1
INTEGRATOR_RTOL = 1e-9
INTEGRATOR_ATOL = 1e-13
NEAR_ZERO_FRACTION = 0.01
CALIBRATION_LDOS_FLOOR = 1e-30


@dataclass(frozen=True, eq=False)
class CoupledModeNetwork:
    """Immutable set of coupled modes with external decay channels.

    ``ports`` lists ``(mode index, label)``; a mode appears there iff its
    ``kappa > 0``.  A mode may carry several ports (a single-stage filter has
    both input and output on mode 0); ``port_rates`` then splits its kappa,
    and defaults to the full kappa of each port's mode.
    """

    mode_frequencies: np.ndarray
    coupling: np.ndarray
    external_decay: np.ndarray
    ports: tuple
    mode_roles: tuple
    port_rates: tuple | None = None

    def __post_init__(self):
        w = np.array(self.mode_frequencies, dtype=float)
        c = np.array(self.coupling, dtype=float)
        k = np.array(self.external_decay, dtype=float)
        n = w.size
        if c.shape != (n, n) or k.shape != (n,):
            raise DomainError("coupling must be (n, n) and external_decay (n,)")
        if not np.allclose(c, c.T, rtol=0, atol=0):
            raise DomainError("coupling matrix must be symmetric")
        if np.any(np.diag(c) != 0):
            raise DomainError("coupling matrix must have a zero diagonal")
        if np.any(k < 0):
            raise DomainError("external decay rates must be non-negative")
        ports = tuple((int(i), str(label)) for i, label in self.ports)
        if sorted({i for i, _ in ports}) != [i for i in range(n) if k[i] > 0]:
            raise DomainError("ports must be exactly the modes with kappa > 0")
        if len({label for _, label in ports}) != len(ports):
            raise DomainError("port labels must be unique")
        if self.port_rates is None:
            rates = tuple(float(k[i]) for i, _ in ports)
        else:
            rates = tuple(float(r) for r in self.port_rates)
            if len(rates) != len(ports) or min(rates, default=1.0) <= 0:
                raise DomainError("need one positive rate per port")
            for mode in {i for i, _ in ports}:
                total = sum(r for (i, _), r in zip(ports, rates) if i == mode)
                if not math.isclose(total, k[mode], rel_tol=1e-12):
                    raise DomainError(f"port rates on mode {mode} do not sum to its kappa")
        roles = tuple(self.mode_roles)
        if len(roles) != n:
            raise DomainError("one role per mode required")
        for arr in (w, c, k):
            arr.setflags(write=False)
        object.__setattr__(self, "mode_frequencies", w)
        object.__setattr__(self, "coupling", c)
        object.__setattr__(self, "external_decay", k)
        object.__setattr__(self, "ports", ports)
        object.__setattr__(self, "mode_roles", roles)
        object.__setattr__(self, "port_rates", rates)

    @property
    def n_modes(self) -> int:
        return self.mode_frequencies.size

    @property
    def port_modes(self) -> np.ndarray:
        return np.array([i for i, _ in self.ports], dtype=np.intp)

    @property
    def port_kappas(self) -> np.ndarray:
        return np.array(self.port_rates, dtype=float)

    @property
    def port_labels(self) -> tuple:
        return tuple(label for _, label in self.ports)

    def port_index(self, label: str) -> int:
        for pos, (_, lab) in enumerate(self.ports):
            if lab == label:
                return pos
        raise KeyError(label)

    def effective_hamiltonian(self, kappa_floor: float = 0.0) -> np.ndarray:
        h = np.diag(self.mode_frequencies.astype(complex)) + self.coupling
        h -= 0.5j * np.diag(self.external_decay + kappa_floor)
        return h


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Values sampled on a strictly increasing frequency grid (rad/s)."""

    frequencies: np.ndarray
    values: np.ndarray
    labels: tuple = ()
    flags: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        if f.ndim != 1:
            raise DomainError("frequency grid must be one-dimensional")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise DomainError("frequency grid must be strictly increasing")
        if np.shape(self.values)[0] != f.size:
            raise DomainError("values must align one-to-one with frequencies")
        object.__setattr__(self, "frequencies", f)


@dataclass(frozen=True, eq=False)
class DecayRecord:
    """Time trace of mode energies and cumulative port emission."""

    times: np.ndarray
    mode_energy: np.ndarray  # (T, n_modes)
    port_emission: np.ndarray  # (T, n_ports)
    port_labels: tuple
    n_steps: int = 0

    def total(self) -> np.ndarray:
        """Energy left in the modes plus everything emitted so far."""
        return self.mode_energy.sum(axis=1) + self.port_emission.sum(axis=1)

    def emission(self, label: str) -> np.ndarray:
        return self.port_emission[:, self.port_labels.index(label)]


@dataclass(frozen=True)
class DecayFit:
    rate: float
    residual: float
    t_start: float
    t_stop: float


def _as_grid(grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise DomainError("frequency grid must be strictly increasing")
    return grid


def build_filter_network(proto: PrototypeCoefficients, center: float, bandwidth: float) -> CoupledModeNetwork:
    """N identical modes at ``center`` with the prototype's couplings and end decays."""
    if bandwidth < 0:
        raise DomainError("bandwidth must be non-negative")
    if bandwidth > 0 and not center > bandwidth / 2:
        raise DomainError("center frequency must exceed half the bandwidth")
    n = proto.order
    couplings, kappa_in, kappa_out = coupling_rates(proto, bandwidth)
    c = np.zeros((n, n))
    idx = np.arange(n - 1)
    c[idx, idx + 1] = couplings
    c[idx + 1, idx] = couplings
    kappa = np.zeros(n)
    kappa[0] += kappa_in
    kappa[-1] += kappa_out
    ports, rates = [], []
    if kappa_in > 0:
        ports.append((0, "input"))
        rates.append(kappa_in)
    if kappa_out > 0:
        ports.append((n - 1, "output"))
        rates.append(kappa_out)
    return CoupledModeNetwork(
        np.full(n, float(center)), c, kappa, tuple(ports), (FILTER_STAGE,) * n, tuple(rates)
    )


def attach_mode(net: CoupledModeNetwork, frequency: float, target_mode: int, coupling: float, role: str) -> CoupledModeNetwork:
    """Return a new network with one lossless mode coupled to ``target_mode``."""
    if not 0 <= target_mode < net.n_modes:
        raise DomainError(f"target mode {target_mode} does not exist")
    n = net.n_modes
    c = np.zeros((n + 1, n + 1))
    c[:n, :n] = net.coupling
    c[n, target_mode] = c[target_mode, n] = float(coupling)
    return CoupledModeNetwork(
        np.append(net.mode_frequencies, float(frequency)),
        c,
        np.append(net.external_decay, 0.0),
        net.ports,
        net.mode_roles + (role,),
        net.port_rates,
    )


def _resolvent(net: CoupledModeNetwork, grid: np.ndarray, kappa_floor: float = 0.0) -> np.ndarray:
    h = net.effective_hamiltonian(kappa_floor)
    n = net.n_modes
    lhs = grid[:, None, None] * np.eye(n) - h
    try:
        with np.errstate(all="raise"):
            return np.linalg.inv(lhs)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise SingularityError("resolvent is singular on the grid (real pole of a lossless network)") from exc


def s_parameters(net: CoupledModeNetwork, grid) -> Spectrum:
    """Port-to-port scattering matrix on a frequency grid.

    ``values[f, p, q]`` is the amplitude leaving port p per unit amplitude
    entering port q.  Labels follow ``net.ports``.
    """
    grid = _as_grid(grid)
    if not net.ports:
        raise DomainError("network has no ports")
    g = _resolvent(net, grid)
    modes = net.port_modes
    root_k = np.sqrt(net.port_kappas)
    s = -1j * root_k[None, :, None] * g[:, modes[:, None], modes[None, :]] * root_k[None, None, :]
    s = s + np.eye(modes.size)
    return Spectrum(grid, s, net.port_labels)


def ldos(net: CoupledModeNetwork, mode: int, grid, kappa_floor: float = 0.0) -> Spectrum:
    """Local density of states ``-Im G_jj(w) / pi`` in s/rad.

    A network with no loss at all has a delta-function spectrum; pass an
    explicit ``kappa_floor`` (added to every mode) to broaden it.
    """
    if not 0 <= mode < net.n_modes:
        raise DomainError(f"mode {mode} does not exist")
    return ldos_all(net, grid, kappa_floor, modes=[mode])


def ldos_all(net: CoupledModeNetwork, grid, kappa_floor: float = 0.0, modes=None) -> Spectrum:
    """LDOS of several modes at once; ``values[f, j]``."""
    grid = _as_grid(grid)
    if kappa_floor < 0:
        raise DomainError("kappa_floor must be non-negative")
    if not np.any(net.external_decay > 0) and kappa_floor == 0:
        raise BroadeningRequiredError(
            "LDOS of a lossless network is a sum of delta functions; pass kappa_floor > 0"
        )
    modes = list(range(net.n_modes)) if modes is None else list(modes)
    g = _resolvent(net, grid, kappa_floor)
    rho = -np.imag(g[:, modes, modes]) / np.pi
    values = rho[:, 0] if len(modes) == 1 else rho
    return Spectrum(grid, values, tuple(f"mode{m}" for m in modes))


def near_zero_points(frequencies, rho, reference_max=None, fraction=NEAR_ZERO_FRACTION) -> np.ndarray:
    """Frequencies of local minima of ``rho`` below ``fraction * reference_max``."""
    f = np.asarray(frequencies, dtype=float)
    r = np.asarray(rho, dtype=float)
    ref = float(np.max(r)) if reference_max is None else float(reference_max)
    interior = (r[1:-1] < r[:-2]) & (r[1:-1] <= r[2:]) & (r[1:-1] < fraction * ref)
    return f[1:-1][interior]


def golden_rule_rate(net: CoupledModeNetwork, mode: int, frequency: float, coupling: float) -> float:
    """Decay rate ``2 pi c^2 rho_j(w)`` of a weakly attached mode."""
    rho = float(ldos(net, mode, [frequency]).values[0])
    return 2.0 * math.pi * coupling**2 * rho


def calibrate_coupling(net: CoupledModeNetwork, target_mode: int, at_frequency: float, kappa_target: float) -> float:
    """Coupling that gives an attached mode the decay rate ``kappa_target``."""
    if kappa_target < 0:
        raise DomainError("target decay rate must be non-negative")
    if kappa_target == 0:
        return 0.0
    rho = float(ldos(net, target_mode, [at_frequency]).values[0])
    if not rho > CALIBRATION_LDOS_FLOOR:
        raise CalibrationError(f"mode {target_mode} has (near-)zero LDOS at the requested frequency", rho)
    return math.sqrt(kappa_target / (2.0 * math.pi * rho))


def time_evolve(net: CoupledModeNetwork, initial_mode: int, horizon: float, step: float, frame=None) -> DecayRecord:
    """Free decay of a unit excitation in ``initial_mode``.

    Integrates in a frame rotating at ``frame`` (default: mean mode
    frequency), so ``step`` only has to resolve detunings, couplings and
    decay rates.  Records are taken every ``step`` up to ``horizon``.
    """
    if not 0 <= initial_mode < net.n_modes:
        raise DomainError(f"mode {initial_mode} does not exist")
    if not horizon > 0 or not step > 0:
        raise DomainError("horizon and step must be positive")
    n_records = int(round(horizon / step)) + 1
    if n_records < 2:
        raise DomainError("horizon shorter than one step")
    w_frame = float(np.mean(net.mode_frequencies)) if frame is None else float(frame)
    generator = -1j * (net.effective_hamiltonian() - w_frame * np.eye(net.n_modes))
    fastest = float(np.max(np.abs(np.linalg.eigvals(generator))))
    if step * fastest > STABILITY_LIMIT:
        raise StabilityError(
            f"step {step:.3e} s too large: step * {fastest:.3e} rad/s = {step * fastest:.3f} > {STABILITY_LIMIT}"
        )
    a0 = np.zeros(net.n_modes, dtype=complex)
    a0[initial_mode] = 1.0
    amps, emission, n_steps = _backend.integrate_linear(
        generator,
        net.port_modes,
        net.port_kappas,
        a0,
        step,
        n_records,
        INTEGRATOR_RTOL,
        INTEGRATOR_ATOL,
    )
    times = step * np.arange(n_records)
    return DecayRecord(times, np.abs(amps) ** 2, emission, net.port_labels, int(n_steps))


def fit_exponential_decay(record: DecayRecord, mode: int, monotonic_tol: float = 1e-3) -> DecayFit:
    """Least-squares exponential rate of ``|a_mode(t)|^2``.

    The fit window runs from the first sample below 90% of the initial energy
    to the first sample below 10%, skipping the leading transient.
    """
    energy = record.mode_energy[:, mode]
    e0 = energy[0]
    if not e0 > 0:
        raise FitError("mode starts empty")
    below90 = np.flatnonzero(energy < 0.9 * e0)
    below10 = np.flatnonzero(energy < 0.1 * e0)
    if below10.size == 0:
        raise FitError("energy does not fall by 10x within the record")
    i0, i1 = int(below90[0]), int(below10[0])
    t = record.times[i0 : i1 + 1]
    y = energy[i0 : i1 + 1]
    if t.size < 3:
        raise FitError("fit window holds fewer than three samples")
    log_y = np.log(y)
    slope, intercept = np.polyfit(t, log_y, 1)
    residual = float(np.sqrt(np.mean((log_y - (slope * t + intercept)) ** 2)))
    rises = np.diff(y) / y[:-1]
    if np.any(rises > monotonic_tol):
        raise FitError("energy is not monotone in the fit window (strong coupling?)", residual)
    return DecayFit(float(-slope), residual, float(t[0]), float(t[-1]))


def kappa_from_q(frequency: float, loaded_q: float) -> float:
    if not loaded_q > 0:
        raise DomainError("quality factor must be positive")
    return frequency / loaded_q
