"""Transmission-line realization of the bandpass filter.

Every inverter is a short-circuited shunt stub and every resonator is a
series line section, all at one characteristic impedance.  Electrical
lengths are specified at the center frequency and scale linearly with
frequency (non-dispersive line).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .coupled_mode import Spectrum
from .errors import DomainError, RealizationError
from .prototype import PrototypeCoefficients

COUPLING_KINDS = ("capacitive", "inductive")
SINGULAR_TAN = 1e-12  # |tan| below this counts as a shorted stub
RATIO_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class TLineRealization:
    """Stub-and-line filter; angles are radians at ``center_frequency``."""

    z0: float
    inverter_values: np.ndarray  # Z0*J_n, n = 1..N+1
    stub_lengths: np.ndarray  # phi_n, n = 1..N+1
    section_lengths: np.ndarray  # theta_n, n = 1..N
    center_frequency: float

    def __post_init__(self):
        for name in ("inverter_values", "stub_lengths", "section_lengths"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.z0 > 0:
            raise DomainError("z0 must be positive")
        if not self.center_frequency > 0:
            raise DomainError("center frequency must be positive")
        n = self.section_lengths.size
        if n < 1 or self.inverter_values.size != n + 1 or self.stub_lengths.size != n + 1:
            raise DomainError("need N section lengths and N+1 inverters and stubs")

    @property
    def order(self) -> int:
        return self.section_lengths.size

    def theta_residual(self) -> float:
        """Largest violation of ``theta_n + atan(J_n) + atan(J_{n+1}) = pi``."""
        at = np.arctan(self.inverter_values)
        return float(np.max(np.abs(self.section_lengths + at[:-1] + at[1:] - math.pi)))

    def elements(self):
        """``(kinds, angles)`` from the input port to the output port."""
        kinds = [_backend.SHUNT_STUB]
        angles = [self.stub_lengths[0]]
        for theta, phi in zip(self.section_lengths, self.stub_lengths[1:]):
            kinds += [_backend.SERIES_LINE, _backend.SHUNT_STUB]
            angles += [theta, phi]
        return np.array(kinds, dtype=np.int8), np.array(angles)


def realize(proto: PrototypeCoefficients, center: float, bandwidth: float, z0: float = 50.0) -> TLineRealization:
    """Inverter values and electrical lengths for a prototype."""
    if not center > 0 or not bandwidth > 0:
        raise DomainError("center and bandwidth must be positive")
    fb = bandwidth / center
    if not fb < 1:
        raise DomainError("fractional bandwidth must be below 1")
    p = proto.products
    n = proto.order
    j = np.empty(n + 1)
    j[0] = math.sqrt(math.pi * fb / (2.0 * p[0]))
    j[n] = math.sqrt(math.pi * fb / (2.0 * p[n]))
    for k in range(1, n):
        j[k] = math.pi * fb / (2.0 * math.sqrt(p[k]))
    bad = np.flatnonzero(j >= 1.0)
    if bad.size:
        k = int(bad[0]) + 1
        raise RealizationError(f"Z0*J_{k} = {j[bad[0]]:.4g} >= 1; fractional bandwidth too large", k)
    phi = np.arctan(j / (1.0 - j**2))
    at = np.arctan(j)
    theta = math.pi - at[:-1] - at[1:]
    return TLineRealization(float(z0), j, phi, theta, float(center))


def _normalized_grid(real: TLineRealization, grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(grid <= 0):
        raise DomainError("grid frequencies must be positive")
    return grid / real.center_frequency


def _looking_in(kinds, angles, x, z0, load):
    """Impedance looking into a cascade listed from the observer outward."""
    z = np.full(x.shape, load, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for kind, angle in zip(reversed(kinds), reversed(angles)):
            th = angle * x
            if kind == _backend.SHUNT_STUB:
                y = 1.0 / z + 1.0 / (1j * z0 * np.tan(th))
                z = np.where(np.isinf(y), 0.0, 1.0 / y)
            else:
                c, s = np.cos(th), np.sin(th)
                z = z0 * (z * c + 1j * z0 * s) / (z0 * c + 1j * z * s)
    return z


def abcd_sparams(real: TLineRealization, grid) -> Spectrum:
    """Two-port S matrix (``values[f, i, j]``) referenced to ``z0``.

    Points where a stub is an exact short (tan = 0) are evaluated as the
    limit: no transmission, reflections from the shorted node.  They are
    marked in ``flags``.
    """
    x = _normalized_grid(real, grid)
    z0 = real.z0
    kinds, angles = real.elements()
    stub_angles = angles[kinds == _backend.SHUNT_STUB]
    singular = np.any(np.abs(np.tan(np.outer(x, stub_angles))) < SINGULAR_TAN, axis=1)

    s = np.zeros((x.size, 2, 2), dtype=complex)
    ok = ~singular
    if np.any(ok):
        t = _backend.cascade_abcd(kinds, angles, x[ok], z0)
        a, b, c, d = t[:, 0, 0], t[:, 0, 1], t[:, 1, 0], t[:, 1, 1]
        delta = a + b / z0 + c * z0 + d
        # AD - BC cancels catastrophically in the stopband; use the product
        # of the element determinants instead (stubs: 1, lines: cos^2 + sin^2)
        line_angles = np.outer(x[ok], angles[kinds == _backend.SERIES_LINE])
        det = np.prod(np.cos(line_angles) ** 2 + np.sin(line_angles) ** 2, axis=1)
        s[ok, 0, 0] = (a + b / z0 - c * z0 - d) / delta
        s[ok, 1, 0] = 2.0 / delta
        s[ok, 0, 1] = 2.0 * det / delta
        s[ok, 1, 1] = (-a + b / z0 - c * z0 + d) / delta
    if np.any(singular):
        xs = x[singular]
        z_left = _looking_in(list(kinds), list(angles), xs, z0, z0)
        z_right = _looking_in(list(kinds[::-1]), list(angles[::-1]), xs, z0, z0)
        s[singular, 0, 0] = (z_left - z0) / (z_left + z0)
        s[singular, 1, 1] = (z_right - z0) / (z_right + z0)
    return Spectrum(x * real.center_frequency, s, ("input", "output"), singular)


def _tap_sides(real: TLineRealization, stage: int, fraction: float):
    n = real.order
    if not 1 <= stage <= n:
        raise DomainError(f"stage must lie in 1..{n}")
    if not 0 < fraction < 1:
        raise DomainError("fraction must lie strictly between 0 and 1 (ends are inverter junctions)")
    i = stage - 1
    th, phi = real.section_lengths, real.stub_lengths
    ls, rs = _backend.SERIES_LINE, _backend.SHUNT_STUB
    left_k, left_a = [ls, rs], [fraction * th[i], phi[i]]
    for m in range(i - 1, -1, -1):
        left_k += [ls, rs]
        left_a += [th[m], phi[m]]
    right_k, right_a = [ls, rs], [(1.0 - fraction) * th[i], phi[i + 1]]
    for m in range(i + 1, n):
        right_k += [ls, rs]
        right_a += [th[m], phi[m + 1]]
    return (left_k, left_a), (right_k, right_a)


def tap_immittance(real: TLineRealization, stage: int, fraction: float, grid) -> Spectrum:
    """Node impedance ``Z_e`` and admittance ``Y_e = 1/Z_e`` at a tap point.

    The tap sits ``fraction`` of the way along line section ``stage``
    (1-based, from the input side).  Columns are ``(Z_e, Y_e)``.
    """
    x = _normalized_grid(real, grid)
    (lk, la), (rk, ra) = _tap_sides(real, stage, fraction)
    z_left = _looking_in(lk, la, x, real.z0, real.z0)
    z_right = _looking_in(rk, ra, x, real.z0, real.z0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = 1.0 / z_left + 1.0 / z_right
        z = 1.0 / y
    return Spectrum(x * real.center_frequency, np.column_stack([z, y]), ("Z_e", "Y_e"))


def purcell_ratio(
    real: TLineRealization,
    stage: int,
    fraction: float,
    omega_r: float,
    omega_q: float,
    coupling_kind: str = "capacitive",
) -> float:
    """Relative environment strength ``w_r^2 Re X(w_r) / (w_q^2 Re X(w_q))``.

    ``X`` is ``Z_e`` for a capacitive tap and ``Y_e`` for an inductive one.
    Returns ``inf`` when the qubit-side value vanishes.
    """
    if coupling_kind not in COUPLING_KINDS:
        raise DomainError(f"coupling_kind must be one of {COUPLING_KINDS}")
    if omega_r == omega_q:
        _tap_sides(real, stage, fraction)
        return 1.0
    lo, hi = sorted((omega_r, omega_q))
    spec = tap_immittance(real, stage, fraction, [lo, hi])
    col = 0 if coupling_kind == "capacitive" else 1
    vals = spec.values[:, col].real
    at_r, at_q = (vals[0], vals[1]) if omega_r < omega_q else (vals[1], vals[0])
    floor = RATIO_FLOOR * (real.z0 if col == 0 else 1.0 / real.z0)
    if at_q < floor:
        return math.inf
    return (omega_r**2 * at_r) / (omega_q**2 * at_q)
