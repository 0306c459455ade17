"""Maximally-flat low-pass prototypes with arbitrary insertion loss.

The ladder is synthesized by the insertion-loss method: the prescribed
transducer gain ``t / (1 + w**(2N))`` fixes ``|S11(jw)|**2``, whose
left-half-plane spectral factor gives a minimum-phase ``S11(s)``.  The input
impedance ``(1 + S11) / (1 - S11)`` is then expanded as a Cauer continued
fraction ``Z = g1 s + 1 / (g2 s + 1 / (...))``.

With this branch ``g1`` is the large element when the insertion loss is
positive, i.e. the weakly coupled port is the input.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import DomainError, SynthesisError

MAX_INSERTION_LOSS_DB = 100.0
ROOT_TOL = 1e-12
# Cauer remainders below this fraction of the dividend scale are exact zeros.
CANCELLATION_TOL = 1e-8
# Continued-fraction expansion loses ~N digits in double precision.
WORKING_DIGITS = 50


class ResponseFamily(enum.Enum):
    MAXIMALLY_FLAT = "maximally-flat"


@dataclass(frozen=True)
class FilterSpec:
    """Bandpass design target. Frequencies are angular (rad/s)."""

    order: int
    insertion_loss: float
    center_frequency: float
    bandwidth: float
    response_family: ResponseFamily = ResponseFamily.MAXIMALLY_FLAT

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise DomainError(f"order must be a positive integer, got {self.order}")
        if not math.isfinite(self.insertion_loss) or self.insertion_loss < 0:
            raise DomainError(f"insertion loss must be finite and >= 0 dB, got {self.insertion_loss}")
        if not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")
        if not self.center_frequency > self.bandwidth / 2:
            raise DomainError("center frequency must exceed half the bandwidth")

    def prototype(self) -> PrototypeCoefficients:
        return synth_maximally_flat(self.order, self.insertion_loss)


@dataclass(frozen=True, eq=False)
class PrototypeCoefficients:
    """Ladder values ``g_0 .. g_{N+1}`` with ``g_0 = 1``.

    Only the adjacent products are physically meaningful; the individual
    values carry the usual impedance-normalization freedom.
    """

    g_values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g_values, dtype=float)
        if g.ndim != 1 or g.size < 3:
            raise DomainError("need at least g_0, g_1, g_2")
        if np.any(~np.isfinite(g)) or np.any(g <= 0):
            raise DomainError("all g values must be positive and finite")
        g.setflags(write=False)
        object.__setattr__(self, "g_values", g)

    @classmethod
    def from_products(cls, products) -> PrototypeCoefficients:
        """Rebuild g values (with ``g_0 = 1``) from adjacent products."""
        products = np.asarray(products, dtype=float)
        g = np.ones(products.size + 1)
        for j, p in enumerate(products):
            g[j + 1] = p / g[j]
        return cls(g)

    @property
    def order(self) -> int:
        return self.g_values.size - 2

    @property
    def products(self) -> np.ndarray:
        return self.g_values[:-1] * self.g_values[1:]

    def transducer_gain(self, w) -> np.ndarray:
        """Transducer power gain of the ladder at normalized frequency ``w``.

        Evaluated directly from the element values (series-first ladder with
        source resistance ``g_0``), independent of the synthesis path.
        """
        w = np.atleast_1d(np.asarray(w, dtype=float))
        s = 1j * w
        g = self.g_values
        n = self.order
        a = np.ones_like(s)
        b = np.zeros_like(s)
        c = np.zeros_like(s)
        d = np.ones_like(s)
        for k in range(1, n + 1):
            if k % 2:  # series inductor
                b = a * g[k] * s + b
                d = c * g[k] * s + d
            else:  # shunt capacitor
                a = a + b * g[k] * s
                c = c + d * g[k] * s
        # g_{N+1} is a load conductance after a series element, else a resistance.
        r_load = 1.0 / g[n + 1] if n % 2 else g[n + 1]
        r_src = g[0]
        den = a * r_load + b + c * r_src * r_load + d * r_src
        return 4.0 * r_src * r_load / np.abs(den) ** 2


def butterworth_closed_form(order: int) -> PrototypeCoefficients:
    """Equal-termination Butterworth ladder, ``g_k = 2 sin((2k-1) pi / 2N)``."""
    if int(order) != order or order < 1:
        raise DomainError(f"order must be a positive integer, got {order}")
    k = np.arange(1, order + 1)
    g = np.ones(order + 2)
    g[1:-1] = 2.0 * np.sin((2 * k - 1) * np.pi / (2 * order))
    return PrototypeCoefficients(g)


def _butterworth_poles(order: int) -> np.ndarray:
    """Left-half-plane roots of ``1 + (-s**2)**N``, Newton-polished."""
    k = np.arange(1, order + 1)
    s = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    sign = (-1) ** order
    f = 1 + sign * s ** (2 * order)
    s = s - f / (sign * 2 * order * s ** (2 * order - 1))
    residual = float(np.max(np.abs(1 + sign * s ** (2 * order))))
    if residual > ROOT_TOL:
        raise SynthesisError("pole refinement did not converge", residual)
    return s


def _butterworth_polynomial(order: int) -> list:
    """Ascending coefficients of the Butterworth polynomial (``d[N] == 1``)."""
    gamma = mp.pi / (2 * order)
    a = [mp.mpf(1)]
    for k in range(1, order + 1):
        a.append(a[-1] * mp.cos((k - 1) * gamma) / mp.sin(k * gamma))
    return a


def synth_maximally_flat(order: int, insertion_loss: float) -> PrototypeCoefficients:
    """Synthesize the maximally-flat prototype with the given DC insertion loss.

    Parameters
    ----------
    order : int
        Number of reactive elements N.
    insertion_loss : float
        ``-10 log10 |S21(0)|**2`` in dB, between 0 and 100.

    Returns
    -------
    PrototypeCoefficients
        ``g_0 .. g_{N+1}`` with ``g_0 = 1``.
    """
    if int(order) != order or order < 1:
        raise DomainError(f"order must be a positive integer, got {order}")
    if not 0 <= insertion_loss <= MAX_INSERTION_LOSS_DB:
        raise DomainError(
            f"insertion loss must lie in [0, {MAX_INSERTION_LOSS_DB}] dB, got {insertion_loss}"
        )
    order = int(order)

    with mp.workdps(WORKING_DIGITS):
        d = _butterworth_polynomial(order)
        poles = _butterworth_poles(order)
        coeffs = np.array([complex(c) for c in d[::-1]])
        residual = float(np.max(np.abs(np.polyval(coeffs, poles))))
        if residual > 1e3 * ROOT_TOL:
            raise SynthesisError("coefficients inconsistent with refined poles", residual)

        # Reflection zeros are the poles scaled by r = (1 - t)**(1/2N), so the
        # numerator is P(s) = r**N D(s/r).  D +/- P is formed coefficient-wise
        # so the near-cancellation at large insertion loss stays analytic.
        t = mp.power(10, -mp.mpf(insertion_loss) / 10)
        if t >= 1:
            r_pow = [mp.mpf(m == order) for m in range(order + 1)]
            one_minus = [1 - x for x in r_pow]
        else:
            log_r = mp.log1p(-t) / (2 * order)
            r_pow = [mp.exp((order - m) * log_r) for m in range(order + 1)]
            one_minus = [-mp.expm1((order - m) * log_r) for m in range(order + 1)]
        num = [dm * (1 + rp) for dm, rp in zip(d, r_pow)][::-1]  # D + P, degree N
        den = [dm * om for dm, om in zip(d, one_minus)][::-1][1:]  # D - P, degree N-1

        g = [mp.mpf(1)]
        for step in range(order):
            gk = num[0] / den[0]
            rem = list(num)
            for i, coef in enumerate(den):
                rem[i] -= gk * coef
            g.append(gk)
            if step == order - 1:
                # the leftover constant is the load resistance (after a series
                # element) or conductance (after a shunt one): g_{N+1} = den/rem
                g.append(den[0] / rem[1])
                break
            leftover = abs(rem[1]) / max(abs(c) for c in num)
            if leftover > CANCELLATION_TOL:
                raise SynthesisError(f"Cauer step {step + 1} left a nonzero constant", float(leftover))
            num, den = den, rem[2:]
        return PrototypeCoefficients(np.array([float(x) for x in g]))


def coupling_rates(proto: PrototypeCoefficients, bandwidth: float):
    """Nearest-neighbour couplings and end decay rates of the bandpass chain.

    Returns ``(couplings, kappa_in, kappa_out)`` in the units of ``bandwidth``.
    """
    if bandwidth < 0:
        raise DomainError("bandwidth must be non-negative")
    p = proto.products
    couplings = bandwidth / (2.0 * np.sqrt(p[1:-1]))
    return couplings, bandwidth / p[0], bandwidth / p[-1]
