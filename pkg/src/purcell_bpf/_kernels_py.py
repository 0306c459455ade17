"""Pure-Python reference implementations of the numerical kernels.

These mirror ``_kernels.pyx`` line for line and are used when the compiled
extension is unavailable (or when ``PURCELL_BPF_PURE=1``).
"""
import numpy as np

# Dormand-Prince 5(4) tableau.
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SHUNT_STUB = 0
SERIES_LINE = 1


def _rhs(m, port_modes, port_kappa, y, n):
    out = np.empty_like(y)
    a = y[:n]
    out[:n] = m @ a
    out[n:] = port_kappa * np.abs(a[port_modes]) ** 2
    return out


def integrate_linear(m, port_modes, port_kappa, a0, dt, n_records, rtol, atol):
    """Integrate ``da/dt = m a`` plus port emission integrals.

    The state is extended with ``E_p(t) = int kappa_p |a_p|^2`` so emission is
    propagated by the same embedded pair as the amplitudes.  Steps never
    exceed ``dt`` and land exactly on every record time.

    Returns ``(amplitudes, emission, n_steps)``.
    """
    m = np.ascontiguousarray(m, dtype=np.complex128)
    port_modes = np.ascontiguousarray(port_modes, dtype=np.intp)
    port_kappa = np.ascontiguousarray(port_kappa, dtype=np.float64)
    n = m.shape[0]
    p = port_modes.size
    y = np.zeros(n + p, dtype=np.complex128)
    y[:n] = a0

    amps = np.empty((n_records, n), dtype=np.complex128)
    emission = np.empty((n_records, p), dtype=np.float64)
    amps[0] = y[:n]
    emission[0] = y[n:].real

    k = [None] * 7
    k[0] = _rhs(m, port_modes, port_kappa, y, n)
    h = dt
    n_steps = 0
    for rec in range(1, n_records):
        remaining = dt
        while remaining > 0:
            step = min(h, remaining)
            # avoid a sliver step at the end of the interval
            if remaining - step < 1e-12 * dt:
                step = remaining
            for i in range(1, 7):
                acc = y.copy()
                for j, aij in enumerate(_A[i]):
                    if aij:
                        acc += step * aij * k[j]
                if i == 6:
                    y_new = acc
                k[i] = _rhs(m, port_modes, port_kappa, acc, n)
            err_vec = np.zeros_like(y)
            for j, ej in enumerate(_E):
                if ej:
                    err_vec += ej * k[j]
            err_vec *= step
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))
            n_steps += 1
            if err <= 1.0:
                y = y_new
                k[0] = k[6]
                remaining -= step
                factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
            else:
                factor = max(0.2, 0.9 * err ** -0.2)
            h = min(dt, step * factor)
        amps[rec] = y[:n]
        emission[rec] = y[n:].real
    return amps, emission, n_steps


def _element(kind, angle, z0):
    f = angle.size
    mat = np.zeros((f, 2, 2), dtype=np.complex128)
    if kind == SHUNT_STUB:
        mat[:, 0, 0] = 1.0
        mat[:, 1, 1] = 1.0
        mat[:, 1, 0] = 1.0 / (1j * z0 * np.tan(angle))
    else:
        c = np.cos(angle)
        s = np.sin(angle)
        mat[:, 0, 0] = c
        mat[:, 1, 1] = c
        mat[:, 0, 1] = 1j * z0 * s
        mat[:, 1, 0] = 1j * s / z0
    return mat


def cascade_abcd(kinds, angles, x, z0):
    """Total ABCD matrix of a cascade of stubs and lines on a frequency grid.

    ``angles`` are electrical lengths at the reference frequency; ``x`` is the
    grid normalized to that frequency.  Returns an array of shape ``(F, 2, 2)``.
    """
    x = np.asarray(x, dtype=np.float64)
    total = np.zeros((x.size, 2, 2), dtype=np.complex128)
    total[:, 0, 0] = 1.0
    total[:, 1, 1] = 1.0
    for kind, angle in zip(kinds, angles):
        total = total @ _element(kind, angle * x, z0)
    return total
