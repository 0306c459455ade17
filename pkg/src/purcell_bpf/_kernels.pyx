# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: adaptive Dormand-Prince integration of the linear mode
equations and ABCD cascades.  Semantics match ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, cos, sin, tan, pow, fmin, fmax

cnp.import_array()

ctypedef double complex cplx

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline double cabs(cplx z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef void rhs(const cplx[:, ::1] m, const Py_ssize_t[::1] pm, const double[::1] pk,
              const cplx[::1] y, cplx[::1] out, Py_ssize_t n, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef cplx acc
    cdef double mag
    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + m[i, j] * y[j]
        out[i] = acc
    for i in range(p):
        mag = cabs(y[pm[i]])
        out[n + i] = pk[i] * mag * mag


def integrate_linear(m, port_modes, port_kappa, a0, double dt, Py_ssize_t n_records,
                     double rtol, double atol):
    cdef cplx[:, ::1] mm = np.ascontiguousarray(m, dtype=np.complex128)
    cdef Py_ssize_t[::1] pm = np.ascontiguousarray(port_modes, dtype=np.intp)
    cdef double[::1] pk = np.ascontiguousarray(port_kappa, dtype=np.float64)
    cdef Py_ssize_t n = mm.shape[0]
    cdef Py_ssize_t p = pm.shape[0]
    cdef Py_ssize_t size = n + p
    cdef Py_ssize_t i, rec
    cdef long n_steps = 0

    y_arr = np.zeros(size, dtype=np.complex128)
    y_arr[:n] = a0
    cdef cplx[::1] y = y_arr
    cdef cplx[::1] yn = np.zeros(size, dtype=np.complex128)
    cdef cplx[::1] tmp = np.zeros(size, dtype=np.complex128)
    cdef cplx[:, ::1] k = np.zeros((7, size), dtype=np.complex128)

    amps_arr = np.empty((n_records, n), dtype=np.complex128)
    emis_arr = np.empty((n_records, p), dtype=np.float64)
    cdef cplx[:, ::1] amps = amps_arr
    cdef double[:, ::1] emis = emis_arr

    for i in range(n):
        amps[0, i] = y[i]
    for i in range(p):
        emis[0, i] = y[n + i].real

    cdef double h = dt, remaining, step, err, sc, e, factor
    with nogil:
        rhs(mm, pm, pk, y, k[0], n, p)
        for rec in range(1, n_records):
            remaining = dt
            while remaining > 0:
                step = fmin(h, remaining)
                if remaining - step < 1e-12 * dt:
                    step = remaining
                for i in range(size):
                    tmp[i] = y[i] + step * (A21 * k[0, i])
                rhs(mm, pm, pk, tmp, k[1], n, p)
                for i in range(size):
                    tmp[i] = y[i] + step * (A31 * k[0, i] + A32 * k[1, i])
                rhs(mm, pm, pk, tmp, k[2], n, p)
                for i in range(size):
                    tmp[i] = y[i] + step * (A41 * k[0, i] + A42 * k[1, i] + A43 * k[2, i])
                rhs(mm, pm, pk, tmp, k[3], n, p)
                for i in range(size):
                    tmp[i] = y[i] + step * (A51 * k[0, i] + A52 * k[1, i] + A53 * k[2, i]
                                            + A54 * k[3, i])
                rhs(mm, pm, pk, tmp, k[4], n, p)
                for i in range(size):
                    tmp[i] = y[i] + step * (A61 * k[0, i] + A62 * k[1, i] + A63 * k[2, i]
                                            + A64 * k[3, i] + A65 * k[4, i])
                rhs(mm, pm, pk, tmp, k[5], n, p)
                for i in range(size):
                    yn[i] = y[i] + step * (A71 * k[0, i] + A73 * k[2, i] + A74 * k[3, i]
                                           + A75 * k[4, i] + A76 * k[5, i])
                rhs(mm, pm, pk, yn, k[6], n, p)
                err = 0.0
                for i in range(size):
                    e = cabs(step * (E1 * k[0, i] + E3 * k[2, i] + E4 * k[3, i]
                                     + E5 * k[4, i] + E6 * k[5, i] + E7 * k[6, i]))
                    sc = atol + rtol * fmax(cabs(y[i]), cabs(yn[i]))
                    if e / sc > err:
                        err = e / sc
                n_steps += 1
                if err <= 1.0:
                    for i in range(size):
                        y[i] = yn[i]
                        k[0, i] = k[6, i]
                    remaining -= step
                    if err == 0:
                        factor = 5.0
                    else:
                        factor = fmin(5.0, 0.9 * pow(err, -0.2))
                else:
                    factor = fmax(0.2, 0.9 * pow(err, -0.2))
                h = fmin(dt, step * factor)
            for i in range(n):
                amps[rec, i] = y[i]
            for i in range(p):
                emis[rec, i] = y[n + i].real
    return amps_arr, emis_arr, n_steps


def cascade_abcd(kinds, angles, x, double z0):
    cdef signed char[::1] kd = np.ascontiguousarray(kinds, dtype=np.int8)
    cdef double[::1] ang = np.ascontiguousarray(angles, dtype=np.float64)
    cdef double[::1] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t f = xx.shape[0], m = kd.shape[0]
    out_arr = np.empty((f, 2, 2), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef cplx a, b, c, d, na, nb, nc, nd, y, zs, ys
    cdef double th, cs, sn
    with nogil:
        for i in range(f):
            a = 1
            b = 0
            c = 0
            d = 1
            for j in range(m):
                th = ang[j] * xx[i]
                if kd[j] == 0:
                    y = 1.0 / (1j * z0 * tan(th))
                    na = a + b * y
                    nc = c + d * y
                    a = na
                    c = nc
                else:
                    cs = cos(th)
                    sn = sin(th)
                    zs = 1j * z0 * sn
                    ys = 1j * sn / z0
                    na = a * cs + b * ys
                    nb = a * zs + b * cs
                    nc = c * cs + d * ys
                    nd = c * zs + d * cs
                    a = na
                    b = nb
                    c = nc
                    d = nd
            out[i, 0, 0] = a
            out[i, 0, 1] = b
            out[i, 1, 0] = c
            out[i, 1, 1] = d
    return out_arr
