# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: spectral synthesis and piecewise-constant transfer matrices."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos
from libc.complex cimport cexp, csin, ccos, cabs

cnp.import_array()

ctypedef double complex cplx

cdef Py_ssize_t _ANCHOR = 128


def synthesize(const double[::1] y, const double[::1] t, const double[::1] k,
               const double[::1] energy, const cplx[::1] amp, double y_ref):
    """out[n, j] = sum_i amp[i] * exp(1j*(k[i]*(y[j]-y_ref) - energy[i]*t[n]))

    On uniform ``y`` the spatial phasor is advanced by complex rotation and
    re-anchored every ``_ANCHOR`` points to keep rounding drift at ~1e-14.
    """
    cdef Py_ssize_t nt = t.shape[0], ny = y.shape[0], ne = k.shape[0]
    cdef Py_ssize_t n, j, i, j0, j1
    cdef double ph, yr, dy = 0.0
    out = np.zeros((nt, ny), dtype=np.complex128)
    cdef cplx[:, ::1] o = out
    cdef double[::1] cr = np.empty(ne), ci = np.empty(ne)
    cdef double[::1] accr = np.empty(ny), acci = np.empty(ny)
    cdef double sr, si, cs, sn, ar, ai, pr, pi_, zr, zi, tmp
    cdef bint uniform = ny > 2
    if ny > 1:
        dy = (y[ny - 1] - y[0]) / (ny - 1)
        for j in range(ny):
            if abs(y[j] - (y[0] + j * dy)) > 1e-12 * (abs(y[0]) + abs(dy) * ny + 1.0):
                uniform = False
                break
    for n in range(nt):
        for i in range(ne):
            ph = -energy[i] * t[n]
            cs = cos(ph)
            sn = sin(ph)
            ar = amp[i].real
            ai = amp[i].imag
            cr[i] = ar * cs - ai * sn
            ci[i] = ar * sn + ai * cs
        if uniform:
            for j in range(ny):
                accr[j] = 0.0
                acci[j] = 0.0
            for i in range(ne):
                zr = cos(k[i] * dy)
                zi = sin(k[i] * dy)
                j0 = 0
                while j0 < ny:
                    j1 = j0 + _ANCHOR
                    if j1 > ny:
                        j1 = ny
                    ph = k[i] * (y[0] + j0 * dy - y_ref)
                    cs = cos(ph)
                    sn = sin(ph)
                    pr = cr[i] * cs - ci[i] * sn
                    pi_ = cr[i] * sn + ci[i] * cs
                    for j in range(j0, j1):
                        accr[j] += pr
                        acci[j] += pi_
                        tmp = pr * zr - pi_ * zi
                        pi_ = pr * zi + pi_ * zr
                        pr = tmp
                    j0 = j1
            for j in range(ny):
                o[n, j] = accr[j] + 1j * acci[j]
        else:
            for j in range(ny):
                yr = y[j] - y_ref
                sr = 0.0
                si = 0.0
                for i in range(ne):
                    ph = k[i] * yr
                    cs = cos(ph)
                    sn = sin(ph)
                    sr += cr[i] * cs - ci[i] * sn
                    si += cr[i] * sn + ci[i] * cs
                o[n, j] = sr + 1j * si
    return out


cdef inline cplx _sinc_over_k(cplx kk, double d) nogil:
    # sin(k d) / k, finite at k = 0
    if cabs(kk) * d < 1e-8:
        return d
    return csin(kk * d) / kk


def transfer_amplitude(const cplx[:, ::1] k_layers, const double[::1] widths,
                       const cplx[::1] k_out, const cplx[::1] k_in):
    """Transmission amplitude t for e^{i k_in y} incident on a piecewise-constant profile.

    Rows of ``k_layers`` are energies, columns layers (left to right). The
    returned amplitude carries the outgoing wave referenced at the right edge,
    i.e. psi = t * exp(i k_out (y - L)) for y > L.
    """
    cdef Py_ssize_t ne = k_layers.shape[0], nl = k_layers.shape[1]
    cdef Py_ssize_t i, m
    cdef cplx psi, dpsi, kk, c, s_k, p2
    out = np.empty(ne, dtype=np.complex128)
    cdef cplx[::1] o = out
    for i in range(ne):
        psi = 1.0
        dpsi = 1j * k_out[i]
        for m in range(nl - 1, -1, -1):
            kk = k_layers[i, m]
            c = ccos(kk * widths[m])
            s_k = _sinc_over_k(kk, widths[m])
            p2 = psi * c - dpsi * s_k
            dpsi = psi * kk * kk * s_k + dpsi * c
            psi = p2
        o[i] = 2.0 / (psi + dpsi / (1j * k_in[i]))
    return out
