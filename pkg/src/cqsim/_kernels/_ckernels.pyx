# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops; see _pykernels.py for the reference."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def em_paths(const double[::1] x1s, const double[::1] x2s, const double[:, ::1] incs,
             const double[::1] dcoef, double dt, double nhat, double escape_r2,
             double[:, ::1] out_x1, double[:, ::1] out_x2, cnp.uint8_t[:, ::1] out_esc):
    cdef Py_ssize_t n_paths = incs.shape[0]
    cdef Py_ssize_t n_steps = incs.shape[1]
    cdef Py_ssize_t n_start = x1s.shape[0]
    cdef Py_ssize_t top = dcoef.shape[0] - 1
    cdef Py_ssize_t p, s, j, m, n_alive
    cdef double pr, pi, tr, kick, lead
    # start points form the inner loop: independent chains overlap in the pipeline
    cdef double[::1] x1 = np.empty(n_start)
    cdef double[::1] x2 = np.empty(n_start)
    cdef cnp.uint8_t[::1] esc = np.empty(n_start, dtype=np.uint8)
    lead = dcoef[top] if top >= 0 else 0.0
    with nogil:
        for p in range(n_paths):
            for s in range(n_start):
                x1[s] = x1s[s]
                x2[s] = x2s[s]
                esc[s] = 0
            n_alive = n_start
            for j in range(n_steps):
                kick = incs[p, j] * nhat
                for s in range(n_start):
                    if esc[s]:
                        continue
                    pr = lead
                    pi = 0.0
                    m = top - 1
                    while m >= 0:
                        tr = pr * x1[s] - pi * x2[s] + dcoef[m]
                        pi = pr * x2[s] + pi * x1[s]
                        pr = tr
                        m -= 1
                    tr = x1[s] + pi * dt + kick
                    x2[s] = x2[s] - pr * dt + kick
                    x1[s] = tr
                    if x1[s] * x1[s] + x2[s] * x2[s] > escape_r2:
                        esc[s] = 1
                        n_alive -= 1
                if n_alive == 0:
                    break
            for s in range(n_start):
                out_x1[p, s] = x1[s]
                out_x2[p, s] = x2[s]
                out_esc[p, s] = esc[s]


cdef inline void _pair_rhs(double[::1] u1, double[::1] u2, const double[::1] sp,
                           double inv2dx, double invdx2, double half_hb,
                           double[::1] k1, double[::1] k2) noexcept nogil:
    cdef Py_ssize_t n = u1.shape[0]
    cdef Py_ssize_t i
    cdef double d1a, d2a, d1b, d2b
    for i in range(n):
        if i == 0:
            d1a = (-3.0 * u2[0] + 4.0 * u2[1] - u2[2]) * inv2dx
            d2a = (2.0 * u2[0] - 5.0 * u2[1] + 4.0 * u2[2] - u2[3]) * invdx2
            d1b = (-3.0 * u1[0] + 4.0 * u1[1] - u1[2]) * inv2dx
            d2b = (2.0 * u1[0] - 5.0 * u1[1] + 4.0 * u1[2] - u1[3]) * invdx2
        elif i == n - 1:
            d1a = (3.0 * u2[i] - 4.0 * u2[i - 1] + u2[i - 2]) * inv2dx
            d2a = (2.0 * u2[i] - 5.0 * u2[i - 1] + 4.0 * u2[i - 2] - u2[i - 3]) * invdx2
            d1b = (3.0 * u1[i] - 4.0 * u1[i - 1] + u1[i - 2]) * inv2dx
            d2b = (2.0 * u1[i] - 5.0 * u1[i - 1] + 4.0 * u1[i - 2] - u1[i - 3]) * invdx2
        else:
            d1a = (u2[i + 1] - u2[i - 1]) * inv2dx
            d2a = (u2[i + 1] - 2.0 * u2[i] + u2[i - 1]) * invdx2
            d1b = (u1[i + 1] - u1[i - 1]) * inv2dx
            d2b = (u1[i + 1] - 2.0 * u1[i] + u1[i - 1]) * invdx2
        k1[i] = sp[i] * d1a - half_hb * d2a
        k2[i] = half_hb * d2b - sp[i] * d1b


def pair_rk4(double[::1] u1, double[::1] u2, const double[::1] sp, double dx,
             double hbar, double dt, Py_ssize_t n_steps):
    cdef Py_ssize_t n = u1.shape[0]
    cdef double inv2dx = 1.0 / (2.0 * dx)
    cdef double invdx2 = 1.0 / (dx * dx)
    cdef double half_hb = 0.5 * hbar
    cdef double half_dt = 0.5 * dt
    cdef double sixth_dt = dt / 6.0
    cdef double[:, ::1] w = np.empty((10, n))
    cdef double[::1] a1 = w[0], a2 = w[1], b1 = w[2], b2 = w[3]
    cdef double[::1] c1 = w[4], c2 = w[5], d1 = w[6], d2 = w[7]
    cdef double[::1] t1 = w[8], t2 = w[9]
    cdef Py_ssize_t i, step
    with nogil:
        for step in range(n_steps):
            _pair_rhs(u1, u2, sp, inv2dx, invdx2, half_hb, a1, a2)
            for i in range(n):
                t1[i] = u1[i] + half_dt * a1[i]
                t2[i] = u2[i] + half_dt * a2[i]
            _pair_rhs(t1, t2, sp, inv2dx, invdx2, half_hb, b1, b2)
            for i in range(n):
                t1[i] = u1[i] + half_dt * b1[i]
                t2[i] = u2[i] + half_dt * b2[i]
            _pair_rhs(t1, t2, sp, inv2dx, invdx2, half_hb, c1, c2)
            for i in range(n):
                t1[i] = u1[i] + dt * c1[i]
                t2[i] = u2[i] + dt * c2[i]
            _pair_rhs(t1, t2, sp, inv2dx, invdx2, half_hb, d1, d2)
            for i in range(n):
                u1[i] = u1[i] + sixth_dt * (a1[i] + 2.0 * b1[i] + 2.0 * c1[i] + d1[i])
                u2[i] = u2[i] + sixth_dt * (a2[i] + 2.0 * b2[i] + 2.0 * c2[i] + d2[i])


cdef class CayleyStepper:
    """Crank-Nicolson (Cayley) propagator via a pre-factored Thomas sweep."""

    cdef double complex[::1] main_r
    cdef double complex[::1] cp
    cdef double complex[::1] inv_den
    cdef double complex off_l, off_r
    cdef Py_ssize_t m

    def __init__(self, v, double dx, double hbar, double dt):
        vin = np.asarray(v, dtype=float)[1:-1]
        cdef double a = dt / (2.0 * hbar)
        cdef double off = -hbar * hbar / (2.0 * dx * dx)
        main = hbar * hbar / (dx * dx) + vin
        self.m = vin.shape[0]
        self.off_l = 1j * a * off
        self.off_r = -1j * a * off
        self.main_r = (1.0 - 1j * a * main).astype(complex)
        diag = (1.0 + 1j * a * main).astype(complex)
        cp = np.empty(self.m, dtype=complex)
        inv_den = np.empty(self.m, dtype=complex)
        den = diag[0]
        inv_den[0] = 1.0 / den
        cp[0] = self.off_l / den
        for i in range(1, self.m):
            den = diag[i] - self.off_l * cp[i - 1]
            inv_den[i] = 1.0 / den
            cp[i] = self.off_l / den
        self.cp = cp
        self.inv_den = inv_den

    def run(self, double complex[::1] psi, Py_ssize_t n_steps):
        cdef Py_ssize_t m = self.m
        cdef double complex[::1] x = np.array(psi[1:m + 1], dtype=complex)
        cdef double complex[::1] d = np.empty(m, dtype=complex)
        cdef double complex r
        cdef Py_ssize_t i, step
        with nogil:
            for step in range(n_steps):
                for i in range(m):
                    r = self.main_r[i] * x[i]
                    if i > 0:
                        r = r + self.off_r * x[i - 1]
                    if i < m - 1:
                        r = r + self.off_r * x[i + 1]
                    d[i] = r
                d[0] = d[0] * self.inv_den[0]
                for i in range(1, m):
                    d[i] = (d[i] - self.off_l * d[i - 1]) * self.inv_den[i]
                x[m - 1] = d[m - 1]
                i = m - 2
                while i >= 0:
                    x[i] = d[i] - self.cp[i] * x[i + 1]
                    i -= 1
        psi[0] = 0.0
        psi[m + 1] = 0.0
        for i in range(m):
            psi[i + 1] = x[i]
