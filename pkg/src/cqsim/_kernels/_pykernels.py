"""Pure numpy implementations of the hot loops.

Every routine here mirrors ``_ckernels.pyx`` operation for operation so the
two backends agree to the last bit on IEEE hardware (the extension is built
without FMA contraction).
"""
import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu


def em_paths(x1s, x2s, incs, dcoef, dt, nhat, escape_r2, out_x1, out_x2, out_esc):
    """Euler-Maruyama for a block of paths and a set of start points.

    x1s, x2s : (S,) start coordinates
    incs     : (P, J) noise increments, one row per path
    dcoef    : ascending real coefficients of S'(z)
    out_*    : (P, S) endpoints and escape flags, written in place
    """
    n_paths, n_steps = incs.shape
    x1 = np.empty((n_paths, x1s.shape[0]))
    x2 = np.empty_like(x1)
    x1[:] = x1s[None, :]
    x2[:] = x2s[None, :]
    alive = np.ones(x1.shape, dtype=bool)
    top = len(dcoef) - 1
    for j in range(n_steps):
        pr = np.full(x1.shape, dcoef[top]) if top >= 0 else np.zeros(x1.shape)
        pi = np.zeros(x1.shape)
        for m in range(top - 1, -1, -1):
            pr, pi = pr * x1 - pi * x2 + dcoef[m], pr * x2 + pi * x1
        kick = incs[:, j, None] * nhat
        n1 = x1 + pi * dt + kick
        n2 = x2 - pr * dt + kick
        x1 = np.where(alive, n1, x1)
        x2 = np.where(alive, n2, x2)
        alive &= ~(x1 * x1 + x2 * x2 > escape_r2)
    out_x1[:] = x1
    out_x2[:] = x2
    out_esc[:] = ~alive


def _pair_rhs(u1, u2, sp, inv2dx, invdx2, half_hb, k1, k2):
    n = u1.shape[0]
    d1a = np.empty(n)
    d2a = np.empty(n)
    d1b = np.empty(n)
    d2b = np.empty(n)
    for u, d1, d2 in ((u2, d1a, d2a), (u1, d1b, d2b)):
        d1[1:-1] = (u[2:] - u[:-2]) * inv2dx
        d2[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * invdx2
        d1[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2dx
        d1[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) * inv2dx
        d2[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) * invdx2
        d2[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) * invdx2
    k1[:] = sp * d1a - half_hb * d2a
    k2[:] = half_hb * d2b - sp * d1b


def pair_rk4(u1, u2, sp, dx, hbar, dt, n_steps):
    """Advance the coupled field pair in place with classical RK4."""
    n = u1.shape[0]
    inv2dx = 1.0 / (2.0 * dx)
    invdx2 = 1.0 / (dx * dx)
    half_hb = 0.5 * hbar
    half_dt = 0.5 * dt
    sixth_dt = dt / 6.0
    k = [np.empty(n) for _ in range(8)]
    a1, a2, b1, b2, c1, c2, d1, d2 = k
    for _ in range(n_steps):
        _pair_rhs(u1, u2, sp, inv2dx, invdx2, half_hb, a1, a2)
        _pair_rhs(u1 + half_dt * a1, u2 + half_dt * a2, sp, inv2dx, invdx2, half_hb, b1, b2)
        _pair_rhs(u1 + half_dt * b1, u2 + half_dt * b2, sp, inv2dx, invdx2, half_hb, c1, c2)
        _pair_rhs(u1 + dt * c1, u2 + dt * c2, sp, inv2dx, invdx2, half_hb, d1, d2)
        u1 += sixth_dt * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        u2 += sixth_dt * (a2 + 2.0 * b2 + 2.0 * c2 + d2)


class CayleyStepper:
    """Crank-Nicolson (Cayley) propagator on the interior nodes.

    Solves (1 + i a H) psi' = (1 - i a H) psi with a = dt / (2 hbar) and
    H = -(hbar^2/2) D2 + V; the two end nodes are held at zero.
    """

    def __init__(self, v, dx, hbar, dt):
        v = np.asarray(v, dtype=float)[1:-1]
        a = dt / (2.0 * hbar)
        self.main = hbar * hbar / (dx * dx) + v
        self.off = -hbar * hbar / (2.0 * dx * dx)
        self.a = a
        m = v.shape[0]
        lhs = diags(
            [np.full(m - 1, 1j * a * self.off), 1.0 + 1j * a * self.main, np.full(m - 1, 1j * a * self.off)],
            [-1, 0, 1],
            format="csc",
        )
        self._lu = splu(lhs)

    def run(self, psi, n_steps):
        inner = np.array(psi[1:-1], dtype=complex)
        ia = 1j * self.a
        for _ in range(n_steps):
            rhs = (1.0 - ia * self.main) * inner
            rhs[1:] -= ia * self.off * inner[:-1]
            rhs[:-1] -= ia * self.off * inner[1:]
            inner = self._lu.solve(rhs)
        psi[0] = 0.0
        psi[-1] = 0.0
        psi[1:-1] = inner
