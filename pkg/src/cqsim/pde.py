"""Deterministic counterparts of the stochastic model.

* ``apply_generator_2d``: the time-displacement operator
  H = -(d2 S1) d1 - (d1 S1) d2 + (hbar/2) (n.grad)**2 on a sampled 2D field.
* ``evolve_pair``: the coupled line equations
      d_t u1 =  S1' u2' - (hbar/2) u2'',    d_t u2 = -S1' u1' + (hbar/2) u1''.
* ``schrodinger_evolve``: i hbar d_t psi = [-(hbar^2/2) d_x^2 + V] psi.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._fd import diff1, diff2
from .field import FieldPair1D, Grid1D, GridField2
from .sde import PhysicalParams
from .superpotential import PotentialSamples, Superpotential, drift_on_grid

__all__ = [
    "FieldPair1D", "Wavefunction1D", "StabilityError", "Domain",
    "apply_generator_2d", "step_generator_2d", "check_pair_stability", "evolve_pair",
    "schrodinger_evolve", "padded_domain", "pullback_norm", "sample_pair",
    "write_pair_csv", "write_wavefunction_csv",
]

# RK4 is stable on the imaginary axis up to |lambda dt| = 2 sqrt(2); keep a margin
RK4_IMAG_LIMIT = 2.5
# chunk length between finiteness checks
_CHECK_EVERY = 1000


class StabilityError(ValueError):
    """Time step or grid outside the stable range of the explicit pair scheme."""


@dataclass(frozen=True)
class Wavefunction1D:
    grid: Grid1D
    psi: np.ndarray

    def __post_init__(self):
        if np.shape(self.psi) != (self.grid.n,):
            raise ValueError(f"psi must have shape ({self.grid.n},)")


def _generator(u, b1, b2, h1, h2, hbar, order):
    d1 = diff1(u, h1, 0, order)
    d12 = diff1(d1, h2, 1, order)
    # (n.grad)^2 with n = (1, 1)/sqrt(2)
    diffusion = 0.25 * hbar * (diff2(u, h1, 0, order) + 2.0 * d12 + diff2(u, h2, 1, order))
    return b1 * d1 + b2 * diff1(u, h2, 1, order) + diffusion


def apply_generator_2d(g: GridField2, s: Superpotential, params: PhysicalParams, order: int = 2) -> GridField2:
    """H u by central differences; edge layers use one-sided stencils."""
    if g.grid.n1 < 5 or g.grid.n2 < 5:
        raise ValueError("grid too small: need at least 5 points per axis")
    x1, x2 = g.grid.mesh()
    b1, b2 = drift_on_grid(s, x1, x2)
    h1, h2 = g.grid.h1, g.grid.h2
    return GridField2(g.grid,
                      _generator(g.u1, b1, b2, h1, h2, params.hbar, order),
                      _generator(g.u2, b1, b2, h1, h2, params.hbar, order))


def step_generator_2d(g: GridField2, s: Superpotential, params: PhysicalParams, dt: float,
                      steps: int, order: int = 2) -> GridField2:
    """Integrate d_t u = H u with classical RK4."""
    if g.grid.n1 < 5 or g.grid.n2 < 5:
        raise ValueError("grid too small: need at least 5 points per axis")
    x1, x2 = g.grid.mesh()
    b1, b2 = drift_on_grid(s, x1, x2)
    h1, h2, hb = g.grid.h1, g.grid.h2, params.hbar
    u = np.stack([np.asarray(g.u1, dtype=float), np.asarray(g.u2, dtype=float)])

    def rhs(v):
        return np.stack([_generator(v[0], b1, b2, h1, h2, hb, order),
                         _generator(v[1], b1, b2, h1, h2, hb, order)])

    for _ in range(steps):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(u).all():
        raise FloatingPointError("2D generator stepping produced non-finite values")
    return GridField2(g.grid, u[0], u[1])


def check_pair_stability(grid: Grid1D, s: Superpotential, params: PhysicalParams, dt: float):
    """Raise StabilityError unless the explicit pair scheme is stable.

    Two conditions: the cell Peclet number max|S1'| dx / hbar must not exceed
    1 (beyond it the semi-discrete operator acquires growing modes), and
    dt * 2 hbar / dx**2, the spectral radius bound that then holds, must stay
    inside the RK4 stability interval on the imaginary axis.
    """
    dx = grid.dx
    hb = params.hbar
    peclet = float(np.abs(s.ds1_line(grid.x)).max()) * dx
    if hb <= 0 or peclet > hb:
        raise StabilityError(
            f"cell Peclet number max|S1'|*dx/hbar = {peclet / hb if hb > 0 else math.inf:.3g} exceeds 1; "
            "refine dx or shrink the domain")
    cfl = dt * 2.0 * hb / (dx * dx)
    if not dt > 0 or cfl > RK4_IMAG_LIMIT:
        raise StabilityError(f"dt*2*hbar/dx^2 = {cfl:.3g} exceeds {RK4_IMAG_LIMIT}; reduce dt below "
                             f"{RK4_IMAG_LIMIT * dx * dx / (2.0 * hb):.3g}")


def evolve_pair(p: FieldPair1D, s: Superpotential, params: PhysicalParams, dt: float, steps: int,
                backend=None) -> FieldPair1D:
    """Advance the field pair ``steps`` RK4 steps of size ``dt``."""
    check_pair_stability(p.grid, s, params, dt)
    kern = _kernels.get_backend(backend)
    u1 = np.array(p.u1, dtype=float)
    u2 = np.array(p.u2, dtype=float)
    sp = np.ascontiguousarray(s.ds1_line(p.grid.x), dtype=float)
    done = 0
    while done < steps:
        n = min(_CHECK_EVERY, steps - done)
        kern.pair_rk4(u1, u2, sp, p.grid.dx, params.hbar, dt, n)
        done += n
        if not (np.isfinite(u1).all() and np.isfinite(u2).all()):
            raise FloatingPointError(f"field pair became non-finite by step {done}")
    return FieldPair1D(p.grid, u1, u2)


def schrodinger_evolve(w: Wavefunction1D, v: PotentialSamples, params: PhysicalParams, dt: float,
                       steps: int, backend=None) -> Wavefunction1D:
    """Crank-Nicolson steps with psi = 0 at both end points.

    The Cayley form keeps the discrete norm fixed up to the solve's rounding.
    """
    if v.grid != w.grid:
        raise ValueError("potential and wavefunction grids differ")
    if not params.hbar > 0:
        raise ValueError("hbar must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    kern = _kernels.get_backend(backend)
    stepper = kern.CayleyStepper(np.ascontiguousarray(v.v, dtype=float), w.grid.dx, params.hbar, dt)
    psi = np.array(w.psi, dtype=complex)
    done = 0
    while done < steps:
        n = min(_CHECK_EVERY, steps - done)
        stepper.run(psi, n)
        done += n
        if not np.isfinite(psi).all():
            raise FloatingPointError(f"wavefunction became non-finite by step {done}")
    return Wavefunction1D(w.grid, psi)


@dataclass(frozen=True)
class Domain:
    """Computational grid plus the slice of it on which results are scored."""

    grid: Grid1D
    window: slice

    @property
    def x_window(self) -> np.ndarray:
        return self.grid.x[self.window]


def padded_domain(base: Grid1D, s: Superpotential, params: PhysicalParams, pad_fraction: float = 0.25,
                  peclet_max: float = 0.5, margin_fraction: float = 0.1) -> Domain:
    """Pad ``base`` by ``pad_fraction`` of its width per side at the same spacing.

    The padded grid is then clipped to the region where the cell Peclet
    number |S1'| dx / hbar stays below ``peclet_max`` and exp(S1/hbar) does
    not overflow.  The scoring window is
    ``base`` minus ``margin_fraction`` of the computational width on each side.
    """
    if params.hbar <= 0:
        raise ValueError("hbar must be positive")
    dx = base.dx
    n_pad = int(round(pad_fraction * (base.n - 1)))
    idx = np.arange(-n_pad, base.n + n_pad)
    x = base.x_min + dx * idx
    ok = np.abs(s.ds1_line(x)) * dx <= peclet_max * params.hbar
    # exp(S1/hbar) growth of the pair must stay representable
    s1 = s.s1_line(x)
    ok &= s1 - s1[n_pad:n_pad + base.n].min() <= 600.0 * params.hbar
    centre = n_pad + base.n // 2
    if not ok[centre]:
        raise StabilityError("cell Peclet limit violated at the centre of the grid; refine dx")
    lo = centre
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = centre
    while hi < len(x) - 1 and ok[hi + 1]:
        hi += 1
    grid = Grid1D(float(x[lo]), float(x[hi]), hi - lo + 1)
    margin = int(round(margin_fraction * (grid.n - 1)))
    first = max(margin, n_pad - lo)
    last = min(grid.n - 1 - margin, n_pad + base.n - 1 - lo)
    if last - first < 8:
        raise ValueError("scoring window is empty after clipping")
    return Domain(grid, slice(first, last + 1))


def pullback_norm(p: FieldPair1D, s: Superpotential, params: PhysicalParams) -> float:
    """integral of exp(-2 S1/hbar) (u1^2 + u2^2) dx: the psi norm expressed in the pair."""
    x = p.grid.x
    w = np.exp(-2.0 * s.s1_line(x) / params.hbar)
    return float(np.trapezoid(w * (np.asarray(p.u1) ** 2 + np.asarray(p.u2) ** 2), x))


def sample_pair(p: FieldPair1D, xs) -> tuple[np.ndarray, np.ndarray]:
    """Linear interpolation of both components at points ``xs``."""
    x = p.grid.x
    return np.interp(xs, x, p.u1), np.interp(xs, x, p.u2)


def write_pair_csv(path, p: FieldPair1D):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u1", "u2"])
        for x, a, b in zip(p.grid.x, p.u1, p.u2):
            w.writerow([f"{x:.17g}", f"{a:.17g}", f"{b:.17g}"])


def write_wavefunction_csv(path, wf: Wavefunction1D):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "re_psi", "im_psi"])
        for x, z in zip(wf.grid.x, wf.psi):
            w.writerow([f"{x:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
