"""Harmonic displacement fields u = (u1, u2) with u1 + i u2 holomorphic.

Fields are complex polynomials in z = x1 + i x2.  The Cauchy-Riemann
convention is the holomorphic one throughout the package:

    d1 u1 = d2 u2,    d1 u2 = -d2 u1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._fd import diff1, stencil_halo

DEGREE_CAP = 16


@dataclass(frozen=True)
class Point2:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"non-finite point ({self.x1}, {self.x2})")

    @property
    def z(self) -> complex:
        return complex(self.x1, self.x2)


@dataclass(frozen=True)
class HolomorphicField:
    """u1 + i u2 = sum_m coeffs[m] * (x1 + i x2)**m."""

    coeffs: tuple
    cap: int = field(default=DEGREE_CAP, compare=False)

    def __post_init__(self):
        c = tuple(complex(a) for a in self.coeffs)
        if not c:
            c = (0j,)
        if not all(math.isfinite(a.real) and math.isfinite(a.imag) for a in c):
            raise ValueError("field coefficients must be finite")
        if len(c) - 1 > self.cap:
            raise ValueError(f"degree {len(c) - 1} exceeds cap {self.cap}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def monomial(cls, m: int, scale: complex = 1.0) -> "HolomorphicField":
        return cls((0,) * m + (scale,))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "HolomorphicField":
        return cls(tuple(complex(re, im) for re, im in pairs))

    def to_pairs(self) -> list:
        return [[a.real, a.imag] for a in self.coeffs]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        """Horner evaluation in complex arithmetic; ``z`` may be an array."""
        acc = np.zeros_like(np.asarray(z, dtype=complex)) + self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        return acc if np.ndim(acc) else complex(acc)

    def derivative(self) -> "HolomorphicField":
        if self.degree == 0:
            return HolomorphicField((0j,), cap=self.cap)
        return HolomorphicField(tuple(m * c for m, c in enumerate(self.coeffs) if m > 0), cap=self.cap)

    def __add__(self, other: "HolomorphicField") -> "HolomorphicField":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0j,) * (n - len(self.coeffs))
        b = other.coeffs + (0j,) * (n - len(other.coeffs))
        return HolomorphicField(tuple(x + y for x, y in zip(a, b)), cap=max(self.cap, other.cap))

    def __mul__(self, scale: complex) -> "HolomorphicField":
        return HolomorphicField(tuple(scale * c for c in self.coeffs), cap=self.cap)

    __rmul__ = __mul__


def eval_field(f: HolomorphicField, p: Point2) -> tuple[float, float]:
    w = f(p.z)
    return w.real, w.imag


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on the line x2 = 0."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got {self.x_min}, {self.x_max}")
        if self.n < 8:
            raise ValueError(f"Grid1D needs at least 8 points, got {self.n}")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid1D":
        if dx <= 0:
            raise ValueError("dx must be positive")
        cells = (x_max - x_min) / dx
        if abs(cells - round(cells)) > 1e-6 * max(1.0, cells):
            raise ValueError(f"[{x_min}, {x_max}] is not a whole number of cells of width {dx}")
        return cls(x_min, x_max, int(round(cells)) + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def index_of(self, x: float) -> int:
        """Index of the grid point nearest ``x``."""
        return int(round((x - self.x_min) / self.dx))


@dataclass(frozen=True)
class Grid2:
    x1_min: float
    x1_max: float
    n1: int
    x2_min: float
    x2_max: float
    n2: int

    def __post_init__(self):
        if not (self.x1_min < self.x1_max and self.x2_min < self.x2_max):
            raise ValueError("grid ranges must be increasing")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("grid needs at least 2 points per axis")

    @classmethod
    def centered(cls, n: int, h: float) -> "Grid2":
        """n x n grid of spacing h centred on the origin."""
        half = 0.5 * (n - 1) * h
        return cls(-half, half, n, -half, half, n)

    @property
    def h1(self) -> float:
        return (self.x1_max - self.x1_min) / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.x2_max - self.x2_min) / (self.n2 - 1)

    def mesh(self):
        x1 = self.x1_min + self.h1 * np.arange(self.n1)
        x2 = self.x2_min + self.h2 * np.arange(self.n2)
        return np.meshgrid(x1, x2, indexing="ij")


@dataclass(frozen=True)
class GridField2:
    """Sampled (u1, u2) on a Grid2; axis 0 is x1, axis 1 is x2."""

    grid: Grid2
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n1, self.grid.n2)
        if np.shape(self.u1) != shape or np.shape(self.u2) != shape:
            raise ValueError(f"sample arrays must have shape {shape}")


def sample_field(f: HolomorphicField, grid: Grid2) -> GridField2:
    x1, x2 = grid.mesh()
    w = f(x1 + 1j * x2)
    return GridField2(grid, w.real.copy(), w.imag.copy())


def _interior(a, layers):
    return a[layers:-layers, layers:-layers]


def _check_size(g: GridField2, order: int, margin: int):
    need = 2 * (stencil_halo(order) + margin) + 1
    if order == 4:
        need = max(need, 5)
    if g.grid.n1 < need or g.grid.n2 < need:
        raise ValueError(f"grid too small: need at least {need} points per axis")


def cr_residual(g: GridField2, order: int = 2, margin: int = 0) -> tuple[float, float]:
    """Max interior |d1 u1 - d2 u2| and |d1 u2 + d2 u1|.

    ``margin`` drops that many extra layers on every side in addition to the
    stencil halo.
    """
    _check_size(g, order, margin)
    h1, h2 = g.grid.h1, g.grid.h2
    ra = diff1(g.u1, h1, 0, order) - diff1(g.u2, h2, 1, order)
    rb = diff1(g.u2, h1, 0, order) + diff1(g.u1, h2, 1, order)
    k = stencil_halo(order) + margin
    return float(np.abs(_interior(ra, k)).max()), float(np.abs(_interior(rb, k)).max())


def _laplacian_interior(u, h1, h2, order):
    if order == 2:
        c = u[1:-1, 1:-1]
        return (u[2:, 1:-1] - 2.0 * c + u[:-2, 1:-1]) / (h1 * h1) + (u[1:-1, 2:] - 2.0 * c + u[1:-1, :-2]) / (h2 * h2)
    if order == 4:
        c = u[2:-2, 2:-2]
        d11 = (-u[4:, 2:-2] + 16.0 * u[3:-1, 2:-2] - 30.0 * c + 16.0 * u[1:-3, 2:-2] - u[:-4, 2:-2]) / (12.0 * h1 * h1)
        d22 = (-u[2:-2, 4:] + 16.0 * u[2:-2, 3:-1] - 30.0 * c + 16.0 * u[2:-2, 1:-3] - u[2:-2, :-4]) / (12.0 * h2 * h2)
        return d11 + d22
    raise ValueError(f"stencil order must be 2 or 4, got {order}")


def laplacian_residual(g: GridField2, order: int = 2, margin: int = 0) -> float:
    """Max interior |discrete Laplacian| over both components."""
    _check_size(g, order, margin)
    out = 0.0
    for u in (g.u1, g.u2):
        lap = _laplacian_interior(np.asarray(u, dtype=float), g.grid.h1, g.grid.h2, order)
        if margin:
            lap = _interior(lap, margin)
        out = max(out, float(np.abs(lap).max()))
    return out


@dataclass(frozen=True)
class FieldPair1D:
    """(u1, u2) sampled on the line x2 = 0."""

    grid: Grid1D
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        if np.shape(self.u1) != (self.grid.n,) or np.shape(self.u2) != (self.grid.n,):
            raise ValueError(f"sample arrays must have shape ({self.grid.n},)")

    def as_complex(self) -> np.ndarray:
        return np.asarray(self.u1) + 1j * np.asarray(self.u2)

    @classmethod
    def from_complex(cls, grid: Grid1D, w) -> "FieldPair1D":
        w = np.asarray(w, dtype=complex)
        return cls(grid, w.real.copy(), w.imag.copy())


def restrict_to_line(f: HolomorphicField, grid: Grid1D) -> FieldPair1D:
    return FieldPair1D.from_complex(grid, f(grid.x + 0j))
