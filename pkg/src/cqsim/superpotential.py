"""Superpotential S = S1 + i S2, the drift it generates, and the Riccati potential."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .field import Grid1D, HolomorphicField, Point2


@dataclass(frozen=True)
class Superpotential:
    """Holomorphic S with real coefficients, so d2 S1 vanishes on the real axis."""

    field: HolomorphicField

    def __post_init__(self):
        if any(c.imag != 0.0 for c in self.field.coeffs):
            raise ValueError("superpotential coefficients must be real")

    @classmethod
    def from_coeffs(cls, coeffs) -> "Superpotential":
        return cls(HolomorphicField(tuple(complex(float(c)) for c in coeffs)))

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([c.real for c in self.field.coeffs])

    @property
    def dcoeffs(self) -> np.ndarray:
        """Ascending real coefficients of S'(z)."""
        return np.array([c.real for c in self.field.derivative().coeffs])

    def s1_line(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def ds1_line(self, x):
        return np.polynomial.polynomial.polyval(x, self.dcoeffs)

    def d2s1_line(self, x):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs, 2))

    def is_normalizable(self) -> bool:
        """True when exp(-S1/hbar) decays at both ends of the line."""
        c = np.trim_zeros(self.coeffs, "b")
        if len(c) == 0:
            return False
        lead = len(c) - 1
        return lead > 0 and lead % 2 == 0 and c[-1] > 0


def oscillator_superpotential(omega: float) -> Superpotential:
    """S1 + i S2 = omega z**2 / 2."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return Superpotential.from_coeffs([0.0, 0.0, 0.5 * omega])


def zero_superpotential() -> Superpotential:
    """S = 0: no drift, pure diagonal diffusion."""
    return Superpotential.from_coeffs([0.0])


def drift_on_grid(s: Superpotential, x1, x2):
    """Drift (-d2 S1, -d1 S1) = (Im S'(z), -Re S'(z)) at arrays of points."""
    sp = s.field.derivative()(np.asarray(x1) + 1j * np.asarray(x2))
    return np.imag(sp), -np.real(sp)


def drift_field(s: Superpotential, p: Point2) -> tuple[float, float]:
    sp = s.field.derivative()(p.z)
    return sp.imag, -sp.real


def drift_function(s: Superpotential):
    """Callable p -> drift_field(s, p), as consumed by ``sde.step``."""
    d = s.field.derivative()

    def b(p: Point2):
        sp = d(p.z)
        return sp.imag, -sp.real

    return b


@dataclass(frozen=True)
class PotentialSamples:
    grid: Grid1D
    v: np.ndarray

    def __post_init__(self):
        if np.shape(self.v) != (self.grid.n,):
            raise ValueError(f"potential must have shape ({self.grid.n},)")


def riccati_potential(s: Superpotential, hbar: float, grid: Grid1D) -> PotentialSamples:
    """V = (S1')**2 / 2 - (hbar / 2) S1'' on the line; hbar = 0 gives the classical limit."""
    if hbar < 0:
        raise ValueError("hbar must be non-negative")
    x = grid.x
    return PotentialSamples(grid, 0.5 * s.ds1_line(x) ** 2 - 0.5 * hbar * s.d2s1_line(x))


def warn_if_not_normalizable(s: Superpotential) -> bool:
    ok = s.is_normalizable()
    if not ok:
        warnings.warn(
            "exp(-S1/hbar) is not normalizable for this superpotential "
            "(leading power must be even with a positive coefficient)",
            stacklevel=2,
        )
    return ok
