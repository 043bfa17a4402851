"""Wavefunction assembly, overlaps and energy spectra from time autocorrelation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .field import FieldPair1D, Grid1D
from .pde import Domain, Wavefunction1D, evolve_pair, schrodinger_evolve
from .sde import PhysicalParams
from .superpotential import PotentialSamples, Superpotential


def assemble_psi(p: FieldPair1D, s: Superpotential, params: PhysicalParams) -> Wavefunction1D:
    """psi = exp(-S1/hbar) (u1 + i u2) on the pair's grid."""
    if not params.hbar > 0:
        raise ValueError("hbar must be positive")
    weight = np.exp(-s.s1_line(p.grid.x) / params.hbar)
    return Wavefunction1D(p.grid, weight * p.as_complex())


def inner_product(a: Wavefunction1D, b: Wavefunction1D) -> complex:
    """Trapezoid rule for the integral of conj(a) b."""
    if a.grid != b.grid:
        raise ValueError("wavefunctions live on different grids")
    return complex(np.trapezoid(np.conj(a.psi) * b.psi, a.grid.x))


def hermite_state(n: int, omega: float, params: PhysicalParams, grid: Grid1D) -> Wavefunction1D:
    """Normalised oscillator eigenfunction phi_n (unit mass).

    Built with the recurrence for the normalised functions,
    phi_{k+1} = sqrt(2/(k+1)) xi phi_k - sqrt(k/(k+1)) phi_{k-1}, xi = x sqrt(omega/hbar),
    which never forms the large Hermite polynomial values explicitly.
    """
    if not 0 <= n <= 10:
        raise ValueError("hermite_state supports 0 <= n <= 10")
    if not (omega > 0 and params.hbar > 0):
        raise ValueError("omega and hbar must be positive")
    scale = math.sqrt(omega / params.hbar)
    xi = grid.x * scale
    prev = np.zeros_like(xi)
    cur = (omega / (math.pi * params.hbar)) ** 0.25 * np.exp(-0.5 * xi * xi)
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * xi * cur - math.sqrt(k / (k + 1)) * prev
    peak = np.abs(cur).max()
    k_max = math.sqrt(2 * n + 1) * scale
    if grid.dx * k_max > 0.5 or max(abs(cur[0]), abs(cur[-1])) > 1e-6 * peak:
        raise ValueError(f"grid cannot resolve oscillator state n={n}")
    return Wavefunction1D(grid, cur.astype(complex))


@dataclass(frozen=True)
class Peak:
    energy: float
    weight: float
    energy_unshifted: Optional[float] = None


@dataclass(frozen=True)
class SpectrumResult:
    peaks: list
    resolution: float
    omega: Optional[float] = None
    energies: np.ndarray = field(default=None, repr=False)
    amplitude: np.ndarray = field(default=None, repr=False)

    def shifted(self) -> list:
        return [p.energy for p in self.peaks]

    def unshifted(self) -> list:
        return [p.energy_unshifted for p in self.peaks]


def energy_spectrum(correlations, dt_sample: float, params: PhysicalParams, omega: Optional[float] = None,
                    threshold: float = 0.05, min_separation: Optional[float] = None,
                    oversample: int = 16) -> SpectrumResult:
    """Peaks of the Hann-windowed Fourier transform of C(t_j) = <psi(0), psi(t_j)>.

    C is normalised by C(0), so a peak's weight is the squared normalised
    overlap of psi(0) with that eigenstate.  Peak energies are located on a
    zero-padded transform and refined by parabolic interpolation.  When the
    oscillator ``omega`` is known each peak also carries E + hbar*omega/2,
    undoing the -hbar*omega/2 shift of the evolved equation.
    """
    c = np.asarray(correlations, dtype=complex)
    n = len(c)
    if n < 16:
        raise ValueError("correlation record too short")
    if not dt_sample > 0:
        raise ValueError("dt_sample must be positive")
    hb = params.hbar
    resolution = 2.0 * math.pi * hb / (n * dt_sample)
    if min_separation is not None and resolution > min_separation:
        raise ValueError(f"record too short: resolution {resolution:.3g} exceeds requested separation {min_separation:.3g}")
    if c[0] == 0:
        raise ValueError("C(0) vanishes; psi(0) is zero")
    c = c / c[0].real
    window = np.hanning(n)
    nfft = oversample * (1 << (n - 1).bit_length())
    spec = np.fft.fftshift(np.fft.ifft(c * window, nfft)) * nfft
    amp = np.abs(spec) / window.sum()
    energies = hb * 2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(nfft, d=dt_sample))
    d_e = energies[1] - energies[0]
    cut = threshold * amp.max()
    inner = amp[1:-1]
    is_peak = (inner >= amp[:-2]) & (inner > amp[2:]) & (inner >= cut)
    peaks = []
    for k in np.flatnonzero(is_peak) + 1:
        a, b, g = amp[k - 1], amp[k], amp[k + 1]
        denom = a - 2.0 * b + g
        delta = 0.5 * (a - g) / denom if denom != 0 else 0.0
        e = energies[k] + delta * d_e
        w = b - 0.25 * (a - g) * delta
        peaks.append(Peak(float(e), float(w), None if omega is None else float(e + 0.5 * hb * omega)))
    peaks.sort(key=lambda p: p.energy)
    return SpectrumResult(peaks, resolution, omega, energies, amp)


def pair_autocorrelation(pair0: FieldPair1D, s: Superpotential, params: PhysicalParams, domain: Domain,
                         t_record: float, dt_sample: float, substeps: int, backend=None):
    """C(t_j) from the classical route: evolve the field pair, assemble psi, overlap with psi(0).

    Overlaps are taken over the scoring window of ``domain``.
    """
    n = int(round(t_record / dt_sample))
    dt = dt_sample / substeps
    win = domain.window
    xw = domain.grid.x[win]
    psi0 = assemble_psi(pair0, s, params).psi[win]
    out = np.empty(n, dtype=complex)
    p = pair0
    for j in range(n):
        if j:
            p = evolve_pair(p, s, params, dt, substeps, backend=backend)
        psi = assemble_psi(p, s, params).psi[win]
        out[j] = np.trapezoid(np.conj(psi0) * psi, xw)
    return dt_sample * np.arange(n), out


def schrodinger_autocorrelation(w0: Wavefunction1D, v: PotentialSamples, params: PhysicalParams,
                                t_record: float, dt_sample: float, substeps: int, window: slice = slice(None),
                                backend=None):
    """C(t_j) from direct Crank-Nicolson evolution of psi."""
    n = int(round(t_record / dt_sample))
    dt = dt_sample / substeps
    xw = w0.grid.x[window]
    psi0 = w0.psi[window]
    out = np.empty(n, dtype=complex)
    w = w0
    for j in range(n):
        if j:
            w = schrodinger_evolve(w, v, params, dt, substeps, backend=backend)
        out[j] = np.trapezoid(np.conj(psi0) * w.psi[window], xw)
    return dt_sample * np.arange(n), out


def write_spectrum_csv(path, result: SpectrumResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["energy_shifted", "energy_unshifted", "weight"])
        for p in result.peaks:
            unshifted = "" if p.energy_unshifted is None else f"{p.energy_unshifted:.17g}"
            w.writerow([f"{p.energy:.17g}", unshifted, f"{p.weight:.17g}"])


def write_correlation_record_csv(path, t, c):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "re_c", "im_c"])
        for tj, cj in zip(t, c):
            w.writerow([f"{tj:.17g}", f"{cj.real:.17g}", f"{cj.imag:.17g}"])
