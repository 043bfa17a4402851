import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import eval_hermite

from cqsim.field import FieldPair1D, Grid1D, HolomorphicField, restrict_to_line
from cqsim.pde import Wavefunction1D, padded_domain
from cqsim.sde import PhysicalParams
from cqsim.spectral import (assemble_psi, energy_spectrum, hermite_state, inner_product, pair_autocorrelation,
                            schrodinger_autocorrelation, write_correlation_record_csv, write_spectrum_csv)
from cqsim.superpotential import oscillator_superpotential, riccati_potential

OSC = oscillator_superpotential(1.0)
P1 = PhysicalParams(1.0)
G8 = Grid1D.from_spacing(-8, 8, 0.01)


def test_assemble_psi_examples():
    g = Grid1D(-2, 2, 401)
    one = assemble_psi(FieldPair1D(g, np.ones(g.n), np.zeros(g.n)), OSC, P1)
    i0, i1 = g.index_of(0.0), g.index_of(1.0)
    assert one.psi[i0] == 1.0
    assert one.psi[i1] == pytest.approx(0.60653, abs=1e-5)
    assert not assemble_psi(FieldPair1D(g, np.zeros(g.n), np.zeros(g.n)), OSC, P1).psi.any()
    odd = assemble_psi(restrict_to_line(HolomorphicField.monomial(1), g), OSC, P1).psi
    assert np.allclose(odd, g.x * np.exp(-g.x ** 2 / 2))
    assert np.allclose(odd, -odd[::-1])
    with pytest.raises(ValueError):
        assemble_psi(FieldPair1D(g, np.ones(g.n), np.zeros(g.n)), OSC, PhysicalParams(0.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_assemble_psi_linear(a, b):
    g = Grid1D(-3, 3, 61)
    p = restrict_to_line(HolomorphicField((1, 2j)), g)
    q = restrict_to_line(HolomorphicField((0, 0, 1)), g)
    comb = FieldPair1D(g, a * p.u1 + b * q.u1, a * p.u2 + b * q.u2)
    want = a * assemble_psi(p, OSC, P1).psi + b * assemble_psi(q, OSC, P1).psi
    assert np.allclose(assemble_psi(comb, OSC, P1).psi, want, atol=1e-12)


def test_inner_product_examples():
    phi0 = hermite_state(0, 1.0, P1, G8)
    phi1 = hermite_state(1, 1.0, P1, G8)
    assert inner_product(phi0, phi0) == pytest.approx(1.0, abs=1e-8)
    assert abs(inner_product(phi0, phi1)) < 1e-10
    a = Wavefunction1D(G8, phi0.psi * (1 + 0.3j * G8.x))
    assert inner_product(a, Wavefunction1D(G8, 1j * a.psi)) == 1j * inner_product(a, a)
    with pytest.raises(ValueError):
        inner_product(phi0, hermite_state(0, 1.0, P1, Grid1D.from_spacing(-8, 8, 0.02)))


def test_hermite_examples():
    phi0 = hermite_state(0, 1.0, P1, G8)
    assert phi0.psi[G8.index_of(0.0)].real == pytest.approx(0.7511, abs=1e-4)
    assert np.allclose(phi0.psi, np.pi ** -0.25 * np.exp(-G8.x ** 2 / 2))
    assert abs(hermite_state(1, 1.0, P1, G8).psi[G8.index_of(0.0)]) < 1e-15


@pytest.mark.parametrize("omega,hbar", [(1.0, 1.0), (2.0, 0.5), (0.5, 1.5)])
def test_hermite_against_explicit_polynomials(omega, hbar):
    # [DERIVED] phi_n = (a/pi)^{1/4} / sqrt(2^n n!) H_n(sqrt(a) x) exp(-a x^2 / 2), a = omega / hbar
    g = Grid1D.from_spacing(-15, 15, 0.01)
    a = omega / hbar
    for n in range(6):
        want = (a / np.pi) ** 0.25 / math.sqrt(2.0 ** n * math.factorial(n)) \
            * eval_hermite(n, math.sqrt(a) * g.x) * np.exp(-a * g.x ** 2 / 2)
        assert np.allclose(hermite_state(n, omega, PhysicalParams(hbar), g).psi.real, want, atol=1e-12)


def test_hermite_orthonormal():
    states = [hermite_state(n, 1.0, P1, G8) for n in range(6)]
    gram = np.array([[inner_product(a, b) for b in states] for a in states])
    assert np.allclose(gram, np.eye(6), atol=1e-8)


def test_hermite_errors():
    with pytest.raises(ValueError):
        hermite_state(11, 1.0, P1, G8)
    with pytest.raises(ValueError):
        hermite_state(10, 1.0, P1, Grid1D(-3, 3, 200))
    with pytest.raises(ValueError):
        hermite_state(8, 1.0, P1, Grid1D.from_spacing(-8, 8, 0.5))
    hermite_state(10, 1.0, P1, Grid1D.from_spacing(-9, 9, 0.01))


def phasors(energies, weights, n=4000, dt=0.05, t0=0.0):
    t = t0 + dt * np.arange(n)
    return sum(w * np.exp(-1j * e * t) for e, w in zip(energies, weights))


def test_pure_phasor_peak():
    r = energy_spectrum(phasors([1.0], [1.0]), 0.05, P1)
    assert r.resolution == pytest.approx(2 * np.pi / 200, rel=1e-12)
    assert len(r.peaks) == 1
    assert abs(r.peaks[0].energy - 1.0) < r.resolution
    assert r.peaks[0].weight == pytest.approx(1.0, abs=0.01)
    assert r.peaks[0].energy_unshifted is None


def test_record_too_short():
    with pytest.raises(ValueError):
        energy_spectrum(phasors([1.0], [1.0], n=8), 0.05, P1)
    with pytest.raises(ValueError):
        energy_spectrum(phasors([1.0], [1.0], n=100), 0.05, P1, min_separation=0.5)
    with pytest.raises(ValueError):
        energy_spectrum(np.zeros(100), 0.05, P1)


@given(st.lists(st.floats(0.2, 1.0), min_size=3, max_size=3), st.floats(-50, 50))
def test_peaks_invariant_under_time_origin(w, t0):
    energies = [0.0, 1.0, 2.5]
    # Hann sidelobes stay under 3% of a peak, below the 5% default threshold
    a = energy_spectrum(phasors(energies, w), 0.05, P1)
    b = energy_spectrum(phasors(energies, w, t0=t0), 0.05, P1)
    assert len(a.peaks) == len(b.peaks) == 3
    for pa, pb, e in zip(a.peaks, b.peaks, energies):
        assert abs(pa.energy - pb.energy) < 1e-3 and abs(pa.energy - e) < 1e-3
    weights = np.array(w) / sum(w)
    assert np.allclose([p.weight for p in a.peaks], weights, atol=2e-3)


def overlap_weights(psi, nmax=6):
    norm = inner_product(psi, psi).real
    return np.array([abs(inner_product(hermite_state(n, 1.0, P1, psi.grid), psi)) ** 2 / norm
                     for n in range(nmax)])


@pytest.mark.parametrize("field,levels", [((1, 1), [0, 1]), ((0, 0, 1), [0, 2])])
def test_oscillator_spectrum_from_pair(field, levels):
    base = Grid1D.from_spacing(-8, 8, 0.05)
    dom = padded_domain(base, OSC, P1)
    p0 = restrict_to_line(HolomorphicField(field), dom.grid)
    _, c = pair_autocorrelation(p0, OSC, P1, dom, 100.0, 0.05, 20)
    psi0 = assemble_psi(p0, OSC, P1)
    assert np.abs(c).max() <= abs(c[0]) * (1 + 1e-6)
    r = energy_spectrum(c, 0.05, P1, omega=1.0)
    assert [round(p.energy) for p in r.peaks] == levels
    w = overlap_weights(psi0)
    for p, n in zip(r.peaks, levels):
        assert abs(p.energy - n) < 0.05
        assert p.energy_unshifted == pytest.approx(p.energy + 0.5)
        assert p.weight == pytest.approx(w[n], abs=0.01)
    assert sum(p.weight for p in r.peaks) <= 1 + 1e-3


def test_schrodinger_route_agrees():
    g = Grid1D.from_spacing(-10, 10, 0.05)
    psi0 = Wavefunction1D(g, ((1 + g.x) * np.exp(-g.x ** 2 / 2)).astype(complex))
    _, c = schrodinger_autocorrelation(psi0, riccati_potential(OSC, 1.0, g), P1, 100.0, 0.05, 5)
    r = energy_spectrum(c, 0.05, P1, omega=1.0)
    assert [round(p.energy) for p in r.peaks] == [0, 1]
    assert np.allclose([p.weight for p in r.peaks], [2 / 3, 1 / 3], atol=0.01)


def test_csv_outputs(tmp_path):
    r = energy_spectrum(phasors([0.0, 1.0], [0.5, 0.5]), 0.05, P1, omega=1.0)
    write_spectrum_csv(tmp_path / "s.csv", r)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "energy_shifted,energy_unshifted,weight" and len(lines) == 3
    write_correlation_record_csv(tmp_path / "c.csv", [0.0, 0.05], [1 + 0j, 0.5 - 0.5j])
    assert (tmp_path / "c.csv").read_text().splitlines() == ["t,re_c,im_c", "0,1,0", "0.050000000000000003,0.5,-0.5"]
