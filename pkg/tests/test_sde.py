import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cqsim.bath import BathConfig
from cqsim.field import HolomorphicField, Point2
from cqsim.rng import stream, worker_count
from cqsim.sde import (DegenerateEnsembleError, PhysicalParams, SdeConfig, ensemble_average, mc_average_field,
                       noise_block, simulate_paths, start_points_on_line, step, white_increment,
                       write_endpoints_csv)
from cqsim.superpotential import drift_function, oscillator_superpotential, zero_superpotential

OSC = oscillator_superpotential(1.0)
P1 = PhysicalParams(1.0)


def test_params_validation():
    PhysicalParams(0.0)
    with pytest.raises(ValueError):
        PhysicalParams(-1.0)
    with pytest.raises(ValueError):
        SdeConfig(dt=0.0)
    with pytest.raises(ValueError):
        SdeConfig(dt=1e-3, t_final=0.5005 + 1e-7)
    assert SdeConfig(dt=1e-3, t_final=0.5).n_steps == 500


def test_step_without_noise_is_euler_rotation():
    p = step(Point2(1.0, 0.0), drift_function(OSC), 0.0, 0.1)
    assert (p.x1, p.x2) == pytest.approx((1.0, -0.1))
    with pytest.raises(ValueError):
        step(Point2(1.0, 0.0), drift_function(OSC), 0.0, -0.1)


def test_step_kick_along_diagonal():
    p = step(Point2(0.0, 0.0), drift_function(zero_superpotential()), math.sqrt(2.0), 0.1)
    assert (p.x1, p.x2) == pytest.approx((1.0, 1.0))


def test_white_increment_variance():
    inc = white_increment(stream(3, 0), PhysicalParams(0.5), 0.01, 200000)
    assert abs(inc.mean()) < 4 * math.sqrt(0.005 / 200000)
    assert inc.var() == pytest.approx(0.005, rel=0.02)


def test_zero_hbar_is_deterministic():
    cfg = SdeConfig(dt=1e-2, t_final=1.0, n_paths=3)
    ends = simulate_paths(cfg, PhysicalParams(0.0), [Point2(1.0, 0.0)], OSC)
    # exact Euler map for the rotation: (1 - i dt)^n
    want = (1 - 0.01j) ** 100
    assert np.allclose(ends.x1, want.real) and np.allclose(ends.x2, want.imag)


def test_streams_reproducible_and_distinct():
    a = stream(1, 5).standard_normal(4)
    assert np.array_equal(a, stream(1, 5).standard_normal(4))
    assert not np.array_equal(a, stream(1, 6).standard_normal(4))
    assert not np.array_equal(a, stream(2, 5).standard_normal(4))
    with pytest.raises(ValueError):
        stream(-1, 0)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("CQSIM_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    with pytest.raises(ValueError):
        worker_count(0)


@pytest.mark.parametrize("noise", ["white", BathConfig(n_modes=256, d_omega=0.25)])
def test_determinism_across_workers_and_blocks(noise):
    starts = start_points_on_line([-1.0, 0.0, 0.5])
    cfg = SdeConfig(dt=1e-2, t_final=0.3, n_paths=300, master_seed=11, noise=noise, block_size=64)
    a = simulate_paths(cfg, P1, starts, OSC, workers=1)
    b = simulate_paths(cfg, P1, starts, OSC, workers=4)
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2)
    # block size only changes the split, not the streams
    from dataclasses import replace
    c = simulate_paths(replace(cfg, block_size=300), P1, starts, OSC, workers=2)
    assert np.array_equal(a.x1, c.x1) and np.array_equal(a.x2, c.x2)


def test_backends_agree_bitwise():
    starts = start_points_on_line([-2.0, 0.0, 1.5])
    cfg = SdeConfig(dt=1e-3, t_final=0.2, n_paths=200, master_seed=4)
    s = __import__("cqsim").Superpotential.from_coeffs([0, 0, 0.5, 0, 0.05])
    a = simulate_paths(cfg, P1, starts, s, backend="python")
    b = simulate_paths(cfg, P1, starts, s, backend="cython")
    assert np.array_equal(a.x1, b.x1) and np.array_equal(a.x2, b.x2)


def test_common_noise_across_starts():
    # zero drift: endpoint minus start is the same kick for every start
    cfg = SdeConfig(dt=1e-2, t_final=0.5, n_paths=50)
    ends = simulate_paths(cfg, P1, start_points_on_line([0.0, 3.0]), zero_superpotential())
    assert np.allclose(ends.x1[:, 1] - ends.x1[:, 0], 3.0)
    assert np.allclose(ends.x2[:, 1], ends.x2[:, 0])


def test_all_escaped_is_an_error():
    cfg = SdeConfig(dt=1e-2, t_final=0.5, n_paths=20, escape_radius=1e-3)
    with pytest.raises(DegenerateEnsembleError):
        simulate_paths(cfg, P1, [Point2(0.0, 0.0)], zero_superpotential())


def test_escape_flags_and_freeze():
    cfg = SdeConfig(dt=1e-2, t_final=1.0, n_paths=400, escape_radius=1.0)
    ends = simulate_paths(cfg, P1, [Point2(0.0, 0.0)], zero_superpotential())
    esc = ends.escaped[:, 0]
    assert 0 < esc.sum() < 400
    r = np.hypot(ends.x1[esc, 0], ends.x2[esc, 0])
    assert (r > 1.0).all() and (r < 1.5).all()
    m1, _, _, _ = mc_average_field(HolomorphicField.monomial(0), ends.x1[:, 0], ends.x2[:, 0], esc)
    assert m1 == 1.0


def test_mc_average_field_simple():
    m1, m2, s1, s2 = mc_average_field(HolomorphicField.monomial(1), [1.0, 3.0], [0.0, 2.0])
    assert (m1, m2) == (2.0, 1.0)
    assert s1 == pytest.approx(1.0) and s2 == pytest.approx(1.0)
    with pytest.raises(DegenerateEnsembleError):
        mc_average_field(HolomorphicField.monomial(1), [1.0], [0.0])


@pytest.mark.parametrize("m", [1, 2])
def test_mc_mean_matches_closed_form(m):
    # [DERIVED] oscillator, hbar = 1: u = z gives x e^{-it}; u = z^2 gives (x^2 - 1/2) e^{-2it} + 1/2
    xs = [-1.0, 0.0, 1.5]
    t = 0.5
    cfg = SdeConfig(dt=1e-3, t_final=t, n_paths=20000, master_seed=2)
    res = ensemble_average(HolomorphicField.monomial(m), simulate_paths(cfg, P1, start_points_on_line(xs), OSC))
    for i, x in enumerate(xs):
        want = x * np.exp(-1j * t) if m == 1 else (x * x - 0.5) * np.exp(-2j * t) + 0.5
        assert abs(res.mean_u1[i] - want.real) <= 4 * res.stderr_u1[i] + 1e-3
        assert abs(res.mean_u2[i] - want.imag) <= 4 * res.stderr_u2[i] + 1e-3


def test_bath_noise_block_variance():
    # [DERIVED] Var of the integral of eta over a window w is hbar (d_omega/pi) sum_k 2 (1 - cos w_k w) / w_k^2;
    # it approaches hbar * w only once w >> 1/omega_max
    bath = BathConfig(n_modes=4096, d_omega=1 / 16)
    cfg = SdeConfig(dt=1e-2, t_final=0.2, n_paths=2000, noise=bath)
    inc = noise_block(cfg, P1, 0, 2000)
    assert inc.shape == (2000, 20)
    w = bath.omegas

    def var(win):
        return bath.d_omega / math.pi * np.sum(2 * (1 - np.cos(w * win)) / w ** 2)

    assert inc[:, 7].var() == pytest.approx(var(0.01), rel=0.12)
    assert inc.sum(axis=1).var() == pytest.approx(var(0.2), rel=0.12)
    assert var(0.2) == pytest.approx(0.2, rel=0.02)


@given(st.integers(0, 2 ** 63), st.integers(0, 1000))
def test_stream_keys(seed, idx):
    assert stream(seed, idx).standard_normal() == stream(seed, idx).standard_normal()


def test_endpoints_csv(tmp_path):
    cfg = SdeConfig(dt=1e-2, t_final=0.1, n_paths=5)
    ends = simulate_paths(cfg, P1, start_points_on_line([0.0]), OSC)
    write_endpoints_csv(tmp_path / "e.csv", ends)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "path_id,x1,x2,escaped" and len(lines) == 6
    assert float(lines[1].split(",")[1]) == ends.x1[0, 0]
