"""Experiment pipelines.  Each writes its CSVs into ``out`` and returns a list of Checks."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bath import BathConfig, bath_correlation, write_correlation_csv
from .config import ExperimentConfig, SuperpotentialSpec, with_overrides
from .field import Grid1D, Grid2, HolomorphicField, cr_residual, restrict_to_line, sample_field
from .pde import (Wavefunction1D, evolve_pair, padded_domain, sample_pair, schrodinger_evolve,
                  step_generator_2d, write_wavefunction_csv)
from .sde import (PhysicalParams, SdeConfig, ensemble_average, simulate_paths, start_points_on_line,
                  write_endpoints_csv)
from .spectral import (assemble_psi, energy_spectrum, hermite_state, pair_autocorrelation,
                       schrodinger_autocorrelation, write_correlation_record_csv, write_spectrum_csv)
from .superpotential import Superpotential, riccati_potential

log = logging.getLogger("cqsim")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    metric: float
    tolerance: float


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_summary_csv(path, checks):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "result", "metric", "tolerance"])
        for c in checks:
            w.writerow([c.name, "pass" if c.passed else "fail", _fmt(c.metric), _fmt(c.tolerance)])


def _record(checks, name, metric, tol, passed=None):
    passed = bool(metric <= tol) if passed is None else bool(passed)
    checks.append(Check(name, passed, float(metric), float(tol)))
    log.info("check %s: %s (metric %.6g, tolerance %.6g)", name, "pass" if passed else "fail", metric, tol)


def _base_grid(cfg: ExperimentConfig) -> Grid1D:
    g = cfg.grid
    return Grid1D.from_spacing(g.x_min, g.x_max, g.dx)


def _domain(cfg: ExperimentConfig, s: Superpotential, params: PhysicalParams):
    g = cfg.grid
    return padded_domain(_base_grid(cfg), s, params, g.pad_fraction, g.peclet_max, g.margin_fraction)


def _steps(t_final: float, dt: float):
    n = max(1, int(math.ceil(t_final / dt - 1e-9)))
    return n, t_final / n


def _l2(a, b, x) -> float:
    return math.sqrt(float(np.trapezoid(np.abs(a - b) ** 2, x)))


def run_mc_vs_pde(cfg: ExperimentConfig, out: Path, tag: str = "", workers=None, write_endpoints=False):
    """Monte Carlo field average against the line PDE at each start point."""
    s = cfg.superpotential_obj()
    u = cfg.field_obj()
    params = PhysicalParams(cfg.hbar)
    sc = cfg.sde
    if sc.noise == "bath":
        noise = BathConfig(cfg.bath.n_modes, cfg.bath.d_omega, cfg.hbar, cfg.bath.n_realizations, cfg.master_seed)
    else:
        noise = "white"
    sde_cfg = SdeConfig(sc.dt, sc.t_final, sc.n_paths, cfg.master_seed, noise, sc.escape_radius)
    starts = np.array(sc.starts, dtype=float)

    dom = _domain(cfg, s, params)
    xw = dom.x_window
    if starts.min() < xw[0] or starts.max() > xw[-1]:
        raise ValueError(f"start points must lie in the PDE scoring window [{xw[0]:.6g}, {xw[-1]:.6g}]")
    n, dt = _steps(sc.t_final, cfg.pde.dt)
    log.info("%smc_vs_pde: PDE grid [%g, %g] n=%d, %d steps of %g", tag, dom.grid.x_min, dom.grid.x_max,
             dom.grid.n, n, dt)
    p = evolve_pair(restrict_to_line(u, dom.grid), s, params, dt, n)
    pde1, pde2 = sample_pair(p, starts)

    log.info("%smc_vs_pde: %d paths x %d starts, noise=%s", tag, sc.n_paths, len(starts), sc.noise)
    ends = simulate_paths(sde_cfg, params, start_points_on_line(starts), s, workers=workers)
    res = ensemble_average(u, ends)
    with open(out / f"{tag}mc_vs_pde.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "mc_u1", "mc_u2", "stderr_u1", "stderr_u2", "pde_u1", "pde_u2", "n_escaped"])
        for i, x in enumerate(starts):
            w.writerow([_fmt(x), _fmt(res.mean_u1[i]), _fmt(res.mean_u2[i]), _fmt(res.stderr_u1[i]),
                        _fmt(res.stderr_u2[i]), _fmt(pde1[i]), _fmt(pde2[i]), int(res.n_escaped[i])])
    if write_endpoints:
        write_endpoints_csv(out / f"{tag}endpoints.csv", ends, start_index=len(starts) // 2)

    d1 = np.abs(res.mean_u1 - pde1)
    d2 = np.abs(res.mean_u2 - pde2)
    within = (d1 <= sc.n_sigma * res.stderr_u1) & (d2 <= sc.n_sigma * res.stderr_u2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.nan_to_num(np.maximum(d1 / res.stderr_u1, d2 / res.stderr_u2), nan=0.0)
    checks = []
    _record(checks, f"{tag}mc_vs_pde", float(z.max()), sc.n_sigma, within.all())
    _record(checks, f"{tag}mc_vs_pde_abs", float(max(d1.max(), d2.max())), sc.abs_tol,
            max(d1.max(), d2.max()) < sc.abs_tol)
    frac = float(res.n_escaped.max()) / sc.n_paths
    _record(checks, f"{tag}escape_fraction", frac, sc.max_escape_fraction, frac < sc.max_escape_fraction
            or frac == 0.0)
    return checks


def run_schrodinger_check(cfg: ExperimentConfig, out: Path, tag: str = ""):
    """Assembled pair against direct Schrodinger evolution, plus the Riccati zero mode."""
    s = cfg.superpotential_obj()
    params = PhysicalParams(cfg.hbar)
    pc = cfg.pde
    n, dt = _steps(pc.t_final, pc.dt)
    dom = _domain(cfg, s, params)
    pair0 = restrict_to_line(cfg.field_obj(), dom.grid)
    log.info("%sschrodinger_check: grid [%g, %g] n=%d, window [%g, %g], %d steps of %g", tag, dom.grid.x_min,
             dom.grid.x_max, dom.grid.n, dom.x_window[0], dom.x_window[-1], n, dt)
    psi_pair = assemble_psi(evolve_pair(pair0, s, params, dt, n), s, params)
    v = riccati_potential(s, params.hbar, dom.grid)
    psi_direct = schrodinger_evolve(assemble_psi(pair0, s, params), v, params, dt, n)
    win = dom.window
    wg = Grid1D(float(dom.x_window[0]), float(dom.x_window[-1]), len(dom.x_window))
    write_wavefunction_csv(out / f"{tag}psi_pair.csv", Wavefunction1D(wg, psi_pair.psi[win]))
    write_wavefunction_csv(out / f"{tag}psi_schrodinger.csv", Wavefunction1D(wg, psi_direct.psi[win]))
    checks = []
    _record(checks, f"{tag}schrodinger_correspondence",
            _l2(psi_pair.psi[win], psi_direct.psi[win], dom.x_window), pc.tol)

    if not s.is_normalizable():
        log.warning("%szero-mode check skipped: exp(-S1/hbar) is not normalizable", tag)
        return checks
    g = _base_grid(cfg)
    psi0 = Wavefunction1D(g, np.exp(-s.s1_line(g.x) / params.hbar).astype(complex))
    w = schrodinger_evolve(psi0, riccati_potential(s, params.hbar, g), params, dt, n)
    n0 = float(np.trapezoid(np.abs(psi0.psi) ** 2, g.x))
    n1 = float(np.trapezoid(np.abs(w.psi) ** 2, g.x))
    _record(checks, f"{tag}riccati_zero_mode", _l2(w.psi, psi0.psi, g.x) / math.sqrt(n0), pc.zero_mode_tol)
    _record(checks, f"{tag}norm_drift", abs(n1 - n0) / n0, pc.norm_tol)
    return checks


def oscillator_overlaps(psi: Wavefunction1D, omega: float, params: PhysicalParams, n_max: int = 10):
    """Squared normalised overlaps |<phi_n, psi>|^2 / <psi, psi>, for n up to the grid's limit."""
    x = psi.grid.x
    norm = float(np.trapezoid(np.abs(psi.psi) ** 2, x))
    out = []
    for k in range(n_max + 1):
        try:
            phi = hermite_state(k, omega, params, psi.grid)
        except ValueError:
            break
        out.append(abs(np.trapezoid(np.conj(phi.psi) * psi.psi, x)) ** 2 / norm)
    return np.array(out)


def run_spectrum(cfg: ExperimentConfig, out: Path, tag: str = ""):
    """Energy peaks of the assembled pair's autocorrelation."""
    s = cfg.superpotential_obj()
    params = PhysicalParams(cfg.hbar)
    sp = cfg.spectrum
    dom = _domain(cfg, s, params)
    pair0 = restrict_to_line(cfg.field_obj(), dom.grid)
    omega = cfg.superpotential.oscillator_omega
    log.info("%sspectrum: grid [%g, %g] n=%d, T=%g, dt_sample=%g, %d substeps", tag, dom.grid.x_min,
             dom.grid.x_max, dom.grid.n, sp.t_record, sp.dt_sample, sp.substeps)
    t, c = pair_autocorrelation(pair0, s, params, dom, sp.t_record, sp.dt_sample, sp.substeps)
    res = energy_spectrum(c, sp.dt_sample, params, omega=omega, threshold=sp.threshold)
    write_correlation_record_csv(out / f"{tag}correlation.csv", t, c)
    write_spectrum_csv(out / f"{tag}spectrum.csv", res)

    # independent route: Crank-Nicolson evolution of psi itself
    psi0 = assemble_psi(pair0, s, params)
    v = riccati_potential(s, params.hbar, dom.grid)
    _, c_ref = schrodinger_autocorrelation(psi0, v, params, sp.t_record, sp.dt_sample, sp.substeps,
                                           window=dom.window)
    ref = energy_spectrum(c_ref, sp.dt_sample, params, omega=omega, threshold=sp.threshold)
    checks = []
    e, e_ref = res.shifted(), ref.shifted()
    same = len(e) == len(e_ref)
    dev = max((abs(a - b) for a, b in zip(e, e_ref)), default=0.0) if same else math.inf
    _record(checks, f"{tag}spectrum_vs_schrodinger", dev, sp.tol, same and dev <= sp.tol)

    if omega is not None:
        hw = params.hbar * omega
        wts = oscillator_overlaps(psi0, omega, params)
        expected = [k for k, wk in enumerate(wts) if wk >= sp.threshold * wts.max()]
        levels = [int(round(p.energy / hw)) for p in res.peaks]
        matched = levels == expected
        dev = max((abs(p.energy - k * hw) for p, k in zip(res.peaks, levels)), default=0.0)
        dev_u = max((abs(p.energy_unshifted - (k + 0.5) * hw) for p, k in zip(res.peaks, levels)), default=0.0)
        extra = len(set(levels) ^ set(expected)) + len(levels) - len(set(levels))
        _record(checks, f"{tag}spectrum_levels", dev, sp.tol, matched and dev <= sp.tol)
        _record(checks, f"{tag}spectrum_unshifted", dev_u, sp.tol, matched and dev_u <= sp.tol)
        _record(checks, f"{tag}spectrum_spurious", float(extra), 0.0)
        if matched:
            wdev = max((abs(p.weight - wts[k]) for p, k in zip(res.peaks, levels)), default=0.0)
            _record(checks, f"{tag}spectrum_weights", wdev, sp.tol)
    return checks


def correlation_lags(cfg: ExperimentConfig) -> np.ndarray:
    n = int(round(cfg.bath.tau_max / cfg.bath.tau_step))
    return cfg.bath.tau_step * np.arange(-n, n + 1)


def run_bath_correlation(cfg: ExperimentConfig, out: Path, tag: str = ""):
    bs = cfg.bath
    bc = BathConfig(bs.n_modes, bs.d_omega, cfg.hbar, bs.n_realizations, cfg.master_seed)
    lags = correlation_lags(cfg)
    log.info("%sbath_correlation: K=%d, d_omega=%g, M=%d, %d reference times", tag, bs.n_modes, bs.d_omega,
             bs.n_realizations, bs.n_ref)
    est = bath_correlation(bc, lags, n_ref=bs.n_ref, ref_spacing=bs.ref_spacing)
    write_correlation_csv(out / f"{tag}bath_correlation.csv", est, bc)
    checks = []
    if bs.n_modes == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(est.c_hat - est.analytic) / est.stderr
        _record(checks, f"{tag}bath_single_mode", float(np.nanmax(z)), bs.n_sigma)
        return checks
    target = cfg.hbar * bc.omega_max / math.pi
    i0 = len(lags) // 2
    c0 = est.c_hat[i0]
    _record(checks, f"{tag}bath_c0", abs(c0 - target) / target, bs.c0_rtol)
    integral = float(np.trapezoid(est.c_hat, lags))
    _record(checks, f"{tag}bath_integral", abs(integral - cfg.hbar) / cfg.hbar, bs.integral_rtol)
    tail = np.abs(lags) >= bs.tail_tau - 1e-12
    ratio = float(np.abs(est.c_hat[tail]).max() / c0) if tail.any() else 0.0
    _record(checks, f"{tag}bath_tail", ratio, bs.tail_ratio, ratio < bs.tail_ratio)
    return checks


def cr_preservation_residual(s: Superpotential, params: PhysicalParams, f: HolomorphicField, n: int, dx: float,
                             dt: float, t_final: float, margin_fraction: float = 0.3) -> float:
    """Max CR residual of a sampled field after stepping d_t u = H u on an n x n grid.

    Fourth-order stencils throughout; the residual is read on the central
    window left after dropping ``margin_fraction`` of the grid per side, away
    from the one-sided edge stencils.
    """
    g = sample_field(f, Grid2.centered(n, dx))
    steps, dt = _steps(t_final, dt)
    g = step_generator_2d(g, s, params, dt, steps, order=4)
    return max(cr_residual(g, order=4, margin=int(margin_fraction * n)))


QUARTIC = (0.0, 0.0, 0.5, 0.0, 0.05)


def run_validate(cfg: ExperimentConfig, out: Path, workers=None):
    """Reduced-size pass over every module's checks.  Deterministic for a given master seed."""
    checks = []
    base = with_overrides(cfg, grid={"x_min": -8.0, "x_max": 8.0, "dx": 0.01})
    osc_sp = SuperpotentialSpec(omega=1.0)
    quartic_sp = SuperpotentialSpec(coeffs=QUARTIC)

    mc = with_overrides(base, superpotential=osc_sp, initial_field=((0.0, 0.0), (1.0, 0.0)),
                        sde={"n_paths": 20000, "noise": "white", "abs_tol": 0.05}, pde={"dt": 1e-4})
    checks += run_mc_vs_pde(mc, out, "mc_white.", workers=workers, write_endpoints=True)
    mc_bath = with_overrides(mc, sde={"n_paths": 2000, "noise": "bath", "starts": (-1.0, 0.0, 1.0),
                                      "abs_tol": 0.1})
    checks += run_mc_vs_pde(mc_bath, out, "mc_bath.", workers=workers, write_endpoints=True)

    for name, sp in (("osc", osc_sp), ("quartic", quartic_sp)):
        sc = with_overrides(base, superpotential=sp, initial_field=((1.0, 0.0), (1.0, 0.0)),
                            grid={"dx": 0.02}, pde={"dt": 2e-4, "t_final": 0.5})
        checks += run_schrodinger_check(sc, out, f"schrodinger_{name}.")

    spec = with_overrides(base, superpotential=osc_sp, initial_field=((1.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
                          grid={"dx": 0.05}, spectrum={"t_record": 100.0})
    checks += run_spectrum(spec, out, "spectrum.")

    bath = with_overrides(base, bath={"n_realizations": 400, "n_ref": 256, "c0_rtol": 0.1,
                                      "integral_rtol": 0.2})
    checks += run_bath_correlation(bath, out, "bath.")
    single = with_overrides(base, bath={"n_modes": 1, "n_realizations": 400, "n_ref": 16,
                                        "tau_max": 10.0, "tau_step": 0.1, "ref_spacing": 1.0})
    checks += run_bath_correlation(single, out, "bath_single.")

    params = PhysicalParams(1.0)
    r = cr_preservation_residual(quartic_sp.build(), params, HolomorphicField.monomial(3), 64, 0.05, 1e-3, 0.1)
    _record(checks, "cr.cr_preservation", r, 1e-3)
    return checks


def run_experiment(cfg: ExperimentConfig, out, workers=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "mc_vs_pde":
        checks = run_mc_vs_pde(cfg, out, workers=workers)
    elif cfg.kind == "schrodinger_check":
        checks = run_schrodinger_check(cfg, out)
    elif cfg.kind == "spectrum":
        checks = run_spectrum(cfg, out)
    elif cfg.kind == "bath_correlation":
        checks = run_bath_correlation(cfg, out)
    elif cfg.kind == "validate":
        checks = run_validate(cfg, out, workers=workers)
    else:
        raise ValueError(f"unknown experiment kind {cfg.kind!r}")
    write_summary_csv(out / "summary.csv", checks)
    return checks
