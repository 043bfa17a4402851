"""Deterministic oscillator bath as a noise source.

Modes q_k with frequencies w_k = k * d_omega (k = 1..K) evolve freely,
q_k(t) = q_k(0) cos w_k t + p_k(0) sin(w_k t) / w_k, and the noise is the
weighted mode sum

    eta(t) = sum_k a * dq_k/dt,    a = sqrt(d_omega / pi).

With thermal initial data (Var q_k(0) = hbar / w_k**2, Var p_k(0) = hbar) the
ensemble correlation is hbar * a**2 * sum_k cos(w_k (t - t')), which tends to
hbar * delta(t - t') as K * d_omega grows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import czt

from .rng import stream

# czt output segments longer than this lose digits in the chirp
_CZT_SEGMENT = 2048


@dataclass(frozen=True)
class BathConfig:
    n_modes: int = 4096
    d_omega: float = 1.0 / 16.0
    hbar: float = 1.0
    n_realizations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if not self.d_omega > 0:
            raise ValueError("d_omega must be positive")
        if self.hbar < 0:
            raise ValueError("hbar must be non-negative")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")

    @property
    def omegas(self) -> np.ndarray:
        return self.d_omega * np.arange(1, self.n_modes + 1)

    @property
    def weight(self) -> float:
        return math.sqrt(self.d_omega / math.pi)

    @property
    def omega_max(self) -> float:
        return self.n_modes * self.d_omega


@dataclass(frozen=True)
class BathState:
    q0: np.ndarray
    p0: np.ndarray


def sample_bath(cfg: BathConfig, rng: np.random.Generator) -> BathState:
    """Independent Gaussians with Var q0_k = hbar / w_k**2 and Var p0_k = hbar."""
    s = math.sqrt(cfg.hbar)
    q0 = rng.standard_normal(cfg.n_modes) * s / cfg.omegas
    p0 = rng.standard_normal(cfg.n_modes) * s
    return BathState(q0, p0)


def eta_bath(state: BathState, cfg: BathConfig, t):
    """Closed-form eta(t); ``t`` may be a scalar or an array."""
    w = cfg.omegas
    tt = np.asarray(t, dtype=float)
    ph = np.multiply.outer(tt, w)
    qdot = -w * state.q0 * np.sin(ph) + state.p0 * np.cos(ph)
    out = cfg.weight * qdot.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def mode_sum_grid(c, d_omega: float, t_start: float, step: float, n: int) -> np.ndarray:
    """sum_k c[..., k-1] * exp(i k d_omega t_j) for t_j = t_start + j * step, j < n.

    Evaluated with a chirp-z transform over the mode index, in output segments.
    """
    c = np.asarray(c, dtype=complex)
    k = np.arange(1, c.shape[-1] + 1)
    theta = d_omega * step
    out = np.empty(c.shape[:-1] + (n,), dtype=complex)
    for j0 in range(0, n, _CZT_SEGMENT):
        m = min(_CZT_SEGMENT, n - j0)
        shifted = c * np.exp(1j * k * d_omega * (t_start + j0 * step))
        seg = czt(shifted, m=m, w=np.exp(1j * theta), axis=-1)
        out[..., j0:j0 + m] = seg * np.exp(1j * theta * np.arange(m))
    return out


def eta_grid(q0, p0, cfg: BathConfig, t_start: float, step: float, n: int) -> np.ndarray:
    """eta on a uniform time grid for a batch of states (rows of q0, p0)."""
    c = cfg.weight * (np.asarray(p0) + 1j * cfg.omegas * np.asarray(q0))
    return mode_sum_grid(c, cfg.d_omega, t_start, step, n).real


def bath_increments(q0, p0, cfg: BathConfig, dt: float, n_steps: int) -> np.ndarray:
    """Exact integrals of eta over [j dt, (j+1) dt] for a batch of states.

    Uses the antiderivative sum_k a q_k(t) sampled on the step grid.
    """
    c = cfg.weight * (np.asarray(q0) - 1j * np.asarray(p0) / cfg.omegas)
    q = mode_sum_grid(c, cfg.d_omega, 0.0, dt, n_steps + 1).real
    return np.diff(q, axis=-1)


def analytic_correlation(cfg: BathConfig, lags) -> np.ndarray:
    """hbar * a**2 * sum_k cos(w_k tau)."""
    lags = np.asarray(lags, dtype=float)
    return cfg.hbar * cfg.weight ** 2 * np.cos(np.multiply.outer(lags, cfg.omegas)).sum(axis=-1)


@dataclass(frozen=True)
class CorrelationEstimate:
    lags: np.ndarray
    c_hat: np.ndarray
    stderr: np.ndarray
    analytic: np.ndarray


def _uniform_step(lags):
    if len(lags) < 2:
        return None
    d = np.diff(lags)
    if d[0] > 0 and np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        return float(d[0])
    return None


def _states(cfg: BathConfig, first: int, count: int):
    q0 = np.empty((count, cfg.n_modes))
    p0 = np.empty((count, cfg.n_modes))
    for i in range(count):
        st = sample_bath(cfg, stream(cfg.seed, first + i))
        q0[i], p0[i] = st.q0, st.p0
    return q0, p0


def bath_correlation(cfg: BathConfig, lags, t0: float = 0.0, n_ref: int = 1,
                     ref_spacing: float = 0.1, batch: int = 32) -> CorrelationEstimate:
    """Monte Carlo estimate of <eta(t_r + tau) eta(t_r)> over bath realizations.

    Reference times are t_r = t0 + r * ref_spacing, r < n_ref.  Each
    realization contributes the average over its reference times, so the
    standard error is over independent realizations only.  With n_ref = 1 this
    is the plain fixed-t0 estimator.
    """
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    M = cfg.n_realizations
    if M < 2:
        raise ValueError("need at least 2 realizations for a standard error")
    if n_ref < 1:
        raise ValueError("n_ref must be >= 1")
    step = _uniform_step(lags)
    shared = None
    if step is not None and n_ref > 1:
        ratio = ref_spacing / step
        if abs(ratio - round(ratio)) < 1e-9 * max(1.0, ratio):
            shared = int(round(ratio))
    ref_times = t0 + ref_spacing * np.arange(n_ref)
    per_real = np.empty((M, len(lags)))
    for first in range(0, M, batch):
        count = min(batch, M - first)
        q0, p0 = _states(cfg, first, count)
        if n_ref == 1:
            eta_ref = np.stack([eta_bath(BathState(q, p), cfg, t0) for q, p in zip(q0, p0)])[:, None]
        else:
            eta_ref = eta_grid(q0, p0, cfg, t0, ref_spacing, n_ref)
        acc = np.zeros((count, len(lags)))
        if shared is not None:
            n_grid = (n_ref - 1) * shared + len(lags)
            g = eta_grid(q0, p0, cfg, t0 + lags[0], step, n_grid)
            for r in range(n_ref):
                acc += g[:, r * shared:r * shared + len(lags)] * eta_ref[:, r:r + 1]
        else:
            for r, tr in enumerate(ref_times):
                if step is not None:
                    g = eta_grid(q0, p0, cfg, tr + lags[0], step, len(lags))
                else:
                    g = np.stack([eta_bath(BathState(q, p), cfg, tr + lags) for q, p in zip(q0, p0)])
                acc += g * eta_ref[:, r:r + 1]
        per_real[first:first + count] = acc / n_ref
    c_hat = per_real.mean(axis=0)
    stderr = per_real.std(axis=0, ddof=1) / math.sqrt(M)
    return CorrelationEstimate(lags, c_hat, stderr, analytic_correlation(cfg, lags))


def write_correlation_csv(path, est: CorrelationEstimate, cfg: BathConfig):
    """Columns tau,c_hat,stderr,analytic; analytic is left empty unless K = 1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "c_hat", "stderr", "analytic"])
        for i, tau in enumerate(est.lags):
            analytic = f"{est.analytic[i]:.17g}" if cfg.n_modes == 1 else ""
            w.writerow([f"{tau:.17g}", f"{est.c_hat[i]:.17g}", f"{est.stderr[i]:.17g}", analytic])
