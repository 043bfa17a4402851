"""Langevin dynamics of the particle and the noise-averaged displacement field.

    dx1 = -d2 S1 dt + n1 dW,    dx2 = -d1 S1 dt + n2 dW,    <dW dW> = hbar dt

with the unit diagonal direction n = (1, 1) / sqrt(2).  Paths are integrated
with Euler-Maruyama; path ``i`` draws its noise from ``rng.stream(seed, i)`` so
results do not depend on the number of worker threads.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .bath import BathConfig, bath_increments, sample_bath
from .field import HolomorphicField, Point2
from .rng import stream, worker_count
from .superpotential import Superpotential

NHAT = 1.0 / math.sqrt(2.0)


class DegenerateEnsembleError(RuntimeError):
    """Too few paths survived to form an average."""


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.hbar >= 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be finite and non-negative, got {self.hbar}")


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 1e-3
    t_final: float = 0.5
    n_paths: int = 10000
    master_seed: int = 0
    noise: Union[str, BathConfig] = "white"
    escape_radius: float = 50.0
    block_size: int = 2048

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError(f"t_final={self.t_final} is not a whole number of steps dt={self.dt}")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not self.escape_radius > 0:
            raise ValueError("escape_radius must be positive")
        if not (self.noise == "white" or isinstance(self.noise, BathConfig)):
            raise ValueError("noise must be 'white' or a BathConfig")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def white_increment(rng: np.random.Generator, params: PhysicalParams, dt: float, size=None):
    """Integral of eta over one step: N(0, hbar * dt)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return rng.standard_normal(size) * math.sqrt(params.hbar * dt)


def step(pos: Point2, drift, inc: float, dt: float) -> Point2:
    """One Euler-Maruyama update; ``drift`` maps a Point2 to (b1, b2)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    b1, b2 = drift(pos)
    kick = inc * NHAT
    return Point2(pos.x1 + b1 * dt + kick, pos.x2 + b2 * dt + kick)


def noise_block(cfg: SdeConfig, params: PhysicalParams, first: int, count: int) -> np.ndarray:
    """(count, n_steps) increments for paths first .. first + count - 1."""
    J = cfg.n_steps
    if cfg.noise == "white":
        incs = np.empty((count, J))
        for i in range(count):
            incs[i] = white_increment(stream(cfg.master_seed, first + i), params, cfg.dt, J)
        return incs
    bath = cfg.noise
    q0 = np.empty((count, bath.n_modes))
    p0 = np.empty((count, bath.n_modes))
    for i in range(count):
        st = sample_bath(bath, stream(cfg.master_seed, first + i))
        q0[i], p0[i] = st.q0, st.p0
    return bath_increments(q0, p0, bath, cfg.dt, J)


@dataclass(frozen=True)
class Endpoints:
    """Path endpoints for every (path, start) pair; arrays have shape (n_paths, n_starts)."""

    starts: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    escaped: np.ndarray

    def n_escaped(self, s: int) -> int:
        return int(self.escaped[:, s].sum())


def _as_starts(starts) -> np.ndarray:
    if isinstance(starts, Point2):
        starts = [starts]
    arr = np.array([[p.x1, p.x2] if isinstance(p, Point2) else p for p in starts], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) == 0:
        raise ValueError("starts must be a non-empty sequence of points")
    return arr


def simulate_paths(cfg: SdeConfig, params: PhysicalParams, starts, s: Superpotential,
                   workers=None, backend=None) -> Endpoints:
    """Integrate cfg.n_paths paths from each start point up to cfg.t_final.

    Path i uses the same noise for every start point.  Paths leaving the disc
    of radius ``escape_radius`` are frozen there and flagged.  A bath noise
    source takes its temperature from ``params.hbar``.
    """
    if isinstance(cfg.noise, BathConfig) and cfg.noise.hbar != params.hbar:
        cfg = replace(cfg, noise=replace(cfg.noise, hbar=params.hbar))
    pts = _as_starts(starts)
    kern = _kernels.get_backend(backend)
    P, S = cfg.n_paths, len(pts)
    x1 = np.empty((P, S))
    x2 = np.empty((P, S))
    esc = np.empty((P, S), dtype=np.uint8)
    x1s = np.ascontiguousarray(pts[:, 0])
    x2s = np.ascontiguousarray(pts[:, 1])
    dcoef = np.ascontiguousarray(s.dcoeffs, dtype=float)
    r2 = cfg.escape_radius ** 2

    def run(first):
        count = min(cfg.block_size, P - first)
        incs = np.ascontiguousarray(noise_block(cfg, params, first, count))
        sl = slice(first, first + count)
        bx1 = np.empty((count, S))
        bx2 = np.empty((count, S))
        besc = np.empty((count, S), dtype=np.uint8)
        with np.errstate(over="ignore", invalid="ignore"):
            kern.em_paths(x1s, x2s, incs, dcoef, cfg.dt, NHAT, r2, bx1, bx2, besc)
        x1[sl], x2[sl], esc[sl] = bx1, bx2, besc

    firsts = range(0, P, cfg.block_size)
    n_workers = min(worker_count(workers), len(firsts))
    if n_workers == 1:
        for f in firsts:
            run(f)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(run, firsts))
    escaped = esc.astype(bool)
    dead = np.flatnonzero(escaped.all(axis=0))
    if len(dead):
        raise DegenerateEnsembleError(f"all paths escaped from start point(s) {pts[dead].tolist()}")
    return Endpoints(pts, x1, x2, escaped)


def mc_average_field(u: HolomorphicField, x1, x2, escaped=None):
    """Sample mean and standard error of (u1, u2) over surviving endpoints."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if escaped is not None:
        keep = ~np.asarray(escaped, dtype=bool)
        x1, x2 = x1[keep], x2[keep]
    n = x1.shape[0]
    if n < 2:
        raise DegenerateEnsembleError(f"need at least 2 surviving endpoints, got {n}")
    w = u(x1 + 1j * x2)
    root_n = math.sqrt(n)
    return (float(w.real.mean()), float(w.imag.mean()),
            float(w.real.std(ddof=1) / root_n), float(w.imag.std(ddof=1) / root_n))


@dataclass(frozen=True)
class EnsembleResult:
    starts: np.ndarray
    mean_u1: np.ndarray
    mean_u2: np.ndarray
    stderr_u1: np.ndarray
    stderr_u2: np.ndarray
    n_escaped: np.ndarray
    n_paths: int


def ensemble_average(u: HolomorphicField, ends: Endpoints) -> EnsembleResult:
    rows = [mc_average_field(u, ends.x1[:, s], ends.x2[:, s], ends.escaped[:, s])
            for s in range(len(ends.starts))]
    m1, m2, e1, e2 = (np.array(c) for c in zip(*rows))
    return EnsembleResult(ends.starts, m1, m2, e1, e2,
                          ends.escaped.sum(axis=0), ends.x1.shape[0])


def write_endpoints_csv(path, ends: Endpoints, start_index: int = 0):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "x1", "x2", "escaped"])
        for i in range(ends.x1.shape[0]):
            w.writerow([i, f"{ends.x1[i, start_index]:.17g}", f"{ends.x2[i, start_index]:.17g}",
                        int(ends.escaped[i, start_index])])


def start_points_on_line(xs: Sequence[float]):
    return [Point2(float(x), 0.0) for x in xs]
