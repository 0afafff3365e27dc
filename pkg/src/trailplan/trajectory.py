"""Path integration under the extracted control: deterministic walks and
stochastic ensembles.

Forward Euler with the solver's own time step keeps control lookups aligned
with stored slices. The additive constant-sigma noise makes Euler-Maruyama
and Milstein coincide, so no diffusion-derivative terms appear. Positions
that would leave the box are clamped to it and flagged.

The walker stands still (drift suppressed; noise still applies) on steps
where the control carries no real signal: a degenerate gradient, or a
cost-to-go already below the station floor of one grid spacing. The value
function is a distance, so u below grid resolution means the walker is
numerically at its optimum; first-order solver residuals on zero plateaus
(measured ~1e-2 in gradient) sit far above the degenerate-flag scale, and
without the station floor any horizon slack would be spent walking noise
directions at full speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from .control import ControlField
from .errors import BracketError, OutOfDomainError, ValidationError
from .kinematics import SpeedModel
from .solver import SolverConfig, solve
from .terrain import ElevationField

__all__ = ["Trajectory", "EnsembleStats", "CriticalTimeResult",
           "integrate_deterministic", "integrate_stochastic", "run_ensemble",
           "critical_time_search"]


@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    clamped: np.ndarray
    x_end: tuple[float, float]

    @property
    def terminal_distance(self) -> float:
        return float(np.hypot(self.points[-1, 0] - self.x_end[0],
                              self.points[-1, 1] - self.x_end[1]))

    @property
    def closest_approach(self) -> float:
        d = np.hypot(self.points[:, 0] - self.x_end[0], self.points[:, 1] - self.x_end[1])
        return float(d.min())

    def arc_length(self) -> float:
        return float(np.hypot(*np.diff(self.points, axis=0).T).sum())


@dataclass
class EnsembleStats:
    mean_path: Trajectory
    std_devs: np.ndarray
    num_trials: int
    seed: int
    realizations: list[Trajectory]
    clamped_count: int


def _check_start(cf: ControlField, x0) -> np.ndarray:
    a, b, c, d = cf.vf.config.box
    x0 = np.asarray(x0, dtype=np.float64)
    if not (a <= x0[0] <= b and c <= x0[1] <= d):
        raise OutOfDomainError(f"start point {tuple(x0)} outside box {cf.vf.config.box}")
    return x0


def _integrate(cf: ControlField, starts: np.ndarray, *, sigma: float,
               noise: np.ndarray | None, zero_drift: bool = False,
               station_tol: float | None = None
               ) -> tuple[np.ndarray, np.ndarray]:
    """March L paths together; returns positions (K+1, L, 2) and clamp flags."""
    cfg = cf.vf.config
    a, b, c, d = cfg.box
    dt = cfg.dt
    root_dt = sqrt(dt)
    if station_tol is None:
        station_tol = max(cfg.dx, cfg.dy)
    L = starts.shape[0]
    pos = np.empty((cfg.K + 1, L, 2))
    clamped = np.zeros((cfg.K + 1, L), dtype=bool)
    pos[0] = starts
    x = starts.copy()
    for n in range(cfg.K):
        kb = cfg.K - n
        dirs, _, speed, degen = cf.control_many(x, kb)
        if zero_drift:
            step = np.zeros_like(x)
        else:
            stand = degen | (cf.value_many(x, kb) < station_tol)
            drift = np.where(stand[:, None], 0.0, speed[:, None] * dirs)
            step = dt * drift
        if noise is not None and sigma > 0.0:
            step = step + sigma * root_dt * noise[n]
        x = x + step
        out = (x[:, 0] < a) | (x[:, 0] > b) | (x[:, 1] < c) | (x[:, 1] > d)
        if out.any():
            x[:, 0] = np.clip(x[:, 0], a, b)
            x[:, 1] = np.clip(x[:, 1], c, d)
            clamped[n + 1] = out
        pos[n + 1] = x
    return pos, clamped


def _times(cfg: SolverConfig) -> np.ndarray:
    return cfg.dt * np.arange(cfg.K + 1)


def integrate_deterministic(cf: ControlField, x0, *,
                            station_tol: float | None = None) -> Trajectory:
    """Forward Euler under the optimal control with step dt = T/K."""
    x0 = _check_start(cf, x0)
    pos, clamped = _integrate(cf, x0[None, :], sigma=0.0, noise=None,
                              station_tol=station_tol)
    cfg = cf.vf.config
    return Trajectory(_times(cfg), pos[:, 0], clamped[:, 0], cfg.x_end)


def integrate_stochastic(cf: ControlField, x0, rng: np.random.Generator,
                         *, sigma: float | None = None, zero_drift: bool = False,
                         station_tol: float | None = None) -> Trajectory:
    """Euler-Maruyama step X += dt*f*s + sigma*sqrt(dt)*xi with seeded noise."""
    x0 = _check_start(cf, x0)
    cfg = cf.vf.config
    s = cfg.sigma if sigma is None else float(sigma)
    noise = rng.standard_normal((cfg.K, 1, 2)) if s > 0.0 else None
    pos, clamped = _integrate(cf, x0[None, :], sigma=s, noise=noise,
                              zero_drift=zero_drift, station_tol=station_tol)
    return Trajectory(_times(cfg), pos[:, 0], clamped[:, 0], cfg.x_end)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # Counter-based substream: the trial index keys the stream, so results do
    # not depend on execution order.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(
        entropy=seed, spawn_key=(trial,))))


def run_ensemble(cf: ControlField, x0, L: int, seed: int, *,
                 sigma: float | None = None, zero_drift: bool = False,
                 keep: int = 3, station_tol: float | None = None) -> EnsembleStats:
    """Monte-Carlo ensemble of L stochastic paths with per-trial substreams.

    The mean path is the per-step coordinate mean; std_devs holds per-step
    per-coordinate sample standard deviations (divisor L-1). The first
    ``keep`` realizations are retained.
    """
    if L < 2:
        raise ValidationError(f"ensemble needs at least 2 trials, got {L}")
    x0 = _check_start(cf, x0)
    cfg = cf.vf.config
    s = cfg.sigma if sigma is None else float(sigma)
    if s > 0.0:
        noise = np.empty((cfg.K, L, 2))
        for trial in range(L):
            noise[:, trial, :] = _trial_rng(seed, trial).standard_normal((cfg.K, 2))
    else:
        noise = None
    starts = np.broadcast_to(x0, (L, 2)).copy()
    pos, clamped = _integrate(cf, starts, sigma=s, noise=noise,
                              zero_drift=zero_drift, station_tol=station_tol)
    times = _times(cfg)
    if noise is None:
        # without noise every trial is the same path: exact mean, zero spread
        mean = pos[:, 0].copy()
        std = np.zeros((cfg.K + 1, 2))
    else:
        mean = pos.mean(axis=1)
        std = pos.std(axis=1, ddof=1)
    mean_path = Trajectory(times, mean, np.zeros(cfg.K + 1, dtype=bool), cfg.x_end)
    realizations = [Trajectory(times, pos[:, i], clamped[:, i], cfg.x_end)
                    for i in range(min(keep, L))]
    clamped_count = int(clamped.any(axis=0).sum())
    return EnsembleStats(mean_path, std, L, seed, realizations, clamped_count)


@dataclass
class CriticalTimeResult:
    T_star: float
    bracket: tuple[float, float]
    trace: list[tuple[float, bool, float]]


def critical_time_search(field: ElevationField, model: SpeedModel, x0,
                         config_template: SolverConfig, T_lo: float, T_hi: float,
                         delta_reach: float | None = None,
                         tol_T: float = 0.05) -> CriticalTimeResult:
    """Bisect the smallest horizon whose deterministic path reaches the target.

    reach(T) means terminal_distance <= delta_reach (default 3*dx) for the
    method-(i) path with horizon T; every probe re-solves the HJB problem.
    """
    if not 0 < T_lo < T_hi:
        raise ValidationError(f"need 0 < T_lo < T_hi, got ({T_lo}, {T_hi})")
    if delta_reach is None:
        delta_reach = 3.0 * config_template.dx
    trace: list[tuple[float, bool, float]] = []

    def reach(T: float) -> bool:
        cfg = config_template.with_horizon(T)
        vf = solve(cfg, field, model)
        path = integrate_deterministic(ControlField(vf, field, model), x0)
        ok = path.terminal_distance <= delta_reach
        trace.append((T, ok, path.terminal_distance))
        return ok

    if reach(T_lo):
        raise BracketError(f"reach(T_lo={T_lo}) already true; bracket invalid")
    if not reach(T_hi):
        raise BracketError(f"reach(T_hi={T_hi}) still false; bracket invalid")
    lo, hi = T_lo, T_hi
    for _ in range(max(1, ceil(np.log2((hi - lo) / tol_T))) + 2):
        if hi - lo <= tol_T:
            break
        mid = 0.5 * (lo + hi)
        if reach(mid):
            hi = mid
        else:
            lo = mid
    return CriticalTimeResult(0.5 * (lo + hi), (lo, hi), trace)
