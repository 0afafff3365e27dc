"""Anisotropic Hamiltonian and its Godunov / Lax-Friedrichs discretizations.

The continuous Hamiltonian at a point x is the minimum over sampled walking
directions of f(x, s) * (p . s), where f is the anisotropic effective speed.
It is concave and positively homogeneous in p, and nonpositive everywhere
(the direction set always contains a direction with p . s <= 0).

The Godunov value nests two sampled `ext` optimizations over intervals of
one-sided differences, using the orientation I(ux+, ux-), I(uy+, uy-): min
when the first argument <= the second, else max. Each ext samples
n_ext_samples equally spaced points including both endpoints; a max-ext whose
interval straddles 0 additionally samples 0 itself, which pins the exact
maximum of the concave Hamiltonian at p = 0 (the terminal-cone apex stays
put instead of leaking downward).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .kinematics import DirectionSample, SpeedModel, direction_table, speed_over_directions
from .terrain import ElevationField

__all__ = ["HamiltonianConfig", "continuous_h", "godunov", "lax_friedrichs",
           "point_tables", "grid_tables"]


@dataclass(frozen=True)
class HamiltonianConfig:
    n_directions: int = 64
    n_ext_samples: int = 16
    scheme: str = "godunov"
    lf_alpha: tuple[float, float] = (1.11, 1.11)

    def __post_init__(self):
        if self.n_directions < 8:
            raise ValidationError(f"n_directions must be >= 8, got {self.n_directions}")
        if self.n_ext_samples < 3:
            raise ValidationError(f"n_ext_samples must be >= 3, got {self.n_ext_samples}")
        if self.scheme not in ("godunov", "lax_friedrichs"):
            raise ValidationError(f"unknown scheme: {self.scheme}")
        if len(self.lf_alpha) != 2 or min(self.lf_alpha) <= 0:
            raise ValidationError(f"lf_alpha must be two positive bounds, got {self.lf_alpha}")

    def validate_against(self, model: SpeedModel) -> None:
        # |dH/dp_i| <= max f <= v0, so the LF bounds must cover v0.
        if min(self.lf_alpha) < model.v0:
            raise ValidationError(
                f"lf_alpha {self.lf_alpha} below the speed bound v0 = {model.v0}")


def point_tables(x, field: ElevationField, model: SpeedModel,
                 cfg: HamiltonianConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(angles, P, Q) at one point: P = f*cos(theta), Q = f*sin(theta) per direction."""
    angles, cos_t, sin_t = direction_table(cfg.n_directions)
    g = field.gradient_many(np.asarray(x, dtype=np.float64))
    f = speed_over_directions(model, g[..., 0], g[..., 1], cos_t, sin_t)
    return angles, f * cos_t, f * sin_t


def grid_tables(xs: np.ndarray, ys: np.ndarray, field: ElevationField,
                model: SpeedModel, cfg: HamiltonianConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-node (P, Q) tables of shape (nx, ny, n_directions) for a solver grid.

    Time-independent, so they are built once per solve.
    """
    _, cos_t, sin_t = direction_table(cfg.n_directions)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    g = field.gradient_many(pts)
    f = speed_over_directions(model, g[..., 0], g[..., 1], cos_t, sin_t)
    return np.ascontiguousarray(f * cos_t), np.ascontiguousarray(f * sin_t)


def continuous_h(x, p, field: ElevationField, model: SpeedModel,
                 cfg: HamiltonianConfig) -> tuple[float, DirectionSample]:
    """Minimize f(x, s) * (p . s) over the sampled direction set.

    Returns the minimum and its direction; ties break to the smallest angle.
    """
    angles, P, Q = point_tables(x, field, model, cfg)
    vals = P * float(p[0]) + Q * float(p[1])
    i = int(np.argmin(vals))
    _, cos_t, sin_t = direction_table(cfg.n_directions)
    return float(vals[i]), DirectionSample(float(angles[i]), (float(cos_t[i]), float(sin_t[i])))


def godunov(x, ux_minus: float, ux_plus: float, uy_minus: float, uy_plus: float,
            field: ElevationField, model: SpeedModel, cfg: HamiltonianConfig) -> float:
    """Sampled-ext Godunov numerical Hamiltonian at a point."""
    _, P, Q = point_tables(x, field, model, cfg)
    out = np.empty((1, 1))
    _kernels.godunov_hamiltonian(
        np.array([[float(ux_minus)]]), np.array([[float(ux_plus)]]),
        np.array([[float(uy_minus)]]), np.array([[float(uy_plus)]]),
        P.reshape(1, 1, -1), Q.reshape(1, 1, -1), cfg.n_ext_samples, out)
    return float(out[0, 0])


def lax_friedrichs(x, ux_minus: float, ux_plus: float, uy_minus: float, uy_plus: float,
                   field: ElevationField, model: SpeedModel, cfg: HamiltonianConfig) -> float:
    """Lax-Friedrichs numerical Hamiltonian: central H plus dissipation.

    The dissipation sign is +(alpha/2)*(u+ - u-) in this time-inverted stepping
    convention (the smoothing direction; the opposite sign is anti-diffusive).
    """
    _, P, Q = point_tables(x, field, model, cfg)
    mu = 0.5 * (ux_plus + ux_minus)
    mv = 0.5 * (uy_plus + uy_minus)
    h_mid = float(np.min(P * mu + Q * mv))
    a1, a2 = cfg.lf_alpha
    return h_mid + 0.5 * a1 * (ux_plus - ux_minus) + 0.5 * a2 * (uy_plus - uy_minus)
