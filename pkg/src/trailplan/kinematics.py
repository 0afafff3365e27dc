"""Slope-dependent walking speed and the anisotropic effective speed.

The base law peaks at a slight downhill grade: V(S) = v0 * exp(-(100*S + shift)^2 / denom),
maximized (= v0) at S = -shift/100. Walking speed in the travel direction uses the
along-path slope; a multiplicative smooth cutoff penalizes steep cross-path grades so
that a sheer side slope cannot be traversed at full speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .terrain import SlopeVector

__all__ = ["SpeedModel", "DirectionSample", "base_speed", "effective_speed",
           "direction_table", "speed_over_directions"]

# Speeds are strictly positive by contract; keep them so under fp underflow.
_SPEED_FLOOR = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class SpeedModel:
    v0: float = 1.11
    slope_shift: float = 2.0
    denom: float = 2345.0
    pen_threshold: float = 0.5
    pen_width: float = 0.2

    def __post_init__(self):
        if self.v0 <= 0 or self.denom <= 0 or self.pen_width <= 0 or self.pen_threshold < 0:
            raise ValidationError(
                f"require v0 > 0, denom > 0, pen_width > 0, pen_threshold >= 0; got {self}")


@dataclass(frozen=True)
class DirectionSample:
    """A unit walking direction, stored with its angle in [0, 2*pi)."""

    angle: float
    vector: tuple[float, float]

    @classmethod
    def from_angle(cls, theta: float) -> "DirectionSample":
        theta = float(theta) % (2.0 * np.pi)
        return cls(theta, (float(np.cos(theta)), float(np.sin(theta))))

    def __post_init__(self):
        norm = np.hypot(*self.vector)
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"direction vector not unit length: {self.vector}")


def base_speed(model: SpeedModel, S):
    """Walking speed for a slope S (grade units); strictly positive."""
    S = np.asarray(S, dtype=np.float64)
    out = np.maximum(model.v0 * np.exp(-((100.0 * S + model.slope_shift) ** 2) / model.denom),
                     _SPEED_FLOOR)
    return float(out) if out.ndim == 0 else out


def penalization(model: SpeedModel, q):
    """Smooth cutoff on the cross-path grade magnitude q: 1 up to the threshold,
    Gaussian decay beyond it."""
    q = np.asarray(q, dtype=np.float64)
    excess = np.maximum(q - model.pen_threshold, 0.0)
    out = np.exp(-(excess ** 2) / model.pen_width ** 2)
    return float(out) if out.ndim == 0 else out


def effective_speed(model: SpeedModel, grad: SlopeVector, s: DirectionSample) -> float:
    """Anisotropic speed f(x, s) = V(grad . s) * chi(|grad . s_perp|).

    Depends on (grad, s) only through the along-path slope and the cross-path
    grade magnitude; always in (0, base_speed(grad . s)].
    """
    sx, sy = s.vector
    along = grad.gx * sx + grad.gy * sy
    cross = abs(grad.gx * (-sy) + grad.gy * sx)
    return float(max(base_speed(model, along) * penalization(model, cross), _SPEED_FLOOR))


def direction_table(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """n equally spaced angles on [0, 2*pi) with their cos/sin."""
    if n < 8:
        raise ValidationError(f"need at least 8 direction samples, got {n}")
    angles = 2.0 * np.pi * np.arange(n) / n
    return angles, np.cos(angles), np.sin(angles)


def speed_over_directions(model: SpeedModel, gx, gy,
                          cos_t: np.ndarray, sin_t: np.ndarray) -> np.ndarray:
    """Effective speed for gradients (gx, gy) against every tabulated direction.

    gx, gy may be scalars or arrays of shape (...,); the result has shape
    (..., n_directions).
    """
    gx = np.asarray(gx, dtype=np.float64)[..., None]
    gy = np.asarray(gy, dtype=np.float64)[..., None]
    along = gx * cos_t + gy * sin_t
    cross = np.abs(gx * (-sin_t) + gy * cos_t)
    return np.maximum(base_speed(model, along) * penalization(model, cross), _SPEED_FLOOR)
