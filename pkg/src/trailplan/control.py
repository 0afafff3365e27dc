"""Optimal steering extraction from a solved value function.

The control at (x, t) minimizes f(x, s) * (grad u(x, t) . s) over the sampled
direction set. Spatial gradients of u use the same stencil as terrain
gradients (central interior, one-sided boundary) with bilinear interpolation
off nodes; time lookups snap to the nearest stored slice. A gradient below
1e-12 * diam(box) yields the degenerate flag with angle 0 so that paths on
cost plateaus stand still instead of chasing noise.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import OutOfDomainError
from .kinematics import SpeedModel, direction_table, speed_over_directions
from .solver import ValueFunction
from .terrain import ElevationField, grid_gradient

__all__ = ["ControlValue", "ControlField", "grad_u_at", "optimal_control",
           "control_field_snapshot"]

DEGENERATE_REL_TOL = 1e-12


@dataclass(frozen=True)
class ControlValue:
    angle: float
    vector: tuple[float, float]
    degenerate: bool


class ControlField:
    """Read-only view over a ValueFunction with per-slice gradient caching."""

    def __init__(self, vf: ValueFunction, field: ElevationField, model: SpeedModel):
        self.vf = vf
        self.field = field
        self.model = model
        cfg = vf.config
        self.angles, self.cos_t, self.sin_t = direction_table(cfg.ham.n_directions)
        self._grad_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._degenerate_tol = DEGENERATE_REL_TOL * cfg.diam

    def _check_time(self, t: float) -> int:
        cfg = self.vf.config
        if not 0.0 <= t <= cfg.T * (1 + 1e-12):
            raise OutOfDomainError(f"time {t} outside [0, {cfg.T}]")
        return self.vf.backward_index(t)

    def _grad_slices(self, kb: int) -> tuple[np.ndarray, np.ndarray]:
        if kb not in self._grad_cache:
            cfg = self.vf.config
            self._grad_cache[kb] = grid_gradient(self.vf.u[kb], cfg.dx, cfg.dy)
        return self._grad_cache[kb]

    def _bilinear(self, grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
        cfg = self.vf.config
        a, b, c, d = cfg.box
        x, y = pts[..., 0], pts[..., 1]
        if np.any((x < a) | (x > b) | (y < c) | (y > d)):
            raise OutOfDomainError("query point outside the solver box")
        fx = (x - a) / cfg.dx
        fy = (y - c) / cfg.dy
        i = np.clip(fx.astype(np.int64), 0, cfg.N - 1)
        j = np.clip(fy.astype(np.int64), 0, cfg.M - 1)
        tx, ty = fx - i, fy - j
        return ((1 - tx) * (1 - ty) * grid[i, j] + tx * (1 - ty) * grid[i + 1, j]
                + (1 - tx) * ty * grid[i, j + 1] + tx * ty * grid[i + 1, j + 1])

    def grad_u_many(self, pts: np.ndarray, kb: int) -> np.ndarray:
        gx, gy = self._grad_slices(kb)
        pts = np.asarray(pts, dtype=np.float64)
        return np.stack([self._bilinear(gx, pts), self._bilinear(gy, pts)], axis=-1)

    def value_many(self, pts: np.ndarray, kb: int) -> np.ndarray:
        """Interpolated cost-to-go at points for one stored slice."""
        return self._bilinear(self.vf.u[kb], np.asarray(pts, dtype=np.float64))

    def grad_u_at(self, p, t: float) -> np.ndarray:
        kb = self._check_time(t)
        return self.grad_u_many(np.asarray(p, dtype=np.float64), kb)

    def control_many(self, pts: np.ndarray, kb: int
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized control at points for one slice.

        Returns (directions (L,2), angles (L,), speeds f(x, s*) (L,),
        degenerate mask (L,)).
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        gu = self.grad_u_many(pts, kb)
        ge = self.field.gradient_many(pts)
        f = speed_over_directions(self.model, ge[:, 0], ge[:, 1], self.cos_t, self.sin_t)
        vals = f * (gu[:, 0:1] * self.cos_t + gu[:, 1:2] * self.sin_t)
        idx = np.argmin(vals, axis=1)
        degenerate = np.hypot(gu[:, 0], gu[:, 1]) < self._degenerate_tol
        idx = np.where(degenerate, 0, idx)
        dirs = np.stack([self.cos_t[idx], self.sin_t[idx]], axis=-1)
        rows = np.arange(len(idx))
        return dirs, self.angles[idx], f[rows, idx], degenerate

    def optimal_control(self, p, t: float) -> ControlValue:
        kb = self._check_time(t)
        dirs, angles, _, degen = self.control_many(np.asarray(p, dtype=np.float64)[None, :], kb)
        return ControlValue(float(angles[0]), (float(dirs[0, 0]), float(dirs[0, 1])),
                            bool(degen[0]))

    def snapshot(self, t: float, stride: int) -> list[tuple[tuple[float, float], ControlValue]]:
        """Controls on a strided subgrid of the solver nodes at one time."""
        if stride < 1:
            raise OutOfDomainError(f"stride must be positive, got {stride}")
        kb = self._check_time(t)
        cfg = self.vf.config
        xs, ys = cfg.x_nodes(), cfg.y_nodes()
        xi = np.arange(0, cfg.N + 1, stride)
        yj = np.arange(0, cfg.M + 1, stride)
        X, Y = np.meshgrid(xs[xi], ys[yj], indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        dirs, angles, _, degen = self.control_many(pts, kb)
        return [((float(p[0]), float(p[1])),
                 ControlValue(float(a), (float(v[0]), float(v[1])), bool(g)))
                for p, a, v, g in zip(pts, angles, dirs, degen)]


def grad_u_at(cf: ControlField, p, t: float) -> np.ndarray:
    return cf.grad_u_at(p, t)


def optimal_control(cf: ControlField, p, t: float) -> ControlValue:
    return cf.optimal_control(p, t)


def control_field_snapshot(cf: ControlField, t: float, stride: int):
    return cf.snapshot(t, stride)
