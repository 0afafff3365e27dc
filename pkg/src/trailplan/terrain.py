"""Elevation fields: synthetic generators, ESRI ASCII grid IO, interpolation and gradients.

Grid convention: ``heights[i, j]`` is the elevation at node ``(a + i*dx, c + j*dy)``,
so the first index walks east (x) and the second walks north (y). Heights and
coordinates are assumed to share length units, which makes grades dimensionless;
this is documented, not enforced.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GridFormatError, OutOfDomainError, ValidationError

__all__ = [
    "ElevationField",
    "SlopeVector",
    "elevation_at",
    "gradient_at",
    "make_synthetic",
    "load_esri_ascii",
    "write_esri_ascii",
    "grid_gradient",
]


@dataclass(frozen=True)
class SlopeVector:
    """Terrain gradient in grade units (rise/run per axis)."""

    gx: float
    gy: float


def grid_gradient(values: np.ndarray, dx: float, dy: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodal gradient of a gridded scalar: central differences on interior nodes,
    one-sided differences on boundary nodes."""
    gx = np.empty_like(values)
    gy = np.empty_like(values)
    gx[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2.0 * dx)
    gx[0, :] = (values[1, :] - values[0, :]) / dx
    gx[-1, :] = (values[-1, :] - values[-2, :]) / dx
    gy[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * dy)
    gy[:, 0] = (values[:, 1] - values[:, 0]) / dy
    gy[:, -1] = (values[:, -1] - values[:, -2]) / dy
    return gx, gy


class ElevationField:
    """Immutable gridded terrain heights with bilinear evaluation.

    Off-node gradients interpolate the nodal gradients rather than
    differentiating the bilinear surface, which keeps the gradient continuous
    across cell edges.
    """

    def __init__(self, origin: tuple[float, float], spacing: tuple[float, float],
                 heights: np.ndarray):
        heights = np.asarray(heights, dtype=np.float64)
        if heights.ndim != 2:
            raise ValidationError("heights must be a 2-d array")
        if heights.shape[0] < 2 or heights.shape[1] < 2:
            raise ValidationError("need at least 2 nodes per axis")
        dx, dy = float(spacing[0]), float(spacing[1])
        if not (dx > 0.0 and dy > 0.0):
            raise ValidationError(f"spacing must be positive, got ({dx}, {dy})")
        if not np.isfinite(heights).all():
            raise ValidationError("heights contain non-finite values")
        heights = heights.copy()
        heights.flags.writeable = False
        self.origin = (float(origin[0]), float(origin[1]))
        self.spacing = (dx, dy)
        self.heights = heights

    @property
    def dims(self) -> tuple[int, int]:
        return self.heights.shape

    @property
    def box(self) -> tuple[float, float, float, float]:
        """(a, b, c, d): x-range then y-range of the node lattice."""
        a, c = self.origin
        nx, ny = self.dims
        return (a, a + (nx - 1) * self.spacing[0], c, c + (ny - 1) * self.spacing[1])

    def x_nodes(self) -> np.ndarray:
        a, _ = self.origin
        return a + self.spacing[0] * np.arange(self.dims[0])

    def y_nodes(self) -> np.ndarray:
        _, c = self.origin
        return c + self.spacing[1] * np.arange(self.dims[1])

    @cached_property
    def nodal_gradients(self) -> tuple[np.ndarray, np.ndarray]:
        gx, gy = grid_gradient(self.heights, *self.spacing)
        gx.flags.writeable = False
        gy.flags.writeable = False
        return gx, gy

    def _locate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Cell indices and in-cell fractions for query points; raises if outside.

        Containment uses a relative tolerance so the far box corner, which is
        reconstructed from origin + spacing in floating point, stays inside.
        """
        a, b, c, d = self.box
        tx = 1e-9 * (b - a)
        ty = 1e-9 * (d - c)
        x, y = pts[..., 0], pts[..., 1]
        bad = (x < a - tx) | (x > b + tx) | (y < c - ty) | (y > d + ty)
        if np.any(bad):
            where = np.argwhere(np.atleast_1d(bad))[0]
            p = np.atleast_2d(pts.reshape(-1, 2))[where[0] if where.size else 0]
            raise OutOfDomainError(f"point {tuple(p)} outside box {self.box}")
        dx, dy = self.spacing
        fx = np.clip((x - a) / dx, 0.0, self.dims[0] - 1.0)
        fy = np.clip((y - c) / dy, 0.0, self.dims[1] - 1.0)
        i = np.clip(fx.astype(np.int64), 0, self.dims[0] - 2)
        j = np.clip(fy.astype(np.int64), 0, self.dims[1] - 2)
        return i, j, fx - i, fy - j

    def _bilinear(self, grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
        i, j, tx, ty = self._locate(pts)
        return ((1 - tx) * (1 - ty) * grid[i, j] + tx * (1 - ty) * grid[i + 1, j]
                + (1 - tx) * ty * grid[i, j + 1] + tx * ty * grid[i + 1, j + 1])

    def elevation_many(self, pts: np.ndarray) -> np.ndarray:
        return self._bilinear(self.heights, np.asarray(pts, dtype=np.float64))

    def gradient_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        gx, gy = self.nodal_gradients
        return np.stack([self._bilinear(gx, pts), self._bilinear(gy, pts)], axis=-1)


def elevation_at(field: ElevationField, p) -> float:
    """Bilinear height at a point inside the field's box; exact at nodes."""
    return float(field.elevation_many(np.asarray(p, dtype=np.float64)))


def gradient_at(field: ElevationField, p) -> SlopeVector:
    """Interpolated nodal gradient at a point, in grade units."""
    g = field.gradient_many(np.asarray(p, dtype=np.float64))
    return SlopeVector(float(g[..., 0]), float(g[..., 1]))


def _node_mesh(box, dims):
    a, b, c, d = (float(v) for v in box)
    nx, ny = int(dims[0]), int(dims[1])
    if nx < 2 or ny < 2:
        raise ValidationError("need at least 2 nodes per axis")
    if not (b > a and d > c):
        raise ValidationError(f"degenerate box {box}")
    xs = np.linspace(a, b, nx)
    ys = np.linspace(c, d, ny)
    spacing = (xs[1] - xs[0], ys[1] - ys[0])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return (a, c), spacing, X, Y


def make_synthetic(kind: str, box, dims, **params) -> ElevationField:
    """Generate a synthetic field on the node lattice of ``box`` with ``dims`` nodes.

    Kinds:
      flat               -- constant ``height`` (default 0).
      gaussian_mountains -- ``mountains=[(h, cx, cy, w), ...]`` summed over a flat base:
                            each term is h*exp(-((x-cx)^2+(y-cy)^2)/w^2).
      wall               -- plateau of ``height`` over ``rect=(x0, x1, y0, y1)`` with
                            cosine side ramps of width ``ramp`` so gradients exist
                            everywhere.
    """
    origin, spacing, X, Y = _node_mesh(box, dims)
    if kind == "flat":
        h = float(params.pop("height", 0.0))
        _reject_extra(params)
        z = np.full_like(X, h)
    elif kind == "gaussian_mountains":
        mountains = params.pop("mountains")
        _reject_extra(params)
        if not mountains:
            raise ValidationError("gaussian_mountains needs at least one mountain")
        z = np.zeros_like(X)
        a, b, c, d = box
        for h, cx, cy, w in mountains:
            if w <= 0:
                raise ValidationError(f"mountain width must be positive, got {w}")
            if not (a <= cx <= b and c <= cy <= d):
                raise ValidationError(f"mountain center ({cx}, {cy}) outside box")
            z += h * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / w ** 2)
    elif kind == "wall":
        h = float(params.pop("height"))
        x0, x1, y0, y1 = (float(v) for v in params.pop("rect"))
        ramp = float(params.pop("ramp"))
        _reject_extra(params)
        if ramp <= 0:
            raise ValidationError(f"ramp width must be positive, got {ramp}")
        if not (x1 > x0 and y1 > y0):
            raise ValidationError(f"degenerate wall rectangle ({x0}, {x1}, {y0}, {y1})")
        z = h * _ramp_profile(X, x0, x1, ramp) * _ramp_profile(Y, y0, y1, ramp)
    else:
        raise ValidationError(f"unknown synthetic kind: {kind}")
    return ElevationField(origin, spacing, z)


def _reject_extra(params):
    if params:
        raise ValidationError(f"unexpected parameters: {sorted(params)}")


def _ramp_profile(t: np.ndarray, lo: float, hi: float, ramp: float) -> np.ndarray:
    """1 on [lo, hi], 0 beyond the ramps, cosine transition in between."""
    up = np.clip((t - (lo - ramp)) / ramp, 0.0, 1.0)
    down = np.clip(((hi + ramp) - t) / ramp, 0.0, 1.0)
    return (0.5 - 0.5 * np.cos(np.pi * up)) * (0.5 - 0.5 * np.cos(np.pi * down))


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def load_esri_ascii(source, nodata_policy: str = "reject") -> ElevationField:
    """Read an ESRI ASCII grid (first data line is the northernmost row).

    NODATA cells are rejected by default; with ``nodata_policy="fill"`` they are
    filled with the mean of their non-NODATA 8-neighbors, iterating until none
    remain (an unproductive pass is an error).
    """
    if nodata_policy not in ("reject", "fill"):
        raise ValidationError(f"unknown nodata policy: {nodata_policy}")
    text = _read_text(source)
    tokens: dict[str, float] = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0
    nodata = None
    while pos < len(lines):
        parts = lines[pos].split()
        key = parts[0].lower()
        if key in _HEADER_KEYS or key == "nodata_value":
            if len(parts) != 2:
                raise GridFormatError(f"malformed header line: {lines[pos]!r}")
            try:
                val = float(parts[1])
            except ValueError as exc:
                raise GridFormatError(f"non-numeric header value: {parts[1]!r}") from exc
            if key == "nodata_value":
                nodata = val
            else:
                tokens[key] = val
            pos += 1
        else:
            break
    missing = [k for k in _HEADER_KEYS if k not in tokens]
    if missing:
        raise GridFormatError(f"missing header keys: {missing}")
    ncols, nrows = int(tokens["ncols"]), int(tokens["nrows"])
    if ncols != tokens["ncols"] or nrows != tokens["nrows"] or ncols < 2 or nrows < 2:
        raise GridFormatError(f"bad grid dims ncols={tokens['ncols']} nrows={tokens['nrows']}")
    cellsize = tokens["cellsize"]
    if cellsize <= 0:
        raise GridFormatError(f"cellsize must be positive, got {cellsize}")
    data_lines = lines[pos:]
    if len(data_lines) != nrows:
        raise GridFormatError(f"expected {nrows} data rows, found {len(data_lines)}")
    rows = []
    for ln in data_lines:
        parts = ln.split()
        if len(parts) != ncols:
            raise GridFormatError(f"expected {ncols} values per row, found {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise GridFormatError(f"non-numeric data token in row: {ln!r}") from exc
    north_first = np.array(rows, dtype=np.float64)  # (nrows, ncols), row 0 = y max
    grid = north_first[::-1].T  # -> [i, j] with j increasing northward
    if nodata is not None:
        mask = grid == nodata
        if mask.any():
            if nodata_policy == "reject":
                n = int(mask.sum())
                raise GridFormatError(f"{n} NODATA cell(s) present under reject policy")
            grid = _fill_nodata(grid, mask)
    return ElevationField((tokens["xllcorner"], tokens["yllcorner"]),
                          (cellsize, cellsize), grid)


def _fill_nodata(grid: np.ndarray, mask: np.ndarray) -> np.ndarray:
    grid = grid.copy()
    offsets = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    while mask.any():
        vals = np.pad(np.where(mask, 0.0, grid), 1)
        ok = np.pad((~mask).astype(np.float64), 1)
        nx, ny = grid.shape
        total = np.zeros_like(grid)
        count = np.zeros_like(grid)
        for di, dj in offsets:
            total += vals[1 + di:1 + di + nx, 1 + dj:1 + dj + ny]
            count += ok[1 + di:1 + di + nx, 1 + dj:1 + dj + ny]
        fillable = mask & (count > 0)
        if not fillable.any():
            raise GridFormatError("NODATA region has no data neighbors to fill from")
        grid[fillable] = total[fillable] / count[fillable]
        mask = mask & ~fillable
    return grid


def write_esri_ascii(field: ElevationField, dest) -> None:
    """Write the field as an ESRI ASCII grid; requires square cells.

    Header keys appear in canonical order with one-space separation and data
    rows are emitted north-first. Values round-trip exactly through repr.
    """
    dx, dy = field.spacing
    if dx != dy:
        raise ValidationError(f"ESRI grids need square cells, got spacing ({dx}, {dy})")
    nx, ny = field.dims
    out = io.StringIO()
    out.write(f"ncols {nx}\n")
    out.write(f"nrows {ny}\n")
    out.write(f"xllcorner {field.origin[0]!r}\n")
    out.write(f"yllcorner {field.origin[1]!r}\n")
    out.write(f"cellsize {dx!r}\n")
    north_first = field.heights.T[::-1]
    for row in north_first:
        out.write(" ".join(repr(float(v)) for v in row))
        out.write("\n")
    _write_text(dest, out.getvalue())


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text()


def _write_text(dest, text: str) -> None:
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
