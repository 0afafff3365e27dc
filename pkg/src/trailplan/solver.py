"""Backward-in-time marching of the terminal-value HJB problem.

Time is stored as backward elapsed: slice k holds u(x, T - t_k) with
t_k = k*T/K, so u[0] is the terminal distance cone and u[K] is the fully
evolved value used at the start of a walk. The explicit scheme handles
sigma = 0; positive sigma adds a Laplacian resolved implicitly (five-point
stencil, factored once), so the time step is bound only by the Hamiltonian
CFL condition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field, replace
from math import ceil, hypot

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import (LinearSolveError, MemoryBudgetError, NumericalBlowupError,
                     ValidationError)
from .hamiltonian import HamiltonianConfig, grid_tables
from .kinematics import SpeedModel
from .terrain import ElevationField

__all__ = ["SolverConfig", "ValueFunction", "HjbSolver", "solve",
           "terminal_condition", "apply_bcs", "write_value_dump",
           "read_value_dump", "write_value_csv"]


@dataclass(frozen=True)
class SolverConfig:
    box: tuple[float, float, float, float]
    N: int
    M: int
    K: int
    T: float
    sigma: float
    x_end: tuple[float, float]
    ham: HamiltonianConfig = dataclass_field(default_factory=HamiltonianConfig)
    cfl_safety: float = 0.9
    v_max: float = 1.11
    max_values: int = 200_000_000

    def __post_init__(self):
        a, b, c, d = self.box
        if not (b > a and d > c):
            raise ValidationError(f"degenerate box {self.box}")
        if self.N < 4 or self.M < 4:
            raise ValidationError(f"need at least 4 cells per axis, got ({self.N}, {self.M})")
        if self.T <= 0:
            raise ValidationError(f"horizon T must be positive, got {self.T}")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0 < self.cfl_safety < 1:
            raise ValidationError(f"cfl_safety must lie in (0, 1), got {self.cfl_safety}")
        if self.K < 1:
            raise ValidationError(f"K must be at least 1, got {self.K}")
        dx, dy = self.dx, self.dy
        xe, ye = self.x_end
        if not (a + 2 * dx <= xe <= b - 2 * dx and c + 2 * dy <= ye <= d - 2 * dy):
            raise ValidationError(f"x_end {self.x_end} lacks a 2-cell margin inside {self.box}")
        # CFL: dt * v_max * (1/dx + 1/dy) <= cfl_safety, auto-raising K.
        k_min = ceil(self.T * self.v_max * (1.0 / dx + 1.0 / dy) / self.cfl_safety)
        if self.K < k_min:
            object.__setattr__(self, "K", k_min)

    @property
    def dx(self) -> float:
        a, b, _, _ = self.box
        return (b - a) / self.N

    @property
    def dy(self) -> float:
        _, _, c, d = self.box
        return (d - c) / self.M

    @property
    def dt(self) -> float:
        return self.T / self.K

    @property
    def diam(self) -> float:
        a, b, c, d = self.box
        return hypot(b - a, d - c)

    def x_nodes(self) -> np.ndarray:
        a, b, _, _ = self.box
        return np.linspace(a, b, self.N + 1)

    def y_nodes(self) -> np.ndarray:
        _, _, c, d = self.box
        return np.linspace(c, d, self.M + 1)

    def with_horizon(self, T: float, K: int = 1) -> "SolverConfig":
        """Copy with a new horizon; K re-derives from the CFL bound."""
        return replace(self, T=T, K=K)


@dataclass
class ValueFunction:
    """Space-time cost-to-go grid; u[k] is the slice at backward time k*T/K."""

    config: SolverConfig
    u: np.ndarray

    @property
    def terminal(self) -> np.ndarray:
        return self.u[0]

    @property
    def final(self) -> np.ndarray:
        return self.u[-1]

    def backward_index(self, t_forward: float) -> int:
        """Nearest stored slice for a forward walking time in [0, T]."""
        cfg = self.config
        n = int(round(t_forward / cfg.dt))
        return cfg.K - min(max(n, 0), cfg.K)


def terminal_condition(config: SolverConfig) -> np.ndarray:
    """Nodal Euclidean distances to the target point."""
    X, Y = np.meshgrid(config.x_nodes(), config.y_nodes(), indexing="ij")
    return np.hypot(X - config.x_end[0], Y - config.x_end[1])


def apply_bcs(u_new: np.ndarray, u_prev: np.ndarray) -> np.ndarray:
    """Extrapolating boundary closure, monotone in time.

    Each edge node gets min(max(2*u1 - u2, u2), previous boundary value) from
    its two inward neighbors; corners evaluate the x-edge and y-edge formulas
    and keep the smaller.
    """
    if u_new.shape != u_prev.shape:
        raise ValidationError("boundary update requires equal slice shapes")
    u = u_new

    def edge(u1, u2, prev):
        return np.minimum(np.maximum(2.0 * u1 - u2, u2), prev)

    u[0, 1:-1] = edge(u[1, 1:-1], u[2, 1:-1], u_prev[0, 1:-1])
    u[-1, 1:-1] = edge(u[-2, 1:-1], u[-3, 1:-1], u_prev[-1, 1:-1])
    u[1:-1, 0] = edge(u[1:-1, 1], u[1:-1, 2], u_prev[1:-1, 0])
    u[1:-1, -1] = edge(u[1:-1, -2], u[1:-1, -3], u_prev[1:-1, -1])
    for ci in (0, -1):
        i1, i2 = (1, 2) if ci == 0 else (-2, -3)
        for cj in (0, -1):
            j1, j2 = (1, 2) if cj == 0 else (-2, -3)
            vx = min(max(2.0 * u[i1, cj] - u[i2, cj], u[i2, cj]), u_prev[ci, cj])
            vy = min(max(2.0 * u[ci, j1] - u[ci, j2], u[ci, j2]), u_prev[ci, cj])
            u[ci, cj] = min(vx, vy)
    return u


class HjbSolver:
    """Workspace for one solve: precomputed speed tables, factorization, stepping."""

    def __init__(self, config: SolverConfig, field: ElevationField, model: SpeedModel,
                 *, time_stepper: str = "auto", debug_checks: bool = False):
        if time_stepper not in ("auto", "explicit", "semi_implicit"):
            raise ValidationError(f"unknown time stepper: {time_stepper}")
        if time_stepper == "explicit" and config.sigma > 0:
            raise ValidationError("explicit stepping does not treat sigma > 0")
        config.ham.validate_against(model)
        if config.v_max < model.v0:
            raise ValidationError(
                f"CFL speed bound v_max={config.v_max} below model v0={model.v0}")
        fa, fb, fc, fd = field.box
        a, b, c, d = config.box
        tol = 1e-9 * max(b - a, d - c)
        if not (fa <= a + tol and b <= fb + tol and fc <= c + tol and d <= fd + tol):
            raise ValidationError(f"solver box {config.box} not covered by terrain box {field.box}")
        self.config = config
        self.field = field
        self.model = model
        self.debug_checks = debug_checks
        self.time_stepper = time_stepper
        self.xs = config.x_nodes()
        self.ys = config.y_nodes()
        P, Q = grid_tables(self.xs, self.ys, field, model, config.ham)
        self._P_int = np.ascontiguousarray(P[1:-1, 1:-1])
        self._Q_int = np.ascontiguousarray(Q[1:-1, 1:-1])
        self._lu = None
        if config.sigma > 0 or time_stepper == "semi_implicit":
            self._lu = self._factorize()

    def _factorize(self):
        cfg = self.config
        cx = cfg.sigma ** 2 * cfg.dt / (2.0 * cfg.dx ** 2)
        cy = cfg.sigma ** 2 * cfg.dt / (2.0 * cfg.dy ** 2)
        ni, nj = cfg.N - 1, cfg.M - 1
        # (1 + 2cx + 2cy) on the diagonal, -cx for x-neighbors, -cy for y-neighbors.
        ex = sparse.diags_array([np.full(ni - 1, 1.0), np.full(ni - 1, 1.0)], offsets=[-1, 1])
        ey = sparse.diags_array([np.full(nj - 1, 1.0), np.full(nj - 1, 1.0)], offsets=[-1, 1])
        A = (sparse.identity(ni * nj) * (1.0 + 2.0 * cx + 2.0 * cy)
             - cx * sparse.kron(ex, sparse.identity(nj))
             - cy * sparse.kron(sparse.identity(ni), ey))
        A = A.tocsc()
        self._A = A
        self._cx, self._cy = cx, cy
        return spla.splu(A)

    def terminal_condition(self) -> np.ndarray:
        return terminal_condition(self.config)

    def _hamiltonian(self, u: np.ndarray) -> np.ndarray:
        cfg = self.config
        inv_dx, inv_dy = 1.0 / cfg.dx, 1.0 / cfg.dy
        uxm = (u[1:-1, 1:-1] - u[:-2, 1:-1]) * inv_dx
        uxp = (u[2:, 1:-1] - u[1:-1, 1:-1]) * inv_dx
        uym = (u[1:-1, 1:-1] - u[1:-1, :-2]) * inv_dy
        uyp = (u[1:-1, 2:] - u[1:-1, 1:-1]) * inv_dy
        if cfg.ham.scheme == "godunov":
            out = np.empty_like(uxm)
            _kernels.godunov_hamiltonian(uxm, uxp, uym, uyp, self._P_int, self._Q_int,
                                         cfg.ham.n_ext_samples, out)
            return out
        mu = 0.5 * (uxp + uxm)
        mv = 0.5 * (uyp + uym)
        h_mid = np.full(mu.shape, np.inf)
        nd = self._P_int.shape[2]
        for d in range(nd):
            np.minimum(h_mid, self._P_int[:, :, d] * mu + self._Q_int[:, :, d] * mv, out=h_mid)
        a1, a2 = cfg.ham.lf_alpha
        return h_mid + 0.5 * a1 * (uxp - uxm) + 0.5 * a2 * (uyp - uym)

    def step_explicit(self, u_prev: np.ndarray, *, step_index: int | None = None) -> np.ndarray:
        """One explicit Euler step: interior Hamiltonian update, then boundaries."""
        cfg = self.config
        u_new = u_prev.copy()
        # non-finite inputs flow through to the blowup check, not a warning
        with np.errstate(invalid="ignore", over="ignore"):
            u_new[1:-1, 1:-1] = u_prev[1:-1, 1:-1] + cfg.dt * self._hamiltonian(u_prev)
        apply_bcs(u_new, u_prev)
        self._check_finite(u_new, step_index)
        return u_new

    def step_semi_implicit(self, u_prev: np.ndarray, *, step_index: int | None = None) -> np.ndarray:
        """Explicit Hamiltonian, implicit five-point diffusion; reverts to the
        explicit step exactly when sigma = 0."""
        cfg = self.config
        if cfg.sigma == 0.0:
            return self.step_explicit(u_prev, step_index=step_index)
        rhs = u_prev[1:-1, 1:-1] + cfg.dt * self._hamiltonian(u_prev)
        # Boundary values of u_prev act as Dirichlet data for the interior solve.
        rhs[0, :] += self._cx * u_prev[0, 1:-1]
        rhs[-1, :] += self._cx * u_prev[-1, 1:-1]
        rhs[:, 0] += self._cy * u_prev[1:-1, 0]
        rhs[:, -1] += self._cy * u_prev[1:-1, -1]
        flat = rhs.ravel()
        sol = self._lu.solve(flat)
        resid = np.linalg.norm(self._A @ sol - flat)
        scale = max(np.linalg.norm(flat), 1e-300)
        if not np.isfinite(resid) or resid / scale > 1e-10:
            raise LinearSolveError(
                f"implicit diffusion solve residual {resid / scale:.3e} exceeds 1e-10")
        u_new = u_prev.copy()
        u_new[1:-1, 1:-1] = sol.reshape(rhs.shape)
        apply_bcs(u_new, u_prev)
        self._check_finite(u_new, step_index)
        return u_new

    def _check_finite(self, u: np.ndarray, step_index):
        if np.isfinite(u).all():
            return
        i, j = np.argwhere(~np.isfinite(u))[0]
        at = f" at step {step_index}" if step_index is not None else ""
        raise NumericalBlowupError(f"non-finite value at node ({i}, {j}){at}")

    def solve(self) -> ValueFunction:
        cfg = self.config
        n_values = (cfg.K + 1) * (cfg.N + 1) * (cfg.M + 1)
        if n_values > cfg.max_values:
            raise MemoryBudgetError(
                f"history of {n_values} values exceeds the cap of {cfg.max_values}")
        u = np.empty((cfg.K + 1, cfg.N + 1, cfg.M + 1))
        u[0] = self.terminal_condition()
        semi = self.time_stepper == "semi_implicit" or (
            self.time_stepper == "auto" and cfg.sigma > 0)
        step = self.step_semi_implicit if semi else self.step_explicit
        tol = 1e-6 * cfg.diam
        terminal_max = u[0].max()
        for k in range(1, cfg.K + 1):
            u[k] = step(u[k - 1], step_index=k)
            if self.debug_checks:
                assert u[k].min() >= -tol, f"negative value {u[k].min()} at step {k}"
                if cfg.sigma == 0.0 and cfg.ham.scheme == "godunov":
                    assert (u[k] <= u[0] + tol).all(), f"pointwise increase at step {k}"
                else:
                    assert u[k].max() <= terminal_max + tol, f"max principle broken at step {k}"
        return ValueFunction(cfg, u)


def solve(config: SolverConfig, field: ElevationField, model: SpeedModel,
          *, time_stepper: str = "auto", debug_checks: bool = False) -> ValueFunction:
    """Solve the terminal-value problem; explicit stepping for sigma = 0,
    semi-implicit otherwise."""
    return HjbSolver(config, field, model, time_stepper=time_stepper,
                     debug_checks=debug_checks).solve()


def write_value_dump(vf: ValueFunction, path) -> None:
    """Raw dump: one JSON header line, then row-major little-endian f64 slices
    in k order."""
    cfg = vf.config
    header = {
        "dims": [cfg.N + 1, cfg.M + 1],
        "box": list(cfg.box),
        "T": cfg.T,
        "K": cfg.K,
        "sigma": cfg.sigma,
        "endianness": "little",
        "dtype": "f64",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(vf.u, dtype="<f8").tobytes())


def read_value_dump(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()
    nx, ny = header["dims"]
    k = header["K"]
    u = np.frombuffer(raw, dtype="<f8").reshape(k + 1, nx, ny).astype(np.float64)
    return header, u


def write_value_csv(vf: ValueFunction, path, k: int) -> None:
    """Per-slice CSV with columns i, j, x, y, u."""
    cfg = vf.config
    xs, ys = cfg.x_nodes(), cfg.y_nodes()
    with open(path, "w", newline="") as fh:
        fh.write("i,j,x,y,u\n")
        for i in range(cfg.N + 1):
            for j in range(cfg.M + 1):
                fh.write(f"{i},{j},{xs[i]!r},{ys[j]!r},{vf.u[k, i, j]!r}\n")
