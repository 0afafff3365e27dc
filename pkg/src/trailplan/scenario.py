"""Flat key=value scenario files and their assembly into runtime objects.

One scenario per file; lines are ``key = value`` with ``#`` comments. Values
are whitespace- or comma-separated tokens. Every key is validated against the
known table: unknown keys are rejected, required keys must be present, and
only ``mountain`` may repeat. The parsed file is echoed verbatim into every
summary artifact for provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

from .errors import ScenarioError, ValidationError
from .hamiltonian import HamiltonianConfig
from .kinematics import SpeedModel
from .solver import SolverConfig
from .terrain import ElevationField, load_esri_ascii, make_synthetic

__all__ = ["ScenarioConfig", "parse_scenario", "load_scenario", "build_runtime", "RunContext"]


def _floats(text: str, n: int | None = None):
    toks = text.replace(",", " ").split()
    try:
        vals = tuple(float(t) for t in toks)
    except ValueError as exc:
        raise ScenarioError(f"expected numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ScenarioError(f"expected {n} numbers, got {len(vals)} in {text!r}")
    return vals


def _float(text: str) -> float:
    return _floats(text, 1)[0]


def _int(text: str) -> int:
    v = _float(text)
    if v != int(v):
        raise ScenarioError(f"expected an integer, got {text!r}")
    return int(v)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ScenarioError(f"expected a boolean, got {text!r}")


def _word(text: str) -> str:
    return text.strip()


# key -> (parser, required)
_KEYS: dict[str, tuple] = {
    "box": (lambda t: _floats(t, 4), True),
    "N": (_int, True),
    "M": (_int, True),
    "K": (_int, False),
    "T": (_float, True),
    "sigma": (_float, False),
    "x0": (lambda t: _floats(t, 2), True),
    "x_end": (lambda t: _floats(t, 2), True),
    "cfl_safety": (_float, False),
    "max_values": (_int, False),
    "v0": (_float, False),
    "slope_shift": (_float, False),
    "denom": (_float, False),
    "pen_threshold": (_float, False),
    "pen_width": (_float, False),
    "scheme": (_word, False),
    "n_directions": (_int, False),
    "n_ext_samples": (_int, False),
    "lf_alpha": (lambda t: _floats(t, 2), False),
    "terrain": (_word, True),
    "height": (_float, False),
    "mountain": (lambda t: _floats(t, 4), False),
    "wall_height": (_float, False),
    "wall_rect": (lambda t: _floats(t, 4), False),
    "wall_ramp": (_float, False),
    "dem_path": (_word, False),
    "nodata_policy": (_word, False),
    "method": (_word, False),
    "L": (_int, False),
    "realizations": (_int, False),
    "seed": (_int, False),
    "out": (_word, False),
    "plots": (_bool, False),
    "dump": (_word, False),
    "sigma_list": (_floats, False),
    "T_list": (_floats, False),
    "T_lo": (_float, False),
    "T_hi": (_float, False),
    "tol_T": (_float, False),
    "delta_reach": (_float, False),
    "times": (_floats, False),
    "stride": (_int, False),
    "threads": (_int, False),
}

_DEFAULTS = {
    "K": 1,
    "sigma": 0.0,
    "cfl_safety": 0.9,
    "max_values": 200_000_000,
    "v0": 1.11,
    "slope_shift": 2.0,
    "denom": 2345.0,
    "pen_threshold": 0.5,
    "pen_width": 0.2,
    "scheme": "godunov",
    "n_directions": 64,
    "n_ext_samples": 16,
    "lf_alpha": (1.11, 1.11),
    "height": 0.0,
    "nodata_policy": "reject",
    "method": "deterministic",
    "L": 10_000,
    "realizations": 3,
    "seed": 0,
    "out": "out",
    "plots": True,
    "dump": "raw",
    "stride": 8,
    "threads": 1,
    "tol_T": 0.05,
}


@dataclass
class ScenarioConfig:
    values: dict
    raw: dict = dataclass_field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def get(self, name, default=None):
        return self.values.get(name, default)

    def require(self, name):
        if name not in self.values or self.values[name] is None:
            raise ScenarioError(f"missing key: {name}")
        return self.values[name]


def parse_scenario(text: str) -> ScenarioConfig:
    values: dict = dict(_DEFAULTS)
    raw: dict = {}
    mountains: list[tuple] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, val = stripped.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            raise ScenarioError(f"unknown key: {key}")
        if not val:
            raise ScenarioError(f"line {lineno}: empty value for key {key!r}")
        parser, _ = _KEYS[key]
        if key == "mountain":
            mountains.append(parser(val))
            raw.setdefault("mountain", []).append(val)
            continue
        if key in seen:
            raise ScenarioError(f"duplicate key: {key}")
        seen.add(key)
        values[key] = parser(val)
        raw[key] = val
    if mountains:
        values["mountains"] = mountains
    for key, (_, required) in _KEYS.items():
        if required and key not in seen:
            raise ScenarioError(f"missing key: {key}")
    sc = ScenarioConfig(values, raw)
    _validate(sc)
    return sc


def _validate(sc: ScenarioConfig) -> None:
    kind = sc.terrain
    if kind not in ("flat", "gaussian_mountains", "wall", "dem"):
        raise ScenarioError(f"unknown terrain kind: {kind}")
    if kind == "gaussian_mountains" and "mountains" not in sc.values:
        raise ScenarioError("missing key: mountain")
    if kind == "wall":
        for key in ("wall_height", "wall_rect", "wall_ramp"):
            sc.require(key)
    if kind == "dem":
        sc.require("dem_path")
    if sc.method not in ("deterministic", "ensemble"):
        raise ScenarioError(f"unknown method: {sc.method}")
    if sc.dump not in ("raw", "csv"):
        raise ScenarioError(f"unknown dump format: {sc.dump}")
    a, b, c, d = sc.box
    dx = (b - a) / sc.N
    dy = (d - c) / sc.M
    for name in ("x0", "x_end"):
        x, y = sc.values[name]
        if not (a + 2 * dx <= x <= b - 2 * dx and c + 2 * dy <= y <= d - 2 * dy):
            raise ScenarioError(f"{name} {sc.values[name]} lacks a 2-cell margin inside the box")


def load_scenario(path, out=None, seed=None, threads=None) -> ScenarioConfig:
    """Parse a scenario file, applying CLI flag overrides."""
    sc = parse_scenario(Path(path).read_text())
    if out is not None:
        sc.values["out"] = str(out)
        sc.raw["out"] = str(out)
    if seed is not None:
        sc.values["seed"] = int(seed)
        sc.raw["seed"] = str(seed)
    if threads is not None:
        sc.values["threads"] = int(threads)
    return sc


@dataclass
class RunContext:
    scenario: ScenarioConfig
    field: ElevationField
    model: SpeedModel
    ham: HamiltonianConfig
    solver_config: SolverConfig

    @property
    def x0(self):
        return tuple(self.scenario.x0)


def build_field(sc: ScenarioConfig) -> ElevationField:
    kind = sc.terrain
    dims = (sc.N + 1, sc.M + 1)
    if kind == "flat":
        return make_synthetic("flat", sc.box, dims, height=sc.height)
    if kind == "gaussian_mountains":
        return make_synthetic("gaussian_mountains", sc.box, dims, mountains=sc.mountains)
    if kind == "wall":
        return make_synthetic("wall", sc.box, dims, height=sc.wall_height,
                              rect=sc.wall_rect, ramp=sc.wall_ramp)
    field = load_esri_ascii(sc.dem_path, nodata_policy=sc.nodata_policy)
    return field


def build_runtime(sc: ScenarioConfig, *, T: float | None = None,
                  sigma: float | None = None) -> RunContext:
    """Assemble terrain, speed model and solver configuration for a scenario."""
    try:
        field = build_field(sc)
        model = SpeedModel(v0=sc.v0, slope_shift=sc.slope_shift, denom=sc.denom,
                           pen_threshold=sc.pen_threshold, pen_width=sc.pen_width)
        ham = HamiltonianConfig(n_directions=sc.n_directions,
                                n_ext_samples=sc.n_ext_samples,
                                scheme=sc.scheme,
                                lf_alpha=tuple(sc.lf_alpha))
        cfg = SolverConfig(box=tuple(sc.box), N=sc.N, M=sc.M, K=sc.K,
                           T=sc.T if T is None else T,
                           sigma=sc.sigma if sigma is None else sigma,
                           x_end=tuple(sc.x_end), ham=ham,
                           cfl_safety=sc.cfl_safety,
                           v_max=max(1.11, model.v0),
                           max_values=sc.max_values)
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc
    return RunContext(sc, field, model, ham, cfg)
