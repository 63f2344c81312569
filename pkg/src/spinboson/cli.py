"""Command-line experiment runner: spectra, deviation sweeps, dynamics, rates.

Configs are flat ``key = value`` text (``#`` starts a comment) or a JSON
object with the same keys. Every output table embeds its resolved config as
``# config.<key> = <value>`` lines, so an output CSV is itself a valid config.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from spinboson import __version__
from spinboson.hamiltonians import (
    build_exact,
    build_simple_truncation,
    dsr_eigensystem,
    lowest_levels,
    tracked_levels,
)
from spinboson.model import ConvergenceError, ModelParams, SpectralDensity, solve_displacement
from spinboson.numerics import QuadratureError
from spinboson.redfield import (
    dsr_dynamics,
    dsr_level_system,
    exact_level_system,
    full_redfield_sigma_z,
    sigma_z_series,
)

MODES = ("spectrum", "deviations", "dynamics", "rates", "jeff")
FORMATS = ("csv", "json")
PRESETS = ("fig1a", "fig1b", "fig1c", "fig2")
EXACT_FOCK = 9  # 18-dimensional reference

SCHEMES = {
    "spectrum": ("exact18", "simple", "dsr"),
    "deviations": ("exact18", "simple", "simple6", "simple8", "dsr"),
    "dynamics": ("dsr", "dsr_full", "exact18"),
    "rates": ("dsr",),
    "jeff": (),
}
DEFAULT_SCHEMES = {
    "spectrum": ("exact18", "simple", "dsr"),
    "deviations": ("simple", "dsr"),
    "dynamics": ("dsr",),
    "rates": ("dsr",),
    "jeff": (),
}
# Fock levels kept by the truncated schemes of the deviation sweep
_TRUNCATED_FOCK = {"simple": 2, "simple6": 3, "simple8": 4}

TOLERANCES = {
    "displacement_tol": 1e-12,
    "eigh_tol": 1e-15,
    "principal_value_tol": 1e-11,
    "ode_rtol": 1e-10,
    "ode_atol": 1e-12,
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``steps`` points from ``start`` to ``stop`` inclusive."""

    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("grid bounds must be finite")
        if self.steps < 2:
            raise ConfigError(f"grid needs at least 2 steps, got {self.steps}")
        if not self.start < self.stop:
            raise ConfigError(f"grid start must be below stop, got {self.start} >= {self.stop}")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class Sweep:
    variable: str
    grid: Grid

    def __post_init__(self):
        if self.variable not in ("delta", "g"):
            raise ConfigError(f"sweep variable must be delta or g, got {self.variable!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    params: ModelParams
    sweep: Sweep | None = None
    schemes: tuple[str, ...] = ()
    times: Grid | None = None
    omegas: Grid | None = None
    lamb_shift: bool = True
    alpha: float = 0.0
    omega_peak: float = 1.0
    unit: str = "omega0"
    output: str | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        bad = [s for s in self.schemes if s not in SCHEMES[self.mode]]
        if bad:
            raise ConfigError(f"schemes {bad} not available in {self.mode} mode "
                              f"(choose from {SCHEMES[self.mode]})")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("duplicate scheme")
        if self.mode in ("spectrum", "deviations", "dynamics", "rates") and not self.schemes:
            raise ConfigError(f"{self.mode} mode needs at least one scheme")
        if self.mode == "deviations" and not set(self.schemes) - {"exact18"}:
            raise ConfigError("deviations mode needs a scheme besides the exact18 reference")
        if self.mode == "dynamics" and self.times is None:
            raise ConfigError("dynamics mode needs t_start, t_stop and t_steps")
        if self.times is not None and self.times.start < 0:
            raise ConfigError("times must be nonnegative")
        if self.mode == "jeff":
            if self.omegas is None:
                raise ConfigError("jeff mode needs w_start, w_stop and w_steps")
            if self.omegas.start < 0:
                raise ConfigError("J_eff is defined for omega >= 0 only")


# -- parsing ---------------------------------------------------------------

_MODEL_KEYS = ("delta", "omega0", "g", "g_re", "g_im", "kappa", "omega_c", "temperature")
_KNOWN_KEYS = set(_MODEL_KEYS) | {
    "mode", "schemes", "lamb_shift", "alpha", "omega_peak", "unit", "output", "format", "workers",
    "sweep_variable", "sweep_start", "sweep_stop", "sweep_steps",
    "t_start", "t_stop", "t_steps", "w_start", "w_stop", "w_steps",
}
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_META_PREFIX = "config."


def parse_config_text(text: str) -> dict[str, str]:
    """Raw key/value pairs from flat text, JSON, or a table written by this tool."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        if "metadata" in data and "columns" in data:
            data = data["metadata"].get("config", {})
        return {str(k): _json_scalar(v) for k, v in data.items()}

    lines = text.splitlines()
    embedded = [ln[1:].strip() for ln in lines if ln.startswith("#") and ln[1:].strip().startswith(_META_PREFIX)]
    if embedded:
        lines = [ln[len(_META_PREFIX):] for ln in embedded]
    out: dict[str, str] = {}
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {number}: empty key")
        if key in out:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        out[key] = value
    return out


def _json_scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    if v is None:
        return ""
    return str(v)


def _float(raw: Mapping[str, str], key: str, default: float | None = None) -> float:
    if key not in raw or raw[key] == "":
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        value = float(raw[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {raw[key]!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {raw[key]!r}")
    return value


def _int(raw: Mapping[str, str], key: str, default: int | None = None) -> int:
    value = _float(raw, key, None if default is None else float(default))
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {raw[key]!r}")
    return int(value)


def _bool(raw: Mapping[str, str], key: str, default: bool) -> bool:
    if key not in raw:
        return default
    word = raw[key].strip().lower()
    if word in _TRUE:
        return True
    if word in _FALSE:
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw[key]!r}")


def _grid(raw: Mapping[str, str], prefix: str) -> Grid | None:
    keys = [f"{prefix}_start", f"{prefix}_stop", f"{prefix}_steps"]
    present = [k for k in keys if k in raw]
    if not present:
        return None
    if len(present) != 3:
        raise ConfigError(f"incomplete grid: need all of {keys}")
    return Grid(_float(raw, keys[0]), _float(raw, keys[1]), _int(raw, keys[2]))


def config_from_mapping(raw: Mapping[str, str], mode: str | None = None) -> ExperimentConfig:
    """Validate raw key/value pairs; ``mode`` overrides the config's own mode."""
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    if "mode" in raw and raw["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {raw['mode']!r}")
    mode = mode or raw.get("mode")
    if mode is None:
        raise ConfigError("no mode given")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

    model = {k: raw[k] for k in _MODEL_KEYS if k in raw}
    model.setdefault("omega0", "1")
    if "delta" not in model:
        if mode != "jeff":
            raise ConfigError("missing required key 'delta'")
        model["delta"] = "0"
    try:
        if "g" in model:
            model["g"] = complex(model["g"].replace(" ", ""))
        params = ModelParams.from_dict({k: v for k, v in model.items()})
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from None

    sweep = None
    if "sweep_variable" in raw:
        grid = _grid(raw, "sweep")
        if grid is None:
            raise ConfigError("sweep_variable given without sweep_start/stop/steps")
        sweep = Sweep(raw["sweep_variable"], grid)
    elif _grid(raw, "sweep") is not None:
        raise ConfigError("sweep grid given without sweep_variable")
    if sweep is not None and sweep.variable == "g" and sweep.grid.start < 0:
        raise ConfigError("g sweep runs over |g| and must start at >= 0")

    if "schemes" in raw:
        schemes = tuple(s.strip() for s in raw["schemes"].split(",") if s.strip())
    else:
        schemes = DEFAULT_SCHEMES[mode]

    return ExperimentConfig(
        mode=mode,
        params=params,
        sweep=sweep,
        schemes=schemes,
        times=_grid(raw, "t"),
        omegas=_grid(raw, "w"),
        lamb_shift=_bool(raw, "lamb_shift", True),
        alpha=_float(raw, "alpha", 0.0),
        omega_peak=_float(raw, "omega_peak", params.omega0),
        unit=raw.get("unit", "omega0") or "omega0",
        output=raw.get("output") or None,
        format=raw.get("format", "csv"),
        workers=_int(raw, "workers", 1),
    )


def load_config(path: str | Path, mode: str | None = None) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text()), mode)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    return resources.files("spinboson").joinpath("presets", f"{name}.cfg").read_text()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def config_to_mapping(cfg: ExperimentConfig) -> dict[str, str]:
    """Flat string form; ``config_from_mapping`` inverts it exactly."""
    out = {"mode": cfg.mode}
    out.update({k: _fmt(v) for k, v in cfg.params.to_dict().items()})
    if cfg.sweep is not None:
        out["sweep_variable"] = cfg.sweep.variable
        out.update(_grid_items("sweep", cfg.sweep.grid))
    if cfg.times is not None:
        out.update(_grid_items("t", cfg.times))
    if cfg.omegas is not None:
        out.update(_grid_items("w", cfg.omegas))
    out["schemes"] = ",".join(cfg.schemes)
    out["lamb_shift"] = "true" if cfg.lamb_shift else "false"
    out["alpha"] = _fmt(cfg.alpha)
    out["omega_peak"] = _fmt(cfg.omega_peak)
    out["unit"] = cfg.unit
    out["format"] = cfg.format
    out["workers"] = str(cfg.workers)
    if cfg.output:
        out["output"] = cfg.output
    return out


def _grid_items(prefix: str, grid: Grid) -> dict[str, str]:
    return {f"{prefix}_start": _fmt(grid.start), f"{prefix}_stop": _fmt(grid.stop),
            f"{prefix}_steps": str(grid.steps)}


def serialize_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_to_mapping(cfg).items())


# -- results ---------------------------------------------------------------

@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[float]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row length does not match the header")

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def to_csv(self) -> str:
        lines = []
        for key, value in _flatten(self.metadata):
            lines.append(f"# {key} = {value}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {"metadata": self.metadata, "columns": self.columns,
               "rows": [[float(x) for x in row] for row in self.rows]}
        return json.dumps(doc, indent=1) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _flatten(meta: Mapping[str, Any], prefix: str = ""):
    for key, value in meta.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            yield from _flatten(value, name + ".")
        elif isinstance(value, float):
            yield name, _fmt(value)
        else:
            yield name, value


# where and how fast a run happens does not change its numbers
_RUN_ONLY_KEYS = ("output", "workers")


def _metadata(cfg: ExperimentConfig, extra: Mapping[str, Any] | None = None) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "spinboson_version": __version__,
        "config": {k: v for k, v in config_to_mapping(cfg).items() if k not in _RUN_ONLY_KEYS},
        "tolerances": dict(TOLERANCES),
    }
    if extra:
        meta.update(extra)
    return meta


# -- runners ---------------------------------------------------------------

def _point_params(cfg: ExperimentConfig, x: float | None) -> ModelParams:
    p = cfg.params
    if x is None or cfg.sweep is None:
        return p
    if cfg.sweep.variable == "delta":
        return p.replace(delta=x)
    phase = cmath.exp(1j * cmath.phase(p.g)) if p.g != 0 else 1.0
    return p.replace(g=x * phase)


def _sweep_points(cfg: ExperimentConfig) -> list[float | None]:
    if cfg.sweep is None:
        return [None]
    return [float(v) for v in cfg.sweep.grid.values()]


def _sweep_column(cfg: ExperimentConfig) -> list[str]:
    return [cfg.sweep.variable] if cfg.sweep is not None else []


def _map(fn: Callable, points: Sequence, workers: int) -> list:
    if workers <= 1 or len(points) < 2:
        return [fn(x) for x in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, so rows stay sorted by sweep value
        return list(pool.map(fn, points))


def _scheme_levels(scheme: str, params: ModelParams) -> np.ndarray:
    if scheme == "exact18":
        return lowest_levels(build_exact(params, EXACT_FOCK))
    if scheme == "simple":
        return lowest_levels(build_simple_truncation(params))
    if scheme == "dsr":
        dsr = solve_displacement(params, tol=TOLERANCES["displacement_tol"])
        return dsr_eigensystem(params, dsr).sorted_energies
    raise ConfigError(f"unknown spectrum scheme {scheme!r}")


def _spectrum_row(cfg: ExperimentConfig, x: float | None) -> list[float]:
    params = _point_params(cfg, x)
    row = [] if x is None else [x]
    for scheme in cfg.schemes:
        e = _scheme_levels(scheme, params)
        row.extend(e - e[0])
    return row


def run_spectrum(cfg: ExperimentConfig) -> ResultTable:
    """Four lowest levels per scheme, ground state at zero."""
    cols = _sweep_column(cfg) + [f"E{i}_{s}" for s in cfg.schemes for i in range(4)]
    rows = _map(partial(_spectrum_row, cfg), _sweep_points(cfg), cfg.workers)
    return ResultTable(cols, rows, _metadata(cfg))


def _deviation_levels(scheme: str, params: ModelParams) -> np.ndarray:
    if scheme == "dsr":
        dsr = solve_displacement(params, tol=TOLERANCES["displacement_tol"])
        return dsr_eigensystem(params, dsr).energies
    return tracked_levels(params, _TRUNCATED_FOCK[scheme])


def _deviation_row(cfg: ExperimentConfig, x: float | None) -> list[float]:
    params = _point_params(cfg, x)
    ref = tracked_levels(params, EXACT_FOCK)
    r01, r02 = ref[1] - ref[0], ref[2] - ref[0]
    row = ([] if x is None else [x]) + [r01, r02]
    for scheme in cfg.schemes:
        if scheme == "exact18":
            continue
        e = _deviation_levels(scheme, params)
        d01, d02 = (e[1] - e[0]) - r01, (e[2] - e[0]) - r02
        row += [d01, d02, 100.0 * d01 / r01, 100.0 * d02 / r02]
    return row


def run_deviations(cfg: ExperimentConfig) -> ResultTable:
    """Bohr-frequency deviations from the 18-dimensional exact reference.

    Exact levels are assigned by parity sector so each column follows the
    same physical state through level crossings.
    """
    cols = _sweep_column(cfg) + ["omega01_exact18", "omega02_exact18"]
    for s in cfg.schemes:
        if s != "exact18":
            cols += [f"d01_{s}", f"d02_{s}", f"d01_{s}_pct", f"d02_{s}_pct"]
    rows = _map(partial(_deviation_row, cfg), _sweep_points(cfg), cfg.workers)
    return ResultTable(cols, rows, _metadata(cfg))


def _dynamics_trace(cfg: ExperimentConfig, scheme: str) -> np.ndarray:
    params = cfg.params
    times = cfg.times.values()
    sd = params.spectral_density()
    if scheme == "dsr":
        return sigma_z_series(dsr_dynamics(params, lamb_shift=cfg.lamb_shift), times)
    system = dsr_level_system(params) if scheme == "dsr_full" else exact_level_system(params, EXACT_FOCK)
    return full_redfield_sigma_z(system, sd, params.beta, times, lamb_shift=cfg.lamb_shift,
                                 rtol=TOLERANCES["ode_rtol"], atol=TOLERANCES["ode_atol"])


def _complex_items(name: str, z: complex) -> dict[str, float]:
    return {f"{name}_re": float(z.real), f"{name}_im": float(z.imag)}


def run_dynamics(cfg: ExperimentConfig) -> ResultTable:
    """sigma_z(t) per scheme; the secular frequencies and rates go into metadata."""
    if cfg.sweep is not None:
        raise ConfigError("dynamics mode does not take a sweep")
    times = cfg.times.values()
    traces = _map(partial(_dynamics_trace, cfg), list(cfg.schemes), cfg.workers)
    dyn = dsr_dynamics(cfg.params, lamb_shift=cfg.lamb_shift)
    sidecar: dict[str, float] = {"omega01": dyn.omega01, "omega02": dyn.omega02}
    sidecar.update(_complex_items("omega_plus", dyn.omega_plus))
    sidecar.update(_complex_items("omega_minus", dyn.omega_minus))
    for i, gam in enumerate((dyn.gamma1, dyn.gamma2, dyn.gamma3, dyn.gamma4), 1):
        sidecar.update(_complex_items(f"gamma{i}", gam))
    cols = ["t"] + [f"sigma_z_{s}" for s in cfg.schemes]
    rows = [[t, *(float(tr[i]) for tr in traces)] for i, t in enumerate(times)]
    return ResultTable(cols, rows, _metadata(cfg, {"secular": sidecar}))


_RATE_COLUMNS = ["omega01", "omega02"] + [
    f"{name}_{part}" for name in ("gamma1", "gamma2", "gamma3", "gamma4", "omega_plus", "omega_minus")
    for part in ("re", "im")
]


def _rates_row(cfg: ExperimentConfig, x: float | None) -> list[float]:
    dyn = dsr_dynamics(_point_params(cfg, x), lamb_shift=cfg.lamb_shift)
    row = [] if x is None else [x]
    row += [dyn.omega01, dyn.omega02]
    for z in (dyn.gamma1, dyn.gamma2, dyn.gamma3, dyn.gamma4, dyn.omega_plus, dyn.omega_minus):
        row += [z.real, z.imag]
    return row


def run_rates(cfg: ExperimentConfig) -> ResultTable:
    cols = _sweep_column(cfg) + _RATE_COLUMNS
    rows = _map(partial(_rates_row, cfg), _sweep_points(cfg), cfg.workers)
    return ResultTable(cols, rows, _metadata(cfg))


def run_jeff(cfg: ExperimentConfig) -> ResultTable:
    """Effective Lorentzian density on the ``w`` grid (diagnostic)."""
    sd = SpectralDensity.lorentzian_effective(cfg.alpha, cfg.omega_peak, cfg.params.kappa)
    w = cfg.omegas.values()
    return ResultTable(["omega", "j_eff"], [[x, y] for x, y in zip(w, sd(w))], _metadata(cfg))


RUNNERS = {
    "spectrum": run_spectrum,
    "deviations": run_deviations,
    "dynamics": run_dynamics,
    "rates": run_rates,
    "jeff": run_jeff,
}


def run(cfg: ExperimentConfig) -> ResultTable:
    return RUNNERS[cfg.mode](cfg)


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinboson", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="key = value or JSON config file")
    p.add_argument("--preset", choices=PRESETS, help="start from a shipped config; --config keys override it")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--scheme", action="append", help="scheme name; repeat or comma-separate")
    p.add_argument("--no-lamb-shift", action="store_true", help="drop the imaginary parts of the rates")
    p.add_argument("--workers", type=int, help="processes for sweep points")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is None and args.preset is None:
        raise ConfigError("give --config and/or --preset")
    raw: dict[str, str] = {}
    if args.preset:
        raw.update(parse_config_text(preset_text(args.preset)))
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        raw.update(parse_config_text(text))
    if args.scheme:
        raw["schemes"] = ",".join(args.scheme)
    cfg = config_from_mapping(raw, args.mode)
    changes: dict[str, Any] = {}
    if args.no_lamb_shift:
        changes["lamb_shift"] = False
    if args.format:
        changes["format"] = args.format
    if args.out:
        changes["output"] = args.out
    if args.workers is not None:
        changes["workers"] = args.workers
    return replace(cfg, **changes) if changes else cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        table = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, QuadratureError, RuntimeError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = table.render(cfg.format)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
