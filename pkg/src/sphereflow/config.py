"""Run configuration: JSON schema, validation, canonical hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigParseError

GENERATOR_KINDS = ("parallel", "great_circle", "fourier_perturbed", "from_file")

ALL_CHECKS = (
    "chord_arc", "curvature_bound", "length_sandwich", "improved_length",
    "tau_bracket", "roundness", "great_circle", "fenchel", "length_decay",
)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    theta0: float | None = None
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    modes: tuple[int, ...] = ()
    amplitudes: tuple[float, ...] = ()
    antipodal_symmetric: bool = False
    path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    generator: GeneratorSpec
    n: int = 512
    dt: float = 1e-4
    t_max: float = 5.0
    l_floor: float = 0.05
    a: float | None = None
    checks: tuple[str, ...] = ALL_CHECKS
    seed: int = 0
    output_dir: str | None = None
    # engine knobs
    c_cfl: float = 5.0
    dt_curvature_frac: float = 0.004
    n_floor: int = 64
    checkpoint_every: int = 500
    z_every: int = 25
    simple_every: int = 25
    symmetrize: bool = False
    gc_kappa_tol: float = 1e-6
    admissible_tol: float = 1e-3


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigParseError(msg)


def generator_from_dict(raw: dict) -> GeneratorSpec:
    _require(isinstance(raw, dict), "generator must be an object")
    kind = raw.get("kind")
    _require(kind in GENERATOR_KINDS, f"generator.kind must be one of {GENERATOR_KINDS}")
    spec = GeneratorSpec(
        kind=kind,
        theta0=raw.get("theta0"),
        axis=tuple(float(v) for v in raw.get("axis", (0.0, 0.0, 1.0))),
        modes=tuple(int(m) for m in raw.get("modes", ())),
        amplitudes=tuple(float(x) for x in raw.get("amplitudes", ())),
        antipodal_symmetric=bool(raw.get("antipodal_symmetric", False)),
        path=raw.get("path"),
    )
    _require(len(spec.axis) == 3, "generator.axis must have 3 components")
    if kind == "parallel":
        _require(spec.theta0 is not None and 0.0 < spec.theta0 < 3.141592653589793,
                 "parallel generator needs polar angle theta0 in (0, pi)")
    if kind == "fourier_perturbed":
        _require(len(spec.modes) == len(spec.amplitudes) > 0,
                 "fourier_perturbed needs matching nonempty modes/amplitudes")
        _require(all(m >= 0 for m in spec.modes), "modes must be nonnegative integers")
    if kind == "from_file":
        _require(bool(spec.path), "from_file generator needs a path")
    return spec


def config_from_dict(raw: dict) -> RunConfig:
    _require(isinstance(raw, dict), "config must be a JSON object")
    _require("generator" in raw, "config needs a generator")
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(raw) - known
    _require(not unknown, f"unknown config fields: {sorted(unknown)}")

    defaults = RunConfig(generator=GeneratorSpec(kind="great_circle"))
    kwargs = {}
    for name in ("n", "n_floor", "checkpoint_every", "z_every", "simple_every", "seed"):
        val = raw.get(name, getattr(defaults, name))
        _require(isinstance(val, int) and not isinstance(val, bool), f"{name} must be an integer")
        kwargs[name] = val
    for name in ("dt", "t_max", "l_floor", "c_cfl", "dt_curvature_frac",
                 "gc_kappa_tol", "admissible_tol"):
        val = raw.get(name, getattr(defaults, name))
        _require(isinstance(val, (int, float)) and not isinstance(val, bool),
                 f"{name} must be a number")
        kwargs[name] = float(val)

    cfg = RunConfig(
        generator=generator_from_dict(raw["generator"]),
        a=None if raw.get("a") is None else float(raw["a"]),
        checks=tuple(raw.get("checks", ALL_CHECKS)),
        output_dir=raw.get("output_dir"),
        symmetrize=bool(raw.get("symmetrize", False)),
        **kwargs,
    )
    _require(cfg.n >= 8, "n must be at least 8")
    _require(cfg.n_floor >= 8, "n_floor must be at least 8")
    for name in ("dt", "t_max", "l_floor", "c_cfl", "dt_curvature_frac",
                 "gc_kappa_tol", "admissible_tol"):
        _require(getattr(cfg, name) > 0.0, f"{name} must be positive")
    for name in ("checkpoint_every", "z_every", "simple_every"):
        _require(getattr(cfg, name) >= 1, f"{name} must be >= 1")
    _require(cfg.seed >= 0, "seed must be nonnegative")
    _require(cfg.a is None or cfg.a >= 0.0, "a must be nonnegative when given")
    unknown_checks = set(cfg.checks) - set(ALL_CHECKS)
    _require(not unknown_checks, f"unknown checks: {sorted(unknown_checks)}")
    if cfg.symmetrize:
        _require(cfg.n % 2 == 0, "symmetrize requires an even vertex count")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    out["generator"] = {k: v for k, v in asdict(cfg.generator).items() if v not in (None, ())}
    out["generator"]["axis"] = list(cfg.generator.axis)
    if cfg.generator.modes:
        out["generator"]["modes"] = list(cfg.generator.modes)
        out["generator"]["amplitudes"] = list(cfg.generator.amplitudes)
    out["checks"] = list(cfg.checks)
    return out


def config_hash(cfg: RunConfig) -> str:
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
