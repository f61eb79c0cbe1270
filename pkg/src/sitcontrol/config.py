"""Sectioned key=value run configuration: parsing, validation, dumping.

The file format is INI-style with a fixed section/key vocabulary; unknown
sections or keys are rejected by name so a typo cannot silently fall back
to a default.  Every section is optional and defaults to the nominal
experiment; [model.true] overrides individual plant parameters so the
simulated dynamics can differ from the planner's beliefs.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass

from .epi import EpiParams
from .experiments import (
    ALPHA_GAIN_MARGIN,
    MonteCarloConfig,
    Scenario,
    calibrate_alpha,
)
from .mfc import REFERENCE_KINDS, ControllerConfig, ReferenceTrajectory
from .plant import ModelParams, NOMINAL_PARAMS, SimGrid, wild_equilibrium
from .pulse import PulseConfig


class ConfigError(ValueError):
    """Configuration problem, attributed to section/key/line when known."""

    def __init__(self, message: str, section: str | None = None,
                 key: str | None = None, line: int | None = None):
        where = []
        if section is not None:
            where.append(f"section [{section}]")
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.section = section
        self.key = key
        self.line = line


MODEL_KEYS = ("beta_E", "cap_K", "nu_E", "delta_E", "nu", "delta_M",
              "gamma_S", "delta_F", "delta_S")
EPI_KEYS = ("bite_rate", "p_v2h", "p_h2v", "host_pop", "recovery", "vector_death")

SCHEMA: dict[str, tuple[str, ...]] = {
    "model": MODEL_KEYS,
    "model.true": MODEL_KEYS,
    "controller": ("alpha", "k_p", "tau", "error_sign"),
    "pulse": ("period_J", "delta_S_nominal", "u_max"),
    "reference": ("kind", "y_start", "y_target", "t_settle"),
    "grid": ("t0", "t_end", "h", "sample_every"),
    "montecarlo": ("n_runs", "lo", "hi", "base_seed"),
    "epi": EPI_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration with auto values already resolved.

    model holds the planner's beliefs, model_true the simulated plant.
    alpha and y_start are stored as resolved numbers, so dumping and
    re-parsing reproduces this object exactly.
    """

    model: ModelParams
    model_true: ModelParams
    controller: ControllerConfig
    pulse: PulseConfig
    reference: ReferenceTrajectory
    grid: SimGrid
    montecarlo: MonteCarloConfig
    epi: EpiParams | None = None

    def scenario(self, seed: int = 0) -> Scenario:
        return Scenario(
            params_true=self.model_true,
            params_planner=self.model,
            controller=self.controller,
            pulse=self.pulse,
            reference=self.reference,
            grid=self.grid,
            seed=seed,
        )


def _find_line(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return number
        elif key is not None and current == section:
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return number
    return None


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # keys are case-sensitive
    return parser


def _get_float(section, name, default, text, section_name):
    raw = section.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", section_name, name,
                          _find_line(text, section_name, name)) from None


def _get_int(section, name, default, text, section_name):
    raw = section.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", section_name, name,
                          _find_line(text, section_name, name)) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; see SCHEMA for the vocabulary.

    Raises:
        ConfigError: malformed syntax, unknown section/key, bad value, or a
            parameter violating its model invariant.
    """
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed configuration: {exc.message.splitlines()[0]}",
                          line=line) from None

    for section_name in parser.sections():
        if section_name not in SCHEMA:
            raise ConfigError("unknown section", section_name,
                              line=_find_line(text, section_name))
        for key in parser[section_name]:
            if key not in SCHEMA[section_name]:
                raise ConfigError("unknown key", section_name, key,
                                  _find_line(text, section_name, key))

    empty: dict[str, str] = {}

    def section(name):
        return parser[name] if parser.has_section(name) else empty

    def build(section_name, builder, **kwargs):
        try:
            return builder(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc), section_name,
                              line=_find_line(text, section_name)) from None

    model_kwargs = {k: _get_float(section("model"), k, getattr(NOMINAL_PARAMS, k),
                                  text, "model") for k in MODEL_KEYS}
    model = build("model", ModelParams, **model_kwargs)

    true_kwargs = dict(model_kwargs)
    for k in MODEL_KEYS:
        true_kwargs[k] = _get_float(section("model.true"), k, true_kwargs[k],
                                    text, "model.true")
    model_true = build("model.true", ModelParams, **true_kwargs)

    sec = section("controller")
    alpha_raw = sec.get("alpha", "auto")
    if alpha_raw.strip().lower() == "auto":
        alpha = ALPHA_GAIN_MARGIN * calibrate_alpha(model)
    else:
        try:
            alpha = float(alpha_raw)
        except ValueError:
            raise ConfigError(f"expected a number or 'auto', got {alpha_raw!r}",
                              "controller", "alpha",
                              _find_line(text, "controller", "alpha")) from None
    controller = build(
        "controller", ControllerConfig,
        alpha=alpha,
        k_p=_get_float(sec, "k_p", 0.12, text, "controller"),
        tau=_get_float(sec, "tau", 2.0, text, "controller"),
        error_sign=_get_float(sec, "error_sign", -1.0, text, "controller"),
    )

    sec = section("pulse")
    pulse = build(
        "pulse", PulseConfig,
        period_J=_get_int(sec, "period_J", 3, text, "pulse"),
        delta_S_nominal=_get_float(sec, "delta_S_nominal", model.delta_S,
                                   text, "pulse"),
        u_max=_get_float(sec, "u_max", 1e6, text, "pulse"),
    )

    sec = section("reference")
    kind = sec.get("kind", "exponential-decay")
    if kind not in REFERENCE_KINDS:
        raise ConfigError(f"kind must be one of {REFERENCE_KINDS}, got {kind!r}",
                          "reference", "kind", _find_line(text, "reference", "kind"))
    y_start_raw = sec.get("y_start", "auto")
    y_target = _get_float(sec, "y_target", 500.0, text, "reference")
    if y_start_raw.strip().lower() == "auto":
        y_start = max(wild_equilibrium(model_true)[0].x1, y_target)
    else:
        try:
            y_start = float(y_start_raw)
        except ValueError:
            raise ConfigError(f"expected a number or 'auto', got {y_start_raw!r}",
                              "reference", "y_start",
                              _find_line(text, "reference", "y_start")) from None
    ref = build("reference", ReferenceTrajectory, kind=kind, y_start=y_start,
                y_target=y_target,
                t_settle=_get_float(sec, "t_settle", 1000.0, text, "reference"))

    sec = section("grid")
    grid = build(
        "grid", SimGrid,
        t0=_get_float(sec, "t0", 0.0, text, "grid"),
        t_end=_get_float(sec, "t_end", 400.0, text, "grid"),
        h=_get_float(sec, "h", 0.01, text, "grid"),
        sample_every=_get_float(sec, "sample_every", 1.0, text, "grid"),
    )

    sec = section("montecarlo")
    montecarlo = build(
        "montecarlo", MonteCarloConfig,
        n_runs=_get_int(sec, "n_runs", 100, text, "montecarlo"),
        lo=_get_float(sec, "lo", 0.7, text, "montecarlo"),
        hi=_get_float(sec, "hi", 1.3, text, "montecarlo"),
        base_seed=_get_int(sec, "base_seed", 42, text, "montecarlo"),
    )

    epi = None
    if parser.has_section("epi"):
        sec = parser["epi"]
        missing = [k for k in EPI_KEYS if k not in sec]
        if missing:
            raise ConfigError(f"missing keys {missing}", "epi",
                              line=_find_line(text, "epi"))
        epi = build("epi", EpiParams,
                    **{k: _get_float(sec, k, None, text, "epi") for k in EPI_KEYS})

    return RunConfig(model=model, model_true=model_true, controller=controller,
                     pulse=pulse, reference=ref, grid=grid,
                     montecarlo=montecarlo, epi=epi)


def load_config(path: str | None) -> RunConfig:
    """Parse a configuration file, or the built-in defaults for path=None."""
    if path is None:
        return parse_config("")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None


def dump_config(config: RunConfig) -> str:
    """Serialize a resolved configuration; parse_config inverts this exactly."""
    parser = _parser()

    def put(section_name, obj, keys, rename=()):
        parser.add_section(section_name)
        names = dict(rename)
        for key in keys:
            value = getattr(obj, names.get(key, key))
            parser.set(section_name, key, repr(value) if isinstance(value, float)
                       else str(value))

    put("model", config.model, MODEL_KEYS)
    put("model.true", config.model_true, MODEL_KEYS)
    put("controller", config.controller, ("alpha", "k_p", "tau", "error_sign"))
    put("pulse", config.pulse, ("period_J", "delta_S_nominal", "u_max"))
    put("reference", config.reference, ("kind", "y_start", "y_target", "t_settle"))
    put("grid", config.grid, ("t0", "t_end", "h", "sample_every"))
    put("montecarlo", config.montecarlo, ("n_runs", "lo", "hi", "base_seed"))
    if config.epi is not None:
        put("epi", config.epi, EPI_KEYS)
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def apply_preset(config: RunConfig, preset: str) -> RunConfig:
    """Apply a named experiment variant on top of a parsed configuration."""
    if preset in ("nominal", "custom"):
        return config
    if preset == "j6":
        return dataclasses.replace(
            config, pulse=dataclasses.replace(config.pulse, period_J=6))
    if preset == "mismatch":
        true = dataclasses.replace(config.model_true,
                                   delta_S=config.model.delta_S * 1.3)
        return dataclasses.replace(config, model_true=true)
    raise ConfigError(f"unknown scenario preset {preset!r}")


def apply_horizon(config: RunConfig, horizon: float) -> RunConfig:
    """Override the simulated horizon (days past t0)."""
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    grid = dataclasses.replace(config.grid, t_end=config.grid.t0 + horizon)
    return dataclasses.replace(config, grid=grid)
