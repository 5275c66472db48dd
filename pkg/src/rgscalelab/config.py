"""Experiment configuration: a sectioned key/value text format.

Example::

    [experiment]
    name = exponent-fit

    [model]
    n = 1
    alpha = 0.5

    [observable]
    gamma = auto

Every key has a type and a default (see ``SCHEMA``); unknown sections or
keys are errors.  ``parse_config`` collects all problems before raising.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ConfigError

EXPERIMENTS = (
    "scale-sweep",
    "exponent-fit",
    "limit-2pt",
    "cluster-check",
    "sharp-vs-smooth",
    "commutator-bound",
    "kms-check",
    "slowdown",
    "dynamic-exponent",
    "quasifree-check",
)
MODEL_KINDS = ("quasifree", "gaussian-truncated", "critical-truncated")
KERNEL_TYPES = ("smooth", "sharp", "wedge")
FORMATS = ("csv", "json")


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text: str) -> int:
    return int(text, 10)


def _floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(_float(p) for p in parts)


def _points(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(p) for p in text.split(";") if p.strip())


def _gamma(text: str):
    return "auto" if text.strip().lower() == "auto" else _float(text)


def _choice(options):
    def parse(text: str) -> str:
        v = text.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v

    return parse


def _text(text: str) -> str:
    return text.strip()


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(_fmt(v) for v in value)
        return ", ".join(_fmt_float(v) for v in value)
    return str(value)


# section -> key -> (parser, default); a default of REQUIRED must be given
REQUIRED = object()
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "experiment": {
        "name": (_choice(EXPERIMENTS), None),
        "seed": (_int, 0),
        "l_max": (_int, 6),
    },
    "model": {
        "kind": (_choice(MODEL_KINDS), "quasifree"),
        "n": (_int, REQUIRED),
        "alpha": (_float, 1.0),
        "prefactor": (_float, 1.0),
        "beta": (_float, 1.0),
        "mu": (_float, 0.0),
        "weight": (_float, 1.0),
        "ac_amplitude": (_float, 0.0),
        "ac_omega_width": (_float, 1.0),
        "ac_k_width": (_float, 1.0),
        "order": (_int, 2),
        "amplitude": (_float, 1.0),
        "width": (_float, 1.0),
        "constant": (_float, 1.0),
        "remainder_amplitude": (_float, 0.0),
        "remainder_width": (_float, 1.0),
    },
    "kernel": {
        "type": (_choice(KERNEL_TYPES), "smooth"),
        "shape": (_float, 1.0),
    },
    "grid": {
        "r_min": (_float, 10.0),
        "r_max": (_float, 1e4),
        "points": (_int, 12),
    },
    "geometry": {
        "y": (_floats, None),
        "x": (_points, None),
        "t_window": (_floats, (0.5, 2.0)),
        "taus": (_floats, (0.0, 0.5, 1.0, 2.0)),
    },
    "observable": {
        "gamma": (_gamma, "auto"),
        "gamma_b": (_gamma, "auto"),
        "time_derivatives": (_int, 0),
    },
    "commutator": {
        "amplitude": (_float, 1.0),
        "width": (_float, 1.0),
    },
    "kms": {
        "omega_max": (_float, 5.0),
        "k_max": (_float, 5.0),
        "points": (_int, 20),
        "betas": (_floats, (0.5, 1.0, 2.0)),
    },
    "output": {
        "format": (_choice(FORMATS), "csv"),
        "path": (_text, "results"),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``sections`` holds every key with defaults filled in."""

    experiment: str
    sections: dict = field(default_factory=dict, compare=True)

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def dimension(self) -> int:
        return self.sections["model"]["n"]

    @property
    def gamma(self) -> float:
        return resolve_gamma(self.sections["model"], self.sections["observable"]["gamma"])

    @property
    def gamma_b(self) -> float:
        g = self.sections["observable"]["gamma_b"]
        return self.gamma if g == "auto" else resolve_gamma(self.sections["model"], g)

    @property
    def Y(self) -> tuple[float, ...]:
        y = self.sections["geometry"]["y"]
        return tuple([0.0] * self.dimension) if y is None else y

    def with_output(self, **changes) -> "ExperimentConfig":
        sections = {k: dict(v) for k, v in self.sections.items()}
        sections["output"].update(changes)
        return ExperimentConfig(self.experiment, sections)


def resolve_gamma(model: dict, gamma) -> float:
    """Explicit gamma, or the "auto" policy: n/2 away from criticality,
    (n + alpha)/2 for a critical pure-power branch."""
    if gamma != "auto":
        return float(gamma)
    n, kind = model["n"], model["kind"]
    if kind == "gaussian-truncated":
        return n / 2.0
    if kind == "critical-truncated" or model["mu"] == 0.0:
        return (n + model["alpha"]) / 2.0
    return n / 2.0


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse and validate; raises ConfigError carrying every problem found."""
    errors: list[str] = []
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}".splitlines()[0]]) from None
    sections: dict[str, dict] = {}
    for name in cp.sections():
        if name not in SCHEMA:
            errors.append(f"[{name}]: unknown section")
    for sec, keys in SCHEMA.items():
        raw = dict(cp.items(sec)) if cp.has_section(sec) else {}
        out = {}
        for key in raw:
            if key not in keys:
                errors.append(f"{sec}.{key}: unknown key")
        for key, (parser, default) in keys.items():
            if key in raw and raw[key].strip() != "":
                try:
                    out[key] = parser(raw[key])
                except ValueError as exc:
                    errors.append(f"{sec}.{key}: invalid value {raw[key]!r} ({exc})")
                    out[key] = None if default is REQUIRED else default
            elif default is REQUIRED:
                errors.append(f"{sec}.{key}: missing required key")
                out[key] = None
            else:
                out[key] = default
        sections[sec] = out

    name = sections["experiment"]["name"]
    if experiment is not None:
        if experiment not in EXPERIMENTS:
            errors.append(f"experiment {experiment!r} unknown; expected one of {', '.join(EXPERIMENTS)}")
        elif name is not None and name != experiment:
            errors.append(f"experiment.name: config says {name!r} but {experiment!r} was requested")
        name = experiment
    if name is None:
        errors.append("experiment.name: missing required key")
    sections["experiment"]["name"] = name
    errors.extend(_validate(sections))
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(name, sections)


def _validate(s: dict) -> list[str]:
    errors = []
    m, g, geo, obs = s["model"], s["grid"], s["geometry"], s["observable"]
    n = m["n"]
    if n is not None and n not in (1, 2, 3):
        errors.append("model.n: must be 1, 2 or 3")
        n = None
    for key in ("alpha", "prefactor", "beta"):
        if m[key] is not None and not m[key] > 0:
            errors.append(f"model.{key}: must be positive")
    if m["mu"] is not None and m["mu"] > 0:
        errors.append("model.mu: must be <= 0 (the branch would cross omega = 0)")
    if m["kind"] == "critical-truncated" and n is not None and m["alpha"] is not None and not m["alpha"] < n:
        errors.append("model.alpha: must be smaller than n for a critical truncated function")
    if m["order"] is not None and not 2 <= m["order"] <= 4:
        errors.append("model.order: must lie in [2, 4]")
    lm = s["experiment"]["l_max"]
    if lm is not None and not 3 <= lm <= 10:
        errors.append("experiment.l_max: must lie in [3, 10]")
    for key in ("width", "remainder_width", "ac_omega_width", "ac_k_width"):
        if m[key] is not None and not m[key] > 0:
            errors.append(f"model.{key}: must be positive")
    if s["kernel"]["shape"] is not None and not s["kernel"]["shape"] > 0:
        errors.append("kernel.shape: must be positive")
    if s["kernel"]["type"] == "wedge" and n not in (None, 1):
        errors.append("kernel.type: the wedge profile exists only for n = 1")
    if g["r_min"] is not None and not g["r_min"] > 0:
        errors.append("grid.r_min: must be positive")
    if g["r_min"] is not None and g["r_max"] is not None and not g["r_min"] < g["r_max"]:
        errors.append("grid.r_min: must be smaller than grid.r_max")
    if g["points"] is not None and g["points"] < 4:
        errors.append("grid.points: need at least 4 points")
    if n is not None and geo["y"] is not None and len(geo["y"]) != n:
        errors.append(f"geometry.y: has {len(geo['y'])} components, model.n is {n}")
    if n is not None and geo["x"] is not None:
        if any(len(p) != n for p in geo["x"]):
            errors.append(f"geometry.x: every point needs {n} components")
        if m["order"] is not None and len(geo["x"]) != m["order"]:
            errors.append(f"geometry.x: needs model.order = {m['order']} points")
    tw = geo["t_window"]
    if tw is not None and (len(tw) != 2 or not tw[0] < tw[1]):
        errors.append("geometry.t_window: expected two increasing times")
    if obs["time_derivatives"] is not None and obs["time_derivatives"] < 0:
        errors.append("observable.time_derivatives: must be >= 0")
    if s["kms"]["points"] is not None and s["kms"]["points"] < 2:
        errors.append("kms.points: need at least 2")
    if s["commutator"]["width"] is not None and not s["commutator"]["width"] > 0:
        errors.append("commutator.width: must be positive")
    return errors


def emit_config(config: ExperimentConfig) -> str:
    """Text form of a config; parse_config(emit_config(c)) == c."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key in keys:
            value = config.sections[sec][key]
            if value is not None:
                lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)


def config_as_dict(config: ExperimentConfig) -> dict:
    """JSON-ready view with tuples turned into lists and gamma resolved."""

    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    out = {sec: {k: plain(v) for k, v in vals.items()} for sec, vals in config.sections.items()}
    out["resolved"] = {"gamma": config.gamma, "gamma_b": config.gamma_b, "Y": list(config.Y)}
    return out
