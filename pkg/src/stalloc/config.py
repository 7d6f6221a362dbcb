"""Experiment configuration: TOML file plus command-line overrides."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .spatial import (
    ExponentialDecay,
    ExponentialIntensity,
    PowerLaw,
    Scenario,
    UniformIntensity,
)

OUTPUT_DIR_ENV = "STALLOC_OUTPUT_DIR"

SWEEP_DEFAULTS = {
    "lambda": [2.0, 4.0, 6.0, 8.0, 10.0],
    "mu_inv": [0.5, 1.0, 1.5, 2.0],
}

# section -> fields stored there
_LAYOUT = {
    "scenario": ("radius", "rate", "slot", "horizon", "resources"),
    "utility": ("model", "eta", "alpha"),
    "intensity": ("law", "mu", "beta"),
    "experiment": ("sweep", "sweep_values", "reps", "seed", "random_p", "jobs", "out"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    radius: float = 1.0
    rate: float = 10.0
    slot: float = 1.0
    horizon: int = 30
    resources: int = 10
    model: str = "power"
    eta: float = 1.5
    alpha: float = 1.0
    law: str = "exponential"
    mu: float = 1.0
    beta: float = 1.0
    sweep: str = "none"
    sweep_values: tuple = ()
    reps: int = 10_000
    seed: int = 2024
    random_p: float = 0.5
    jobs: int = 1
    out: Optional[str] = None

    def problems(self) -> list[tuple[str, str]]:
        bad = []

        def positive(name):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                bad.append((name, f"must be a positive number, got {v!r}"))

        def positive_int(name):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                bad.append((name, f"must be a positive integer, got {v!r}"))

        for name in ("radius", "rate", "slot", "mu", "beta"):
            positive(name)
        for name in ("horizon", "resources", "reps", "jobs"):
            positive_int(name)
        for name in ("eta", "alpha"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                bad.append((name, f"must be a nonnegative number, got {v!r}"))
        if (
            isinstance(self.horizon, int) and isinstance(self.resources, int)
            and self.resources > self.horizon
        ):
            bad.append(("resources", f"must not exceed horizon ({self.horizon}), got {self.resources}"))
        if self.model not in ("power", "exponential"):
            bad.append(("model", f"must be 'power' or 'exponential', got {self.model!r}"))
        if self.law not in ("exponential", "uniform"):
            bad.append(("law", f"must be 'exponential' or 'uniform', got {self.law!r}"))
        if self.sweep not in ("none", "lambda", "mu_inv"):
            bad.append(("sweep", f"must be 'none', 'lambda' or 'mu_inv', got {self.sweep!r}"))
        if self.sweep == "mu_inv" and self.law != "exponential":
            bad.append(("sweep", "mu_inv sweeps need exponential intensity"))
        for v in self.sweep_values:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                bad.append(("sweep_values", f"entries must be positive numbers, got {v!r}"))
                break
        if isinstance(self.random_p, bool) or not isinstance(self.random_p, (int, float)) \
                or not 0.0 <= self.random_p <= 1.0:
            bad.append(("random_p", f"must lie in [0, 1], got {self.random_p!r}"))
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            bad.append(("seed", f"must be a nonnegative integer, got {self.seed!r}"))
        return bad

    def validate(self) -> "ExperimentConfig":
        bad = self.problems()
        if bad:
            raise ConfigError(bad)
        return self

    def scenario(self) -> Scenario:
        return Scenario(self.radius, self.rate, self.slot, self.horizon, self.resources)

    def utility_model(self):
        return PowerLaw(self.eta) if self.model == "power" else ExponentialDecay(self.alpha)

    def intensity(self):
        return ExponentialIntensity(self.mu) if self.law == "exponential" else UniformIntensity(self.beta)

    def sweep_points(self) -> list[tuple[str, Optional[float], "ExperimentConfig"]]:
        """``(axis, value, config)`` for each sweep point, or one unswept point."""
        if self.sweep == "none":
            return [("none", None, self)]
        values = list(self.sweep_values) or SWEEP_DEFAULTS[self.sweep]
        if self.sweep == "lambda":
            return [("lambda", v, replace(self, rate=float(v))) for v in values]
        return [("mu_inv", v, replace(self, mu=1.0 / float(v))) for v in values]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError([(k, "unknown setting") for k in sorted(unknown)])
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "sweep_values" in clean:
            clean["sweep_values"] = tuple(clean["sweep_values"])
        return replace(self, **clean)

    def output_path(self, default: str) -> Path:
        path = Path(self.out or default)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not path.is_absolute():
            path = Path(base) / path
        return path


def _escape(ch: str) -> str:
    if ch in '"\\':
        return "\\" + ch
    if ord(ch) < 0x20 or ord(ch) == 0x7F:
        return f"\\u{ord(ch):04x}"
    return ch


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, str):
        return '"' + "".join(_escape(ch) for ch in v) + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {v!r} as TOML")


def dumps(config: ExperimentConfig) -> str:
    data = asdict(config)
    chunks = []
    for section, names in _LAYOUT.items():
        lines = [f"[{section}]"]
        for name in names:
            if data[name] is not None:
                lines.append(f"{name} = {_toml_value(data[name])}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"


def loads(text: str) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([("<file>", f"not valid TOML: {exc}")]) from exc
    values = {}
    problems = []
    for section, body in doc.items():
        if section not in _LAYOUT or not isinstance(body, dict):
            problems.append((section, "unknown section"))
            continue
        for key, value in body.items():
            if key not in _LAYOUT[section]:
                problems.append((f"{section}.{key}", "unknown setting"))
                continue
            values[key] = value
    if problems:
        raise ConfigError(problems)
    if "sweep_values" in values:
        values["sweep_values"] = tuple(values["sweep_values"])
    # integral floats are accepted for float fields written as ints
    for f in fields(ExperimentConfig):
        if f.name in values and f.type == "float" and isinstance(values[f.name], int) \
                and not isinstance(values[f.name], bool):
            values[f.name] = float(values[f.name])
    return ExperimentConfig(**values)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([("config", f"cannot read {path}: {exc.strerror}")]) from exc
    return loads(text)
