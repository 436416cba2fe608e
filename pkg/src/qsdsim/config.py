"""Experiment configuration: parsing, validation, and resolution.

Config files are flat ``key.path = value`` lines with ``#`` comments.
Every key is validated against the known schema before anything runs;
unknown or malformed keys fail naming the offending key. CLI flags
override file values, defaults fill the rest, and the fully resolved
mapping is what gets hashed into artifacts, so a hash pins the entire
experiment.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .configuration import Configuration, parse_configuration
from .errors import ConfigError
from .rates import LogisticModel, RateModel, UniformModel
from .trait_space import MutationKernel, make_kernel

DEFAULTS = {
    "kernel.family": "uniform",
    "run.seed": "1",
    "run.replicas": "10000",
    "run.horizon": "10.0",
    "run.particles": "2000",
    "run.burn_in": "20.0",
    "run.truncation": "60",
    "run.eigen_tol": "1e-10",
    "run.tv_tol": "0.05",
    "run.theta_tol": "0.1",
    "run.snapshot_interval": "0.5",
    "run.threads": "1",
    "run.engine": "gillespie",
    "run.initial_mass": "1",
    "output.directory": "out",
    "output.formats": "csv,json",
}

KNOWN_KEYS = frozenset(DEFAULTS) | {
    "model.kind", "model.lambda", "model.b", "model.rho", "model.d", "model.c",
    "kernel.scale", "run.grid", "run.initial", "compare.a", "compare.b",
}

MODEL_KEYS = {
    "uniform": ("model.lambda", "model.b", "model.rho"),
    "logistic": ("model.b", "model.rho", "model.d", "model.c"),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Key-value lines to a dict; malformed or duplicate lines fail."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        values[key] = value
    return values


def _as_int(key: str, value: str, minimum: int) -> int:
    try:
        out = int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if out < minimum:
        raise ConfigError(f"{key}: must be at least {minimum}, got {out}")
    return out


def _as_float(key: str, value: str, minimum: float | None = None,
              strict: bool = False) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if minimum is not None and (out < minimum or (strict and out == minimum)):
        bound = "above" if strict else "at least"
        raise ConfigError(f"{key}: must be {bound} {minimum}, got {out}")
    return out


def _as_grid(key: str, value: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {value!r}") from None
    if not grid or any(t <= 0.0 for t in grid) \
            or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{key}: grid must be positive and strictly increasing")
    return grid


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved, validated experiment description.

    The model block is optional at resolution time because comparing
    existing artifacts needs no model; anything that simulates calls
    :meth:`build_model`, which insists on it.
    """

    kind: str | None
    lam: float | None
    b: float | None
    rho: float | None
    d: float | None
    c: float | None
    kernel_family: str
    kernel_scale: float | None
    seed: int
    replicas: int
    horizon: float
    grid: tuple[float, ...]
    particles: int
    burn_in: float
    truncation: int
    eigen_tol: float
    tv_tol: float
    theta_tol: float
    snapshot_interval: float
    threads: int
    engine: str
    initial_text: str | None
    initial_mass: int
    out_dir: str
    formats: tuple[str, ...]
    compare_a: str | None
    compare_b: str | None

    def canonical_items(self) -> list[tuple[str, str]]:
        """The experiment part of the config as sorted config-file lines.

        Output plumbing (directory, formats, compare inputs) stays out:
        the hash identifies what was computed, not where it landed.
        """
        items = {
            "kernel.family": self.kernel_family,
            "run.seed": str(self.seed),
            "run.replicas": str(self.replicas),
            "run.horizon": repr(self.horizon),
            "run.grid": ",".join(repr(t) for t in self.grid),
            "run.particles": str(self.particles),
            "run.burn_in": repr(self.burn_in),
            "run.truncation": str(self.truncation),
            "run.eigen_tol": repr(self.eigen_tol),
            "run.tv_tol": repr(self.tv_tol),
            "run.theta_tol": repr(self.theta_tol),
            "run.snapshot_interval": repr(self.snapshot_interval),
            "run.threads": str(self.threads),
            "run.engine": self.engine,
            "run.initial_mass": str(self.initial_mass),
        }
        if self.kind is not None:
            items["model.kind"] = self.kind
        if self.b is not None:
            items["model.b"] = repr(self.b)
        if self.rho is not None:
            items["model.rho"] = repr(self.rho)
        if self.lam is not None:
            items["model.lambda"] = repr(self.lam)
        if self.d is not None:
            items["model.d"] = repr(self.d)
        if self.c is not None:
            items["model.c"] = repr(self.c)
        if self.kernel_scale is not None:
            items["kernel.scale"] = repr(self.kernel_scale)
        if self.initial_text is not None:
            items["run.initial"] = self.initial_text
        return sorted(items.items())

    def config_hash(self) -> str:
        payload = "\n".join(f"{k} = {v}" for k, v in self.canonical_items())
        return hashlib.sha256(payload.encode()).hexdigest()

    def build_kernel(self) -> MutationKernel:
        return make_kernel(self.kernel_family, self.kernel_scale)

    def build_model(self) -> RateModel:
        if self.kind is None:
            raise ConfigError("missing required key model.kind")
        kernel = self.build_kernel()
        if self.kind == "uniform":
            return UniformModel(lam=self.lam, b=self.b, rho=self.rho, kernel=kernel)
        return LogisticModel(b=self.b, rho=self.rho, d=self.d, c=self.c, kernel=kernel)

    def build_initial(self) -> Configuration:
        if self.initial_text is not None:
            return parse_configuration(self.initial_text)
        return Configuration.from_pairs(((0.5, self.initial_mass),))


def resolve_config(raw: Mapping[str, str],
                   overrides: Mapping[str, str] | None = None) -> ExperimentConfig:
    """Merge defaults, file values, and overrides into a validated config."""
    merged = dict(DEFAULTS)
    for source in (raw, overrides or {}):
        for key, value in source.items():
            if key not in KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key}")
            merged[key] = value

    kind = merged.get("model.kind")
    if kind is None:
        for key in merged:
            if key.startswith("model."):
                raise ConfigError(f"{key} given without model.kind")
    else:
        if kind not in MODEL_KEYS:
            raise ConfigError(f"model.kind: expected uniform or logistic, got {kind!r}")
        for key in MODEL_KEYS[kind]:
            if key not in merged:
                raise ConfigError(f"missing required key {key} for model.kind = {kind}")
        for other, keys in MODEL_KEYS.items():
            if other != kind:
                for key in set(keys) - set(MODEL_KEYS[kind]):
                    if key in merged:
                        raise ConfigError(f"{key} does not apply to model.kind = {kind}")

    family = merged["kernel.family"]
    if family not in ("uniform", "truncated_gaussian"):
        raise ConfigError(
            f"kernel.family: expected uniform or truncated_gaussian, got {family!r}")
    if family == "uniform" and "kernel.scale" in merged:
        raise ConfigError("kernel.scale does not apply to kernel.family = uniform")
    if family == "truncated_gaussian" and "kernel.scale" not in merged:
        raise ConfigError(
            "missing required key kernel.scale for kernel.family = truncated_gaussian")

    engine = merged["run.engine"]
    if engine not in ("gillespie", "thinning"):
        raise ConfigError(f"run.engine: expected gillespie or thinning, got {engine!r}")

    formats = tuple(sorted(part.strip() for part in merged["output.formats"].split(",")
                           if part.strip()))
    if not formats or any(f not in ("csv", "json") for f in formats):
        raise ConfigError(f"output.formats: subsets of csv,json only, got"
                          f" {merged['output.formats']!r}")

    seed = _as_int("run.seed", merged["run.seed"], 0)
    if seed >= 2 ** 64:
        raise ConfigError(f"run.seed: must fit in 64 bits, got {seed}")
    horizon = _as_float("run.horizon", merged["run.horizon"], 0.0, strict=True)
    if "run.grid" in merged:
        grid = _as_grid("run.grid", merged["run.grid"])
    else:
        grid = tuple(float(t) for t in np.arange(0.5, horizon + 1e-9, 0.5))

    initial_text = merged.get("run.initial")
    if initial_text is not None:
        try:
            parse_configuration(initial_text)
        except Exception as exc:
            raise ConfigError(f"run.initial: {exc}") from None

    return ExperimentConfig(
        kind=kind,
        lam=_as_float("model.lambda", merged["model.lambda"], 0.0, strict=True)
        if "model.lambda" in merged else None,
        b=_as_float("model.b", merged["model.b"], 0.0, strict=True)
        if "model.b" in merged else None,
        rho=_as_float("model.rho", merged["model.rho"])
        if "model.rho" in merged else None,
        d=_as_float("model.d", merged["model.d"], 0.0, strict=True)
        if "model.d" in merged else None,
        c=_as_float("model.c", merged["model.c"], 0.0, strict=True)
        if "model.c" in merged else None,
        kernel_family=family,
        kernel_scale=_as_float("kernel.scale", merged["kernel.scale"], 0.0, strict=True)
        if "kernel.scale" in merged else None,
        seed=seed,
        replicas=_as_int("run.replicas", merged["run.replicas"], 1),
        horizon=horizon,
        grid=grid,
        particles=_as_int("run.particles", merged["run.particles"], 2),
        burn_in=_as_float("run.burn_in", merged["run.burn_in"], 0.0),
        truncation=_as_int("run.truncation", merged["run.truncation"], 2),
        eigen_tol=_as_float("run.eigen_tol", merged["run.eigen_tol"], 0.0, strict=True),
        tv_tol=_as_float("run.tv_tol", merged["run.tv_tol"], 0.0, strict=True),
        theta_tol=_as_float("run.theta_tol", merged["run.theta_tol"], 0.0, strict=True),
        snapshot_interval=_as_float("run.snapshot_interval",
                                    merged["run.snapshot_interval"], 0.0, strict=True),
        threads=_as_int("run.threads", merged["run.threads"], 1),
        engine=engine,
        initial_text=initial_text,
        initial_mass=_as_int("run.initial_mass", merged["run.initial_mass"], 1),
        out_dir=merged["output.directory"],
        formats=formats,
        compare_a=merged.get("compare.a"),
        compare_b=merged.get("compare.b"),
    )
