"""JSON experiment configuration: versioned schema, fail-closed parsing.

Unknown fields are rejected at every nesting level so a config written for a
different schema version cannot silently change meaning. One master seed per
config; all random streams are derived from it through the documented
sub-stream scheme in streams.py.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audit import GridSpec
from .basis import GaussianSpace, ChaosVector
from .measures import from_coefficients, gaussian_cov, rank_one_quadratic, shift_mixture, WeightedShifts
from .sde import PathGrid, drift_from_config, sde_density

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Malformed or unknown configuration content."""


def _take(data: dict, allowed: dict[str, bool], where: str) -> None:
    # allowed maps field name -> required?
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown} in {where}")
    missing = sorted(k for k, req in allowed.items() if req and k not in data)
    if missing:
        raise ConfigError(f"missing required field(s) {missing} in {where}")


@dataclass(frozen=True)
class DistanceConfig:
    method: str = "quadrature"
    nodes_per_axis: int | None = None
    samples: int = 20000
    max_quadrature_dim: int = 3

    @staticmethod
    def from_dict(data: dict) -> "DistanceConfig":
        _take(
            data,
            {"method": True, "nodes_per_axis": False, "samples": False, "max_quadrature_dim": False},
            "distance",
        )
        method = data["method"]
        if method not in ("quadrature", "mc"):
            raise ConfigError(f"distance.method must be 'quadrature' or 'mc', got {method!r}")
        return DistanceConfig(
            method=method,
            nodes_per_axis=data.get("nodes_per_axis"),
            samples=int(data.get("samples", 20000)),
            max_quadrature_dim=int(data.get("max_quadrature_dim", 3)),
        )


@dataclass(frozen=True)
class SdeSection:
    drift: dict
    steps: int
    paths: int
    max_degree: int
    run_llt: bool = False
    novikov_ceiling: float = 1e15

    @staticmethod
    def from_dict(data: dict) -> "SdeSection":
        _take(
            data,
            {
                "drift": True,
                "steps": True,
                "paths": True,
                "max_degree": True,
                "run_llt": False,
                "novikov_ceiling": False,
            },
            "sde",
        )
        return SdeSection(
            drift=dict(data["drift"]),
            steps=int(data["steps"]),
            paths=int(data["paths"]),
            max_degree=int(data["max_degree"]),
            run_llt=bool(data.get("run_llt", False)),
            novikov_ceiling=float(data.get("novikov_ceiling", 1e15)),
        )


@dataclass(frozen=True)
class ValidateSection:
    dimension: int = 2
    max_degree: int = 8
    inject_error: str | None = None
    ks_samples: int = 20000

    @staticmethod
    def from_dict(data: dict) -> "ValidateSection":
        _take(
            data,
            {"dimension": False, "max_degree": False, "inject_error": False, "ks_samples": False},
            "validate",
        )
        return ValidateSection(
            dimension=int(data.get("dimension", 2)),
            max_degree=int(data.get("max_degree", 8)),
            inject_error=data.get("inject_error"),
            ks_samples=int(data.get("ks_samples", 20000)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    space_dimension: int | None = None
    space_max_degree: int | None = None
    density: dict | None = None
    alpha: float | None = None
    n_values: tuple[int, ...] = ()
    distance: DistanceConfig = field(default_factory=DistanceConfig)
    audit_grid: GridSpec = field(default_factory=GridSpec)
    sde: SdeSection | None = None
    validate: ValidateSection | None = None
    record_wall_times: bool = False
    raw: dict = field(default_factory=dict)

    def build_space(self) -> GaussianSpace:
        if self.space_dimension is None or self.space_max_degree is None:
            raise ConfigError("config does not define a space section")
        return GaussianSpace(self.space_dimension, self.space_max_degree)

    def require_llt_fields(self, need_density: bool = True) -> None:
        if need_density and self.density is None:
            raise ConfigError("this command needs a 'density' section")
        if self.alpha is None or not self.n_values:
            raise ConfigError("this command needs 'alpha' and 'n_values'")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError with diagnostics."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: line {exc.lineno}, {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _take(
        data,
        {
            "schema_version": True,
            "seed": True,
            "space": False,
            "density": False,
            "alpha": False,
            "n_values": False,
            "distance": False,
            "audit_grid": False,
            "sde": False,
            "validate": False,
            "record_wall_times": False,
        },
        "config root",
    )
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {data['schema_version']!r}, expected {SCHEMA_VERSION}"
        )
    dim = maxdeg = None
    if "space" in data:
        _take(data["space"], {"dimension": True, "max_degree": True}, "space")
        dim = int(data["space"]["dimension"])
        maxdeg = int(data["space"]["max_degree"])
    alpha = float(data["alpha"]) if "alpha" in data else None
    if alpha is not None and not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    n_values = tuple(int(n) for n in data.get("n_values", ()))
    if any(n < 1 for n in n_values):
        raise ConfigError("n_values must be positive integers")
    distance = DistanceConfig.from_dict(data["distance"]) if "distance" in data else DistanceConfig()
    grid = GridSpec()
    if "audit_grid" in data:
        _take(
            data["audit_grid"],
            {"points_per_axis": False, "halfwidth": False, "mc_points": False, "seed": False},
            "audit_grid",
        )
        grid = GridSpec(
            points_per_axis=int(data["audit_grid"].get("points_per_axis", 41)),
            halfwidth=float(data["audit_grid"].get("halfwidth", 3.5)),
            mc_points=int(data["audit_grid"].get("mc_points", 4096)),
            seed=int(data["audit_grid"].get("seed", 2024)),
        )
    if "density" in data and "kind" not in data["density"]:
        raise ConfigError("density section needs a 'kind' field")
    return ExperimentConfig(
        seed=int(data["seed"]),
        space_dimension=dim,
        space_max_degree=maxdeg,
        density=dict(data["density"]) if "density" in data else None,
        alpha=alpha,
        n_values=n_values,
        distance=distance,
        audit_grid=grid,
        sde=SdeSection.from_dict(data["sde"]) if "sde" in data else None,
        validate=ValidateSection.from_dict(data["validate"]) if "validate" in data else None,
        record_wall_times=bool(data.get("record_wall_times", False)),
        raw=data,
    )


def resolve_density(
    spec: dict,
    space: GaussianSpace,
    seed: int,
    grid: GridSpec | None = None,
    validate: bool = True,
) -> ChaosVector:
    """Build the density named by a config 'density' section.

    With validate=False the raw-coefficient kinds skip the constructor
    screen; the assumption audit still reports on the result (the override
    path, where outputs are watermarked).
    """
    kind = spec.get("kind")
    if kind == "coefficients":
        _take(spec, {"kind": True, "terms": False, "coeffs": False}, "density")
        if "coeffs" in spec:
            coeffs = np.asarray(spec["coeffs"], dtype=float)
        else:
            coeffs = np.zeros(space.size)
            coeffs[0] = 1.0
            for term in spec.get("terms", []):
                _take(term, {"index": True, "coeff": True}, "density.terms entry")
                coeffs[space.position(tuple(term["index"]))] = float(term["coeff"])
        if not validate:
            return ChaosVector(space, coeffs)
        return from_coefficients(coeffs, space, grid)
    if kind == "shift_mixture":
        _take(spec, {"kind": True, "weights": True, "shifts": True}, "density")
        nu = WeightedShifts(
            np.asarray(spec["weights"], dtype=float), np.asarray(spec["shifts"], dtype=float)
        )
        return shift_mixture(nu, space)
    if kind == "gaussian_cov":
        _take(spec, {"kind": True, "g2": True}, "density")
        return gaussian_cov(np.asarray(spec["g2"], dtype=float), space)
    if kind == "rank_one_quadratic":
        _take(spec, {"kind": True, "g": True}, "density")
        return rank_one_quadratic(np.asarray(spec["g"], dtype=float), space)
    if kind == "product_hermite":
        _take(spec, {"kind": True, "axis_coeffs": True}, "density")
        base = np.asarray(spec["axis_coeffs"], dtype=float)
        if base[0] != 1.0:
            raise ConfigError("product_hermite axis_coeffs must start with 1.0")
        padded = np.zeros(space.max_degree + 1)
        padded[: min(base.size, padded.size)] = base[: padded.size]
        coeffs = np.prod(padded[space.indices], axis=1)
        if not validate:
            return ChaosVector(space, coeffs)
        return from_coefficients(coeffs, space, grid)
    if kind == "sde":
        _take(spec, {"kind": True, "drift": True, "paths": True}, "density")
        drift = drift_from_config(spec["drift"])
        return sde_density(
            drift, PathGrid(space.dimension), int(spec["paths"]), space, seed=seed
        )
    raise ConfigError(f"unknown density kind {kind!r}")
