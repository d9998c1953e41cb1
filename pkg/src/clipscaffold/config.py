"""Solver and pipeline configuration, loadable from a JSON file.

All lengths are in the normalized clipart frame (tight bbox scaled into
the unit square), which keeps the weights scale-free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import FormatError


@dataclass(frozen=True)
class ConstraintConfig:
    """How user annotations compile into the constraint set."""

    order_margin: float = 0.01
    layering_defaults: bool = True


@dataclass(frozen=True)
class RefineConfig:
    enabled: bool = False
    max_iters: int = 20


@dataclass(frozen=True)
class KMeansConfig:
    """1-D k-means used to split a duplicated path's points along z."""

    iters: int = 50
    quantile_offset: float = 0.5


@dataclass(frozen=True)
class SolveConfig:
    omega: float = 0.01
    d_min: float = 1e-3
    fallback_thickness: float = 0.05
    mask_resolution: int = 256
    flatten_tolerance: float = 1e-3
    constraints: ConstraintConfig = field(default_factory=ConstraintConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)

    @property
    def order_margin(self) -> float:
        return self.constraints.order_margin


def config_from_dict(data: dict) -> SolveConfig:
    """Build a SolveConfig from a (possibly partial) JSON-style dict."""
    if not isinstance(data, dict):
        raise FormatError("config must be a JSON object")
    known = {
        "omega",
        "order_margin",
        "d_min",
        "fallback_thickness",
        "mask_resolution",
        "flatten_tolerance",
        "layering_defaults",
        "refine",
        "kmeans",
    }
    unknown = set(data) - known
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")
    refine = data.get("refine", {})
    kmeans = data.get("kmeans", {})
    cfg = SolveConfig(
        omega=float(data.get("omega", 0.01)),
        d_min=float(data.get("d_min", 1e-3)),
        fallback_thickness=float(data.get("fallback_thickness", 0.05)),
        mask_resolution=int(data.get("mask_resolution", 256)),
        flatten_tolerance=float(data.get("flatten_tolerance", 1e-3)),
        constraints=ConstraintConfig(
            order_margin=float(data.get("order_margin", 0.01)),
            layering_defaults=bool(data.get("layering_defaults", True)),
        ),
        refine=RefineConfig(
            enabled=bool(refine.get("enabled", False)),
            max_iters=int(refine.get("max_iters", 20)),
        ),
        kmeans=KMeansConfig(
            iters=int(kmeans.get("iters", 50)),
            quantile_offset=float(kmeans.get("quantile_offset", 0.5)),
        ),
    )
    if cfg.omega < 0 or cfg.d_min <= 0 or cfg.mask_resolution < 16:
        raise FormatError("config values out of range")
    return cfg


def load_config(path) -> SolveConfig:
    with open(path, "rb") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"config file is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def override(cfg: SolveConfig, **kwargs) -> SolveConfig:
    """Replace top-level scalar fields; None values are ignored (flag unset)."""
    updates = {}
    for key, value in kwargs.items():
        if value is None:
            continue
        if key == "order_margin":
            updates["constraints"] = replace(cfg.constraints, order_margin=float(value))
        elif key == "refine_enabled":
            updates["refine"] = replace(cfg.refine, enabled=bool(value))
        else:
            updates[key] = value
    return replace(cfg, **updates)
