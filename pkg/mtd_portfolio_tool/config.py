"""
Pipeline settings
Defaults < JSON config file < MTD_* environment variables (.env honoured) < explicit overrides
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .exceptions import InputDataError

ENV_PREFIX = "MTD_"

MEASURES = ("piraveenan", "sabek", "peel")
MODALITIES = ("in-in", "in-out", "out-in", "out-out")
PENALTY_FORMS = ("weighted", "simple")
OBJECTIVES = ("utility", "sharpe")


class BacktestConfig(BaseModel):
    """All tunable keys of the pipeline, flat so they map 1:1 onto CLI flags"""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # marketdata
    state_scheme: Literal["sign", "quantile"] = "sign"
    num_states: int = 3
    zero_band: float = 0.0
    in_len: int = 90
    out_len: int = 30
    step: int = 30

    # mtd
    smoothing: float = 1.0
    max_iters: int = 5000
    tol: float = 1e-7
    restarts: int = 3
    seed: int = 0

    # network
    network_source: Literal["mtd", "correlation"] = "mtd"
    include_correlation: bool = True

    # assortativity
    measures: List[str] = list(MEASURES)
    modalities: List[str] = list(MODALITIES)
    quadrature_points: int = 21

    # portfolio
    penalty_forms: List[str] = list(PENALTY_FORMS)
    objectives: List[str] = list(OBJECTIVES)
    delta: float = 1.0
    gamma: float = 0.01
    scale: float = 1.0
    exact: bool = False
    exact_max_assets: int = 30
    max_nodes: int = 20000
    stdev_denominator: bool = False

    # backtest / reporting
    market: str = "custom"
    annualization: int = 252

    # plotting
    loess_span: float = 0.75
    loess_grid: int = 100

    @field_validator("measures")
    @classmethod
    def _check_measures(cls, value: List[str]) -> List[str]:
        return _check_subset(value, MEASURES, "measure")

    @field_validator("modalities")
    @classmethod
    def _check_modalities(cls, value: List[str]) -> List[str]:
        return _check_subset(value, MODALITIES, "modality")

    @field_validator("penalty_forms")
    @classmethod
    def _check_forms(cls, value: List[str]) -> List[str]:
        return _check_subset(value, PENALTY_FORMS, "penalty form")

    @field_validator("objectives")
    @classmethod
    def _check_objectives(cls, value: List[str]) -> List[str]:
        return _check_subset(value, OBJECTIVES, "objective")

    @field_validator("gamma")
    @classmethod
    def _check_gamma(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("gamma must be positive")
        return value

    @field_validator("delta")
    @classmethod
    def _check_delta(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("delta (risk aversion) must be positive")
        return value

    @field_validator("scale", "smoothing", "zero_band")
    @classmethod
    def _check_nonnegative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("value must be nonnegative")
        return value

    @field_validator("in_len", "out_len", "step", "max_iters", "max_nodes", "annualization")
    @classmethod
    def _check_positive_int(cls, value: int) -> int:
        if value < 1:
            raise ValueError("value must be at least 1")
        return value

    @field_validator("quadrature_points")
    @classmethod
    def _check_quadrature(cls, value: int) -> int:
        if value < 2:
            raise ValueError("quadrature_points must be at least 2")
        return value

    @field_validator("loess_span")
    @classmethod
    def _check_span(cls, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError("loess_span must lie in (0, 1]")
        return value

    @model_validator(mode="after")
    def _check_states(self) -> "BacktestConfig":
        if self.state_scheme == "sign" and self.num_states != 3:
            raise ValueError("the sign scheme always uses 3 states")
        if self.num_states < 2:
            raise ValueError("num_states must be at least 2")
        return self


def _check_subset(value: List[str], allowed: tuple, label: str) -> List[str]:
    unknown = [v for v in value if v not in allowed]
    if unknown:
        raise ValueError(f"Unsupported {label}(s): {unknown}; choose from {list(allowed)}")
    # keep canonical order and drop duplicates
    return [a for a in allowed if a in value]


def coerce_value(name: str, raw: str) -> Any:
    """Text from the environment or the command line; list fields split on commas, the rest are JSON-decoded when possible"""
    annotation = BacktestConfig.model_fields[name].annotation
    if annotation is str:
        return raw
    if annotation == List[str]:
        if raw.lstrip().startswith("["):
            return json.loads(raw)
        return [part.strip() for part in raw.split(",") if part.strip()]
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _env_overrides() -> Dict[str, Any]:
    overrides = {}
    for name in BacktestConfig.model_fields:
        raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None:
            overrides[name] = coerce_value(name, raw)
    return overrides


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat JSON settings file"""
    config_path = Path(path)
    try:
        with open(config_path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputDataError(f"Failed to read config file {config_path}: {e}")
    if not isinstance(data, dict):
        raise InputDataError(f"Config file {config_path} must hold a JSON object")
    return data


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    use_env: bool = True,
) -> BacktestConfig:
    """
    Build the settings model from all sources

    Args:
        path: Optional JSON config file
        overrides: Explicit values (CLI flags), highest precedence
        use_env: Whether MTD_* environment variables (and .env) are consulted

    Returns:
        Validated BacktestConfig
    """
    merged: Dict[str, Any] = {}
    if path:
        merged.update(read_config_file(path))
    if use_env:
        load_dotenv()
        env = _env_overrides()
        if env:
            logger.debug(f"Settings from environment: {sorted(env)}")
        merged.update(env)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return BacktestConfig(**merged)
    except ValidationError as e:
        raise InputDataError(f"Invalid configuration: {e}")
