"""Validated run configurations for the command-line front end."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    out: str = "out"


class SimulateConfig(_Config):
    theta: str
    steps: Optional[int] = Field(default=None, ge=1)
    sites: Optional[int] = Field(default=None, ge=3)
    format: Literal["csv", "json", "both"] = "both"


class OptimizeConfig(_Config):
    mode: Literal["global", "stepwise", "final", "final_step"] = "global"
    parameter_set: Literal["theta_only", "full_su2"] = "theta_only"
    steps: int = Field(ge=1)
    restarts: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: Optional[int] = Field(default=None, ge=1)
    method: Literal["gd", "cg", "lbfgsb"] = "lbfgsb"
    max_iter: int = Field(default=500, ge=1)
    heuristic_start: bool = False
    sites: Optional[int] = Field(default=None, ge=3)

    @field_validator("mode")
    @classmethod
    def _canonical_mode(cls, v: str) -> str:
        return "final_step" if v == "final" else v


class SpectrumConfig(_Config):
    theta: str
    steps: Optional[int] = Field(default=None, ge=1)
    sites: Optional[int] = Field(default=None, ge=3)
    bins: int = Field(default=64, ge=1)
    gap_evolution: bool = False


class RobustnessConfig(_Config):
    input: str
    amplitudes: str = "0:0.5:0.05"
    samples: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)


class FeasibilityConfig(_Config):
    steps: int = Field(default=4, ge=2, le=6)
    resolution: int = Field(default=200, ge=2)


CONFIGS: dict[str, type[_Config]] = {
    "simulate": SimulateConfig,
    "optimize": OptimizeConfig,
    "spectrum": SpectrumConfig,
    "robustness": RobustnessConfig,
    "feasibility": FeasibilityConfig,
}


def load_config_file(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def build_config(command: str, file_values: dict[str, Any], flag_values: dict[str, Any]) -> _Config:
    """Merge defaults < config file < explicit flags and validate the result."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return CONFIGS[command].model_validate(merged)
