import json
import math
from typing import Any

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src import __version__
from src.factor_sieve.constants import constants_fingerprint

SIGNIFICANT_DIGITS = 12


class RunManifest(BaseModel):
    """What produced an output: equal manifests (up to wall_time_ms) mean equal numbers."""

    model_config = ConfigDict(frozen=True)

    command: str
    parameters: dict[str, Any]
    tool_version: str = __version__
    constants_fingerprint: str = Field(default_factory=constants_fingerprint)
    wall_time_ms: int = 0


class CommandOutput(BaseModel):
    command: str
    params: dict[str, Any]
    value: float | int | None = None
    error_bound: float | None = None
    rows: list[dict[str, Any]] | None = None
    extra: dict[str, Any] = Field(default_factory=dict)


def round_reals(obj: Any) -> Any:
    """Every float rounded to 12 significant digits, recursively; other values untouched."""
    if isinstance(obj, float):
        if not math.isfinite(obj) or obj == 0.0:
            return obj
        return float(f"{obj:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(obj, dict):
        return {key: round_reals(value) for key, value in obj.items()}
    if isinstance(obj, list | tuple):
        return [round_reals(value) for value in obj]
    return obj


def render_json(output: CommandOutput, manifest: RunManifest) -> str:
    document = {"command": output.command, "params": output.params}
    if output.value is not None:
        document["value"] = output.value
    if output.error_bound is not None:
        document["error_bound"] = output.error_bound
    if output.rows is not None:
        document["rows"] = output.rows
    document.update(output.extra)
    document["manifest"] = manifest.model_dump()
    return json.dumps(round_reals(document), sort_keys=True, indent=2)


def render_csv(output: CommandOutput, frame: pd.DataFrame | None = None) -> str:
    """The row table when there is one, otherwise a single row of the scalar fields."""
    if frame is None:
        if output.rows is not None:
            frame = pd.DataFrame.from_records(output.rows)
        else:
            record = {"value": output.value, "error_bound": output.error_bound}
            record.update({k: v for k, v in output.extra.items() if not isinstance(v, dict | list)})
            frame = pd.DataFrame.from_records([record])
    return frame.to_csv(index=False, float_format=f"%.{SIGNIFICANT_DIGITS}g")
