"""RunRecord persistence (JSON-lines) and CSV summaries."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import jsonschema

from .. import __version__
from .config import ExperimentConfig, OutputError

RUN_RECORD_SCHEMA = {
    "type": "object",
    "required": ["config", "seed", "estimates", "exact", "timings", "revision", "status"],
    "properties": {
        "config": {"type": "object", "required": ["kind", "schema_version"]},
        "seed": {"type": "integer", "minimum": 0},
        "estimates": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["value", "stderr"],
                "properties": {"value": {"type": ["number", "null"]}, "stderr": {"type": ["number", "null"]}},
            },
        },
        "exact": {"type": "object"},
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
        "revision": {"type": "string"},
        "status": {"type": "string"},
    },
}

TRAJECTORY_SCHEMA = {
    "type": "object",
    "required": ["t", "field", "energy"],
    "properties": {
        "t": {"type": "number"},
        "energy": {"type": "number"},
        "field": {
            "type": "object",
            "required": ["N", "re", "im"],
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "re": {"type": "array", "items": {"type": "number"}},
                "im": {"type": "array", "items": {"type": "number"}},
            },
        },
    },
}

QI_CSV_COLUMNS = ("s", "N", "t", "variant", "qi_value", "fit_slope", "fit_residual")
DENSITY_CSV_COLUMNS = ("s", "N", "t", "p", "R", "estimate", "stderr", "ptR")


def _json_number(x):
    # JSON has no inf/nan; they are written as null
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _json_number(obj)


@dataclass
class RunRecord:
    config: dict
    seed: int
    estimates: dict = field(default_factory=dict)
    exact: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    revision: str = f"bobbm {__version__}"
    status: str = "ok"

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        jsonschema.validate(data, RUN_RECORD_SCHEMA)
        return cls(**data)

    def echoed_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)

    def add_estimate(self, name: str, value: float, stderr: float, **extra) -> None:
        self.estimates[name] = {"value": float(value), "stderr": float(stderr), **extra}


def validate_record(data: dict) -> None:
    jsonschema.validate(data, RUN_RECORD_SCHEMA)


def append_record(path, record: RunRecord) -> None:
    data = record.to_dict()
    validate_record(data)
    try:
        with open(path, "a") as fh:
            fh.write(json.dumps(data, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write run record to {path}: {exc}") from exc


def read_records(path) -> list[RunRecord]:
    with open(path) as fh:
        return [RunRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_csv(path, columns, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(columns))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: row.get(k, "") for k in columns})
    except OSError as exc:
        raise OutputError(f"cannot write CSV to {path}: {exc}") from exc
