"""Experiment configuration in a flat ``key = value`` text format.

Grammar, one entry per line::

    # comment            (blank lines and '#' comments are ignored)
    key = value          (whitespace around '=' is optional)

Lists are comma separated (``N_list = 64, 128, 256``); booleans are
``true``/``false``.  ``schema_version`` is mandatory and must equal
``SCHEMA_VERSION``.  Unknown keys are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from ..dynamics import FlowParams
from ..gaussian import GaussianSpec

SCHEMA_VERSION = 1

KINDS = (
    "simulate",
    "qi-scan",
    "density",
    "exp-moment",
    "exponents",
    "validate",
    "change-of-variables",
    "tail-mass",
)


class HarnessError(Exception):
    exit_code = 1


class InvalidConfigError(HarnessError):
    exit_code = 2


class UnknownKindError(HarnessError):
    exit_code = 3


class SchemaVersionError(HarnessError):
    exit_code = 4


class OutputError(HarnessError):
    exit_code = 5


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "validate"
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    # Gaussian measure
    s: float = 0.75
    N: int = 16
    # time stepping
    dt: float = 1e-3
    method: str = "rk4"
    max_t: float = 100.0
    nonlinear: bool = True
    # experiment parameters
    t: float = 0.1
    p: float = 2.0
    R: float = 6.5
    lam: float = 0.1
    c0: float = 1.0
    orientation: int = -1
    samples: int = 1000
    quad_nodes: int = 33
    variant: str = "FULL"
    N_list: tuple[int, ...] = (64, 128, 256, 512, 1024)
    t_list: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0)
    r1: float = 1.25
    j_max: int = 16
    Ncut_list: tuple[int, ...] = (16, 32, 64)
    M: float = 1.0
    tail_method: str = "tilted"
    functionals: tuple[str, ...] = ("one", "h_half_clipped", "sin_char", "q_clipped")
    output: str = "runs.jsonl"
    trajectory_out: str = ""

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"schema_version {self.schema_version} is not supported (expected {SCHEMA_VERSION})"
            )
        if self.kind not in KINDS:
            raise UnknownKindError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.samples < 1:
            raise InvalidConfigError("samples must be at least 1")
        if self.p < 1:
            raise InvalidConfigError("p must be at least 1")
        if self.R <= 0:
            raise InvalidConfigError("R must be positive")
        if self.lam < 0:
            raise InvalidConfigError("lam must be non-negative")
        if self.orientation not in (1, -1):
            raise InvalidConfigError("orientation must be +1 or -1")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfigError("seed must be an unsigned 64-bit integer")
        try:
            self.flow_params()
            self.gaussian_spec()
        except ValueError as exc:
            raise InvalidConfigError(str(exc)) from exc

    def flow_params(self) -> FlowParams:
        return FlowParams(dt=self.dt, method=self.method, max_t=self.max_t, nonlinear=self.nonlinear)

    def gaussian_spec(self) -> GaussianSpec:
        return GaussianSpec(self.s, self.N, self.seed)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if "schema_version" not in data:
            raise SchemaVersionError("schema_version is mandatory")
        types = _field_types()
        unknown = set(data) - set(types)
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for k, v in data.items():
            kw[k] = tuple(v) if types[k].startswith("tuple") else v
        return cls(**kw)


def _field_types() -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(ExperimentConfig)}


def _parse_scalar(text: str, typ: str):
    if typ == "bool":
        low = text.lower()
        if low not in ("true", "false"):
            raise InvalidConfigError(f"expected true/false, got {text!r}")
        return low == "true"
    if typ == "int":
        return int(text)
    if typ == "float":
        return float(text)
    return text


def parse_value(key: str, text: str):
    types = _field_types()
    if key not in types:
        raise InvalidConfigError(f"unknown config key {key!r}")
    typ = types[key]
    text = text.strip()
    try:
        if typ.startswith("tuple"):
            inner = typ[len("tuple[") :].split(",")[0].strip()
            items = [x.strip() for x in text.split(",") if x.strip()]
            return tuple(_parse_scalar(x, inner) for x in items)
        return _parse_scalar(text, typ)
    except ValueError as exc:
        raise InvalidConfigError(f"bad value for {key}: {text!r}") from exc


def parse_config(text: str, **overrides) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise InvalidConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = parse_value(key, value)
    if "schema_version" not in values:
        raise SchemaVersionError("schema_version is mandatory")
    # version first, so a mismatch is reported before anything else
    if values["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"schema_version {values['schema_version']} is not supported (expected {SCHEMA_VERSION})"
        )
    values.update(overrides)
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


def serialise_config(cfg: ExperimentConfig) -> str:
    lines = [f"schema_version = {cfg.schema_version}"]
    for f in fields(cfg):
        if f.name == "schema_version":
            continue
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
