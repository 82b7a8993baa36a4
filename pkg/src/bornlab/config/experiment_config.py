"""Experiment files: one TOML document per experiment."""

import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import aiofiles

from ..errors import ConfigError

EXPERIMENT_KINDS = (
    "spectrum",
    "train_deploy",
    "variance_grid",
    "rmps_grid",
    "dla_check",
    "pps_bench",
    "discrepancy",
)

_NUMBER = (int, float)

SCHEMA: Dict[str, Dict[str, Any]] = {
    "experiment": {"kind": str, "seed": int, "output_dir": str, "svg": bool, "threads": int, "name": str},
    "model": {
        "kind": str,
        "n": int,
        "nx": int,
        "ny": int,
        "J": _NUMBER,
        "h": _NUMBER,
        "J_even": _NUMBER,
        "J_odd": _NUMBER,
        "h1": _NUMBER,
        "h2": _NUMBER,
    },
    "data": {"source": str, "path": str, "columns": list},
    "ansatz": {
        "kind": str,
        "n": int,
        "gate_count": int,
        "layers": int,
        "seed": int,
        "arity_counts": list,
        "algebra": str,
    },
    "loss": {"kind": str, "sigma": _NUMBER, "window": int, "gamma": _NUMBER, "omega": list, "epsilon": _NUMBER},
    "train": {
        "iterations": int,
        "learning_rate": _NUMBER,
        "optimizer": str,
        "beta1": _NUMBER,
        "beta2": _NUMBER,
        "adam_epsilon": _NUMBER,
        "gradient": str,
        "fd_step": _NUMBER,
        "batch": int,
        "seeds": list,
        "init": str,
    },
    "truncation": {
        "kind": str,
        "k": int,
        "orders": list,
        "omega": list,
        "sizes": list,
        "policy": str,
        "k_max": int,
        "prob": _NUMBER,
    },
    "surrogate": {"kind": str, "h_max": int, "w_max": int, "h_values": list, "w_values": list},
    "grid": {
        "family": str,
        "quantity": str,
        "ns": list,
        "orders": list,
        "chis": list,
        "local_dim": int,
        "draws": int,
        "gates": int,
    },
    "dla": {"kinds": list, "ns": list, "max_dim": int},
}

REQUIRED_TABLES: Dict[str, tuple] = {
    "spectrum": ("model",),
    "train_deploy": ("ansatz", "loss", "train", "truncation"),
    "variance_grid": ("grid",),
    "rmps_grid": ("grid",),
    "dla_check": ("dla",),
    "pps_bench": ("ansatz", "surrogate"),
    "discrepancy": ("ansatz", "loss", "train", "truncation"),
}

TARGET_KINDS = ("train_deploy", "discrepancy")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    Tables other than ``[experiment]`` stay as plain dicts keyed by table name.
    """

    kind: str
    seed: int = 0
    output_dir: str = "results"
    svg: bool = False
    threads: Optional[int] = None
    name: str = ""
    tables: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def table(self, name: str) -> Dict[str, Any]:
        return self.tables.get(name, {})

    def as_dict(self) -> Dict[str, Any]:
        experiment = {"kind": self.kind, "seed": self.seed, "output_dir": self.output_dir, "svg": self.svg}
        if self.threads is not None:
            experiment["threads"] = self.threads
        if self.name:
            experiment["name"] = self.name
        resolved = {"experiment": experiment}
        resolved.update({name: dict(values) for name, values in sorted(self.tables.items())})
        return resolved

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the resolved config."""
        canonical = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_experiment_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate TOML text."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source}: invalid TOML: {e}") from e

    for table_name, values in raw.items():
        if table_name not in SCHEMA:
            raise ConfigError(f"{source}: unknown table '{table_name}'", key=table_name)
        if not isinstance(values, dict):
            raise ConfigError(f"{source}: '{table_name}' must be a table", key=table_name)
        for key, value in values.items():
            dotted = f"{table_name}.{key}"
            expected = SCHEMA[table_name].get(key)
            if expected is None:
                raise ConfigError(f"{source}: unknown key '{dotted}'", key=dotted)
            if not _matches(value, expected):
                raise ConfigError(f"{source}: key '{dotted}' has invalid value {value!r}", key=dotted)

    experiment = raw.get("experiment")
    if experiment is None or "kind" not in experiment:
        raise ConfigError(f"{source}: missing required key 'experiment.kind'", key="experiment.kind")
    kind = experiment["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"{source}: unknown 'experiment.kind' value '{kind}', expected one of {EXPERIMENT_KINDS}",
            key="experiment.kind",
        )
    for table_name in REQUIRED_TABLES[kind]:
        if table_name not in raw:
            raise ConfigError(f"{source}: experiment '{kind}' requires table [{table_name}]", key=table_name)
    if kind in TARGET_KINDS:
        source_kind = raw.get("data", {}).get("source", "ground_state")
        if source_kind not in ("ground_state", "csv"):
            raise ConfigError(f"{source}: unknown data source '{source_kind}'", key="data.source")
        if source_kind == "ground_state" and "model" not in raw:
            raise ConfigError(f"{source}: ground-state targets require table [model]", key="model")
        if source_kind == "csv" and "path" not in raw.get("data", {}):
            raise ConfigError(f"{source}: csv targets require 'data.path'", key="data.path")
    threads = experiment.get("threads")
    if threads is not None and threads < 1:
        raise ConfigError(f"{source}: 'experiment.threads' must be >= 1", key="experiment.threads")

    tables = {name: dict(values) for name, values in raw.items() if name != "experiment"}
    return ExperimentConfig(
        kind=kind,
        seed=experiment.get("seed", 0),
        output_dir=experiment.get("output_dir", "results"),
        svg=experiment.get("svg", False),
        threads=threads,
        name=experiment.get("name", ""),
        tables=tables,
    )


async def load_experiment_config(path: str) -> ExperimentConfig:
    """Read and validate one experiment file."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Config file not found: {path}")
    async with aiofiles.open(config_path, "r", encoding="utf-8") as f:
        text = await f.read()
    return parse_experiment_config(text, str(config_path))


def _matches(value: Any, expected) -> bool:
    if isinstance(value, bool) and expected is not bool:
        return False
    return isinstance(value, expected)
