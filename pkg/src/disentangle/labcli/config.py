"""Scenario configuration: YAML text, strict JSON-schema validation, consistency checks."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from ..exceptions import ConfigError, DesignError, DimensionMismatchError

SCHEMA_VERSION = 1

SCENARIOS = (
    "depolarization-threshold",
    "werner-death",
    "ghz-death",
    "ring-counterexample",
    "random-channel-audit",
    "rainbow-mutual-info",
    "custom",
)

_CHANNEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["depolarizing", "random", "ring", "kraus-literal"]},
        "d": {"type": "integer", "minimum": 2},
        "p": {"type": "number", "minimum": 0, "maximum": 1},
        "num_kraus": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "N": {"type": "integer", "minimum": 2},
        "path": {"type": "string"},
    },
}

_DESIGN = {
    "oneOf": [
        {"enum": ["auto", "six-state", "mub"]},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["path"],
            "properties": {"path": {"type": "string"}},
        },
    ]
}

_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "scenario"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "scenario": {"enum": list(SCENARIOS)},
        "seed": {"type": "integer", "minimum": 0},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "channels": {"type": "array", "items": _CHANNEL, "minItems": 1},
        "designs": {"type": "array", "items": _DESIGN, "minItems": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "minItems": 1,
                },
                "n": _INT_LIST,
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "state": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["bell", "werner", "ghz", "random", "matrix"]},
                "q": {"type": "number", "minimum": 0, "maximum": 1},
                "rank": {"type": "integer", "minimum": 1},
                "path": {"type": "string"},
            },
        },
        "t_max": {"type": "integer", "minimum": 1},
        "envelope": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["auto", "spectral-rigorous", "empirical"]},
                "t_window": {"type": "integer", "minimum": 1},
            },
        },
        "emit_weights": {"type": "boolean"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
    },
}

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "t_max": 30,
    "envelope": {"mode": "auto", "t_window": 60},
    "emit_weights": False,
    "output": {"dir": "out"},
    "tolerances": {},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated configuration; ``raw`` keeps the user's text for the report echo."""

    data: dict
    base_dir: Path
    raw: dict

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    @property
    def scenario(self) -> str:
        return self.data["scenario"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def with_seed(self, seed: int) -> "ScenarioConfig":
        data = copy.deepcopy(self.data)
        data["seed"] = int(seed)
        return ScenarioConfig(data, self.base_dir, self.raw)


def _schema_messages(doc) -> list[str]:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    msgs = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        msgs.append(f"{where}: {err.message}")
    return msgs


def _merge_defaults(doc: dict) -> dict:
    data = copy.deepcopy(DEFAULTS)
    for k, v in doc.items():
        if isinstance(v, dict) and isinstance(data.get(k), dict):
            data[k] = {**data[k], **v}
        else:
            data[k] = copy.deepcopy(v)
    return data


def _broadcast(items, n, what):
    if items is None:
        return None
    if len(items) == 1:
        return list(items) * n
    if len(items) != n:
        raise DimensionMismatchError(f"{len(items)} {what} for {n} parties")
    return list(items)


def _consistency(data: dict, base_dir: Path) -> list[str]:
    """Cross-field checks the schema cannot express."""
    from ..designs import _is_prime
    from .._tolerances import Tolerances

    msgs: list[str] = []
    sc = data["scenario"]
    dims = data.get("dims")
    chans = data.get("channels")
    grid = data.get("grid", {})

    try:
        Tolerances().replace(**data["tolerances"])
    except KeyError as exc:
        msgs.append(f"tolerances: {exc.args[0]}")

    need = {
        "depolarization-threshold": ["p"],
        "ghz-death": ["n"],
        "ring-counterexample": ["n"],
        "random-channel-audit": ["count"],
        "rainbow-mutual-info": ["n"],
    }.get(sc, [])
    for key in need:
        if key not in grid:
            msgs.append(f"grid: scenario {sc!r} requires grid.{key}")
    if sc == "custom":
        for key in ("dims", "channels", "state"):
            if key not in data:
                msgs.append(f"{key}: scenario 'custom' requires {key!r}")
    if sc == "rainbow-mutual-info" and any(n % 2 for n in grid.get("n", [])):
        msgs.append("grid/n: rainbow states need an even number of sites")
    if sc == "ring-counterexample" and any(n < 3 for n in grid.get("n", [])):
        msgs.append("grid/n: the ring needs at least 3 sites")

    if dims is not None and sc in ("depolarization-threshold", "random-channel-audit") and len(dims) != 1:
        msgs.append(f"dims: scenario {sc!r} takes a single local dimension, got {dims}")
    party_dims = dims
    if sc == "werner-death":
        party_dims = dims or [2, 2]
        if party_dims != [2, 2]:
            msgs.append("dims: the Werner family is defined on two qubits")

    if chans is not None and party_dims is not None:
        try:
            chans_b = _broadcast(chans, len(party_dims), "channel descriptors")
        except DimensionMismatchError as exc:
            msgs.append(f"channels: {exc}")
            chans_b = []
        for j, (c, d) in enumerate(zip(chans_b, party_dims)):
            if "d" in c and c["d"] != d:
                msgs.append(f"channels/{j}: descriptor dimension {c['d']} does not match dims[{j}] = {d}")
    for j, c in enumerate(chans or []):
        kind = c["kind"]
        if kind == "depolarizing" and "p" not in c:
            msgs.append(f"channels/{j}: depolarizing channel needs 'p'")
        if kind == "random" and sc != "random-channel-audit" and "seed" not in c:
            msgs.append(f"channels/{j}: random channel needs an explicit 'seed'")
        if kind == "kraus-literal":
            if "path" not in c:
                msgs.append(f"channels/{j}: kraus-literal channel needs 'path'")
            elif not (base_dir / c["path"]).exists() and not Path(c["path"]).is_absolute():
                msgs.append(f"channels/{j}: Kraus file {c['path']!r} not found")
        if kind == "ring" and sc not in ("ring-counterexample",):
            msgs.append(f"channels/{j}: the ring channel is not a local channel; use scenario 'ring-counterexample'")

    designs = data.get("designs")
    if designs is not None:
        ddims = party_dims or ([chans[0]["d"]] if chans and "d" in chans[0] else [2])
        try:
            designs_b = _broadcast(designs, len(ddims), "designs")
        except DimensionMismatchError as exc:
            msgs.append(f"designs: {exc}")
            designs_b = []
        for j, (des, d) in enumerate(zip(designs_b, ddims)):
            if des == "mub" and not _is_prime(d):
                msgs.append(
                    f"designs/{j}: MUB construction is only available for prime dimension (d={d}); "
                    "supply a custom design"
                )
            if des == "six-state" and d != 2:
                msgs.append(f"designs/{j}: the six-state design is a qubit design (d={d})")

    st = data.get("state")
    if st is not None:
        if st["kind"] == "matrix" and "path" not in st:
            msgs.append("state: a matrix state needs 'path'")
        if st["kind"] in ("bell", "werner") and party_dims not in (None, [2, 2]) and sc == "custom":
            msgs.append(f"state: {st['kind']} state needs dims [2, 2], got {party_dims}")
    return msgs


def validate_document(doc, base_dir: str | os.PathLike = ".") -> list[str]:
    """Diagnostics for a parsed document; an empty list means valid."""
    if not isinstance(doc, dict):
        return ["<root>: configuration must be a mapping"]
    msgs = _schema_messages(doc)
    if msgs:
        return msgs
    return _consistency(_merge_defaults(doc), Path(base_dir))


def parse_config(doc: dict, base_dir: str | os.PathLike = ".") -> ScenarioConfig:
    msgs = validate_document(doc, base_dir)
    if msgs:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(msgs))
    return ScenarioConfig(_merge_defaults(doc), Path(base_dir), copy.deepcopy(doc))


def read_document(path: str | os.PathLike):
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from None


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    return parse_config(read_document(path), Path(path).resolve().parent)


__all__ = [
    "SCHEMA",
    "SCHEMA_VERSION",
    "SCENARIOS",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "read_document",
    "validate_document",
    "DesignError",
]
