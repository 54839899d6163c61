"""Run reports: JSON serialization, CSV artifacts and a plain-text rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no inf/nan; keep them readable instead of emitting invalid JSON
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def artifact_name(scenario: str, seed: int, table: str) -> str:
    return f"{scenario}_seed{seed}_{table}.csv"


@dataclass
class RunReport:
    scenario: str
    seed: int
    config: dict
    tool_version: str
    tolerance_profile: str
    seed_provenance: dict
    results: dict
    per_party: list = field(default_factory=list)
    threshold: dict | None = None
    certificate: dict | None = None
    death_table: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    wall_clock_s: float = 0.0
    status: str = "ok"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def write_tables(out_dir: Path, scenario: str, seed: int, tables: dict[str, list[list]]) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for table, rows in tables.items():
        name = artifact_name(scenario, seed, table)
        (out_dir / name).write_text(csv_text(rows), encoding="utf-8")
        names.append(name)
    return names


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _dict_rows(x) -> list[dict]:
    return [r for r in x if isinstance(r, dict)] if isinstance(x, list) else []


def _section(x) -> dict:
    return x if isinstance(x, dict) else {}


def _table(rows: list[dict], keys: list[str] | None = None) -> list[str]:
    if not rows:
        return ["  (none)"]
    keys = [str(k) for k in (keys or list(rows[0]))]
    cells = [[_fmt(r.get(k)) for k in keys] for r in rows]
    widths = [max([len(k)] + [len(c[i]) for c in cells]) for i, k in enumerate(keys)]
    out = ["  " + "  ".join(k.ljust(w) for k, w in zip(keys, widths))]
    out += ["  " + "  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return out


PARTY_KEYS = ("party", "d", "lambda", "mu", "C", "kappa", "envelope_mode", "t_j")


def explain(report: dict | RunReport) -> str:
    """Human-readable summary; tolerates missing, extra or malformed sections."""
    r = report.to_dict() if isinstance(report, RunReport) else _section(report)
    lines = [
        f"scenario: {_fmt(r.get('scenario', '?'))}   seed: {_fmt(r.get('seed', '?'))}   status: {_fmt(r.get('status', '?'))}",
        f"tool version: {_fmt(r.get('tool_version', '?'))}   tolerance profile: {_fmt(r.get('tolerance_profile', '?'))}"
        f"   wall clock: {_fmt(r.get('wall_clock_s'))} s",
    ]
    per_party = _dict_rows(r.get("per_party"))
    if per_party:
        lines += ["", "per-party channel analysis:"]
        lines += _table(per_party, [k for k in PARTY_KEYS if k in per_party[0]] or None)
    th = r.get("threshold")
    if isinstance(th, dict):
        lines += ["", f"analytic bound: t_c = {_fmt(th.get('t_c'))}, ceil = {_fmt(th.get('ceil_t_c'))}"]
    cert = r.get("certificate")
    if isinstance(cert, dict):
        lines.append(
            f"direct certificate: t* = {_fmt(cert.get('t_star'))} (min eigenvalue {_fmt(cert.get('min_eigenvalue'))})"
        )
    results = _section(r.get("results"))
    rows = _dict_rows(results.get("rows"))
    if rows:
        lines += ["", "grid results:"]
        lines += _table(rows)
    scalars = {str(k): v for k, v in results.items() if k != "rows" and not isinstance(v, (dict, list))}
    if scalars:
        lines.append("")
        lines += [f"{k}: {_fmt(v)}" for k, v in sorted(scalars.items())]
    deaths = _dict_rows(r.get("death_table"))
    if deaths:
        lines += ["", "empirical sudden death (first step with zero negativity):"]
        lines += _table(deaths[:40])
        if len(deaths) > 40:
            lines.append(f"  ... {len(deaths) - 40} more rows")
    arts = r.get("artifacts")
    if isinstance(arts, list) and arts:
        lines += ["", "artifacts: " + ", ".join(map(str, arts))]
    return "\n".join(lines) + "\n"
