"""Deterministic table serialization.

CSV floats are printed with 17 significant digits so that values
round-trip bit-exactly; identical tables always serialize to identical
bytes.  Every table write is accompanied by a JSON sidecar echoing the
fully resolved configuration.
"""

from __future__ import annotations

import json
from pathlib import Path

from .experiments import Table


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_csv(table: Table) -> str:
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(table: Table) -> str:
    payload = {"columns": list(table.columns), "rows": [list(r) for r in table.rows]}
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def render_table(table: Table, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(table)
    if fmt == "json":
        return render_json(table)
    raise ValueError(f"unknown output format {fmt!r}")


def config_sidecar_path(out_path: str) -> Path:
    p = Path(out_path)
    return p.with_name(p.name + ".config.json")


def write_outputs(out_path: str, fmt: str, table: Table, trace: Table | None = None) -> list[Path]:
    """Write the table, its config sidecar, and an optional trace table."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = [out]
    out.write_text(render_table(table, fmt), encoding="utf-8")
    sidecar = config_sidecar_path(out_path)
    sidecar.write_text(
        json.dumps(table.config, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append(sidecar)
    if trace is not None:
        trace_path = out.with_name(out.stem + ".trace" + out.suffix)
        trace_path.write_text(render_table(trace, fmt), encoding="utf-8")
        written.append(trace_path)
    return written
