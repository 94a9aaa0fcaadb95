#!/usr/bin/env python3

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

FORMAT_VERSION = 1

OUTPUT_FORMATS = ("csv", "json")


@dataclass
class ResultTable:
    name: str
    columns: list[str]
    rows: list[list[Any]]
    meta: dict[str, Any] = field(default_factory=dict)

    def add_row(self, row: list[Any]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, table {self.name!r} has {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name: str) -> list[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


def render_value(value: Any) -> str:
    """Text form shared by both writers; floats keep 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if hasattr(value, "item"):
        return render_value(value.item())
    return str(value)


def _is_complex(value: Any) -> bool:
    return isinstance(value, complex) or (hasattr(value, "dtype") and getattr(value.dtype, "kind", "") == "c")


def flatten_table(table: ResultTable) -> tuple[list[str], list[list[Any]]]:
    """Split complex columns into _re/_im pairs."""
    complex_columns = {i for i in range(len(table.columns)) if any(_is_complex(row[i]) for row in table.rows)}
    columns: list[str] = []
    for i, name in enumerate(table.columns):
        columns.extend([f"{name}_re", f"{name}_im"] if i in complex_columns else [name])

    rows = []
    for row in table.rows:
        flat: list[Any] = []
        for i, value in enumerate(row):
            if i in complex_columns:
                if value is None:
                    flat.extend([None, None])
                else:
                    z = complex(value)
                    flat.extend([z.real, z.imag])
            else:
                flat.append(value)
        rows.append(flat)
    return columns, rows


def _config_line(config: dict[str, Any]) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)


def render_csv(table: ResultTable, config: dict[str, Any]) -> str:
    columns, rows = flatten_table(table)
    lines = [
        f"# jcrsim-format: {FORMAT_VERSION}",
        f"# table: {table.name}",
        f"# config: {_config_line(config)}",
    ]
    lines.extend(f"# {key}: {render_value(value)}" for key, value in table.meta.items())
    lines.append(",".join(columns))
    lines.extend(",".join(render_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_value(value: Any) -> Any:
    if value is None or isinstance(value, (bool, str)):
        return value
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return render_value(value)
        return float(format(value, ".17g"))
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return str(value)


def render_json(table: ResultTable, config: dict[str, Any]) -> str:
    columns, rows = flatten_table(table)
    document = {
        "format_version": FORMAT_VERSION,
        "table": table.name,
        "config": json.loads(_config_line(config)),
        "meta": {k: _json_value(v) for k, v in table.meta.items()},
        "columns": columns,
        "rows": [[_json_value(v) for v in row] for row in rows],
    }
    return json.dumps(document, indent=1) + "\n"


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def write_tables(tables: list[ResultTable], output: Path, fmt: str, config: dict[str, Any]) -> list[Path]:
    """Write each table; with several tables the table name is appended to the stem."""
    if fmt not in OUTPUT_FORMATS:
        raise ValueError(f"unknown output format {fmt!r}")
    output = Path(output)
    rendered: list[tuple[Path, str]] = []
    for table in tables:
        target = output if len(tables) == 1 else output.with_name(f"{output.stem}.{table.name}{output.suffix}")
        text = render_csv(table, config) if fmt == "csv" else render_json(table, config)
        rendered.append((target, text))
    for target, text in rendered:
        atomic_write(target, text)
    return [target for target, _ in rendered]


def write_diagnostic(output: Optional[Path], error: BaseException, config: dict[str, Any],
                     events: list[dict[str, Any]]) -> Optional[Path]:
    if output is None:
        return None
    target = Path(f"{output}.diagnostic.json")
    document = {
        "format_version": FORMAT_VERSION,
        "error": {"type": type(error).__name__, "message": str(error)},
        "config": json.loads(_config_line(config)),
        "numerical_events": _json_value(events),
    }
    atomic_write(target, json.dumps(document, indent=1, default=str) + "\n")
    return target
