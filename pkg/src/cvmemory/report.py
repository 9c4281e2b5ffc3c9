"""Report records and their table / CSV / JSON renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

SCHEMA_VERSION = 1

# Columns shared by every memory-figure row (memory, tables, sweep).
MEMORY_COLUMNS = (
    "scenario",
    "kappa", "eps_a", "eps_p",
    "G_Q", "G_P", "N_Q", "N_P", "G", "N", "N_over_G",
    "idqm_pass", "dmqm_pass",
    "ref_G", "ref_N", "ref_N_over_G",
    "dev_G", "dev_N", "dev_N_over_G",
    "note",
)


@dataclass
class Report:
    command: str
    columns: tuple[str, ...]
    rows: list[dict]
    config_echo: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.columns = tuple(self.columns)
        for row in self.rows:
            extra = set(row) - set(self.columns)
            if extra:
                raise ValueError(f"row has columns outside the schema: {sorted(extra)}")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config_echo": self.config_echo,
            "columns": list(self.columns),
            "rows": [{c: row.get(c) for c in self.columns} for row in self.rows],
            "sections": self.sections,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Report:
        return cls(
            command=d["command"],
            columns=tuple(d["columns"]),
            rows=[dict(r) for r in d["rows"]],
            config_echo=d.get("config_echo", {}),
            sections=d.get("sections", {}),
            schema_version=d["schema_version"],
        )

    def __eq__(self, other):
        return isinstance(other, Report) and _clean(self.to_dict()) == _clean(other.to_dict())


def _clean(value):
    """JSON-safe scalar; non-finite floats become strings."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float) or hasattr(value, "__float__"):
        x = float(value)
        return x if math.isfinite(x) else repr(x)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return str(value)


def to_json(report: Report) -> str:
    return json.dumps(_clean(report.to_dict()), indent=2, allow_nan=False) + "\n"


def from_json(text: str) -> Report:
    return Report.from_dict(json.loads(text))


def format_csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest string that round-trips
    return str(value)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([format_csv_value(_clean(row.get(c))) for c in report.columns])
    return buf.getvalue()


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return f"{value:.4g}"
    return str(value)


def _grid(columns, rows) -> str:
    cells = [[_cell(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)


def to_table(report: Report) -> str:
    """Human-readable rendering. Empty columns are dropped."""
    used = [c for c in report.columns if any(r.get(c) not in (None, "") for r in report.rows)]
    out = [f"# {report.command}", _grid(used, report.rows)]
    for name, section in report.sections.items():
        if isinstance(section, dict) and "rows" in section:
            cols = section["columns"]
            out += ["", f"# {name}", _grid(cols, section["rows"])]
        elif isinstance(section, list):
            out += ["", f"# {name}"] + [f"  {line}" for line in section]
    return "\n".join(out) + "\n"


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    if fmt == "table":
        return to_table(report)
    raise ValueError(f"unknown format {fmt!r}")
