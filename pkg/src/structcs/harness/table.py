"""Result tables with a typed column schema and a provenance block."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

TABLE_SCHEMA_VERSION = 1
_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def _cell(value: Any, kind: str) -> str:
    if kind == "float":
        return format(float(value), ".17g")
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


@dataclass
class ResultTable:
    columns: list[tuple[str, str]]
    rows: list[list[Any]] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)
    schema_version: int = TABLE_SCHEMA_VERSION

    def __post_init__(self):
        for name, kind in self.columns:
            if kind not in _TYPES:
                raise ValueError(f"column {name!r} has unknown type {kind!r}")
        for row in self.rows:
            self._check(row)

    @property
    def names(self) -> list[str]:
        return [c[0] for c in self.columns]

    def _check(self, row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, schema has {len(self.columns)}")
        for value, (name, kind) in zip(row, self.columns):
            if kind == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
                continue
            if kind == "int" and isinstance(value, int) and not isinstance(value, bool):
                continue
            if kind == "bool" and isinstance(value, bool):
                continue
            if kind == "str" and isinstance(value, str):
                continue
            raise TypeError(f"column {name!r} expects {kind}, got {value!r}")

    def append(self, row) -> None:
        self._check(row)
        self.rows.append(list(row))

    def column(self, name: str) -> list[Any]:
        if name not in self.names:
            raise KeyError(f"unknown column {name!r}")
        i = self.names.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.names, r)) for r in self.rows]

    # -- output ------------------------------------------------------------

    def to_csv(self) -> str:
        """CSV with ``# key=value`` provenance lines; the timestamp line is last
        among them so diffs can skip it."""
        buf = io.StringIO()
        prov = {k: v for k, v in self.provenance.items() if k not in ("timestamp", "config")}
        for key in sorted(prov):
            buf.write(f"# {key}={prov[key]}\n")
        buf.write(f"# schema_version={self.schema_version}\n")
        if "timestamp" in self.provenance:
            buf.write(f"# timestamp={self.provenance['timestamp']}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.names)
        kinds = [c[1] for c in self.columns]
        for row in self.rows:
            writer.writerow(_cell(v, k) for v, k in zip(row, kinds))
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "columns": [list(c) for c in self.columns],
            "rows": self.rows,
            "provenance": self.provenance,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        d = json.loads(text)
        return cls(
            columns=[tuple(c) for c in d["columns"]],
            rows=d["rows"],
            provenance=d.get("provenance", {}),
            extras=d.get("extras", {}),
            schema_version=d.get("schema_version", TABLE_SCHEMA_VERSION),
        )

    def write(self, out_dir, stem: str) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        json_path = out / f"{stem}.json"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(self.to_json(), encoding="utf-8")
        return csv_path, json_path


def strip_timestamp(csv_text: str) -> str:
    return "".join(l for l in csv_text.splitlines(keepends=True) if not l.startswith("# timestamp="))


def now_utc() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
