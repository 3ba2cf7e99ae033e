"""Command reports and their table, CSV and JSON renderings."""

from __future__ import annotations

import datetime as _dt
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SWEEP_COLUMNS = ("budget", "utility", "efficiency", "utility_bound", "efficiency_bound", "lambda")
FORMATS = ("table", "csv", "json")


def timestamp() -> str:
    """UTC time in ISO format; honours ``SOURCE_DATE_EPOCH`` for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.replace(microsecond=0).isoformat()


@dataclass
class Report:
    """Everything a command produced.

    ``result`` holds the verdict or solution; for sweeps it has a ``rows``
    list of dicts keyed by :data:`SWEEP_COLUMNS`.
    """

    command: str
    scenario_digest: str
    result: dict
    diagnostics: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=timestamp)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "scenario_digest": self.scenario_digest,
            "result": _plain(self.result),
            "diagnostics": _plain(self.diagnostics),
            "timestamp": self.timestamp,
        }


def _plain(v: Any):
    """Convert numpy values to JSON-safe Python values (non-finite -> None)."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def fmt_number(v) -> str:
    """12 significant digits, '.' decimal separator, no grouping."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _flatten(d, prefix=""):
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)) and not (len(v) and isinstance(v[0], dict)):
            out.extend((f"{key}[{i}]", x) for i, x in enumerate(v))
        else:
            out.append((key, v))
    return out


def _is_sweep(r: Report) -> bool:
    return "rows" in r.result


def _csv(r: Report) -> str:
    buf = io.StringIO()
    if _is_sweep(r):
        buf.write(f"# transition_point={fmt_number(r.result.get('transition_point'))}\n")
        buf.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in r.result["rows"]:
            buf.write(",".join(fmt_number(row.get(c)) for c in SWEEP_COLUMNS) + "\n")
        return buf.getvalue()
    buf.write("field,value\n")
    for k, v in _flatten(r.result):
        buf.write(f"{k},{fmt_number(v)}\n")
    return buf.getvalue()


def _align(rows):
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip() for row in rows) + "\n"


def _table(r: Report) -> str:
    head = [f"command: {r.command}", f"scenario: {r.scenario_digest}", f"time: {r.timestamp}"]
    text = "\n".join(head) + "\n\n"
    if _is_sweep(r):
        text += f"transition point: {fmt_number(r.result.get('transition_point'))}\n"
        text += f"rho_inf: {fmt_number(r.result.get('rho_inf'))}\n\n"
        rows = [list(SWEEP_COLUMNS)]
        rows += [[fmt_number(row.get(c)) if row.get(c) is not None else "-" for c in SWEEP_COLUMNS]
                 for row in r.result["rows"]]
        text += _align(rows)
    else:
        text += _align([[k, fmt_number(v)] for k, v in _flatten(r.result)])
    if r.diagnostics:
        text += "\n" + _align([[k, fmt_number(v)] for k, v in _flatten(r.diagnostics)])
    return text


def emit_report(r: Report, fmt: str = "table", path=None) -> str:
    """Render ``r`` as ``table``, ``csv`` or ``json``; optionally write to ``path``."""
    if fmt == "json":
        text = json.dumps(r.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"
    elif fmt == "csv":
        text = _csv(r)
    elif fmt == "table":
        text = _table(r)
    else:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
