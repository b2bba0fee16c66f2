"""CSV and metadata sidecar emission for experiment rows."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

__all__ = ["HEADER", "format_float", "rows_to_csv", "write_rows", "write_metadata", "read_metadata"]

HEADER = "method,param1,param2,k_or_m,value,n_trials,seed"


def format_float(v):
    """17 significant digits, so values round-trip exactly."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER.split(","))
    for r in rows:
        writer.writerow([
            r.method,
            format_float(r.param1),
            format_float(r.param2),
            int(r.k_or_m),
            format_float(r.value),
            int(r.n_trials),
            int(r.seed),
        ])
    return buf.getvalue()


def metadata_path(path):
    return Path(str(path) + ".meta")


def write_metadata(path, meta):
    lines = []
    for key in sorted(meta):
        val = meta[key]
        if isinstance(val, float):
            val = format_float(val)
        text = str(val)
        if "\n" in text:
            raise ValueError(f"metadata value for {key!r} spans lines")
        lines.append(f"{key}={text}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_metadata(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, _, val = line.partition("=")
            out[key] = val
    return out


def write_rows(path, rows, meta):
    """Write ``path`` (CSV) and ``path.meta`` (key=value sidecar)."""
    Path(path).write_text(rows_to_csv(rows))
    write_metadata(metadata_path(path), meta)
