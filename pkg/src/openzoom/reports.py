"""CSV/JSON report writing with atomic replacement."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def render_csv(rows, columns, meta: dict | None = None) -> str:
    """CSV text: optional ``# key: value`` comment lines, the column line, then rows."""
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="raise")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def report_body(text: str) -> str:
    """The report without its comment lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(rows, columns, path, meta: dict | None = None, json_path=None) -> str:
    """Write ``rows`` as CSV with a fixed column order; returns the text written."""
    rows = list(rows)
    text = render_csv(rows, columns, meta)
    atomic_write(path, text)
    if json_path is not None:
        atomic_write(json_path, json.dumps({"meta": meta or {}, "columns": list(columns), "rows": rows}, indent=1))
    return text
