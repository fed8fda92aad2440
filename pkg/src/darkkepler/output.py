"""Deterministic table serialization and run manifests.

Floats are written with ``repr``, the shortest decimal that parses back to
the same double, so identical inputs give identical bytes on every platform.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

MANIFEST_NAME = "manifest.json"


class OutputError(OSError):
    """Writing an output file failed; the message carries the path."""


def _scalar(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    return value


def format_value(value: Any) -> str:
    value = _scalar(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _json_ready(value: Any) -> Any:
    value = _scalar(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)  # 'inf', '-inf', 'nan' keep the output strict JSON
    if isinstance(value, Mapping):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_ready(v) for v in value.tolist()]
    return value


def dumps_json(obj: Any) -> str:
    return json.dumps(_json_ready(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def _normalize(rows: Sequence, columns: Optional[Sequence[str]]) -> tuple[list[str], list[list]]:
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns are required to write an empty table")
        if not isinstance(rows[0], Mapping):
            raise ValueError("columns are required for tuple rows")
        columns = list(rows[0].keys())
    columns = list(columns)
    out = []
    for i, row in enumerate(rows):
        if isinstance(row, Mapping):
            if set(row.keys()) != set(columns):
                raise ValueError(f"row {i} has keys {sorted(row)}; expected {sorted(columns)}")
            out.append([row[c] for c in columns])
        else:
            row = list(row)
            if len(row) != len(columns):
                raise ValueError(f"row {i} has {len(row)} fields; expected {len(columns)}")
            out.append(row)
    return columns, out


def render_table(rows: Sequence, fmt: str = "csv", columns: Optional[Sequence[str]] = None) -> str:
    columns, body = _normalize(rows, columns)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in body:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        return dumps_json([dict(zip(columns, row)) for row in body])
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_bytes(path: os.PathLike | str, data: bytes) -> str:
    """Write atomically (temp file + rename) and return the sha256 of ``data``."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return content_hash(data)


def emit_table(rows: Sequence, fmt: str, path: os.PathLike | str,
               columns: Optional[Sequence[str]] = None) -> str:
    """Serialize ``rows`` (dicts, or sequences with ``columns``) to ``path``; return its sha256."""
    return write_bytes(path, render_table(rows, fmt, columns).encode("utf-8"))


def emit_json(obj: Any, path: os.PathLike | str) -> str:
    return write_bytes(path, dumps_json(obj).encode("utf-8"))


def file_hash(path: os.PathLike | str) -> str:
    try:
        return content_hash(Path(path).read_bytes())
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def build_manifest(version: str, config: Mapping, constants: Mapping, wall_time: float,
                   outputs: Mapping[str, str], extra: Optional[Mapping] = None) -> dict:
    return {
        "tool": "darkkepler",
        "version": version,
        "config": dict(config),
        "constants": dict(constants),
        "wall_time_seconds": wall_time,
        "outputs": {name: {"sha256": digest} for name, digest in sorted(outputs.items())},
        **({"summary": dict(extra)} if extra else {}),
    }


def write_manifest(directory: os.PathLike | str, manifest: Mapping) -> str:
    return emit_json(manifest, Path(directory) / MANIFEST_NAME)


def verify_manifest(directory: os.PathLike | str) -> dict[str, bool]:
    """Recompute each listed output's hash; map file name to match."""
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST_NAME).read_text())
    except OSError as exc:
        raise OutputError(f"cannot read manifest in {directory}: {exc.strerror or exc}") from exc
    return {
        name: (directory / name).exists() and file_hash(directory / name) == entry["sha256"]
        for name, entry in manifest["outputs"].items()
    }


def iter_rows(pairs: Iterable[tuple]) -> list[tuple]:
    return [tuple(_scalar(v) for v in row) for row in pairs]
