"""Dump formats and the run manifest.

Matrices are CSV: a first line ``# {json header}`` carrying the grid and
provenance, then one row per x node and one column per p node. Floats are
written with ``repr`` so parsing and re-dumping reproduces the file byte for
byte. Point lists and polylines use the same header with a column-name row.
Structured reports are JSON with sorted keys.

Output directories are laid out as

    manifest.json  fields/*.csv|json  reports/*.json  renders/*.svg
"""
from __future__ import annotations

import json
import math
import os
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

HEADER_PREFIX = "# "
MANIFEST_NAME = "manifest.json"
_INT = re.compile(r"^-?\d+$")


class DumpFormatError(ValueError):
    """A file is not a dump written by this tool."""


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays to Python, NaN and inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _header_line(header: dict) -> str:
    return HEADER_PREFIX + json.dumps(_clean(header), sort_keys=True) + "\n"


def _parse_header(line: str) -> dict:
    if not line.startswith(HEADER_PREFIX):
        raise DumpFormatError("missing '# {...}' header line")
    return json.loads(line[len(HEADER_PREFIX):])


def dumps_matrix(values: np.ndarray, header: dict) -> str:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"matrix dump needs a 2-d array, got shape {values.shape}")
    head = {**header, "shape": list(values.shape)}
    rows = (",".join(map(repr, row)) for row in values.tolist())
    return _header_line(head) + "\n".join(rows) + "\n"


def loads_matrix(text: str) -> tuple[np.ndarray, dict]:
    first, _, body = text.partition("\n")
    header = _parse_header(first)
    values = np.array([[float(v) for v in line.split(",")] for line in body.splitlines() if line], dtype=float)
    if list(values.shape) != header.get("shape"):
        raise DumpFormatError(f"matrix shape {values.shape} disagrees with header {header.get('shape')}")
    return values, header


def dumps_matrix_json(values: np.ndarray, header: dict) -> str:
    values = np.asarray(values, dtype=float)
    return dumps_json({"header": {**header, "shape": list(values.shape)}, "values": values})


def loads_matrix_json(text: str) -> tuple[np.ndarray, dict]:
    data = json.loads(text)
    return np.array(data["values"], dtype=float), data["header"]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if "," in s or "\n" in s:
        raise ValueError(f"table cell {s!r} contains a separator")
    return s


def _uncell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    if _INT.match(s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


def dumps_table(columns: list[str], rows: list, header: dict) -> str:
    head = {**header, "columns": list(columns), "rows": len(rows)}
    lines = [",".join(columns)] + [",".join(_cell(v) for v in row) for row in rows]
    return _header_line(head) + "\n".join(lines) + "\n"


def loads_table(text: str) -> tuple[list[str], list[list], dict]:
    first, _, body = text.partition("\n")
    header = _parse_header(first)
    lines = body.splitlines()
    columns = lines[0].split(",") if lines else []
    rows = [[_uncell(c) for c in line.split(",")] for line in lines[1:]]
    if columns != header.get("columns") or len(rows) != header.get("rows"):
        raise DumpFormatError("table body disagrees with its header")
    return columns, rows, header


def read_dump(path) -> dict:
    """Parse any dump file into {"kind", "header", and "values" or "columns"/"rows"}."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        if isinstance(data, dict) and "values" in data and "header" in data:
            values, header = loads_matrix_json(text)
            return {"kind": header.get("kind"), "header": header, "values": values}
        return {"kind": data.get("kind") if isinstance(data, dict) else None, "header": {}, "report": data}
    header = _parse_header(text.partition("\n")[0])
    if "columns" in header:
        columns, rows, header = loads_table(text)
        return {"kind": header.get("kind"), "header": header, "columns": columns, "rows": rows}
    values, header = loads_matrix(text)
    return {"kind": header.get("kind"), "header": header, "values": values}


def redump(path) -> str:
    """Text a parsed dump serializes back to; equals the file for every dump this tool writes."""
    path = Path(path)
    data = read_dump(path)
    if "report" in data:
        return dumps_json(data["report"])
    header = {k: v for k, v in data["header"].items() if k not in ("shape", "columns", "rows")}
    if "values" in data:
        if path.suffix == ".json":
            return dumps_matrix_json(data["values"], header)
        return dumps_matrix(data["values"], header)
    return dumps_table(data["columns"], data["rows"], header)


@dataclass
class RunManifest:
    """Everything needed to repeat a run and the list of files it wrote."""

    command: str
    args: dict
    potential: dict | None = None
    units: dict | None = None
    grid: dict | None = None
    state: dict | None = None
    cutoff: int | None = None
    constants: dict = field(default_factory=dict)
    version: str = __version__
    outputs: list[str] = field(default_factory=list)
    duration: float = 0.0
    status: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> RunManifest:
        return cls(**data)

    @classmethod
    def read(cls, path) -> RunManifest:
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        return cls.from_dict(json.loads(path.read_text()))


class OutputDir:
    """Writes dumps under ``root`` and records each one for the manifest."""

    def __init__(self, root, fmt: str = "csv"):
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown format {fmt!r}")
        self.root = Path(root)
        self.fmt = fmt
        self.outputs: list[str] = []
        self.started = time.perf_counter()

    def _write(self, rel: str, text: str) -> Path:
        if rel in self.outputs:
            raise ValueError(f"{rel} written twice in one run")
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.outputs.append(rel)
        return path

    def matrix(self, name: str, values: np.ndarray, header: dict) -> Path:
        if self.fmt == "json":
            return self._write(f"fields/{name}.json", dumps_matrix_json(values, header))
        return self._write(f"fields/{name}.csv", dumps_matrix(values, header))

    def table(self, name: str, columns: list[str], rows: list, header: dict) -> Path:
        return self._write(f"fields/{name}.csv", dumps_table(columns, rows, header))

    def report(self, name: str, data: dict) -> Path:
        return self._write(f"reports/{name}.json", dumps_json(data))

    def render(self, name: str, svg: str) -> Path:
        return self._write(f"renders/{name}.svg", svg)

    def finish(self, manifest: RunManifest) -> Path:
        manifest.outputs = list(self.outputs)
        manifest.duration = time.perf_counter() - self.started
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / MANIFEST_NAME
        path.write_text(dumps_json(manifest.to_dict()))
        return path


def compare_outputs(a_root, b_root, outputs: list[str], tolerance: float = 1e-12) -> list[str]:
    """Files among ``outputs`` whose numbers differ by more than ``tolerance``."""
    bad = []
    for rel in outputs:
        pa, pb = Path(a_root) / rel, Path(b_root) / rel
        if not pb.exists():
            bad.append(rel)
            continue
        if pa.suffix == ".svg":
            if pa.read_text() != pb.read_text():
                bad.append(rel)
            continue
        if not _numbers_close(_numbers(read_dump(pa)), _numbers(read_dump(pb)), tolerance):
            bad.append(rel)
    return bad


def _numbers(data):
    if isinstance(data, dict):
        # timings are the one intended source of run-to-run variation
        return {k: _numbers(v) for k, v in data.items() if k not in ("duration", "elapsed")}
    if isinstance(data, (list, tuple)):
        return [_numbers(v) for v in data]
    if isinstance(data, np.ndarray):
        return data.tolist()
    return data


def _numbers_close(a, b, tol) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_numbers_close(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_numbers_close(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, float) or isinstance(b, float):
        if a is None or b is None or isinstance(a, (str, bool)) or isinstance(b, (str, bool)):
            return a == b
        return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(a)))
    return a == b


def thread_count() -> int | None:
    """Thread budget from WIGNERFLOW_THREADS, if set."""
    raw = os.environ.get("WIGNERFLOW_THREADS")
    return int(raw) if raw else None
