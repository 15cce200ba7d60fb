"""Reading and writing state files.

A state file is a JSON object ``{"dims": [...], "kind": "pure" | "mixed",
"data": ...}``. Complex entries are ``[re, im]`` pairs; pure data is a flat
list and mixed data a row-major list of rows. Floats are written with full
precision, so a dumped state reads back bit-identical.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .qstate import QState, StateError, mixed, pure


def _complex(entry, where: str) -> complex:
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return complex(entry)
    if (
        isinstance(entry, list)
        and len(entry) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
    ):
        return complex(entry[0], entry[1])
    raise StateError(f"{where}: expected a number or [re, im], got {entry!r}")


def state_from_dict(obj, source: str = "<state>") -> QState:
    """Validate a decoded state object; errors name ``source`` and the offending field."""
    if not isinstance(obj, dict):
        raise StateError(f"{source}: top level must be an object with dims, kind, data")
    for key in ("dims", "kind", "data"):
        if key not in obj:
            raise StateError(f"{source}: missing field {key!r}")
    dims = obj["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise StateError(f"{source}: 'dims' must be a non-empty list of positive integers, got {dims!r}")
    kind = obj["kind"]
    data = obj["data"]
    if not isinstance(data, list):
        raise StateError(f"{source}: 'data' must be a list")
    if kind == "pure":
        vec = np.array([_complex(x, f"{source}: data[{i}]") for i, x in enumerate(data)])
        try:
            return pure(vec, dims)
        except StateError as exc:
            raise StateError(f"{source}: {exc}") from None
    if kind == "mixed":
        rows = []
        for i, row in enumerate(data):
            if not isinstance(row, list):
                raise StateError(f"{source}: data[{i}] must be a row list")
            rows.append([_complex(x, f"{source}: data[{i}][{j}]") for j, x in enumerate(row)])
        if len({len(r) for r in rows}) > 1:
            raise StateError(f"{source}: rows of 'data' have unequal lengths")
        try:
            return mixed(np.array(rows, dtype=complex).reshape(len(rows), -1), dims)
        except StateError as exc:
            raise StateError(f"{source}: {exc}") from None
    raise StateError(f"{source}: 'kind' must be 'pure' or 'mixed', got {kind!r}")


def parse_state_file(path) -> QState:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise StateError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return state_from_dict(obj, str(path))


def _pairs(a: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in a]


def state_to_dict(state: QState) -> dict:
    if state.is_pure:
        data = _pairs(state.data)
    else:
        data = [_pairs(row) for row in state.data]
    return {"dims": list(state.dims), "kind": state.kind, "data": data}


def dump_state(state: QState, path=None) -> str:
    """JSON text of ``state``; also written to ``path`` when given."""
    text = json.dumps(state_to_dict(state))
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
