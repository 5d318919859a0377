"""Field files and atomic writes.

A field file is one line of JSON followed by the raw node values::

    {"format": "delamina-field", "version": 1, "kind": "scalar", "nx": 64, ...}\\n
    <little-endian float64 payload>

The payload holds each component (``values``; ``x, y``; or ``xx, xy, yy``) as
an ``(nx + 1) x (ny + 1)`` array in C order, components back to back.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, SymTensorField, VectorField2

FORMAT = "delamina-field"
FORMAT_VERSION = 1
_COMPONENTS = {"scalar": ("values",), "vector": ("x", "y"), "tensor": ("xx", "xy", "yy")}
_TYPES = {"scalar": ScalarField, "vector": VectorField2, "tensor": SymTensorField}


class FieldFormatError(ValueError):
    """A field file is malformed or of an unsupported version."""


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _kind(field) -> str:
    for kind, cls in _TYPES.items():
        if isinstance(field, cls):
            return kind
    raise TypeError(f"cannot serialize {type(field).__name__}")


def field_to_bytes(field) -> bytes:
    kind = _kind(field)
    g = field.grid
    header = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": kind,
        "nx": g.nx,
        "ny": g.ny,
        "lx": g.lx,
        "ly": g.ly,
        "components": list(_COMPONENTS[kind]),
        "dtype": "<f8",
    }
    payload = b"".join(
        np.ascontiguousarray(getattr(field, c), dtype="<f8").tobytes() for c in _COMPONENTS[kind]
    )
    return json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + payload


def field_from_bytes(data: bytes):
    line, sep, payload = data.partition(b"\n")
    if not sep:
        raise FieldFormatError("missing header line")
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"bad header: {exc}") from None
    if header.get("format") != FORMAT or header.get("version") != FORMAT_VERSION:
        raise FieldFormatError("unsupported format or version")
    kind = header.get("kind")
    if kind not in _COMPONENTS:
        raise FieldFormatError(f"unknown field kind {kind!r}")
    grid = Grid(int(header["nx"]), int(header["ny"]), float(header["lx"]), float(header["ly"]))
    n = len(_COMPONENTS[kind])
    arr = np.frombuffer(payload, dtype="<f8")
    if arr.size != n * grid.shape[0] * grid.shape[1]:
        raise FieldFormatError("payload size does not match the header")
    parts = arr.reshape((n,) + grid.shape).astype(float)
    return _TYPES[kind](grid, *parts)


def save_field(path: str | os.PathLike, field) -> None:
    atomic_write_bytes(path, field_to_bytes(field))


def load_field(path: str | os.PathLike):
    return field_from_bytes(Path(path).read_bytes())


def to_jsonable(obj):
    """Plain JSON data for dataclasses, tuples and numpy scalars."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def save_state(directory: str | os.PathLike, state) -> None:
    """Write ``u.field``, ``w.field`` and a ``state.json`` sidecar for a constructed state."""
    directory = Path(directory)
    save_field(directory / "u.field", state.u)
    save_field(directory / "w.field", state.w)
    params = state.params_used
    sidecar = {
        "name": state.name,
        "predicted_energy": state.predicted_energy,
        "params_type": type(params).__name__ if params is not None else None,
        "params_used": to_jsonable(params),
        "boundary": to_jsonable(state.boundary),
    }
    atomic_write_text(directory / "state.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
