"""CSV import/export. Floats are written with 17 significant digits so they round-trip exactly."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "fmt",
    "write_rows",
    "write_complex_vector",
    "read_complex_vector",
    "write_channel",
    "read_channel",
    "sidecar_path",
]

PathLike = Union[str, Path]


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_rows(path_or_file, header: Sequence[str], rows: Iterable[Sequence]):
    """Write a CSV file (or stream) with the shared number formatting."""
    def _emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])

    if hasattr(path_or_file, "write"):
        _emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _emit(fh)


def write_complex_vector(path: PathLike, v) -> None:
    v = np.asarray(v, dtype=complex)
    write_rows(path, ["index", "re", "im"], ((i, z.real, z.imag) for i, z in enumerate(v)))


def read_complex_vector(path: PathLike) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "re", "im"]:
            raise ValueError(f"{path}: expected header index,re,im")
        rows = [r for r in reader if r]
    idx = [int(r[0]) for r in rows]
    if idx != list(range(len(rows))):
        raise ValueError(f"{path}: indices must run 0..L-1 in order")
    return np.array([complex(float(r[1]), float(r[2])) for r in rows])


def sidecar_path(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def write_channel(path: PathLike, h, wavelength: float) -> None:
    """Channel vector as ``index,re,im`` rows plus a ``<file>.json`` sidecar."""
    h = np.asarray(h, dtype=complex)
    write_complex_vector(path, h)
    meta = {"wavelength": float(wavelength), "L": int(h.size)}
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_channel(path: PathLike, expected_len: Optional[int] = None) -> Tuple[np.ndarray, Optional[float]]:
    """Read a channel CSV; returns ``(h, wavelength)`` (``None`` without a sidecar)."""
    h = read_complex_vector(path)
    wavelength = None
    side = sidecar_path(path)
    if side.is_file():
        meta = json.loads(side.read_text())
        if int(meta.get("L", h.size)) != h.size:
            raise ValueError(f"{path}: sidecar L={meta['L']} but file has {h.size} rows")
        wavelength = meta.get("wavelength")
    if expected_len is not None and h.size != expected_len:
        raise ValueError(f"{path}: channel has {h.size} entries, scenario has {expected_len}")
    return h, wavelength
