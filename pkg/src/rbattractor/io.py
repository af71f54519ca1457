"""Checkpoint files and CSV series.

Checkpoint layout: one JSON header line, then u1, u2, θ coefficients as
little-endian float64 pairs (re, im). Modes are written k1-major, k2-minor,
each index running in ascending order -n/2 .. n/2-1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .params import PhysParams
from .spectral import make_grid

CHECKPOINT_VERSION = 1
FIELD_ORDER = ["u1", "u2", "theta"]

PathLike = Union[str, Path]


def save_checkpoint(path: PathLike, state, params: PhysParams) -> None:
    grid = state.grid
    header = {
        "version": CHECKPOINT_VERSION,
        "L": grid.L,
        "n1": grid.n1,
        "n2": grid.n2,
        "dealias_fraction": grid.dealias_fraction,
        "t": state.t,
        "nu": params.nu,
        "kappa": params.kappa,
        "field_order": FIELD_ORDER,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("ascii"))
        for c in state.arrays:
            shifted = np.fft.fftshift(c)
            fh.write(shifted.astype("<c16").tobytes())


def load_checkpoint(path: PathLike):
    """Return ``(state, params, header)``."""
    from .rbsolver import State

    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
        grid = make_grid(
            header["L"], header["n1"], header["n2"], header.get("dealias_fraction", 2 / 3)
        )
        count = grid.n1 * grid.n2
        arrays = {}
        for name in header["field_order"]:
            chunk = fh.read(16 * count)
            if len(chunk) != 16 * count:
                raise ValueError(f"{path}: truncated data for field {name}")
            raw = np.frombuffer(chunk, dtype="<c16")
            arrays[name] = np.fft.ifftshift(raw.reshape(grid.shape)).astype(complex)
    state = State.from_arrays(header["t"], grid, [arrays[n] for n in FIELD_ORDER])
    params = PhysParams(header["nu"], header["kappa"], header["L"])
    return state, params, header


def _fmt(x: float) -> str:
    return repr(float(x))


class CSVSeriesWriter:
    """Streams dataclass records to a CSV file with round-trip float formatting."""

    def __init__(self, path: PathLike, columns: Sequence[str]):
        self.path = Path(path)
        self.columns = list(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._fh.write(",".join(self.columns) + "\n")

    def __call__(self, record) -> None:
        self._fh.write(",".join(_fmt(getattr(record, c)) for c in self.columns) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_series(path: PathLike, records: Iterable, record_type) -> None:
    cols = [f.name for f in fields(record_type)]
    with CSVSeriesWriter(path, cols) as w:
        for r in records:
            w(r)


def read_series(path: PathLike, record_type) -> list:
    cols = [f.name for f in fields(record_type)]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(cols) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [record_type(**{c: float(row[c]) for c in cols}) for row in reader]


def write_xy(path: PathLike, names: Sequence[str], *columns: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
