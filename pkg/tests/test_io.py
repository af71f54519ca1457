import math
from dataclasses import fields

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbattractor.io import (
    CSVSeriesWriter,
    load_checkpoint,
    read_series,
    save_checkpoint,
    write_series,
    write_xy,
)
from rbattractor.params import params_from_ra_pr
from rbattractor.rbsolver import DiagnosticsRecord, ICSpec, SimConfig, initial_state

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(*[finite] * len(fields(DiagnosticsRecord))), min_size=1, max_size=5))
def test_csv_round_trip_is_bit_faithful(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "d.csv"
    recs = [DiagnosticsRecord(*r) for r in rows]
    write_series(path, recs, DiagnosticsRecord)
    back = read_series(path, DiagnosticsRecord)
    assert back == recs


def test_csv_writer_header_and_missing_columns(tmp_path):
    path = tmp_path / "x.csv"
    with CSVSeriesWriter(path, ["a", "b"]) as w:
        w(type("R", (), {"a": 1.0, "b": 0.1})())
    assert path.read_text() == "a,b\n1.0,0.1\n"
    with pytest.raises(ValueError, match="missing columns"):
        read_series(path, DiagnosticsRecord)


def test_write_xy(tmp_path):
    write_xy(tmp_path / "c.csv", ["z", "q"], np.array([1.0, 2.5]), np.array([3.0, math.pi]))
    assert (tmp_path / "c.csv").read_text() == f"z,q\n1.0,3.0\n2.5,{math.pi!r}\n"


def test_checkpoint_round_trip_and_layout(tmp_path, grid):
    p = params_from_ra_pr(1e4, 1.0, 2.0)
    s = initial_state(SimConfig(p, grid, ic=ICSpec(amplitude=0.3, alpha=0.2)))
    path = tmp_path / "s.ckpt"
    save_checkpoint(path, s, p)
    back, p2, header = load_checkpoint(path)
    assert p2 == p and header["n1"] == grid.n1 and header["version"] == 1
    assert all(np.array_equal(a, b) for a, b in zip(back.arrays, s.arrays))
    # modes are stored in ascending index order: the first u1 entry is (-n1/2, -n2/2)
    raw = path.read_bytes()
    body = raw[raw.index(b"\n") + 1 :]
    assert len(body) == 3 * 16 * grid.n1 * grid.n2
    u1 = np.frombuffer(body[: 16 * grid.n1 * grid.n2], dtype="<c16").reshape(grid.shape)
    assert u1[grid.n1 // 2, grid.n2 // 2] == s.u.u1.coeffs[0, 0]


def test_truncated_checkpoint_is_rejected(tmp_path, grid):
    p = params_from_ra_pr(1e4, 1.0, 2.0)
    s = initial_state(SimConfig(p, grid))
    path = tmp_path / "s.ckpt"
    save_checkpoint(path, s, p)
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(ValueError, match="truncated"):
        load_checkpoint(path)
