import json
from pathlib import Path

import numpy as np
import pytest

from hyperwave.errors import FieldFormatError
from hyperwave.grid import Grid
from hyperwave.inversion import IterateTrace
from hyperwave.io import HEADER, emit_report, load_field, read_header, save_field, write_csv

DATA = Path(__file__).parent / "data"


@pytest.mark.parametrize("d,n,m", [(1, 5, 4), (2, 3, 2), (3, 2, 2)])
def test_round_trip_bitwise(tmp_path, rng, d, n, m):
    g = Grid(d, n, 0.3, m)
    u = rng.standard_normal(g.field_shape)
    save_field(tmp_path / "f.hwf", u, g)
    v, hdr = load_field(tmp_path / "f.hwf", g)
    assert v.tobytes() == u.tobytes()
    assert (hdr.d, hdr.n, hdr.steps, hdr.components, hdr.T) == (d, n, m, d, 0.3)
    assert (tmp_path / "f.hwf").stat().st_size == 64 + 8 * u.size


def test_golden_file_little_endian():
    path = DATA / "golden_d1_n3_m2.hwf"
    raw = path.read_bytes()
    assert raw[:8] == b"HWFIELD1"
    assert raw[8:32] == bytes.fromhex("01000000" "01000000" "03000000" "02000000" "01000000" "00000000")
    assert raw[32:40] == bytes.fromhex("000000000000e03f")  # 0.5
    assert raw[40:64] == bytes(24)
    u, hdr = load_field(path, Grid(1, 3, 0.5, 2))
    assert hdr.shape == (3, 3, 1)
    expected = np.arange(3)[:, None, None] + 0.25 * np.arange(3)[None, :, None]
    assert np.array_equal(u, expected)
    assert raw[64 + 8 * 4:64 + 8 * 5] == bytes.fromhex("000000000000f43f")  # u[1, 1] = 1.25


def test_dimension_mismatch_names_expected_and_actual(tmp_path):
    g = Grid(1, 4, 1.0, 3)
    save_field(tmp_path / "f.hwf", np.zeros(g.field_shape), g)
    with pytest.raises(FieldFormatError, match="n: expected 5, got 4"):
        load_field(tmp_path / "f.hwf", Grid(1, 5, 1.0, 3))
    with pytest.raises(FieldFormatError, match="T: expected"):
        load_field(tmp_path / "f.hwf", Grid(1, 4, 2.0, 3))


def test_magic_mismatch(tmp_path):
    p = tmp_path / "bad.hwf"
    p.write_bytes(b"NOTFIELD" + bytes(56))
    with pytest.raises(FieldFormatError, match="magic"):
        read_header(p)


def test_truncated(tmp_path):
    g = Grid(1, 4, 1.0, 3)
    p = tmp_path / "f.hwf"
    save_field(p, np.ones(g.field_shape), g)
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(FieldFormatError, match="truncated"):
        load_field(p)
    p.write_bytes(b"HWFIELD1")
    with pytest.raises(FieldFormatError, match="truncated header"):
        load_field(p)


def test_header_layout():
    assert HEADER.size == 64


def test_empty_trace_report(tmp_path):
    files = emit_report(tmp_path, {"note": "empty"}, trace=IterateTrace())
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["iterations"] == 0
    assert report["summary"] == {"note": "empty"}
    assert (tmp_path / "trace.csv").read_text().strip() == ""
    assert len(files) == 2


def test_csv_deterministic(tmp_path):
    rows = [{"s": 0.1, "r": 1 / 3, "tags": [1, 2]}, {"s": 0.01, "extra": "x"}]
    write_csv(tmp_path / "a.csv", rows)
    write_csv(tmp_path / "b.csv", rows)
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert a.splitlines()[0] == b"s,r,tags,extra"
    assert b"0.3333333333333333" in a


def test_report_nan_and_numpy_values(tmp_path):
    emit_report(tmp_path, {"x": np.float64(np.nan), "v": np.arange(3), "flag": np.bool_(True)})
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["summary"] == {"x": "nan", "v": [0, 1, 2], "flag": True}


def test_svg_plots(tmp_path):
    tr = IterateTrace()
    for k in range(4):
        tr.record([1.0], 10.0 ** -k, 1.0, True)
    rows = [{"s": s, "remainder": s**2} for s in (0.1, 0.01)]
    files = emit_report(tmp_path, {}, {"taylor": rows}, trace=tr, plots=True)
    names = {f.name for f in files}
    assert {"misfit.svg", "taylor.svg"} <= names
    assert (tmp_path / "misfit.svg").read_text().lstrip().startswith("<?xml")
