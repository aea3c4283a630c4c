"""Field files, CSV tables and JSON reports.

Field file layout (all little-endian)::

    offset  size  content
    0       8     magic b"HWFIELD1"
    8       4     version (u32, currently 1)
    12      4     d (u32)
    16      4     n (u32)
    20      4     steps m (u32); the payload holds m + 1 levels
    24      4     components (u32)
    28      4     reserved (u32, zero)
    32      8     T (f64)
    40      24    reserved (zero)
    64      ...   float64 payload, C order, shape (m + 1, n, ..., n, components)
"""

import csv
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FieldFormatError

__all__ = [
    "MAGIC",
    "HEADER",
    "FieldHeader",
    "save_field",
    "load_field",
    "read_header",
    "write_csv",
    "emit_report",
]

MAGIC = b"HWFIELD1"
VERSION = 1
HEADER = struct.Struct("<8s6Id24x")
assert HEADER.size == 64


class FieldHeader:
    __slots__ = ("d", "n", "steps", "components", "T")

    def __init__(self, d, n, steps, components, T):
        self.d, self.n, self.steps, self.components, self.T = int(d), int(n), int(steps), int(components), float(T)

    @property
    def shape(self):
        return (self.steps + 1,) + (self.n,) * self.d + (self.components,)

    def __repr__(self):
        return f"FieldHeader(d={self.d}, n={self.n}, steps={self.steps}, components={self.components}, T={self.T})"


def save_field(path, u, grid):
    """Write a space-time field defined on ``grid``."""
    u = grid.check_field(u, "field")
    hdr = HEADER.pack(MAGIC, VERSION, grid.d, grid.n, grid.m, u.shape[-1], 0, float(grid.T))
    with open(path, "wb") as fh:
        fh.write(hdr)
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_header(path):
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise FieldFormatError(f"{path}: truncated header ({len(raw)} of {HEADER.size} bytes)")
    magic, version, d, n, steps, comps, _, T = HEADER.unpack(raw)
    if magic != MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    return FieldHeader(d, n, steps, comps, T)


def load_field(path, grid=None):
    """Read a field; if ``grid`` is given the header must match it.

    Returns ``(u, header)``.
    """
    hdr = read_header(path)
    if grid is not None:
        expected = {"d": grid.d, "n": grid.n, "steps": grid.m, "components": grid.d}
        for key, want in expected.items():
            got = getattr(hdr, key)
            if got != want:
                raise FieldFormatError(f"{path}: dimension mismatch in {key}: expected {want}, got {got}")
        if not np.isclose(hdr.T, grid.T, rtol=1e-14, atol=0):
            raise FieldFormatError(f"{path}: dimension mismatch in T: expected {grid.T}, got {hdr.T}")
    count = int(np.prod(hdr.shape))
    size = os.path.getsize(path) - HEADER.size
    if size != 8 * count:
        raise FieldFormatError(f"{path}: payload has {size} bytes, expected {8 * count} (truncated or padded)")
    data = np.fromfile(path, dtype="<f8", offset=HEADER.size, count=count)
    return data.reshape(hdr.shape).astype(np.float64, copy=False), hdr


def write_csv(path, rows):
    """Write a list of flat dicts; nested values are JSON-encoded."""
    rows = list(rows)
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k, "")) for k in keys})


def _cell(v):
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_jsonable(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def _plot_svg(path, xs, ys, xlabel, ylabel, loglog):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(xs, ys, "o-")
    if loglog:
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_report(path, summary=None, tables=None, trace=None, plots=False):
    """Write ``report.json`` plus one CSV per table into directory ``path``.

    ``summary`` is any JSON-compatible mapping, ``tables`` maps names to
    lists of row dicts and ``trace`` is an :class:`~hyperwave.inversion.IterateTrace`.
    With ``plots=True`` the misfit curve and Taylor tables are also drawn as SVG.
    Returns the list of written files.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    tables = dict(tables or {})
    written = []
    report = {"summary": _jsonable(summary or {}), "tables": sorted(tables)}
    if trace is not None:
        report["trace"] = _jsonable(trace.to_dict())
        report["iterations"] = max(len(trace) - 1, 0)
        tables.setdefault("trace", [
            {"iteration": i, "residual": r, "grad_norm": g, "admissible": a, "alpha": al}
            for i, (al, r, g, a) in enumerate(zip(trace.alpha, trace.residual, trace.grad_norm, trace.admissible))
        ])
        report["tables"] = sorted(tables)
    for name, rows in tables.items():
        f = out / f"{name}.csv"
        write_csv(f, rows)
        written.append(f)
    f = out / "report.json"
    f.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    written.append(f)
    if plots:
        if trace is not None and len(trace):
            f = out / "misfit.svg"
            _plot_svg(f, range(len(trace)), trace.residual, "iteration", "residual", False)
            written.append(f)
        for name, rows in tables.items():
            if name.startswith("taylor") and rows and "remainder" in rows[0]:
                f = out / f"{name}.svg"
                _plot_svg(f, [r["s"] for r in rows], [r["remainder"] for r in rows], "s", "remainder", True)
                written.append(f)
    return written
