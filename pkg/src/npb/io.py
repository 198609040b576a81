"""Time-series CSV and binary snapshot formats.

Snapshot layout (little-endian)::

    b"NPB1" | u32 version=1 | u32 n_per_dim | u32 N_species | f64 time |
    c_1 .. c_N, u_1, u_2, u_3, T   (each n^3 f64, x_1 fastest)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from npb.diagnostics import DiagnosticsRecord
from npb.errors import FormatError
from npb.state import SimState

MAGIC = b"NPB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")

SCALAR_COLUMNS = ("time", "entropy_E", "energy_calE", "dissipation_D", "temp_L2_dev", "u_L2",
                  "cancellation_residual", "ckp_margin", "min_T")


def timeseries_header(n_species):
    cols = list(SCALAR_COLUMNS)
    cols += [f"min_c_{i}" for i in range(1, n_species + 1)]
    cols += [f"conc_L1_dev_{i}" for i in range(1, n_species + 1)]
    return ",".join(cols)


def _fmt(x):
    return format(float(x), ".17g")


def write_timeseries(records, path, n_species=None):
    """Write records as CSV with 17-significant-digit floats and ``\\n`` line ends."""
    records = list(records)
    if n_species is None:
        n_species = len(records[0].min_c) if records else 0
    lines = [timeseries_header(n_species)]
    for r in records:
        vals = [getattr(r, c) for c in SCALAR_COLUMNS] + list(r.min_c) + list(r.conc_L1_dev)
        lines.append(",".join(_fmt(v) for v in vals))
    path = Path(path)
    try:
        path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write time series: {exc.strerror}", str(path)) from None


def read_timeseries(path):
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    n_species = sum(1 for h in header if h.startswith("min_c_"))
    records = []
    for line in text[1:]:
        vals = [float(x) for x in line.split(",")]
        k = len(SCALAR_COLUMNS)
        kw = dict(zip(SCALAR_COLUMNS, vals[:k]))
        kw["min_c"] = vals[k:k + n_species]
        kw["conc_L1_dev"] = vals[k + n_species:k + 2 * n_species]
        records.append(DiagnosticsRecord(**kw))
    return records


def _to_flat(f):
    # axis 0 is x_1, so Fortran order puts x_1 fastest
    return np.asarray(f, dtype="<f8").ravel(order="F")


def write_snapshot(state, path):
    n = state.T.shape[0]
    n_sp = state.c.shape[0]
    parts = [_HEADER.pack(MAGIC, VERSION, n, n_sp, float(state.time))]
    for f in list(state.c) + list(state.u) + [state.T]:
        parts.append(_to_flat(f).tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_snapshot(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, n, n_sp, time = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    n_fields = n_sp + 4
    expected = _HEADER.size + n_fields * n**3 * 8
    if len(data) != expected:
        raise FormatError(f"{path}: size {len(data)} does not match header (expected {expected})")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)
    fields = flat.reshape(n_fields, n**3)
    shaped = [f.reshape((n, n, n), order="F") for f in fields]
    return SimState(time=time, c=np.stack(shaped[:n_sp]), u=np.stack(shaped[n_sp:n_sp + 3]),
                    T=np.ascontiguousarray(shaped[-1]))


def snapshot_io(state, path, direction):
    """``direction="write"`` stores ``state``; ``"read"`` returns the stored state."""
    if direction == "write":
        write_snapshot(state, path)
        return None
    if direction == "read":
        return read_snapshot(path)
    raise ValueError("direction must be 'read' or 'write'")
