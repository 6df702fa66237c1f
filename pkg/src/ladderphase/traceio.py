"""Detector-trace serialisation.

CSV: optional ``# key = value`` metadata lines, a fixed header row
``time_s,v1_V,v2_V,control_on_flag``, then one row per sample with floats
written via repr so a read-back is bit identical.

Binary: little-endian throughout.  A 24-byte header of magic ``LDPH``,
format version (u32), sample count (u64) and sample period in integer
picoseconds (u64), followed by the start time as one f64 and the v1, v2 and
control-level arrays as f64 blocks.  Metadata is not stored in binary files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ArgumentError, TraceFormatError
from .interferometer import DetectorTrace

MAGIC = b"LDPH"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")          # magic, version, count, period_ps
_COLUMNS = "time_s,v1_V,v2_V,control_on_flag"


def write_trace_csv(trace: DetectorTrace, path) -> None:
    lines = []
    for key in sorted(trace.meta):
        value = trace.meta[key]
        text = repr(float(value)) if isinstance(value, (int, float)) else str(value)
        lines.append(f"# {key} = {text}")
    lines.append(_COLUMNS)
    times = trace.times
    for i in range(len(trace)):
        lines.append(f"{float(times[i])!r},{float(trace.v1[i])!r},"
                     f"{float(trace.v2[i])!r},{float(trace.control_level[i])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> DetectorTrace:
    meta: dict = {}
    rows = []
    header_seen = False
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                value = value.strip()
                try:
                    meta[key.strip()] = float(value)
                except ValueError:
                    meta[key.strip()] = value
            continue
        if not header_seen:
            if line != _COLUMNS:
                raise TraceFormatError(
                    f"line {lineno}: expected header '{_COLUMNS}'")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TraceFormatError(f"line {lineno}: expected 4 columns")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from exc
    if not header_seen:
        raise TraceFormatError("missing column header")
    if len(rows) < 2:
        raise TraceFormatError("trace must hold at least two samples")
    data = np.asarray(rows)
    times = data[:, 0]
    t0 = float(times[0])
    dt = float(times[1] - times[0])
    if not dt > 0:
        raise TraceFormatError("time column must be strictly increasing")
    if np.max(np.abs(times - (t0 + dt * np.arange(times.size)))) > 1e-6 * dt:
        raise TraceFormatError("time column is not uniformly sampled")
    return DetectorTrace(t0=t0, dt=dt, v1=data[:, 1], v2=data[:, 2],
                         control_level=data[:, 3], meta=meta)


def write_trace_bin(trace: DetectorTrace, path) -> None:
    period_ps = round(trace.dt * 1e12)
    if period_ps < 1 or abs(trace.dt * 1e12 - period_ps) > 1e-6 * trace.dt * 1e12:
        raise ArgumentError(
            "binary format stores the sample period as integer picoseconds")
    n = len(trace)
    blob = bytearray()
    blob += _HEADER.pack(MAGIC, VERSION, n, period_ps)
    blob += struct.pack("<d", trace.t0)
    for arr in (trace.v1, trace.v2, trace.control_level):
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def read_trace_bin(path) -> DetectorTrace:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TraceFormatError("file shorter than the 24-byte header", offset=0)
    magic, version, n, period_ps = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise TraceFormatError(f"unsupported format version {version}", offset=4)
    if n < 2:
        raise TraceFormatError("sample count must be at least 2", offset=8)
    if period_ps < 1:
        raise TraceFormatError("sample period must be positive", offset=16)
    need = _HEADER.size + 8 + 3 * 8 * n
    if len(data) < need:
        raise TraceFormatError(
            f"truncated payload, expected {need} bytes", offset=len(data))
    if len(data) > need:
        raise TraceFormatError("trailing bytes after payload", offset=need)
    (t0,) = struct.unpack_from("<d", data, _HEADER.size)
    off = _HEADER.size + 8
    arrays = []
    for _ in range(3):
        arrays.append(np.frombuffer(data, dtype="<f8", count=n, offset=off).copy())
        off += 8 * n
    return DetectorTrace(t0=t0, dt=period_ps * 1e-12, v1=arrays[0],
                         v2=arrays[1], control_level=arrays[2])


def read_trace(path) -> DetectorTrace:
    """Load a trace, sniffing binary by magic and falling back to CSV."""
    p = Path(path)
    with p.open("rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_trace_bin(p)
    return read_trace_csv(p)
