"""Trace file serialization.

Format: UTF-8 text, '#'-prefixed key=value metadata lines, then a CSV header
naming the columns, then one row per trace sample. Floats are written with
17 significant digits so parse(serialize(trace)) reproduces every float64
bit-exactly. No timestamps: a rerun with the same scenario and seed yields a
byte-identical file.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..hybrid_sim import SimTrace

__all__ = ["COLUMNS", "FORMAT_VERSION", "write_trace", "read_trace"]

COLUMNS = ("t", "j", "eta", "eps1", "eps2", "eps3", "q",
           "omega1", "omega2", "omega3", "tau1", "tau2", "tau3", "V", "mu")
_INT_COLUMNS = frozenset({"j", "q"})
FORMAT_VERSION = "synatt-trace-1"


def _fmt_meta(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, (tuple, list, np.ndarray)):
        return ",".join(_fmt_meta(v) for v in value)
    return str(value)


def _parse_meta(text: str):
    if text == "none":
        return None
    if "," in text:
        return tuple(_parse_meta(p) for p in text.split(","))
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def write_trace(path, trace: SimTrace, extra_meta: dict | None = None) -> Path:
    path = Path(path)
    meta = {"format": FORMAT_VERSION}
    meta.update(trace.meta)
    meta.update(extra_meta or {})
    lines = [f"# {k}={_fmt_meta(v)}" for k, v in meta.items()]
    lines.append(",".join(COLUMNS))

    t, j, quat = trace.t, trace.j, trace.quat
    q, omega, tau = trace.q, trace.omega, trace.tau
    V, mu = trace.V, trace.mu
    f = "%.17g"
    for i in range(len(trace)):
        row = (f % t[i], "%d" % j[i],
               f % quat[i, 0], f % quat[i, 1], f % quat[i, 2], f % quat[i, 3],
               "%d" % q[i],
               f % omega[i, 0], f % omega[i, 1], f % omega[i, 2],
               f % tau[i, 0], f % tau[i, 1], f % tau[i, 2],
               f % V[i], f % mu[i])
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_trace(path) -> SimTrace:
    path = Path(path)
    meta: dict = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, val = body.partition("=")
            meta[key.strip()] = _parse_meta(val.strip())
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected trace columns in {path}: {header}")
            continue
        rows.append(line.split(","))

    if header is None:
        raise ValueError(f"no column header found in {path}")

    meta.pop("format", None)
    trace = SimTrace(meta)
    prev_j = None
    for parts in rows:
        if len(parts) != len(COLUMNS):
            raise ValueError(f"malformed trace row in {path}: {parts!r}")
        vals = dict(zip(COLUMNS, parts))
        j = int(vals["j"])
        Q4 = np.array([float(vals["eta"]), float(vals["eps1"]),
                       float(vals["eps2"]), float(vals["eps3"])])
        omega = np.array([float(vals[c]) for c in ("omega1", "omega2", "omega3")])
        tau = np.array([float(vals[c]) for c in ("tau1", "tau2", "tau3")])
        trace.append(float(vals["t"]), j, Q4, int(vals["q"]), omega, tau,
                     float(vals["V"]), float(vals["mu"]))
        if prev_j is not None and j != prev_j:
            trace.jumps.append(len(trace) - 1)
        prev_j = j
    trace.termination = str(meta.get("termination", ""))
    return trace
