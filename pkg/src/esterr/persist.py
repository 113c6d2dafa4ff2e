"""Atomic, byte-reproducible output files for sweep results."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

SWEEP_COLUMNS = (
    "N", "T", "r", "n_samples", "q0_mean", "q0_std",
    "weight_std_mean", "zero_fraction_mean", "failures", "analytic_q0",
)


def fmt(x) -> str:
    """Round-trip formatting: integers verbatim, floats to 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sweep_csv(points) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for p in points:
        row = (p.n, p.t, p.r, p.n_samples, p.q0_mean, p.q0_std,
               p.weight_std_mean, p.zero_fraction_mean, p.failure_count, p.analytic_q0)
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def histogram_csv(point) -> str:
    lines = ["bin_lower,bin_upper,count"]
    for lo, hi, count in point.histogram:
        lines.append(f"{fmt(lo)},{fmt(hi)},{count}")
    return "\n".join(lines) + "\n"


def histogram_name(point) -> str:
    return f"hist_N{point.n}_T{point.t}.csv"


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def summary_dict(result, extra=None) -> dict:
    points = []
    for p in result.points:
        points.append({
            "N": p.n, "T": p.t, "r": p.r, "n_samples": p.n_samples,
            "q0_mean": p.q0_mean, "q0_std": p.q0_std,
            "weight_std_mean": p.weight_std_mean,
            "zero_fraction_mean": p.zero_fraction_mean,
            "analytic_q0": p.analytic_q0,
            "failures": p.failures,
            "failure_seeds": [str(s) for s in p.failure_seeds],
            "histogram_file": histogram_name(p),
        })
    out = {"spec": result.spec.to_dict(), "points": points, "run": result.metadata}
    if extra:
        out.update(extra)
    return _json_safe(out)


def write_json(path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n")


def write_result(result, out_dir, extra=None) -> list[Path]:
    """Write ``sweep.csv``, one histogram CSV per point and ``summary.json``."""
    out = Path(out_dir)
    written = [out / "sweep.csv"]
    atomic_write_text(written[0], sweep_csv(result.points))
    for p in result.points:
        path = out / histogram_name(p)
        atomic_write_text(path, histogram_csv(p))
        written.append(path)
    written.append(out / "summary.json")
    write_json(written[-1], summary_dict(result, extra))
    return written
