"""CSV and JSON serialization of reports, fixed at 12 significant digits."""

import dataclasses
import json
import math

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.12g"


def round12(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(FLOAT_FORMAT % x)


def _jsonable(value):
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round12(value)
    return value


def to_json(report):
    return json.dumps(_jsonable(report), indent=2) + "\n"


def to_csv(frame):
    return frame.to_csv(float_format=FLOAT_FORMAT, index=False, lineterminator="\n")


def _gap_record(report):
    return {
        "value": report.value,
        "lower": report.lower_bound,
        "upper": report.upper_bound,
        "applicable": "true" if report.bounds_applicable else "false",
        "status": report.status,
    }


def curve_frame(rows):
    """(p, GapReport) rows as p,value,lower,upper,applicable,status."""
    return pd.DataFrame([{"p": p, **_gap_record(r)} for p, r in rows],
                        columns=["p", "value", "lower", "upper", "applicable", "status"])


def surface_frame(rows):
    """(p, z, GapReport) rows as p,z,value,lower,upper,applicable,status."""
    return pd.DataFrame([{"p": p, "z": z, **_gap_record(r)} for p, z, r in rows],
                        columns=["p", "z", "value", "lower", "upper", "applicable", "status"])


def table_frame(rows, value_name):
    """(n, value) rows from the Monte Carlo harnesses."""
    return pd.DataFrame(list(rows), columns=["n", value_name])


def replication_frame(rows):
    return pd.DataFrame([dataclasses.asdict(r) for r in rows],
                        columns=["rep", "estimate", "ci_low", "ci_high", "covered"])


def record_frame(report):
    """A single report as a one-row frame; tuple fields are joined with '; '."""
    record = {}
    for f in dataclasses.fields(report):
        value = getattr(report, f.name)
        if isinstance(value, tuple):
            if value and dataclasses.is_dataclass(value[0]):
                continue
            value = "; ".join(str(v) for v in value)
        record[f.name] = value
    return pd.DataFrame([record])


def emit(text, out=None, stream=None):
    """Write text to the out path, or to stream (stdout) when out is None."""
    if out is None:
        stream.write(text)
        return None
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return out
