import csv
import json
import math
import os

import numpy as np

CSV_VERSION = "fraclap-csv v1"
PRECISION = 12


def to_plain(value):
    """JSON-ready copy with floats rounded to 1e-12 so repeated runs give identical bytes"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        x = float(value)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return round(x, PRECISION) + 0.0
    if hasattr(value, "as_dict"):
        return to_plain(value.as_dict())
    return value


def build_report(kind, cfg, payload, status):
    return {
        "kind": kind,
        "status": status,
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "result": payload,
    }


def write_json(path, report):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_plain(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path, schema, columns, rows):
    """RFC-4180 CSV with a versioned header comment line"""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {CSV_VERSION} {schema}\r\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(round(float(v), PRECISION))
    return v


def field_rows(field, flag=None):
    """(columns, rows) for a Field: node coordinates, value, flag"""
    nodes = field.grid.nodes()
    values = field.values.ravel()
    if flag is None:
        flag = np.zeros(len(values), dtype=int)
    flag = np.asarray(flag).ravel()
    columns = [f"x{k}" for k in range(nodes.shape[1])] + ["value", "flag"]
    rows = [list(x) + [v, int(f)] for x, v, f in zip(nodes, values, flag)]
    return columns, rows


def boundary_rows(report):
    columns = ["point", "normal", "value", "fit_residual", "flagged", "ok"]
    rows = []
    for smp in report["samples"]:
        rows.append([" ".join(repr(round(c, PRECISION)) for c in smp["point"]),
                     " ".join(repr(round(c, PRECISION)) for c in smp["normal"]),
                     smp["value"], smp["fit_residual"], int(smp["flagged"]), int(smp["ok"])])
    return columns, rows


def summary_line(kind, status, **values):
    """Machine-readable one-line summary for stdout"""
    return json.dumps({"kind": kind, "status": status, **to_plain(values)}, sort_keys=True)


def payload_line(payload):
    """Result dict as one JSON line, same rounding as the reports"""
    return json.dumps(to_plain(payload), sort_keys=True)
