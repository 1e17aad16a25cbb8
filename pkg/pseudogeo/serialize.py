# serialize.py
"""
JSON and CSV emitters for paths, jets, admissible sets and classification tables.

Paths on periodic metrics also carry y_mod, the ordinate within one period.
Non-finite floats are written as the strings "inf", "-inf" and "nan" so the
output stays strict JSON. Keys are sorted and arrays keep sample order, so
identical inputs give byte-identical files.
"""

import json
import math

import numpy as np
import pandas as pd

from .flow import GeodesicPath, StopReason
from .lift import JetPath
from .metric import CurveType

PATH_COLUMNS = ["t", "x", "y", "vx", "vy"]


def _enc(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dec(v):
    return float(v) if isinstance(v, str) else v


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# ----------------------------
# Geodesic paths
# ----------------------------
def path_to_frame(path, period=None):
    df = pd.DataFrame({k: np.asarray(getattr(path, k), dtype=float) for k in PATH_COLUMNS})
    if path.sigma is not None:
        df["sigma"] = path.sigma
    period = period if period is not None else path.period
    if period is not None:
        # raw y stays; y_mod is y within one period starting at -period/4
        df["y_mod"] = -period / 4.0 + np.mod(df["y"] + period / 4.0, period)
    return df


def path_to_dict(path, metric=None):
    df = path_to_frame(path)
    return {
        "metric": metric,
        "stop_reason": path.stop_reason.value,
        "type": path.type_tag.value,
        "period": None if path.period is None else _enc(path.period),
        "samples": [{k: _enc(v) for k, v in row.items()} for row in df.to_dict("records")],
    }


def path_to_json(path, metric=None):
    return dumps(path_to_dict(path, metric))


def path_from_json(text):
    doc = json.loads(text)
    df = pd.DataFrame(doc["samples"]).map(_dec)
    return GeodesicPath(
        t=df["t"].to_numpy(float), x=df["x"].to_numpy(float), y=df["y"].to_numpy(float),
        vx=df["vx"].to_numpy(float), vy=df["vy"].to_numpy(float),
        stop_reason=StopReason(doc["stop_reason"]), type_tag=CurveType(doc["type"]),
        sigma=df["sigma"].to_numpy(float) if "sigma" in df else None,
        period=None if doc.get("period") is None else _dec(doc["period"]),
    )


# ----------------------------
# Jets and admissible directions
# ----------------------------
def jet_path_to_dict(jet):
    return {
        "stop": jet.stop,
        "samples": [{"s": _enc(s), "x": _enc(x), "y": _enc(y), "p_or_q": _enc(w), "chart": str(c)}
                    for s, x, y, w, c in zip(jet.s, jet.x, jet.y, jet.value, jet.chart)],
    }


def jet_path_from_dict(doc):
    rows = doc["samples"]
    return JetPath(s=np.array([_dec(r["s"]) for r in rows]), x=np.array([_dec(r["x"]) for r in rows]),
                   y=np.array([_dec(r["y"]) for r in rows]),
                   value=np.array([_dec(r["p_or_q"]) for r in rows]),
                   chart=np.array([r["chart"] for r in rows]), stop=doc.get("stop", "finished"))


def _direction_entry(d):
    return {"p": str(d.direction), "chart": d.direction.chart, "value": _enc(d.direction.value),
            "multiplicity": d.multiplicity, "kind": d.kind}


def admissible_to_dict(adm, metric=None):
    return {
        "metric": metric,
        "point": [_enc(v) for v in adm.q0],
        "mu": [_enc(v) for v in adm.mu],
        "count": adm.count,
        "degenerate": adm.degenerate,
        "directions": [_direction_entry(d) for d in adm.directions],
        "degenerate_roots": [_direction_entry(d) for d in adm.degenerate_roots],
    }


# ----------------------------
# Classification tables
# ----------------------------
CLASS_COLUMNS = ["type", "h2_range", "h2_lo", "h2_hi", "endpoint_1", "endpoint_2",
                 "description", "case_plus", "case_minus", "alpha", "launch_y", "status"]


def classification_frame(table):
    rows = []
    for r in table.rows:
        rows.append({
            "type": r.type.value,
            "h2_range": r.h2_range,
            "h2_lo": r.lo,
            "h2_hi": r.hi,
            "endpoint_1": r.endpoint_1,
            "endpoint_2": r.endpoint_2,
            "description": r.description,
            "case_plus": r.case_plus.value if r.case_plus else "",
            "case_minus": r.case_minus.value if r.case_minus else "",
            "alpha": r.alpha,
            "launch_y": r.launch_y,
            "status": r.status,
        })
    return pd.DataFrame(rows, columns=CLASS_COLUMNS)


def classification_to_dict(table):
    df = classification_frame(table)
    records = []
    for row in df.to_dict("records"):
        records.append({k: _enc(v) if isinstance(v, float) else v for k, v in row.items()})
    return {"metric": table.metric, "y0": _enc(table.y0), "side": table.side_spec,
            "boundaries": [_enc(b) for b in table.boundaries], "classes": records}


def classification_to_csv(table, out):
    classification_frame(table).to_csv(out, index=False)
