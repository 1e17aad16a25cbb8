# catalog.py
"""
Built-in metrics and the facts known about them.

Every entry is defined by coefficient expressions (see expr.py), so partial
derivatives are exact. Facts live as data in facts.toml next to this file;
their values may be expressions in the entry parameters (e.g. "(rho-1)^2")
and check_facts runs each of them against the analysis modules.

Outputs: CatalogEntry (lookup), the listing used by `main.py list`, FactResult.
"""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadParam, ExpressionError, GeodesicError, UnknownMetric
from .expr import compile_expression, evaluate_constant
from .metric import MetricField, PointKind, Symmetry, classify_parabolic, signature_at

log = logging.getLogger(__name__)

# ---- CONFIG ----
FACTS_FILE = Path(__file__).with_name("facts.toml")
FACT_TOL = 1e-6
PI = math.pi


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    metric: MetricField
    params: dict = field(default_factory=dict)
    facts: tuple = ()
    description: str = ""


@dataclass(frozen=True)
class FactResult:
    kind: str
    passed: bool
    detail: str


# ----------------------------
# Metrics from expressions
# ----------------------------
def _partials(e):
    dx, dy = e.derivative("x"), e.derivative("y")
    return lambda x, y: (dx(x, y), dy(x, y))


def metric_from_expressions(a, b, c, params=None, name="custom", symmetry=None, **extra):
    """
    MetricField from coefficient texts. Partials come from sympy; the metric is
    y-only when no coefficient mentions x (unless `symmetry` says otherwise).
    """
    exprs = [compile_expression(str(t), params) for t in (a, b, c)]
    if symmetry is None:
        symmetry = Symmetry.GENERAL if any(e.depends_on("x") for e in exprs) else Symmetry.Y_ONLY
    return MetricField(a=exprs[0], b=exprs[1], c=exprs[2],
                       da=_partials(exprs[0]), db=_partials(exprs[1]), dc=_partials(exprs[2]),
                       symmetry=Symmetry(symmetry), name=name, **extra)


def _klein_like(name, v, w, kind, params=None):
    if kind == "klein":
        a, c = f"({v})/y^2", f"({w})/y^2"
    else:
        a, c = f"({v})/y^2", f"({w})"
    return metric_from_expressions(a, "0", c, params, name=name, singular_lines=(0.0,),
                                   singular_kind=kind, labels=((0.0, "A"),))


# ----------------------------
# Entries
# ----------------------------
def _flat(params):
    return metric_from_expressions("1", "0", "1", name="flat")


def _minkowski(params):
    return metric_from_expressions("1", "0", "-1", name="minkowski")


def _ex21(params):
    return metric_from_expressions("1", "0", "y", name="ex21")


def _ex22(params):
    return metric_from_expressions("1", "0", "-y", name="ex22")


def _klein(params):
    return _klein_like("klein", "1", "1", "klein")


def _sphere(params):
    return metric_from_expressions(
        "1 + sin(y)", "0", "-sin(y)", name="sphere", domain=(-PI / 2, 3 * PI / 2),
        labels=((0.0, "C_N"), (PI, "C_S"), (PI / 2, "E")))


def _torus(params):
    rho = params["rho"]
    if rho <= 1.0:
        raise BadParam(f"torus needs rho > 1, got {rho}")
    labels = ((PI / 4, "C_N+"), (3 * PI / 4, "C_N-"), (5 * PI / 4, "C_S-"),
              (-PI / 4, "C_S+"), (0.0, "E+"), (PI, "E-"))
    return metric_from_expressions("(rho + cos(y))^2", "0", "-cos(2*y)", {"rho": rho},
                                   name="torus", period=2 * PI, labels=labels)


def _klein_type(params):
    return _klein_like("klein_type", params["v"], params["w"], "klein")


def _grushin_type(params):
    return _klein_like("grushin_type", params["v"], params["w"], "grushin")


def _ex34(params):
    return _klein_like("ex34", "1 + y^4", "1", "klein")


# name -> (builder, default params, description)
REGISTRY = {
    "flat": (_flat, {}, "dx^2 + dy^2"),
    "minkowski": (_minkowski, {}, "dx^2 - dy^2"),
    "ex21": (_ex21, {}, "dx^2 + y dy^2, parabolic line y=0"),
    "ex22": (_ex22, {}, "dx^2 - y dy^2, parabolic line y=0"),
    "klein": (_klein, {}, "(dx^2 + dy^2) / y^2"),
    "sphere": (_sphere, {}, "(1 + sin y) dx^2 - sin y dy^2"),
    "torus": (_torus, {"rho": 2.0}, "(rho + cos y)^2 dx^2 - cos 2y dy^2"),
    "klein_type": (_klein_type, {"v": "1", "w": "1"}, "(v dx^2 + w dy^2) / y^2"),
    "grushin_type": (_grushin_type, {"v": "1", "w": "1"}, "v dx^2 / y^2 + w dy^2"),
    "ex34": (_ex34, {}, "((1 + y^4) dx^2 + dy^2) / y^2"),
}


def _coerce(name, defaults, params):
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise BadParam(f"{name} has no parameter {key!r}")
        if isinstance(defaults[key], str):
            merged[key] = str(value)
        else:
            try:
                merged[key] = evaluate_constant(value)
            except ExpressionError as exc:
                raise BadParam(f"{name}: {key}={value!r} is not a number") from exc
    return merged


def lookup(name, params=None):
    if name not in REGISTRY:
        raise UnknownMetric(f"unknown metric {name!r}; try one of {', '.join(REGISTRY)}")
    builder, defaults, description = REGISTRY[name]
    merged = _coerce(name, defaults, params)
    metric = builder(merged)
    return CatalogEntry(name=name, metric=metric, params=merged,
                        facts=tuple(load_facts().get(name, ())), description=description)


def list_entries():
    """[(schema, description)] such as ("torus(rho)", ...)."""
    out = []
    for name, (_, defaults, description) in REGISTRY.items():
        schema = f"{name}({', '.join(defaults)})" if defaults else name
        out.append((schema, description))
    return out


def parse_metric_ref(ref):
    """'torus:rho=3' -> ('torus', {'rho': '3'})."""
    name, _, rest = ref.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise BadParam(f"bad parameter {item!r} in {ref!r}, expected key=value")
        params[key.strip()] = value.strip()
    return name.strip(), params


# ----------------------------
# Facts
# ----------------------------
def load_facts(path=FACTS_FILE):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _num(value, params):
    if isinstance(value, str) and value.strip() in ("inf", "-inf"):
        return math.inf if value.strip() == "inf" else -math.inf
    return evaluate_constant(value, {k: v for k, v in params.items() if not isinstance(v, str)})


def _close(x, y, tol=FACT_TOL):
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol * max(1.0, abs(y))


def _check_signature(entry, fact, p):
    point = tuple(_num(v, p) for v in fact["point"])
    kind = signature_at(entry.metric, point).kind
    return kind == PointKind(fact["expect"]), f"{point}: {kind.value}"


def _check_parabolic_line(entry, fact, p):
    y = _num(fact["y"], p)
    pc = classify_parabolic(entry.metric, (0.0, y))
    return bool(pc.transverse), f"y={y:.6g} transverse={pc.transverse}"


def _check_horizontal(entry, fact, p):
    from .symmetry import horizontal_geodesics

    y, h2 = _num(fact["y"], p), _num(fact["h2"], p)
    found = horizontal_geodesics(entry.metric)
    ok = any(_close(g.y, y) and _close(g.h2, h2) for g in found)
    return ok, f"found {[(round(g.y, 6), round(g.h2, 6)) for g in found]}"


def _check_admissible(entry, fact, p):
    from .lift import admissible_directions

    point = tuple(_num(v, p) for v in fact["point"])
    adm = admissible_directions(entry.metric, point)
    got = sorted(d.direction.p for d in adm.directions)
    want = sorted(_num(v, p) for v in fact["slopes"])
    ok = adm.count == fact["count"] and len(got) == len(want) and all(map(_close, got, want))
    return ok, f"{adm.count} directions {got}"


def _check_classification(entry, fact, p):
    from .symmetry import classify_family

    table = classify_family(entry.metric, _num(fact["y0"], p), fact.get("side", "auto"))
    if fact["kind"] == "class_count":
        return len(table) == fact["count"], f"{len(table)} classes"
    want = sorted(_num(v, p) for v in fact["values"])
    got = table.boundaries
    ok = len(got) == len(want) and all(_close(g, w) for g, w in zip(got, want))
    return ok, f"boundaries {got}"


def _shot_or_state(entry, fact, p):
    from .flow import PhaseState, integrate_natural

    x, y, vx, vy = (_num(v, p) for v in fact["start"])
    t0 = _num(fact.get("t0", 0.0), p)
    return integrate_natural(entry.metric, PhaseState(x, y, vx, vy, t0), _num(fact["t_end"], p))


def _check_closed_form(entry, fact, p):
    path = _shot_or_state(entry, fact, p)
    worst = 0.0
    for t, x, y in zip(path.t, path.x, path.y):
        xe = evaluate_constant(fact["x"], {"t": t})
        ye = evaluate_constant(fact["y"], {"t": t})
        worst = max(worst, abs(x - xe) / max(1.0, abs(xe)), abs(y - ye) / max(1.0, abs(ye)))
    return worst <= fact.get("tol", 1e-5), f"max relative error {worst:.3e}"


def _check_circle(entry, fact, p):
    path = _shot_or_state(entry, fact, p)
    cx, cy = (_num(v, p) for v in fact["center"])
    r = _num(fact["radius"], p)
    worst = float(np.max(np.abs(np.hypot(path.x - cx, path.y - cy) - r)))
    return worst <= fact.get("tol", 1e-6), f"max radial error {worst:.3e}"


def _check_finite_time(entry, fact, p):
    from .flow import finite_time_check, shoot_from_singular_line

    q0 = (0.0, _num(fact.get("y0", 0.0), p))
    path = shoot_from_singular_line(entry.metric, q0, _num(fact["alpha"], p), "plus",
                                    t_max=_num(fact.get("t_max", 10.0), p))
    check = finite_time_check(path, q0)
    return check.finite == fact["expect"], f"finite={check.finite} ratio={check.ratio:.3f}"


def _check_launch_map(entry, fact, p):
    from .flow import shoot_from_singular_line
    from .symmetry import energy_of_state, h_of_launch

    m = entry.metric
    alpha, want = _num(fact["alpha"], p), _num(fact["h2"], p)
    level = h_of_launch(m, 0.0, alpha, m.singular_kind)
    path = shoot_from_singular_line(m, (0.0, 0.0), alpha, "plus", t_max=fact.get("t_max", 1.0))
    drift = max(abs(energy_of_state(m, s) - want) / want for s in path.samples)
    ok = _close(level.h2, want) and drift <= fact.get("tol", 1e-4)
    return ok, f"h2={level.h2:.6g}, max relative deviation along the shot {drift:.2e}"


CHECKS = {
    "signature": _check_signature,
    "parabolic_line": _check_parabolic_line,
    "horizontal_geodesic": _check_horizontal,
    "admissible": _check_admissible,
    "class_boundaries": _check_classification,
    "class_count": _check_classification,
    "closed_form": _check_closed_form,
    "circle": _check_circle,
    "finite_time": _check_finite_time,
    "launch_map": _check_launch_map,
}


def check_fact(entry, fact):
    kind = fact["kind"]
    if kind not in CHECKS:
        return FactResult(kind, False, f"unknown fact kind {kind!r}")
    try:
        passed, detail = CHECKS[kind](entry, fact, entry.params)
    except GeodesicError as exc:
        return FactResult(kind, False, f"{type(exc).__name__}: {exc}")
    if not passed:
        log.warning("fact %s of %s failed: %s", kind, entry.name, detail)
    return FactResult(kind, bool(passed), detail)


def check_facts(entry):
    return [check_fact(entry, fact) for fact in entry.facts]
