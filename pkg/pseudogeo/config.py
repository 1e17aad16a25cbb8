# config.py
"""
Metric definitions from TOML files.

Either a built-in with parameters:

    builtin = "torus"
    [params]
    rho = 3

or coefficient expressions (a, b, c; or v, w with type = "klein_type" |
"grushin_type") plus optional name, params, domain, period,
singular_lines, singular_kind, symmetry and labels. Numeric fields accept
expressions such as "3*pi/2".
"""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .catalog import CatalogEntry, lookup, metric_from_expressions
from .errors import ConfigError, GeodesicError
from .expr import evaluate_constant

log = logging.getLogger(__name__)

# ---- CONFIG ----
KNOWN_KEYS = {
    "builtin", "name", "params", "a", "b", "c", "v", "w", "type", "domain", "period",
    "singular_lines", "singular_kind", "symmetry", "labels",
}
TYPES = ("klein_type", "grushin_type")


def _number(value, params, what):
    if isinstance(value, str) and value.strip().lstrip("+-") == "inf":
        return -math.inf if value.strip().startswith("-") else math.inf
    try:
        return evaluate_constant(value, params)
    except GeodesicError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def metric_from_config(data, source="<config>"):
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown keys {', '.join(unknown)}")
    params = dict(data.get("params", {}))

    if "builtin" in data:
        try:
            return lookup(data["builtin"], params)
        except GeodesicError as exc:
            raise ConfigError(f"{source}: {exc}") from exc

    numeric = {k: _number(v, {}, f"params.{k}") for k, v in params.items()}
    name = data.get("name", "custom")
    kind = data.get("type")
    extra = {}
    if kind is not None:
        if kind not in TYPES:
            raise ConfigError(f"{source}: type must be one of {TYPES}, got {kind!r}")
        v, w = data.get("v", "1"), data.get("w", "1")
        a, b = f"({v})/y^2", "0"
        c = f"({w})/y^2" if kind == "klein_type" else f"({w})"
        extra.update(singular_lines=(0.0,), singular_kind="klein" if kind == "klein_type" else "grushin")
    else:
        missing = [k for k in ("a", "b", "c") if k not in data]
        if missing:
            raise ConfigError(f"{source}: missing coefficient(s) {', '.join(missing)}")
        a, b, c = data["a"], data["b"], data["c"]

    if "domain" in data:
        lo, hi = (_number(v, numeric, "domain") for v in data["domain"])
        if not lo < hi:
            raise ConfigError(f"{source}: empty domain ({lo}, {hi})")
        extra["domain"] = (lo, hi)
    if "period" in data:
        extra["period"] = _number(data["period"], numeric, "period")
    if "singular_lines" in data:
        extra["singular_lines"] = tuple(_number(v, numeric, "singular_lines")
                                        for v in data["singular_lines"])
    if "singular_kind" in data:
        extra["singular_kind"] = data["singular_kind"]
    if "labels" in data:
        extra["labels"] = tuple((_number(y, numeric, "labels"), str(label))
                                for y, label in data["labels"])
    try:
        metric = metric_from_expressions(a, b, c, numeric, name=name,
                                         symmetry=data.get("symmetry"), **extra)
    except (GeodesicError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    log.info("loaded metric %s from %s (%s)", name, source, metric.symmetry.value)
    return CatalogEntry(name=name, metric=metric, params=numeric)


def load_metric_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return metric_from_config(data, str(path))
