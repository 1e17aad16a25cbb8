# metric.py
"""
Metric core: the quadratic form ds^2 = a dx^2 + 2b dx dy + c dy^2 on a strip
w- < y < w+ of the plane, its pointwise algebra (discriminant, signature,
isotropic directions, Christoffel symbols) and the parabolic-point tests.

Coefficients are plain callables f(x, y) that accept floats or numpy arrays.
Partial derivatives are optional; without them central differences are used.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateMetric, NotParabolic

log = logging.getLogger(__name__)

# ---- CONFIG ----
EPS_DELTA = 1e-10          # |delta| threshold for parabolic points, relative to scale^2
MARGINAL_FACTOR = 100.0    # |delta| within this factor of the threshold is "marginal"
EPS_TRANSVERSE = 1e-8      # genericity thresholds of classify_parabolic
EPS_L = 1e-8               # isotropy of a curve, relative to (|a|+2|b|+|c|)*|v|^2
FD_STEP = 1e-6             # central-difference step, times max(1, |coordinate|)


class Symmetry(str, Enum):
    GENERAL = "general"
    Y_ONLY = "y-only"


class PointKind(str, Enum):
    RIEMANNIAN = "Riemannian"
    LORENTZIAN = "Lorentzian"
    PARABOLIC = "Parabolic"


class CurveType(str, Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    ISOTROPIC = "isotropic"
    MIXED = "mixed"


# ----------------------------
# Projective directions
# ----------------------------
@dataclass(frozen=True)
class Direction:
    """
    A tangential direction dy:dx. Stored as p = dy/dx in the affine chart
    while |p| <= 1, otherwise as q = 1/p in the inverted chart, so p = inf
    is the regular point q = 0.
    """

    chart: str
    value: float

    @classmethod
    def from_slope(cls, p):
        p = float(p)
        if math.isinf(p):
            return cls("inverted", 0.0)
        if abs(p) > 1.0:
            return cls("inverted", 1.0 / p)
        return cls("affine", p)

    @classmethod
    def from_vector(cls, dx, dy):
        if abs(dy) > abs(dx):
            return cls("inverted", dx / dy)
        if dx == 0.0:
            raise ValueError("zero vector has no direction")
        return cls("affine", dy / dx)

    @property
    def p(self):
        if self.chart == "affine":
            return self.value
        return math.inf if self.value == 0.0 else 1.0 / self.value

    @property
    def q(self):
        if self.chart == "inverted":
            return self.value
        return math.inf if self.value == 0.0 else 1.0 / self.value

    @property
    def is_infinite(self):
        return self.chart == "inverted" and self.value == 0.0

    def vector(self):
        """Unit (dx, dy) along the direction (sign is arbitrary)."""
        dx, dy = (1.0, self.value) if self.chart == "affine" else (self.value, 1.0)
        n = math.hypot(dx, dy)
        return dx / n, dy / n

    def __str__(self):
        return "inf" if self.is_infinite else f"{self.p:.12g}"


# ----------------------------
# Metric field
# ----------------------------
def constant(value):
    """Coefficient handle returning `value` broadcast to the shape of (x, y)."""
    value = float(value)

    def f(x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.full(shape, value) if shape else value

    return f


@dataclass(frozen=True)
class MetricField:
    a: Callable
    b: Callable
    c: Callable
    da: Optional[Callable] = None
    db: Optional[Callable] = None
    dc: Optional[Callable] = None
    symmetry: Symmetry = Symmetry.GENERAL
    domain: tuple = (-math.inf, math.inf)
    singular_lines: tuple = ()
    singular_kind: Optional[str] = None
    period: Optional[float] = None
    labels: tuple = ()
    name: str = "custom"

    def coefficients(self, x, y):
        return self.a(x, y), self.b(x, y), self.c(x, y)

    def partials(self, x, y):
        """((a_x, a_y), (b_x, b_y), (c_x, c_y)) at (x, y)."""
        out = []
        for f, df in ((self.a, self.da), (self.b, self.db), (self.c, self.dc)):
            out.append(df(x, y) if df is not None else self._fd(f, x, y))
        return tuple(out)

    def _fd(self, f, x, y):
        hy = FD_STEP * np.maximum(1.0, np.abs(y))
        fy = (f(x, y + hy) - f(x, y - hy)) / (2.0 * hy)
        if self.symmetry == Symmetry.Y_ONLY:
            fx = 0.0 * fy
        else:
            hx = FD_STEP * np.maximum(1.0, np.abs(x))
            fx = (f(x + hx, y) - f(x - hx, y)) / (2.0 * hx)
        return fx, fy

    @property
    def has_partials(self):
        return None not in (self.da, self.db, self.dc)

    def without_partials(self):
        return replace(self, da=None, db=None, dc=None)

    def contains(self, y):
        lo, hi = self.domain
        if not (lo < y < hi):
            return False
        return all(y != s for s in self.singular_lines)

    def label_for(self, y, tol=1e-9):
        for y_label, name in self.labels:
            d = y - y_label
            if self.period is not None:
                d = (d + self.period / 2.0) % self.period - self.period / 2.0
            if abs(d) <= tol * max(1.0, abs(y_label)):
                return name
        return None

    def line_name(self, y):
        name = self.label_for(y)
        return name if name is not None else f"y={y:.6g}"


@dataclass(frozen=True)
class PointClass:
    kind: PointKind
    transverse: Optional[bool]
    isotropic_dirs: tuple
    delta: float = 0.0
    scale: float = 1.0
    marginal: bool = False
    grad_delta: Optional[tuple] = None
    transversality: Optional[float] = None


@dataclass(frozen=True)
class Christoffel:
    """Gamma^k_ij with k the upper index: g112 is Gamma^1_12."""

    g111: float
    g112: float
    g122: float
    g211: float
    g212: float
    g222: float

    def acceleration(self, vx, vy):
        ax = -(self.g111 * vx * vx + 2.0 * self.g112 * vx * vy + self.g122 * vy * vy)
        ay = -(self.g211 * vx * vx + 2.0 * self.g212 * vx * vy + self.g222 * vy * vy)
        return ax, ay


# ----------------------------
# Pointwise algebra
# ----------------------------
def coefficient_scale(a, b, c):
    return max(abs(a), abs(b), abs(c), 1e-300)


def delta_tolerance(a, b, c):
    return EPS_DELTA * coefficient_scale(a, b, c) ** 2


def discriminant(m, q):
    a, b, c = m.coefficients(*q)
    return a * c - b * b


def quadratic_form(m, q, dx, dy):
    a, b, c = m.coefficients(*q)
    return a * dx * dx + 2.0 * b * dx * dy + c * dy * dy


def lagrangian(m, state):
    """L = a vx^2 + 2b vx vy + c vy^2 at a phase state (anything with x, y, vx, vy)."""
    return quadratic_form(m, (state.x, state.y), state.vx, state.vy)


def _isotropic_directions(kind, a, b, c, delta, scale):
    tol = 1e-12 * scale
    if kind == PointKind.RIEMANNIAN:
        return ()
    if kind == PointKind.PARABOLIC:
        if abs(c) <= tol:
            return (Direction.from_slope(math.inf),)
        return (Direction.from_slope(-b / c),)
    if abs(c) <= tol:
        return (Direction.from_slope(math.inf), Direction.from_slope(-a / (2.0 * b)))
    r = math.sqrt(-delta)
    roots = sorted(((-b - r) / c, (-b + r) / c))
    return tuple(Direction.from_slope(p) for p in roots)


def signature_at(m, q):
    a, b, c = (float(v) for v in m.coefficients(*q))
    delta = a * c - b * b
    scale = coefficient_scale(a, b, c)
    eps = EPS_DELTA * scale ** 2
    if abs(delta) <= eps:
        kind = PointKind.PARABOLIC
    elif delta > 0:
        kind = PointKind.RIEMANNIAN
    else:
        kind = PointKind.LORENTZIAN
    marginal = eps / MARGINAL_FACTOR < abs(delta) <= eps * MARGINAL_FACTOR
    if marginal:
        log.warning("marginal signature at %s: |delta|=%.3e, threshold %.3e", q, abs(delta), eps)
    return PointClass(kind=kind, transverse=None,
                      isotropic_dirs=_isotropic_directions(kind, a, b, c, delta, scale),
                      delta=delta, scale=scale, marginal=marginal)


def delta_gradient(m, q):
    a, b, c = m.coefficients(*q)
    (ax, ay), (bx, by), (cx, cy) = m.partials(*q)
    return (ax * c + a * cx - 2.0 * b * bx, ay * c + a * cy - 2.0 * b * by)


def classify_parabolic(m, q):
    """Parabolic point class with the transversality flag and its raw quantities."""
    pc = signature_at(m, q)
    if pc.kind != PointKind.PARABOLIC:
        raise NotParabolic(f"{q} is {pc.kind.value}, delta={pc.delta:.3e}")
    a, b, c = (float(v) for v in m.coefficients(*q))
    dx, dy = (float(v) for v in delta_gradient(m, q))
    eps = EPS_TRANSVERSE * max(1.0, pc.scale)
    crossing = b * dx - a * dy
    transverse = (max(abs(a), abs(b), abs(c)) > eps
                  and math.hypot(dx, dy) > eps
                  and abs(crossing) > eps)
    return replace(pc, transverse=transverse, grad_delta=(dx, dy), transversality=crossing)


def christoffel(m, q):
    a, b, c = m.coefficients(*q)
    delta = a * c - b * b
    if abs(delta) <= delta_tolerance(a, b, c):
        raise DegenerateMetric(f"Christoffel symbols undefined at parabolic point {q}")
    (ax, ay), (bx, by), (cx, cy) = m.partials(*q)
    d2 = 2.0 * delta
    return Christoffel(
        g111=(c * ax + b * (ay - 2.0 * bx)) / d2,
        g112=(c * ay - b * cx) / d2,
        g122=(c * (2.0 * by - cx) - b * cy) / d2,
        g211=-(a * (ay - 2.0 * bx) + b * ax) / d2,
        g212=(a * cx - b * ay) / d2,
        g222=(a * cy + b * (cx - 2.0 * by)) / d2,
    )


def form_scale(m, x, y, vx, vy):
    a, b, c = m.coefficients(x, y)
    return (np.abs(a) + 2.0 * np.abs(b) + np.abs(c)) * (np.asarray(vx) ** 2 + np.asarray(vy) ** 2)


def curve_type(m, path, eps=EPS_L):
    """Type of a sampled curve from the sign of L along it."""
    x, y = np.asarray(path.x), np.asarray(path.y)
    vx, vy = np.asarray(path.vx), np.asarray(path.vy)
    a, b, c = m.coefficients(x, y)
    L = a * vx * vx + 2.0 * b * vx * vy + c * vy * vy
    tol = eps * form_scale(m, x, y, vx, vy)
    if np.all(np.abs(L) <= tol):
        return CurveType.ISOTROPIC
    pos = bool(np.any(L > tol))
    neg = bool(np.any(L < -tol))
    if pos and neg:
        return CurveType.MIXED
    return CurveType.TIMELIKE if pos else CurveType.SPACELIKE


def sheared(m, y0):
    """
    Shear x -> x + k y with k = b(y0)/a(y0) for a y-only metric, which makes
    b(y0) = 0 and, at a parabolic point, also c(y0) = 0.
    """
    if m.symmetry != Symmetry.Y_ONLY:
        raise ValueError("shear normalization is exact only for y-only metrics")
    a0, b0, _ = (float(v) for v in m.coefficients(0.0, y0))
    if b0 == 0.0:
        return m
    k = b0 / a0
    log.info("shearing %s by x -> x + %.6g y to normalize b(%.6g)", m.name, k, y0)
    fa, fb, fc = m.a, m.b, m.c

    def b(x, y):
        return fb(x, y) - k * fa(x, y)

    def c(x, y):
        return fc(x, y) - 2.0 * k * fb(x, y) + k * k * fa(x, y)

    db = dc = None
    if m.has_partials:
        da_, db_, dc_ = m.da, m.db, m.dc

        def db(x, y):
            (ax, ay), (bx, by) = da_(x, y), db_(x, y)
            return bx - k * ax, by - k * ay

        def dc(x, y):
            (ax, ay), (bx, by), (cx, cy) = da_(x, y), db_(x, y), dc_(x, y)
            return cx - 2.0 * k * bx + k * k * ax, cy - 2.0 * k * by + k * k * ay

    return replace(m, b=b, c=c, db=db, dc=dc, name=f"{m.name}~sheared")
