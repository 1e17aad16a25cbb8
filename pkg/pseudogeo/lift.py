# lift.py
"""
Unparametrized geodesics as integral curves of a field on the space of
directions (x, y, p), p = dy/dx:

    affine chart    (2 delta, 2 delta p, M(p)),   M = mu0 + mu1 p + mu2 p^2 + mu3 p^3
    inverted chart  (2 delta q, 2 delta, -(mu3 + mu2 q + mu1 q^2 + mu0 q^3)),  q = 1/p

At a parabolic point the field is vertical unless M vanishes; the real roots
of the cubic are the admissible directions along which geodesics pass.

Outputs: AdmissibleSet for a parabolic point, JetPath for an integral curve,
and two numerical residuals (projection of the phase flow, invariance of the
isotropic surface F = 0).
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .errors import NotOnSurface, NotTransverse, StepUnderflow
from .flow import (
    IntegrationOptions,
    _boundary_events,
    _Event,
    _run_segment,
    integrate_desingularized,
)
from .metric import Direction, classify_parabolic, coefficient_scale

log = logging.getLogger(__name__)

# ---- CONFIG ----
EPS_INF_ROOT = 1e-10       # |mu3| below this (relative to max |mu|) puts a root at p = inf
EPS_CUBIC = 1e-12          # all mu below this (relative to the metric scale) is a degenerate cubic
IMAG_TOL = 1e-6            # real-root filter, times (1 + |root|)
GROUP_TOL = 1e-6           # roots closer than this (times 1 + |root|) are one multiple root
EPS_ISOTROPIC = 1e-8       # |F| test for isotropic roots
EPS_SURFACE = 1e-10        # precondition of the invariance check
JET_DENSE = 16


# ----------------------------
# Jets
# ----------------------------
@dataclass(frozen=True)
class JetPoint:
    x: float
    y: float
    chart: str
    value: float

    @classmethod
    def from_direction(cls, x, y, d):
        return cls(float(x), float(y), d.chart, float(d.value))

    @classmethod
    def from_slope(cls, x, y, p):
        return cls.from_direction(x, y, Direction.from_slope(p))

    @property
    def direction(self):
        return Direction(self.chart, self.value)

    @property
    def p(self):
        return self.direction.p


@dataclass
class JetPath:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    value: np.ndarray
    chart: np.ndarray
    stop: str = "finished"

    def __len__(self):
        return len(self.s)

    def jet(self, i):
        return JetPoint(float(self.x[i]), float(self.y[i]), str(self.chart[i]), float(self.value[i]))

    @property
    def p(self):
        with np.errstate(divide="ignore"):
            inv = np.where(self.value == 0.0, np.inf, 1.0 / np.where(self.value == 0.0, 1.0, self.value))
        return np.where(self.chart == "affine", self.value, inv)

    def unit_directions(self):
        aff = self.chart == "affine"
        dx = np.where(aff, 1.0, self.value)
        dy = np.where(aff, self.value, 1.0)
        n = np.hypot(dx, dy)
        return dx / n, dy / n


# ----------------------------
# Field
# ----------------------------
def mu_coefficients(m, q):
    a, b, c = m.coefficients(*q)
    (ax, ay), (bx, by), (cx, cy) = m.partials(*q)
    mu3 = c * (2.0 * by - cx) - b * cy
    mu2 = b * (2.0 * by - 3.0 * cx) + 2.0 * ay * c - a * cy
    mu1 = b * (3.0 * ay - 2.0 * bx) + ax * c - 2.0 * a * cx
    mu0 = a * (ay - 2.0 * bx) + ax * b
    return mu0, mu1, mu2, mu3


def cubic(mu, p):
    mu0, mu1, mu2, mu3 = mu
    return mu0 + p * (mu1 + p * (mu2 + p * mu3))


def lifted_field(m, j):
    a, b, c = m.coefficients(j.x, j.y)
    d2 = 2.0 * (a * c - b * b)
    mu0, mu1, mu2, mu3 = mu_coefficients(m, (j.x, j.y))
    w = j.value
    if j.chart == "affine":
        return np.array([d2, d2 * w, mu0 + w * (mu1 + w * (mu2 + w * mu3))])
    return np.array([d2 * w, d2, -(mu3 + w * (mu2 + w * (mu1 + w * mu0)))])


def isotropy(m, j):
    """F in the chart of the jet: a + 2bp + cp^2, or a q^2 + 2bq + c."""
    a, b, c = m.coefficients(j.x, j.y)
    w = j.value
    if j.chart == "affine":
        return a + 2.0 * b * w + c * w * w
    return a * w * w + 2.0 * b * w + c


# ----------------------------
# Admissible directions
# ----------------------------
@dataclass(frozen=True)
class AdmissibleDirection:
    direction: Direction
    multiplicity: int
    kind: str          # isotropic | nonisotropic


@dataclass(frozen=True)
class AdmissibleSet:
    q0: tuple
    mu: tuple
    directions: tuple
    degenerate_roots: tuple = ()
    degenerate: bool = False

    @property
    def count(self):
        return len(self.directions)


def _group(roots):
    groups = []
    for r in sorted(roots):
        if groups and abs(r - groups[-1][-1]) <= GROUP_TOL * (1.0 + abs(r)):
            groups[-1].append(r)
        else:
            groups.append([r])
    return [(float(np.mean(g)), len(g)) for g in groups]


def admissible_directions(m, q0):
    pc = classify_parabolic(m, q0)
    if not pc.transverse:
        raise NotTransverse(f"{q0} is not a transverse parabolic point of {m.name}")
    mu = tuple(float(v) for v in mu_coefficients(m, q0))
    scale = max(abs(v) for v in mu)
    if scale <= EPS_CUBIC * max(1.0, pc.scale) ** 2:
        log.warning("cubic vanishes identically at %s on %s", q0, m.name)
        return AdmissibleSet(q0=q0, mu=mu, directions=(), degenerate=True)

    coeffs = [mu[3], mu[2], mu[1], mu[0]]
    infinite = 0
    while coeffs and abs(coeffs[0]) < EPS_INF_ROOT * scale:
        coeffs.pop(0)
        infinite += 1
    found = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    real = [r.real for r in found if abs(r.imag) <= IMAG_TOL * (1.0 + abs(r))]
    groups = _group(real)
    if infinite:
        groups.append((math.inf, infinite))

    a, b, c = (float(v) for v in m.coefficients(*q0))
    simple, multiple = [], []
    for p, mult in groups:
        d = Direction.from_slope(p)
        F = isotropy(m, JetPoint.from_direction(q0[0], q0[1], d))
        kind = "isotropic" if abs(F) <= EPS_ISOTROPIC * coefficient_scale(a, b, c) else "nonisotropic"
        entry = AdmissibleDirection(d, mult, kind)
        (simple if mult == 1 else multiple).append(entry)
    if multiple:
        log.info("multiple roots of the cubic at %s: %s", q0, [str(e.direction) for e in multiple])
    return AdmissibleSet(q0=q0, mu=mu, directions=tuple(simple),
                         degenerate_roots=tuple(multiple), degenerate=bool(multiple))


def nonisotropic_pair(m, y0):
    """
    Closed form +-(2/3) sqrt(a1/c1) of the non-isotropic admissible slopes at a
    normalized y-only parabolic line, c1 = (4/9) c'(y0). Empty when a1/c1 < 0.
    """
    a1 = float(m.partials(0.0, y0)[0][1])
    c1 = 4.0 / 9.0 * float(m.partials(0.0, y0)[2][1])
    ratio = a1 / c1
    if ratio < 0:
        return ()
    r = 2.0 / 3.0 * math.sqrt(ratio)
    return (-r, r)


# ----------------------------
# Integral curves
# ----------------------------
def _orientation(m, j, vx, vy):
    a, b, c = m.coefficients(j.x, j.y)
    sd = 1.0 if a * c - b * b >= 0 else -1.0
    lead = vx if j.chart == "affine" else vy
    return sd * (1.0 if lead >= 0 else -1.0)


def integrate_unparametrized(m, j0, s_max, opts=None, orientation=1.0):
    """
    Integral curve of the lifted field from j0 over s in [0, s_max], switching
    charts where |p| or |q| passes 1. The auxiliary parameter stays continuous
    across switches; the orientation picks up sign(value) at each switch so the
    projected motion does not reverse.
    """
    opts = opts or IntegrationOptions(dense_samples=JET_DENSE)
    boundary = _boundary_events(m, j0.y)
    chart, o = j0.chart, float(orientation)
    s, u = 0.0, np.array([j0.x, j0.y, j0.value], dtype=float)
    S, X, Y, W, C = [0.0], [j0.x], [j0.y], [j0.value], [chart]
    budget = opts.max_steps
    stop = "finished"
    while s < s_max:
        def rhs(_, v, chart=chart, o=o):
            return o * lifted_field(m, JetPoint(v[0], v[1], chart, v[2]))

        events = [_Event("switch", lambda v: 1.0 - abs(v[2]))] + boundary
        seg_s, seg_u, outcome, used = _run_segment(rhs, s, u, s_max, events, opts,
                                                   opts.atol * np.ones(3), budget)
        for si, ui in zip(seg_s, seg_u):
            if si > S[-1]:
                S.append(si)
                X.append(ui[0])
                Y.append(ui[1])
                W.append(ui[2])
                C.append(chart)
        if seg_s:
            s, u = seg_s[-1], np.asarray(seg_u[-1], dtype=float)
        budget -= used
        if outcome in ("failed", "max_steps") or budget <= 0:
            raise StepUnderflow(f"lifted field stalled at s={s:.6g}, ({u[0]:.6g}, {u[1]:.6g}) on {m.name}")
        if outcome == "domain":
            stop = "hit_domain_boundary"
            break
        if outcome == "finished":
            break
        if outcome == "switch" or abs(u[2]) > 1.0:
            w = u[2]
            o *= 1.0 if w >= 0 else -1.0
            chart = "inverted" if chart == "affine" else "affine"
            u = np.array([u[0], u[1], 1.0 / w])
            log.debug("chart switch to %s at s=%.6g", chart, s)
            # the switch point itself, expressed in the new chart
            S.append(np.nextafter(S[-1], math.inf))
            X.append(u[0])
            Y.append(u[1])
            W.append(u[2])
            C.append(chart)
    return JetPath(s=np.array(S), x=np.array(X), y=np.array(Y), value=np.array(W),
                   chart=np.array(C), stop=stop)


def _embed(x, y, dx, dy):
    n2 = dx * dx + dy * dy
    return np.column_stack([x, y, (dx * dx - dy * dy) / n2, 2.0 * dx * dy / n2])


def commutation_residual(m, s, horizon, opts=None):
    """
    Max distance in (x, y, direction) between the desingularized phase flow
    from s, projected to directions, and the integral curve of the lifted
    field from the projected start.
    """
    opts = opts or IntegrationOptions()
    phase = integrate_desingularized(m, s, horizon, opts)
    j0 = JetPoint.from_direction(s.x, s.y, Direction.from_vector(s.vx, s.vy))
    speed = float(np.max(np.maximum(np.abs(phase.vx), np.abs(phase.vy))))
    jet_opts = replace(opts, dense_samples=max(opts.dense_samples, JET_DENSE))
    jet = integrate_unparametrized(m, j0, 3.0 * horizon * speed, jet_opts,
                                   orientation=_orientation(m, j0, s.vx, s.vy))

    dx, dy = jet.unit_directions()
    keep = np.r_[True, np.diff(jet.s) > 1e-12]
    js = jet.s[keep]
    E = _embed(jet.x, jet.y, dx, dy)[keep]
    P = _embed(phase.x, phase.y, phase.vx, phase.vy)
    spline = CubicSpline(js, E)
    tree = cKDTree(E)
    _, idx = tree.query(P)
    worst = 0.0
    for point, i in zip(P, idx):
        lo, hi = js[max(i - 1, 0)], js[min(i + 1, len(js) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: float(np.sum((spline(t) - point) ** 2)),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14})
            d = math.sqrt(max(res.fun, 0.0))
        else:
            d = float(np.linalg.norm(E[i] - point))
        worst = max(worst, min(d, float(np.linalg.norm(E[i] - point))))
    return worst


def isotropic_invariance_residual(m, j0, span=1.0, opts=None):
    """Max |F| along the integral curve from a jet on the isotropic surface."""
    a, b, c = m.coefficients(j0.x, j0.y)
    F0 = isotropy(m, j0)
    if abs(F0) >= EPS_SURFACE * coefficient_scale(a, b, c):
        raise NotOnSurface(f"jet {j0} has F={F0:.3e}, not on the isotropic surface")
    path = integrate_unparametrized(m, j0, span, opts)
    return max(abs(float(isotropy(m, path.jet(i)))) for i in range(len(path)))
