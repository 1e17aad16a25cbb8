# flow.py
"""
Geodesic flow of ds^2 = a dx^2 + 2b dx dy + c dy^2.

Away from the parabolic set the naturally parametrized geodesic equations are
integrated directly. Inside the band |delta| <= delta_switch the integration
switches to the desingularized field

    (2 delta vx, 2 delta vy, cP - bR, aR - bP)

in an auxiliary parameter sigma, accumulating natural time by dt = 2|delta| dsigma.
Also here: shooting of geodesic families out of parabolic points and out of
Klein/Grushin discontinuity lines, and the arrival-time / cusp measurements.

Stepping is done by hand with scipy's RK45 so that events (band entry and exit,
domain bounds, the parabolic set, t_max) are located on the dense output.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import RK45
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from tqdm import tqdm

from .errors import (
    DegenerateMetric,
    InsufficientSamples,
    InvalidStart,
    NotNormalized,
    NotTransverse,
)
from .metric import (
    EPS_DELTA,
    CurveType,
    Symmetry,
    classify_parabolic,
    coefficient_scale,
    curve_type,
    delta_tolerance,
    form_scale,
)
from .symmetry import h_of_launch, implicit_ode_roots

log = logging.getLogger(__name__)

# ---- CONFIG ----
RTOL = 1e-9
ATOL = 1e-9
DELTA_SWITCH = 1e-4        # band half-width in |delta|
EVENT_TOL = 1e-12          # root location of events, in the independent variable
MAX_STEPS = 200_000
SEED_TAU = 1e-3
SHOOT_TMAX = 10.0
SHOOT_DENSE = 8            # interpolated samples per step for shot paths
SIGMA_BOUND = 1e12
RATIO_THRESHOLD = 0.9      # finite arrival when shell increments shrink faster than this
EPS_NORMAL = 1e-9          # normalization test a>0, b=c=0 at the launch point


class StopReason(str, Enum):
    REACHED_TMAX = "reached_tmax"
    HIT_DOMAIN_BOUNDARY = "hit_domain_boundary"
    HIT_PARABOLIC_SET = "hit_parabolic_set"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class IntegrationOptions:
    rtol: float = RTOL
    atol: float = ATOL
    delta_switch: float = DELTA_SWITCH
    event_tol: float = EVENT_TOL
    max_steps: int = MAX_STEPS
    max_step: float = math.inf
    dense_samples: int = 0
    seed_tau: float = SEED_TAU
    refine_seed: bool = True
    eps_delta: float = EPS_DELTA


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    vx: float
    vy: float
    t: float = 0.0


@dataclass
class GeodesicPath:
    """Time-stamped samples of a geodesic; arrays share one index."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    stop_reason: StopReason
    type_tag: CurveType
    sigma: Optional[np.ndarray] = None
    period: Optional[float] = None

    def __len__(self):
        return len(self.t)

    def state(self, i):
        return PhaseState(float(self.x[i]), float(self.y[i]), float(self.vx[i]),
                          float(self.vy[i]), float(self.t[i]))

    @property
    def samples(self):
        return [self.state(i) for i in range(len(self))]

    @property
    def start(self):
        return self.state(0)

    @property
    def endpoint(self):
        return self.state(len(self) - 1)


# ----------------------------
# Vector fields
# ----------------------------
def _terms(m, x, y, vx, vy):
    a, b, c = m.coefficients(x, y)
    (ax, ay), (bx, by), (cx, cy) = m.partials(x, y)
    P = (cx - 2.0 * by) * vy * vy - 2.0 * ay * vx * vy - ax * vx * vx
    R = (ay - 2.0 * bx) * vx * vx - 2.0 * cx * vx * vy - cy * vy * vy
    return a, b, c, a * c - b * b, P, R


def spray(m, s):
    """Accelerations (x'', y'') of the naturally parametrized geodesic through s."""
    a, b, c, delta, P, R = _terms(m, s.x, s.y, s.vx, s.vy)
    if abs(delta) <= delta_tolerance(a, b, c):
        raise DegenerateMetric(f"spray undefined on the parabolic set at ({s.x}, {s.y})")
    return (c * P - b * R) / (2.0 * delta), (a * R - b * P) / (2.0 * delta)


def desingularized_field(m, s):
    a, b, c, delta, P, R = _terms(m, s.x, s.y, s.vx, s.vy)
    return (2.0 * delta * s.vx, 2.0 * delta * s.vy, c * P - b * R, a * R - b * P)


def _natural_rhs(m, u):
    x, y, vx, vy = u
    a, b, c, delta, P, R = _terms(m, x, y, vx, vy)
    d2 = 2.0 * delta
    return np.array([vx, vy, (c * P - b * R) / d2, (a * R - b * P) / d2])


def _band_rhs(m, w, sgn):
    x, y, vx, vy, _ = w
    a, b, c, delta, P, R = _terms(m, x, y, vx, vy)
    d2 = 2.0 * delta
    return sgn * np.array([d2 * vx, d2 * vy, c * P - b * R, a * R - b * P, d2])


def _delta(m, u):
    a, b, c = m.coefficients(u[0], u[1])
    return a * c - b * b, coefficient_scale(a, b, c)


# ----------------------------
# Stepping with events
# ----------------------------
@dataclass
class _Event:
    name: str
    func: Callable     # > 0 inside the allowed region


def _boundary_events(m, y0):
    events = []
    lo, hi = m.domain
    if math.isfinite(lo):
        events.append(_Event("domain", lambda u: u[1] - lo))
    if math.isfinite(hi):
        events.append(_Event("domain", lambda u: hi - u[1]))
    for s in m.singular_lines:
        side = 1.0 if y0 > s else -1.0
        events.append(_Event("domain", lambda u, s=s, side=side: side * (u[1] - s)))
    return events


def _run_segment(fun, s0, u0, s_bound, events, opts, atol, budget):
    """
    Step RK45 from (s0, u0) until s_bound, an event or the step budget.
    Returns (s samples, u samples, outcome, steps used); outcome is an event
    name, "finished", "failed" or "max_steps".
    """
    solver = RK45(fun, s0, u0, s_bound, rtol=opts.rtol, atol=atol, max_step=opts.max_step)
    s_out, u_out = [], []
    g_prev = [ev.func(u0) for ev in events]
    steps = 0
    while steps < budget:
        solver.step()
        steps += 1
        if solver.status == "failed":
            return s_out, u_out, "failed", steps
        s_old, s_new = solver.t_old, solver.t
        if s_new == s_old:
            return s_out, u_out, "finished", steps
        dense = solver.dense_output()
        u_new = solver.y.copy()

        hit_s, hit_name = None, None
        for k, ev in enumerate(events):
            g_new = ev.func(u_new)
            if g_prev[k] > 0.0 and g_new <= 0.0:
                if g_new == 0.0:
                    root = s_new
                else:
                    root = brentq(lambda s, f=ev.func: f(dense(s)), s_old, s_new,
                                  xtol=opts.event_tol)
                if hit_s is None or abs(root - s_old) < abs(hit_s - s_old):
                    hit_s, hit_name = root, ev.name
            g_prev[k] = g_new

        s_end = s_new if hit_s is None else hit_s
        if opts.dense_samples:
            for s in np.linspace(s_old, s_end, opts.dense_samples + 2)[1:-1]:
                s_out.append(float(s))
                u_out.append(dense(s))
        if hit_s is not None:
            s_out.append(float(hit_s))
            u_out.append(dense(hit_s))
            return s_out, u_out, hit_name, steps
        s_out.append(float(s_new))
        u_out.append(u_new)
        if solver.status == "finished":
            return s_out, u_out, "finished", steps
    return s_out, u_out, "max_steps", steps


class _Recorder:
    """Collects samples keeping t strictly increasing."""

    def __init__(self, t0, u0, sigma0=None):
        self.t = [float(t0)]
        self.u = [np.asarray(u0[:4], dtype=float)]
        self.sigma = None if sigma0 is None else [float(sigma0)]

    def add(self, t, u, sigma=None):
        if t > self.t[-1]:
            self.t.append(float(t))
            self.u.append(np.asarray(u[:4], dtype=float))
            if self.sigma is not None:
                self.sigma.append(float(sigma))

    def finish(self, m, stop):
        u = np.array(self.u)
        sigma = None if self.sigma is None else np.array(self.sigma)
        path = GeodesicPath(t=np.array(self.t), x=u[:, 0], y=u[:, 1], vx=u[:, 2], vy=u[:, 3],
                            stop_reason=stop, type_tag=CurveType.TIMELIKE, sigma=sigma,
                            period=m.period)
        path.type_tag = curve_type(m, path)
        return path


def _atol(opts, atol_scale, n):
    scale = np.ones(5) if atol_scale is None else np.asarray(atol_scale, dtype=float)
    return opts.atol * scale[:n]


def _check_start(m, s0):
    if not m.contains(s0.y) or not all(map(math.isfinite, (s0.x, s0.y, s0.vx, s0.vy, s0.t))):
        raise InvalidStart(f"start ({s0.x}, {s0.y}) is outside the domain {m.domain}")
    if s0.vx == 0.0 and s0.vy == 0.0:
        raise InvalidStart("start velocity is zero")


_OUTCOME_STOP = {
    "domain": StopReason.HIT_DOMAIN_BOUNDARY,
    "parabolic": StopReason.HIT_PARABOLIC_SET,
    "tmax": StopReason.REACHED_TMAX,
}


def integrate_natural(m, s0, t_max, opts=None, atol_scale=None):
    """
    Integrate the naturally parametrized geodesic from s0 up to t = t_max.
    `atol_scale` multiplies the absolute tolerance per component (x, y, vx, vy, t).
    """
    opts = opts or IntegrationOptions()
    _check_start(m, s0)
    rec = _Recorder(s0.t, (s0.x, s0.y, s0.vx, s0.vy))
    boundary = _boundary_events(m, s0.y)
    t, u = s0.t, np.array([s0.x, s0.y, s0.vx, s0.vy], dtype=float)
    budget = opts.max_steps

    delta, scale = _delta(m, u)
    if abs(delta) <= opts.eps_delta * scale ** 2:
        return rec.finish(m, StopReason.HIT_PARABOLIC_SET)
    if t >= t_max:
        return rec.finish(m, StopReason.REACHED_TMAX)
    mode = "band" if abs(delta) <= opts.delta_switch else "natural"

    def band_entry(w):
        return abs(_delta(m, w)[0]) - opts.delta_switch

    def band_exit(w):
        return 2.0 * opts.delta_switch - abs(_delta(m, w)[0])

    def time_left(w):
        return t_max - w[4]

    while True:
        if mode == "natural":
            events = [_Event("band", band_entry)] + boundary
            S, U, outcome, used = _run_segment(lambda s, v: _natural_rhs(m, v), t, u, t_max,
                                               events, opts, _atol(opts, atol_scale, 4), budget)
            for s, v in zip(S, U):
                rec.add(s, v)
            if S:
                t, u = S[-1], np.asarray(U[-1])
            if outcome == "band":
                log.debug("entering parabolic band at t=%.6g, y=%.6g", t, u[1])
                mode = "band"
            elif outcome == "finished":
                stop = StopReason.REACHED_TMAX
                break
            elif outcome in _OUTCOME_STOP:
                stop = _OUTCOME_STOP[outcome]
                break
            else:
                stop = StopReason.STEP_UNDERFLOW
                break
        else:
            sgn = 1.0 if _delta(m, u)[0] > 0 else -1.0

            def parabolic(w, sgn=sgn):
                d, sc = _delta(m, w)
                return sgn * d - opts.eps_delta * sc ** 2

            events = [_Event("exit", band_exit), _Event("parabolic", parabolic),
                      _Event("tmax", time_left)] + boundary
            w0 = np.append(u, t)
            S, U, outcome, used = _run_segment(lambda s, w: _band_rhs(m, w, sgn), 0.0, w0,
                                               SIGMA_BOUND, events, opts,
                                               _atol(opts, atol_scale, 5), budget)
            for w in U:
                rec.add(w[4], w)
            if U:
                t, u = float(U[-1][4]), np.asarray(U[-1][:4])
            if outcome == "exit":
                log.debug("leaving parabolic band at t=%.6g, y=%.6g", t, u[1])
                mode = "natural"
            elif outcome in _OUTCOME_STOP:
                stop = _OUTCOME_STOP[outcome]
                break
            else:
                stop = StopReason.STEP_UNDERFLOW
                break
        budget -= used
        if budget <= 0:
            stop = StopReason.STEP_UNDERFLOW
            break

    if stop == StopReason.STEP_UNDERFLOW:
        log.warning("integration stopped by step underflow at t=%.6g (%s)", t, m.name)
    else:
        log.info("geodesic on %s stopped: %s at t=%.6g", m.name, stop.value, t)
    return rec.finish(m, stop)


def integrate_desingularized(m, s0, sigma_max, opts=None, atol_scale=None):
    """
    Integrate the desingularized field in sigma, oriented so that natural time
    grows (dt = 2|delta| dsigma). Samples carry both sigma and t.
    """
    opts = opts or IntegrationOptions()
    _check_start(m, s0)
    delta, scale = _delta(m, (s0.x, s0.y))
    on_set = abs(delta) <= opts.eps_delta * scale ** 2
    sgn = 1.0 if delta >= 0 else -1.0
    w0 = np.array([s0.x, s0.y, s0.vx, s0.vy, s0.t], dtype=float)
    rec = _Recorder(s0.t, w0, sigma0=0.0)

    def parabolic(w):
        d, sc = _delta(m, w)
        return sgn * d - opts.eps_delta * sc ** 2

    events = list(_boundary_events(m, s0.y))
    if not on_set:
        events.append(_Event("parabolic", parabolic))
    S, U, outcome, _ = _run_segment(lambda s, w: _band_rhs(m, w, sgn), 0.0, w0, sigma_max,
                                    events, opts, _atol(opts, atol_scale, 5), opts.max_steps)
    for s, w in zip(S, U):
        if s > rec.sigma[-1]:
            rec.t.append(float(w[4]))
            rec.u.append(np.asarray(w[:4], dtype=float))
            rec.sigma.append(float(s))
    if outcome == "finished":
        stop = StopReason.REACHED_TMAX
    else:
        stop = _OUTCOME_STOP.get(outcome, StopReason.STEP_UNDERFLOW)
    return rec.finish(m, stop)


def energy_drift(m, path):
    """Max |L - L0| along the path, relative to the form scale at the start."""
    a, b, c = m.coefficients(path.x, path.y)
    L = a * path.vx ** 2 + 2.0 * b * path.vx * path.vy + c * path.vy ** 2
    scale = form_scale(m, path.x[0], path.y[0], path.vx[0], path.vy[0])
    return float(np.max(np.abs(L - L[0])) / scale)


# ----------------------------
# Shooting
# ----------------------------
def _shoot_options(opts):
    return opts or IntegrationOptions(dense_samples=SHOOT_DENSE)


def _refined_q(m, y, launch, q_lead):
    """Seed direction dx/dy solved from the energy quadratic at the seed ordinate."""
    roots = [d.q for d in implicit_ode_roots(m, y, launch) if math.isfinite(d.q)]
    if not roots:
        log.warning("seed refinement found no real direction at y=%.6g; keeping leading order", y)
        return None
    return min(roots, key=lambda q: abs(q - q_lead))


def _side_sign(side):
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    return 1.0 if side == "plus" else -1.0


def _branch_sign(branch):
    if branch not in ("left", "right"):
        raise ValueError(f"branch must be 'left' or 'right', got {branch!r}")
    return 1.0 if branch == "right" else -1.0


def parabolic_seed(m, q0, alpha, side="plus", branch="right", opts=None):
    """
    Leading-order seed of the geodesic x = x0 + sgn*alpha*tau^3, y = y0 +- tau^2
    at tau = seed_tau, with natural time t = tau^3.
    """
    opts = _shoot_options(opts)
    x0, y0 = q0
    Y, sgn = _side_sign(side), _branch_sign(branch)
    tau = opts.seed_tau
    x, y = x0 + sgn * alpha * tau ** 3, y0 + Y * tau ** 2
    vx, vy = sgn * alpha, Y * 2.0 / (3.0 * tau)
    if opts.refine_seed and m.symmetry == Symmetry.Y_ONLY:
        launch = h_of_launch(m, y0, alpha, "parabolic", side=side)
        q = _refined_q(m, y, launch, vx / vy)
        if q is not None:
            vx = q * vy
    return PhaseState(x, y, vx, vy, tau ** 3)


def shoot_from_parabolic(m, q0, alpha, side="plus", branch="right", opts=None, t_max=SHOOT_TMAX):
    """Geodesic of the family through the isotropic direction at a parabolic point q0."""
    opts = _shoot_options(opts)
    pc = classify_parabolic(m, q0)
    if not pc.transverse:
        raise NotTransverse(f"{q0} is not a transverse parabolic point of {m.name}")
    a0, b0, c0 = (float(v) for v in m.coefficients(*q0))
    (_, _), (_, _), (cx, cy) = m.partials(*q0)
    tol = EPS_NORMAL * max(1.0, pc.scale)
    if a0 <= 0.0 or abs(b0) > tol or abs(c0) > tol or abs(cx) > tol * max(1.0, abs(cy)):
        raise NotNormalized(f"{m.name} is not normalized at {q0} (need a>0, b=c=0, c_x=0)")
    seed = parabolic_seed(m, q0, alpha, side, branch, opts)
    tau = opts.seed_tau
    return integrate_natural(m, seed, t_max, opts,
                             atol_scale=(tau ** 3, tau ** 2, 1.0, 1.0, tau ** 3))


def shoot_from_singular_line(m, q0, alpha, side="plus", opts=None, t_max=SHOOT_TMAX):
    """
    Geodesic leaving a Klein-type (x = alpha*y^2) or Grushin-type (x = alpha*y^3)
    discontinuity line, seeded at distance seed_tau and normalized to L = 1.
    For y-only metrics the seed direction is moved onto the launch level
    h^2 = 4 alpha^2 (Klein) or 9 alpha^2 (Grushin).
    """
    opts = _shoot_options(opts)
    x0, y0 = q0
    if m.singular_kind is None or all(abs(y0 - s) > 1e-12 for s in m.singular_lines):
        raise InvalidStart(f"{q0} is not on a discontinuity line of {m.name}")
    k = 2 if m.singular_kind == "klein" else 3
    eps = opts.seed_tau
    s = _side_sign(side) * eps
    x, y = x0 + alpha * s ** k, y0 + s
    vx, vy = k * alpha * s ** (k - 1), 1.0
    if s < 0:
        vx, vy = -vx, -vy
    if opts.refine_seed and m.symmetry == Symmetry.Y_ONLY and alpha != 0.0:
        launch = h_of_launch(m, y0, abs(alpha), m.singular_kind)
        q = _refined_q(m, y, launch, vx / vy)
        if q is not None:
            vx = q * vy
    a, b, c = m.coefficients(x, y)
    L = a * vx * vx + 2.0 * b * vx * vy + c * vy * vy
    if L <= 0.0:
        raise InvalidStart(f"{m.name} is not Riemannian next to the line y={y0}")
    n = 1.0 / math.sqrt(L)
    seed = PhaseState(x, y, vx * n, vy * n, 0.0)
    return integrate_natural(m, seed, t_max, opts,
                             atol_scale=(eps ** k, eps, eps ** k, eps, 1.0))


def shoot_from_regular(m, q0, alpha, side="plus", opts=None, t_max=SHOOT_TMAX):
    """Geodesic leaving a regular point with dx/dy = alpha (alpha = inf: horizontal)."""
    opts = opts or IntegrationOptions()
    x0, y0 = q0
    Y = _side_sign(side)
    if math.isinf(alpha):
        vx, vy = 1.0, 0.0
    else:
        vx, vy = Y * alpha, Y
    a, b, c = m.coefficients(x0, y0)
    L = a * vx * vx + 2.0 * b * vx * vy + c * vy * vy
    n = abs(L) if abs(L) > 1e-12 * form_scale(m, x0, y0, vx, vy) else math.hypot(vx, vy) ** 2
    n = 1.0 / math.sqrt(n)
    return integrate_natural(m, PhaseState(x0, y0, vx * n, vy * n, 0.0), t_max, opts)


def shoot_family(m, q0, alphas, sides=("plus",), branches=("right",), launch="parabolic",
                 opts=None, t_max=SHOOT_TMAX, progress=True):
    """Shoot every (alpha, side, branch) combination; returns (alpha, side, branch, path)."""
    jobs = [(al, sd, br) for al in alphas for sd in sides for br in branches]
    out = []
    for alpha, side, branch in tqdm(jobs, desc=f"Shooting {m.name}", disable=not progress):
        if launch == "parabolic":
            path = shoot_from_parabolic(m, q0, alpha, side, branch, opts, t_max)
        elif launch in ("klein", "grushin"):
            path = shoot_from_singular_line(m, q0, _branch_sign(branch) * alpha, side, opts, t_max)
        else:
            path = shoot_from_regular(m, q0, _branch_sign(branch) * alpha, side, opts, t_max)
        out.append((alpha, side, branch, path))
    return out


def seed_consistency(m, q0, alpha, side="plus", branch="right", opts=None, t_max=1.0):
    """
    Shoot with seeds tau0 and tau0/2 and return the max distance in x between
    the two paths at matched y. The second path is resampled as x(y) by cubic
    Hermite interpolation with slopes dx/dy = vx/vy.
    """
    opts = _shoot_options(opts)
    p1 = shoot_from_parabolic(m, q0, alpha, side, branch, opts, t_max)
    p2 = shoot_from_parabolic(m, q0, alpha, side, branch,
                              replace(opts, seed_tau=opts.seed_tau / 2.0), t_max)
    y1, x1 = _monotone_stretch(p1)[:2]
    y2, x2, q2 = _monotone_stretch(p2)
    if y2.size < 2:
        raise InsufficientSamples("seed path has fewer than two samples with vy != 0")
    keep = (y1 >= y2[0]) & (y1 <= y2[-1])
    if not keep.any():
        raise InsufficientSamples("seed paths do not overlap in y")
    x_b = CubicHermiteSpline(y2, x2, q2)(y1[keep])
    return float(np.max(np.abs(x1[keep] - x_b)))


def _monotone_stretch(path):
    """(y, x, dx/dy) over the initial stretch where y is strictly monotone, sorted by y."""
    n = _monotone_prefix(path.y)
    y, x = np.asarray(path.y[:n], float), np.asarray(path.x[:n], float)
    vx, vy = np.asarray(path.vx[:n], float), np.asarray(path.vy[:n], float)
    ok = vy != 0.0
    y, x, q = y[ok], x[ok], vx[ok] / vy[ok]
    order = np.argsort(y)
    y, x, q = y[order], x[order], q[order]
    strict = np.r_[True, np.diff(y) > 0.0]
    return y[strict], x[strict], q[strict]


def _monotone_prefix(y):
    dy = np.sign(np.diff(y))
    if dy.size == 0:
        return len(y)
    bad = np.nonzero(dy != dy[0])[0]
    return len(y) if bad.size == 0 else int(bad[0]) + 1


# ----------------------------
# Measurements
# ----------------------------
@dataclass(frozen=True)
class ArrivalCheck:
    finite: bool
    t_arrival: float
    ratio: float
    shells: int


def finite_time_check(path, q0):
    """
    Decide whether the path reaches q0 in finite natural time. The path is
    cut by halving distance shells around q0; if the time spent between
    successive shells shrinks geometrically (median ratio < 0.9) the series
    converges and its sum gives the arrival time. Raises InsufficientSamples
    when the path does not close in on q0 over enough shells to decide.
    """
    x0, y0 = q0
    r = np.hypot(path.x - x0, path.y - y0)
    t = np.asarray(path.t, dtype=float)
    if r[0] < r[-1]:
        r, t = r[::-1], t[::-1]
    r = np.minimum.accumulate(r)
    r_far, r_near = r[0], r[-1]
    shells = []
    level = r_far
    while level > r_near and len(shells) < 200:
        shells.append(level)
        level *= 0.5
    if len(shells) < 5:
        raise InsufficientSamples(f"only {len(shells)} distance shells around {q0}; need 5")
    shells = np.array(shells)
    # r is non-increasing; interpolate on the reversed (increasing) arrays
    t_shell = np.interp(shells, r[::-1], t[::-1])
    inc = np.abs(np.diff(t_shell))
    prev, nxt = inc[:-1], inc[1:]
    ok = prev > 0
    ratios = nxt[ok] / prev[ok]
    if ratios.size < 3:
        raise InsufficientSamples(f"only {ratios.size} shell-time ratios around {q0}; need 3")
    rho = float(np.median(ratios))
    if rho < RATIO_THRESHOLD:
        direction = math.copysign(1.0, t_shell[-1] - t_shell[-2])
        t_arrival = float(t_shell[-1] + direction * inc[-1] * rho / (1.0 - rho))
        return ArrivalCheck(True, t_arrival, rho, len(shells))
    return ArrivalCheck(False, math.inf, rho, len(shells))


def cusp_exponent(path, q0):
    """Slope of log|y - y0| against log|x - x0| over the decade nearest q0."""
    x0, y0 = q0
    dx = np.abs(np.asarray(path.x) - x0)
    dy = np.abs(np.asarray(path.y) - y0)
    keep = (dx > 0) & (dy > 0)
    if keep.sum() < 4:
        raise InsufficientSamples("path never leaves the vertical through q0")
    lx, ly = np.log(dx[keep]), np.log(dy[keep])
    near = lx <= lx.min() + math.log(10.0)
    if near.sum() < 4:
        log.warning("cusp_exponent: widening the fit window to two decades")
        near = lx <= lx.min() + 2.0 * math.log(10.0)
    if near.sum() < 4:
        raise InsufficientSamples(f"only {int(near.sum())} samples near {q0}")
    return float(np.polyfit(lx[near], ly[near], 1)[0])


def constant_path_residual(m, y_star):
    """Normal acceleration of the horizontal path y = y_star (zero iff it is a geodesic)."""
    a, b, c = m.coefficients(0.0, y_star)
    vx = 1.0 / math.sqrt(abs(a))
    _, ay = spray(m, PhaseState(0.0, y_star, vx, 0.0))
    return abs(ay)
