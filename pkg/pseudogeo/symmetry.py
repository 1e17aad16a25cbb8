# symmetry.py
"""
Metrics whose coefficients depend on y only.

The energy integral H^2 = (a + b p)^2 / (a + 2b p + c p^2) turns the geodesic
equation into the implicit first-order equation

    (b^2 - h^2 c) p^2 + 2b (a - h^2) p + a (a - h^2) = 0,

whose discriminant curve a(y) = h^2 decides whether a geodesic launched from
the line y = y0 returns to it, tends to a horizontal geodesic, or escapes the
strip. classify_family partitions the whole set of launch levels into
classes of equal behaviour.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from tqdm import tqdm

from .errors import AssumptionViolated, BadParam, IsotropicJet, NotNormalized, NotTransverse
from .metric import (
    EPS_L,
    CurveType,
    Direction,
    PointKind,
    Symmetry,
    sheared,
    signature_at,
)

log = logging.getLogger(__name__)

# ---- CONFIG ----
N_GRID = 4096              # ordinate grid for root scans
H2_GRID = 200              # level samples per value-set piece
LEVEL_TOL = 1e-9           # bisection tolerance of class boundaries, in h^2
SNAP_TOL = 1e-6            # relative distance for snapping boundaries to exact values
EPS_DERIV = 1e-8           # |a'| threshold, relative to max(1, |a|)
ROOT_XTOL = 1e-12
EPS_NORMAL = 1e-9
VERIFY_TMAX = 20.0
WORKERS = 4                # threads labelling the h^2 grid; 1 runs serially


class Case(str, Enum):
    RETURNS = "returns"
    ASYMPTOTE = "asymptote"
    ESCAPES = "escapes"


class SolutionKind(str, Enum):
    HORIZONTAL_GEODESIC = "horizontal_geodesic"
    ENVELOPE_NOT_GEODESIC = "envelope_not_geodesic"


@dataclass(frozen=True)
class ScanOptions:
    grid: int = N_GRID
    h2_grid: int = H2_GRID
    level_tol: float = LEVEL_TOL
    snap_tol: float = SNAP_TOL
    eps_deriv: float = EPS_DERIV
    workers: int = WORKERS


@dataclass(frozen=True)
class EnergyLevel:
    """Signed h^2 (spacelike levels are negative), or inf for isotropic geodesics."""

    h2: float
    type_tag: CurveType = None

    def __post_init__(self):
        expected = _level_type(self.h2)
        if self.type_tag is None:
            object.__setattr__(self, "type_tag", expected or CurveType.TIMELIKE)
        elif expected is not None and self.type_tag != expected:
            raise BadParam(f"h2={self.h2} cannot be {self.type_tag.value}")

    @property
    def is_isotropic(self):
        return math.isinf(self.h2)


def _level_type(h2):
    if math.isinf(h2):
        return CurveType.ISOTROPIC
    if h2 > 0:
        return CurveType.TIMELIKE
    if h2 < 0:
        return CurveType.SPACELIKE
    return None


def _as_level(level):
    return level if isinstance(level, EnergyLevel) else EnergyLevel(float(level))


@dataclass(frozen=True)
class Strip:
    """The part of the nondegenerate strip on one side of y0."""

    y0: float
    side: str
    omega: float
    kind: str      # parabolic | singular | domain | infinite


@dataclass(frozen=True)
class ReturnAnalysis:
    y_hat_plus: Optional[float]
    y_hat_minus: Optional[float]
    case_plus: Optional[Case]
    case_minus: Optional[Case]
    horizontal_geodesic: Optional[float] = None
    a_prime_plus: float = math.nan
    a_prime_minus: float = math.nan


@dataclass(frozen=True)
class HorizontalGeodesic:
    y: float
    h2: float


# ----------------------------
# Pointwise relations
# ----------------------------
def _abc(m, y):
    a, b, c = m.coefficients(0.0, y)
    return float(a), float(b), float(c)


def _a_prime(m, y):
    return m.partials(0.0, y)[0][1]


def energy(m, y, p):
    """
    Signed energy level h^2 = (a + b p)^2 / F of the direction p at ordinate y;
    F < 0 gives the spacelike (negative) branch. Raises IsotropicJet when F = 0.
    """
    d = p if isinstance(p, Direction) else Direction.from_slope(p)
    a, b, c = _abc(m, y)
    if d.chart == "affine":
        num, F, scale = (a + b * d.value) ** 2, a + 2 * b * d.value + c * d.value ** 2, 1 + d.value ** 2
    else:
        q = d.value
        num, F, scale = (a * q + b) ** 2, a * q * q + 2 * b * q + c, 1 + q * q
    if abs(F) <= EPS_L * (abs(a) + 2 * abs(b) + abs(c)) * scale:
        raise IsotropicJet(f"direction {d} at y={y} is isotropic (h^2 = inf)")
    return num / F


def energy_of_state(m, s):
    a, b, c = m.coefficients(s.x, s.y)
    L = a * s.vx ** 2 + 2 * b * s.vx * s.vy + c * s.vy ** 2
    return (a * s.vx + b * s.vy) ** 2 / L


def implicit_ode_roots(m, y, level):
    """
    Projective roots p of the energy quadratic at ordinate y, with
    multiplicity (a double root is listed twice, p = inf as Direction q = 0).
    """
    h2 = _as_level(level).h2
    a, b, c = _abc(m, y)
    if math.isinf(h2):
        A, B, C = c, 2 * b, a
    else:
        A, B, C = b * b - h2 * c, 2 * b * (a - h2), a * (a - h2)
    scale = max(abs(A), abs(B), abs(C))
    if scale == 0.0:
        return []
    tol = 1e-12 * scale
    if abs(A) <= tol:
        roots = [math.inf, math.inf if abs(B) <= tol else -C / B]
    else:
        disc = B * B - 4 * A * C
        dtol = 1e-12 * (B * B + 4 * abs(A * C))
        if disc < -dtol:
            roots = []
        elif abs(disc) <= dtol:
            roots = [-B / (2 * A)] * 2
        else:
            qv = -0.5 * (B + math.copysign(math.sqrt(disc), B))
            roots = sorted((qv / A, C / qv))
    return [Direction.from_slope(p) for p in roots]


def singular_solution_test(m, y_star, eps=EPS_DERIV):
    a = _abc(m, y_star)[0]
    if a == 0.0:
        log.warning("singular_solution_test at y=%.6g where a vanishes", y_star)
    ap = _a_prime(m, y_star)
    if abs(ap) <= eps * max(1.0, abs(a)):
        return SolutionKind.HORIZONTAL_GEODESIC
    return SolutionKind.ENVELOPE_NOT_GEODESIC


# ----------------------------
# Grids and root scans
# ----------------------------
def _cheb(lo, hi, n):
    s = 0.5 * (1.0 - np.cos(np.pi * np.arange(1, n) / n))
    return lo + (hi - lo) * s


def _open_grid(lo, hi, n):
    """Ascending points strictly inside (lo, hi), clustered at finite ends."""
    offsets = np.geomspace(1e-9, 1e9, n)
    if math.isfinite(lo) and math.isfinite(hi):
        return _cheb(lo, hi, n)
    if math.isfinite(lo):
        return lo + offsets * max(1.0, abs(lo))
    if math.isfinite(hi):
        return (hi - offsets * max(1.0, abs(hi)))[::-1]
    return np.concatenate([-offsets[::-1], [0.0], offsets])


def _side_grid(y0, omega, n):
    """Points strictly between y0 and omega, ordered away from y0."""
    if math.isfinite(omega):
        return _cheb(y0, omega, n)
    sgn = 1.0 if omega > 0 else -1.0
    return y0 + sgn * np.geomspace(1e-9, 1e9, n) * max(1.0, abs(y0))


def default_window(m):
    lo, hi = m.domain
    if m.period is not None and not (math.isfinite(lo) and math.isfinite(hi)):
        lo = lo if math.isfinite(lo) else -m.period / 4.0
        return lo, lo + m.period
    return lo, hi


def _window_pieces(m, window):
    lo, hi = window if window is not None else default_window(m)
    cuts = sorted(s for s in m.singular_lines if lo < s < hi)
    edges = [lo] + cuts + [hi]
    return list(zip(edges[:-1], edges[1:]))


def _root(f, u, v):
    return brentq(f, min(u, v), max(u, v), xtol=ROOT_XTOL)


def _sign_change_roots(f, grid, values):
    roots = []
    for i in np.nonzero(values == 0.0)[0]:
        roots.append(float(grid[i]))
    s = np.sign(values)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        roots.append(_root(f, grid[i], grid[i + 1]))
    return roots


def _critical_points(m, grid):
    ap = np.asarray(m.partials(0.0, grid)[0][1], dtype=float)
    if not np.any(ap):
        # constant a: every line is horizontal, none is isolated
        return []
    return [(yc, float(m.a(0.0, yc))) for yc in
            _sign_change_roots(lambda y: _a_prime(m, y), grid, ap)]


def _dedupe(values, tol=1e-9):
    out = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol * max(1.0, abs(v)):
            out.append(v)
    return out


def discriminant_curve(m, h2, window=None, n=N_GRID):
    """All y in the window with a(y) = h2 (crossings and tangencies)."""
    roots = []
    for lo, hi in _window_pieces(m, window):
        grid = _open_grid(lo, hi, n)
        vals = np.asarray(m.a(0.0, grid), dtype=float) - h2
        roots += _sign_change_roots(lambda y: float(m.a(0.0, y)) - h2, grid, vals)
        for yc, ac in _critical_points(m, grid):
            if abs(ac - h2) <= 1e-10 * max(1.0, abs(h2)):
                roots.append(yc)
    return _dedupe(roots)


def horizontal_geodesics(m, window=None, n=N_GRID):
    """Lines y = y* with a'(y*) = 0 and a(y*) != 0; each is a geodesic."""
    found = []
    for lo, hi in _window_pieces(m, window):
        grid = _open_grid(lo, hi, n)
        for yc, ac in _critical_points(m, grid):
            if abs(ac) <= 1e-12:
                log.debug("skipping critical point y=%.6g with a=0", yc)
                continue
            if singular_solution_test(m, yc) == SolutionKind.HORIZONTAL_GEODESIC:
                found.append(HorizontalGeodesic(y=yc, h2=ac))
    return found


def side_interval(m, y0, side, n=N_GRID):
    """The strip on one side of y0 up to the first degeneracy line, discontinuity or domain bound."""
    sgn = 1.0 if side == "plus" else -1.0
    lo, hi = m.domain
    far, kind = (hi, "domain") if sgn > 0 else (lo, "domain")
    ahead = [s for s in m.singular_lines if (s - y0) * sgn > 0]
    if ahead:
        far, kind = min(ahead, key=lambda s: abs(s - y0)), "singular"
    if not math.isfinite(far):
        kind = "infinite"
        if m.period is not None:
            far = y0 + sgn * m.period
    grid = _side_grid(y0, far, n)
    a, b, c = m.coefficients(0.0, grid)
    d = np.asarray(a * c - b * b, dtype=float)
    s = np.sign(d)
    bad = np.nonzero((s != s[0]) | (s == 0))[0]
    if bad.size:
        i = int(bad[0])
        if s[i] == 0:
            return Strip(y0, side, float(grid[i]), "parabolic")

        def disc(y):
            aa, bb, cc = _abc(m, y)
            return aa * cc - bb * bb

        omega = _root(disc, grid[i - 1], grid[i])
        return Strip(y0, side, omega, "parabolic")
    if kind == "infinite":
        far = sgn * math.inf
    return Strip(y0, side, far, kind)


class _SideScan:
    """Precomputed a(y), a'(y) and critical points on one side of the launch line."""

    def __init__(self, m, y0, side, scan):
        self.m, self.y0, self.side = m, y0, side
        self.strip = side_interval(m, y0, side, scan.grid)
        omega = self.strip.omega
        self.grid = _side_grid(y0, omega, scan.grid)
        self.a = np.asarray(m.a(0.0, self.grid), dtype=float)
        sa = np.sign(self.a)
        bad = np.nonzero((sa != sa[0]) | (sa == 0))[0]
        if bad.size:
            y_bad = float(self.grid[bad[0]])
            raise AssumptionViolated(f"a vanishes near y={y_bad:.6g} inside the strip", sample=y_bad)
        self.eps_deriv = scan.eps_deriv
        order = np.argsort(self.grid)
        crit = _critical_points(m, self.grid[order])
        self.critical = sorted(crit, key=lambda t: abs(t[0] - y0))
        self.a_omega = float(m.a(0.0, omega)) if math.isfinite(omega) and self.strip.kind == "parabolic" else None

    def turning(self, h2):
        """(y_hat, case, a'(y_hat)) for one level."""
        omega = self.strip.omega
        if math.isinf(h2) or h2 == 0.0:
            return omega, Case.ESCAPES, math.nan
        tol = 1e-12 * max(1.0, abs(h2))
        g = self.a - h2
        f = lambda y: float(self.m.a(0.0, y)) - h2
        cands = []
        s = np.sign(g)
        zeros = np.nonzero(s == 0)[0]
        if zeros.size:
            cands.append(float(self.grid[zeros[0]]))
        flips = np.nonzero(s[:-1] * s[1:] < 0)[0]
        if flips.size:
            i = flips[0]
            cands.append(_root(f, self.grid[i], self.grid[i + 1]))
        elif self.a_omega is not None:
            g_end = self.a_omega - h2
            if abs(g_end) > tol and np.sign(g_end) != s[-1]:
                cands.append(_root(f, self.grid[-1], omega))
        for yc, ac in self.critical:
            gc = ac - h2
            if abs(gc) <= tol:
                cands.append(yc)
                continue
            # two close roots around a critical point fall between grid nodes
            before = np.nonzero(np.abs(self.grid - self.y0) < abs(yc - self.y0))[0]
            if before.size:
                left = self.grid[before[-1]]
                if np.sign(gc) != np.sign(f(left)):
                    cands.append(_root(f, left, yc))
        if not cands:
            return omega, Case.ESCAPES, math.nan
        y_hat = min(cands, key=lambda y: abs(y - self.y0))
        if math.isfinite(omega) and abs(y_hat - omega) <= 1e-9 * max(1.0, abs(omega)):
            return omega, Case.ESCAPES, math.nan
        ap = _a_prime(self.m, y_hat)
        if abs(ap) <= self.eps_deriv * max(1.0, abs(h2)):
            return y_hat, Case.ASYMPTOTE, ap
        return y_hat, Case.RETURNS, ap


def _sides(side):
    if side == "both":
        return ("plus", "minus")
    if side not in ("plus", "minus"):
        raise BadParam(f"side must be plus, minus or both, got {side!r}")
    return (side,)


def turning_analysis(m, y0, level, side="plus", scan=None):
    scan = scan or ScanOptions()
    h2 = _as_level(level).h2
    out = {}
    for sd in _sides(side):
        out[sd] = _SideScan(m, y0, sd, scan).turning(h2)
    plus = out.get("plus", (None, None, math.nan))
    minus = out.get("minus", (None, None, math.nan))
    horizontal = None
    for y_hat, case, _ in (plus, minus):
        if case == Case.ASYMPTOTE:
            horizontal = y_hat
    return ReturnAnalysis(y_hat_plus=plus[0], y_hat_minus=minus[0], case_plus=plus[1],
                          case_minus=minus[1], horizontal_geodesic=horizontal,
                          a_prime_plus=plus[2], a_prime_minus=minus[2])


# ----------------------------
# Launch levels
# ----------------------------
def launch_kind_at(m, y0):
    if any(abs(y0 - s) <= 1e-12 for s in m.singular_lines):
        return m.singular_kind or "klein"
    if signature_at(m, (0.0, y0)).kind == PointKind.PARABOLIC:
        return "parabolic"
    return "regular"


def _launch_constants(m, y0, launch_kind, side):
    """(a0, K) with h^2(alpha) = (alpha a0)^2 / (alpha^2 a0 + K)."""
    a0, b0, c0 = _abc(m, y0)
    tol = EPS_NORMAL * max(1.0, abs(a0))
    if a0 <= 0.0 or abs(b0) > tol:
        raise NotNormalized(f"{m.name} needs a>0 and b=0 at y={y0} (a={a0:.6g}, b={b0:.6g})")
    if launch_kind == "regular":
        K = c0
    elif launch_kind == "parabolic":
        if abs(c0) > tol:
            raise NotNormalized(f"c({y0}) = {c0:.6g} is not zero at a parabolic launch")
        c1 = 4.0 / 9.0 * float(m.partials(0.0, y0)[2][1])
        K = c1 * (1.0 if side == "plus" else -1.0)
    else:
        raise BadParam(f"unknown launch kind {launch_kind!r}")
    if K == 0.0:
        raise NotTransverse(f"degenerate launch at y={y0}: h^2(alpha) is constant")
    return a0, K


def _singular_factor(launch_kind):
    return 4.0 if launch_kind == "klein" else 9.0


def h_of_launch(m, y0, alpha, launch_kind, side="plus"):
    alpha = float(alpha)
    if launch_kind in ("klein", "grushin"):
        h2 = math.inf if math.isinf(alpha) else _singular_factor(launch_kind) * alpha * alpha
        return EnergyLevel(h2, CurveType.TIMELIKE)
    a0, K = _launch_constants(m, y0, launch_kind, side)
    if math.isinf(alpha):
        return EnergyLevel(a0)
    num = alpha * alpha * a0 * a0
    den = alpha * alpha * a0 + K
    if abs(den) <= 1e-12 * (alpha * alpha * a0 + abs(K)):
        return EnergyLevel(math.inf)
    h2 = num / den
    if h2 == 0.0:
        return EnergyLevel(0.0, CurveType.TIMELIKE if K > 0 else CurveType.SPACELIKE)
    return EnergyLevel(h2)


@dataclass(frozen=True)
class LevelPiece:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    @property
    def is_point(self):
        return self.lo == self.hi

    def contains(self, v):
        if self.is_point:
            return v == self.lo
        above = v > self.lo or (self.lo_closed and v == self.lo)
        below = v < self.hi or (self.hi_closed and v == self.hi)
        return above and below


def value_set(m, y0, launch_kind, side="plus"):
    """The set of reachable levels h^2 as an ordered list of pieces."""
    if launch_kind in ("klein", "grushin"):
        return [LevelPiece(0.0, math.inf, True, False)]
    a0, K = _launch_constants(m, y0, launch_kind, side)
    if K > 0:
        return [LevelPiece(0.0, a0, True, False)]
    return [LevelPiece(a0, math.inf, False, False),
            LevelPiece(math.inf, math.inf, True, True),
            LevelPiece(-math.inf, 0.0, False, True)]


def alpha_for_level(m, y0, h2, launch_kind, side="plus"):
    """Non-negative alpha with h_of_launch(alpha) = h2."""
    if launch_kind in ("klein", "grushin"):
        if h2 < 0:
            raise BadParam(f"h^2={h2} is not reachable from a {launch_kind} line")
        return math.inf if math.isinf(h2) else math.sqrt(h2) / math.sqrt(_singular_factor(launch_kind))
    a0, K = _launch_constants(m, y0, launch_kind, side)
    if math.isinf(h2):
        sq = -K / a0
    elif h2 == a0:
        return math.inf
    else:
        sq = h2 * K / (a0 * (a0 - h2))
    if sq < 0:
        raise BadParam(f"h^2={h2} is not reachable from y={y0}")
    return math.sqrt(sq)


# ----------------------------
# Family classification
# ----------------------------
@dataclass
class FamilyClass:
    type: CurveType
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool
    case_plus: Optional[Case]
    case_minus: Optional[Case]
    endpoint_1: str
    endpoint_2: str
    description: str
    alpha: float
    launch_y: float
    launch_kind: str
    status: str = "ok"

    @property
    def h2_range(self):
        return format_range(self.lo, self.hi, self.lo_closed, self.hi_closed)


@dataclass
class FamilyTable:
    metric: str
    y0: float
    side_spec: str
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    @property
    def boundaries(self):
        ends = []
        for r in self.rows:
            ends += [v for v in (r.lo, r.hi) if math.isfinite(v) and v != 0.0]
        return _dedupe(ends)


def _fmt(v):
    if math.isinf(v):
        return "∞" if v > 0 else "-∞"
    return f"{v:.10g}"


def format_range(lo, hi, lo_closed, hi_closed):
    if lo == hi:
        return "∞" if math.isinf(lo) else "{" + _fmt(lo) + "}"
    return ("[" if lo_closed else "(") + f"{_fmt(lo)}, {_fmt(hi)}" + ("]" if hi_closed else ")")


def _level_samples(piece, n):
    if math.isfinite(piece.lo) and math.isfinite(piece.hi):
        return _cheb(piece.lo, piece.hi, n)
    steps = np.geomspace(1e-6, 1e6, n)
    if math.isfinite(piece.lo):
        return piece.lo + steps * max(1.0, abs(piece.lo))
    return (piece.hi - steps * max(1.0, abs(piece.hi)))[::-1]


def _representative(lo, hi):
    if lo == hi:
        return lo
    if math.isinf(lo):
        return hi - max(1.0, abs(hi))
    if math.isinf(hi):
        return lo + max(1.0, abs(lo))
    return 0.5 * (lo + hi)


class _Family:
    """One launch line with its side scans and labelling rules."""

    def __init__(self, m, y0, launch_kind, sides, scan):
        self.m, self.y0, self.kind, self.sides, self.scan = m, y0, launch_kind, sides, scan
        self.scans = {sd: _SideScan(m, y0, sd, scan) for sd in sides}
        self.name = m.line_name(y0)

    def level_type(self, h2):
        t = _level_type(h2)
        if t is not None:
            return t
        if self.kind in ("klein", "grushin"):
            return CurveType.TIMELIKE
        c = _abc(self.m, self.y0)[2] if self.kind == "regular" else \
            float(self.m.partials(0.0, self.y0)[2][1]) * (1.0 if self.sides[0] == "plus" else -1.0)
        return CurveType.TIMELIKE if c > 0 else CurveType.SPACELIKE

    def _launch_endpoint(self):
        if self.kind == "parabolic":
            return f"cusp on {self.name}"
        if self.kind in ("klein", "grushin"):
            return f"vertical on {self.name}"
        return f"regular on {self.name}"

    def _terminal(self, sd, case, h2):
        strip = self.scans[sd].strip
        if case == Case.ASYMPTOTE:
            return "---"
        if case == Case.RETURNS:
            return "---" if len(self.sides) == 2 else self._launch_endpoint()
        far = self.m.line_name(strip.omega) if math.isfinite(strip.omega) else None
        if strip.kind == "parabolic":
            a_om = self.scans[sd].a_omega
            if a_om is not None and abs(h2 - a_om) <= 1e-9 * max(1.0, abs(a_om)):
                return f"regular on {far}"
            return f"cusp on {far}"
        if strip.kind == "singular":
            return f"vertical on {far}"
        if strip.kind == "domain" and far is not None:
            return f"leaves through {far}"
        return "---"

    def labels(self, levels, workers=1):
        """Labels of many levels, in the order given."""
        if workers <= 1:
            return [self.label(v) for v in levels]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.label, levels))

    def analyse(self, h2):
        return {sd: self.scans[sd].turning(h2) for sd in self.sides}

    def label(self, h2):
        res = self.analyse(h2)
        cases = tuple(res[sd][1] for sd in self.sides)
        if len(self.sides) == 2:
            ends = (self._terminal("minus", res["minus"][1], h2),
                    self._terminal("plus", res["plus"][1], h2))
        else:
            sd = self.sides[0]
            ends = (self._launch_endpoint(), self._terminal(sd, res[sd][1], h2))
        return (self.level_type(h2),) + cases + ends

    def describe(self, h2):
        res = self.analyse(h2)
        parts = []
        if len(self.sides) == 2 and all(res[sd][1] == Case.RETURNS for sd in self.sides):
            return f"oscillates around {self.name}"
        for sd in self.sides:
            y_hat, case, _ = res[sd]
            prefix = f"{sd} side: " if len(self.sides) == 2 else ""
            if case == Case.RETURNS:
                parts.append(prefix + f"turns at y={y_hat:.6g} and returns to {self.name}")
            elif case == Case.ASYMPTOTE:
                parts.append(prefix + f"tends to the horizontal geodesic {self.m.line_name(y_hat)}")
            else:
                strip = self.scans[sd].strip
                if math.isfinite(strip.omega):
                    parts.append(prefix + f"reaches {self.m.line_name(strip.omega)}")
                else:
                    parts.append(prefix + "y grows monotonically without bound")
        return "; ".join(parts)


def _snap(value, candidates, tol):
    for c in candidates:
        if abs(value - c) <= tol * max(1.0, abs(c)):
            return c
    return value


def _bisect_level(label, v1, v2, l1, l2, tol):
    while abs(v2 - v1) > tol * max(1.0, abs(v1)):
        mid = 0.5 * (v1 + v2)
        lm = label(mid)
        if lm == l1:
            v1 = mid
        else:
            v2, l2 = mid, lm
    return 0.5 * (v1 + v2)


def _classify_piece(fam, piece, candidates, scan):
    """Atoms (lo, hi, lo_closed, hi_closed, label) of one value-set piece, merged."""
    if piece.is_point:
        return [(piece.lo, piece.hi, True, True, fam.label(piece.lo))]
    samples = _level_samples(piece, scan.h2_grid)
    labels = fam.labels(samples, scan.workers)
    cuts = []
    for v1, v2, l1, l2 in zip(samples[:-1], samples[1:], labels[:-1], labels[1:]):
        if l1 != l2:
            b = _bisect_level(fam.label, v1, v2, l1, l2, scan.level_tol)
            cuts.append(_snap(b, candidates, scan.snap_tol))
    cuts += [c for c in candidates if piece.contains(c) and c not in (piece.lo, piece.hi)]
    cuts = _dedupe([c for c in cuts if piece.lo < c < piece.hi])

    atoms = []
    if piece.lo_closed:
        atoms.append((piece.lo, piece.lo, True, True, fam.label(piece.lo)))
    edges = [piece.lo] + cuts + [piece.hi]
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        atoms.append((lo, hi, False, False, fam.label(_representative(lo, hi))))
        if i < len(cuts):
            atoms.append((hi, hi, True, True, fam.label(hi)))
    if piece.hi_closed:
        atoms.append((piece.hi, piece.hi, True, True, fam.label(piece.hi)))

    merged = [list(atoms[0])]
    for lo, hi, lc, hc, lab in atoms[1:]:
        if lab == merged[-1][4]:
            merged[-1][1], merged[-1][3] = hi, hc
        else:
            merged.append([lo, hi, lc, hc, lab])
    return [tuple(a) for a in merged]


def _candidates(fam):
    vals = [0.0]
    if fam.kind in ("regular", "parabolic"):
        vals.append(_abc(fam.m, fam.y0)[0])
    for sc in fam.scans.values():
        vals += [ac for _, ac in sc.critical]
        if sc.a_omega is not None:
            vals.append(sc.a_omega)
    return _dedupe(v for v in vals if math.isfinite(v))


def _classify_family_rows(m, y0, launch_kind, sides, include_special, scan):
    fam = _Family(m, y0, launch_kind, sides, scan)
    pieces = value_set(m, y0, launch_kind, sides[0])
    if include_special and launch_kind == "regular":
        a0 = _abc(m, y0)[0]
        pieces.insert(1 if len(pieces) > 1 else len(pieces), LevelPiece(a0, a0, True, True))
    cands = _candidates(fam)
    rows = []
    for piece in pieces:
        for lo, hi, lc, hc, lab in _classify_piece(fam, piece, cands, scan):
            rep = _representative(lo, hi)
            try:
                alpha = alpha_for_level(m, y0, rep, launch_kind, sides[0])
            except BadParam:
                alpha = math.nan
            cases = dict(zip(sides, lab[1:1 + len(sides)]))
            rows.append(FamilyClass(type=lab[0], lo=lo, hi=hi, lo_closed=lc, hi_closed=hc,
                                    case_plus=cases.get("plus"), case_minus=cases.get("minus"),
                                    endpoint_1=lab[-2], endpoint_2=lab[-1],
                                    description=fam.describe(rep), alpha=alpha,
                                    launch_y=y0, launch_kind=launch_kind))
    return rows


def _opposite(side):
    return "minus" if side == "plus" else "plus"


def classify_family(m, y0, side_spec="auto", include_special=False, verify=False,
                    scan=None, opts=None, progress=False):
    """
    Partition the launch levels of the geodesics leaving y = y0 into classes of
    equal behaviour. side_spec: plus | minus | both | region-plus | region-minus | auto.
    """
    scan = scan or ScanOptions()
    if m.symmetry != Symmetry.Y_ONLY:
        raise BadParam(f"{m.name} is not a y-only metric")
    kind = launch_kind_at(m, y0)
    if kind in ("regular", "parabolic"):
        m = sheared(m, y0)
    if side_spec == "auto":
        side_spec = {"parabolic": "region-plus", "regular": "both"}.get(kind, "plus")
    log.info("classifying %s from y0=%.6g (%s launch, %s)", m.name, y0, kind, side_spec)

    families = []
    if side_spec in ("plus", "minus"):
        families.append((y0, kind, (side_spec,), False))
    elif side_spec == "both":
        if kind == "regular":
            families.append((y0, kind, ("plus", "minus"), False))
        else:
            families += [(y0, kind, ("plus",), False), (y0, kind, ("minus",), False)]
    elif side_spec in ("region-plus", "region-minus"):
        side = side_spec.split("-")[1]
        families.append((y0, kind, (side,), False))
        strip = side_interval(m, y0, side, scan.grid)
        if strip.kind == "parabolic":
            families.append((strip.omega, "parabolic", (_opposite(side),), True))
    else:
        raise BadParam(f"unknown side spec {side_spec!r}")

    table = FamilyTable(metric=m.name, y0=y0, side_spec=side_spec)
    for launch_y, launch_kind, sides, far in families:
        mm = sheared(m, launch_y) if far else m
        rows = _classify_family_rows(mm, launch_y, launch_kind, sides, include_special, scan)
        if far:
            rows = [r for r in rows if Case.ESCAPES not in (r.case_plus, r.case_minus)]
        table.rows += rows

    if verify:
        for row in tqdm(table.rows, desc="Verifying classes", disable=not progress):
            if not _verify_row(m, row, opts):
                row.status = "unverified"
                log.warning("class %s %s could not be verified numerically", row.type.value, row.h2_range)
    log.info("%s: %d classes, boundaries %s", m.name, len(table.rows), table.boundaries)
    return table


def _verify_row(m, row, opts):
    """Integrate the representative and check it behaves as its class claims."""
    from .flow import shoot_from_parabolic, shoot_from_regular, shoot_from_singular_line

    if not math.isfinite(row.alpha):
        return True
    sides = [sd for sd, case in (("plus", row.case_plus), ("minus", row.case_minus)) if case]
    for sd in sides:
        case = row.case_plus if sd == "plus" else row.case_minus
        q0 = (0.0, row.launch_y)
        if row.launch_kind == "parabolic":
            path = shoot_from_parabolic(m, q0, row.alpha, sd, "right", opts, VERIFY_TMAX)
        elif row.launch_kind in ("klein", "grushin"):
            path = shoot_from_singular_line(m, q0, row.alpha, sd, opts, VERIFY_TMAX)
        else:
            path = shoot_from_regular(m, q0, row.alpha, sd, opts, VERIFY_TMAX)
        if case == Case.ASYMPTOTE:
            res = turning_analysis(m, row.launch_y, _representative(row.lo, row.hi), sd)
            y_star = res.y_hat_plus if sd == "plus" else res.y_hat_minus
            if not _approaches(path.y, row.launch_y, y_star):
                return False
            continue
        dist = np.abs(path.y - row.launch_y)
        k = int(np.argmax(dist))
        peak = dist[k]
        if peak == 0.0:
            return False
        crossed = np.any(np.sign(path.y[k:] - row.launch_y) != np.sign(path.y[k] - row.launch_y))
        back = float(dist[k:].min()) / peak
        if case == Case.RETURNS and not (crossed or back <= 0.1):
            return False
        if case != Case.RETURNS and (crossed or back < 0.5):
            return False
    return True


def _approaches(y, y0, y_star, reach=0.1):
    """
    y stays strictly between y0 and y_star and closes in on y_star monotonically
    up to its closest sample, ending within `reach` of the launch distance.
    """
    gap = (y_star - np.asarray(y, dtype=float)) * math.copysign(1.0, y_star - y0)
    if np.any(gap <= 0.0):
        return False
    k = int(np.argmin(gap))
    if np.any(np.diff(gap[: k + 1]) > 0.0):
        return False
    return gap[k] <= reach * abs(y_star - y0)
