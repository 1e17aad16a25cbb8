# portrait.py
"""
Phase portraits of geodesic families as deterministic SVG files.

Colour code: timelike geodesics blue, spacelike red, isotropic yellow.
Horizontal geodesics and non-isotropic admissible directions are dashed,
parabolic lines dotted grey.

Outputs: <out>.svg (same input -> byte-identical file)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.lines import Line2D

from .errors import BadParam
from .flow import (
    IntegrationOptions,
    PhaseState,
    integrate_natural,
    shoot_from_parabolic,
    shoot_from_regular,
    shoot_from_singular_line,
)
from .metric import CurveType, PointKind, Symmetry, signature_at
from .symmetry import alpha_for_level, horizontal_geodesics, launch_kind_at

log = logging.getLogger(__name__)

# ---- CONFIG ----
STYLE = {
    CurveType.TIMELIKE: {"color": "blue", "label": "timelike"},
    CurveType.SPACELIKE: {"color": "red", "label": "spacelike"},
    CurveType.ISOTROPIC: {"color": "yellow", "label": "isotropic"},
    CurveType.MIXED: {"color": "gray", "label": "mixed"},
}
DASHED = {"color": "black", "linestyle": "--", "linewidth": 0.8}
PARABOLIC_STYLE = {"color": "0.5", "linestyle": ":", "linewidth": 0.8}
DIGITS = 6
FIGSIZE = (8, 6)
RC = {
    "svg.hashsalt": "pseudogeo",
    "path.simplify": True,
    "path.simplify_threshold": 1e-4,
    "svg.fonttype": "path",
}


@dataclass
class PortraitSpec:
    window: tuple = ((-2.0, 2.0), (-2.0, 2.0))
    launch: Optional[tuple] = None          # (x0, y0) of a family
    alphas: list = field(default_factory=list)
    h2: list = field(default_factory=list)  # levels, converted to alpha for y-only metrics
    sides: tuple = ("plus", "minus")
    branches: tuple = ("right", "left")
    starts: list = field(default_factory=list)   # extra PhaseStates
    t_max: float = 5.0
    title: Optional[str] = None
    show_horizontal: bool = True


def _launch_alphas(m, spec, kind, side):
    alphas = list(spec.alphas)
    for h2 in spec.h2:
        alphas.append(alpha_for_level(m, spec.launch[1], h2, kind, side))
    return alphas


def compute_paths(m, spec, opts=None, progress=False):
    """Every path the spec asks for, in a fixed order."""
    from tqdm import tqdm

    paths = []
    if spec.launch is not None:
        q0 = tuple(float(v) for v in spec.launch)
        kind = launch_kind_at(m, q0[1]) if m.symmetry == Symmetry.Y_ONLY else (
            "parabolic" if signature_at(m, q0).kind == PointKind.PARABOLIC else "regular")
        jobs = []
        for side in spec.sides:
            alphas = _launch_alphas(m, spec, kind, side)
            if not alphas:
                raise BadParam("a launch point needs --alpha or --h2 values")
            for alpha in alphas:
                for branch in spec.branches:
                    jobs.append((side, alpha, branch))
        for side, alpha, branch in tqdm(jobs, desc=f"Portrait {m.name}", disable=not progress):
            sgn = 1.0 if branch == "right" else -1.0
            if kind == "parabolic":
                paths.append(shoot_from_parabolic(m, q0, alpha, side, branch, opts, spec.t_max))
            elif kind in ("klein", "grushin"):
                paths.append(shoot_from_singular_line(m, q0, sgn * alpha, side, opts, spec.t_max))
            else:
                paths.append(shoot_from_regular(m, q0, sgn * alpha, side, opts, spec.t_max))
    for s in spec.starts:
        paths.append(integrate_natural(m, s, spec.t_max, opts or IntegrationOptions(dense_samples=4)))
    return paths


def _segments(x, y, period):
    """Split a polyline where y wraps around the period."""
    if period is None:
        return [(x, y)]
    yw = -period / 4.0 + np.mod(y + period / 4.0, period)
    cuts = np.nonzero(np.abs(np.diff(yw)) > period / 2.0)[0] + 1
    return list(zip(np.split(x, cuts), np.split(yw, cuts)))


def _parabolic_lines(m, window, n=2001):
    (_, _), (ylo, yhi) = window
    ys = np.linspace(ylo, yhi, n)
    keep = np.array([m.contains(float(y)) for y in ys])
    ys = ys[keep]
    if ys.size < 2:
        return []
    a, b, c = m.coefficients(0.0, ys)
    d = np.asarray(a * c - b * b, dtype=float)
    s = np.sign(d)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    return [float(0.5 * (ys[i] + ys[i + 1])) for i in idx]


def render_portrait(m, spec, out, opts=None, progress=False, paths=None):
    """Draw the paths of `spec` on metric `m` and save the SVG to `out`."""
    if paths is None:
        paths = compute_paths(m, spec, opts, progress)
    (x0, x1), (y0, y1) = spec.window

    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        used = set()
        for path in paths:
            style = STYLE[path.type_tag]
            used.add(path.type_tag)
            for xs, ys in _segments(np.asarray(path.x), np.asarray(path.y), m.period):
                ax.plot(np.round(xs, DIGITS), np.round(ys, DIGITS), color=style["color"], linewidth=1.0)

        if m.symmetry == Symmetry.Y_ONLY:
            for y in _parabolic_lines(m, spec.window):
                ax.axhline(round(y, DIGITS), **PARABOLIC_STYLE)
            if spec.show_horizontal:
                for g in horizontal_geodesics(m, window=(y0, y1)):
                    ax.axhline(round(g.y, DIGITS), **DASHED)

        if spec.launch is not None and signature_at(m, spec.launch).kind == PointKind.PARABOLIC:
            _draw_admissible(ax, m, spec)

        handles = [Line2D([0], [0], color=STYLE[t]["color"], label=STYLE[t]["label"])
                   for t in CurveType if t in used]
        handles.append(Line2D([0], [0], label="horizontal geodesic / admissible", **DASHED))
        handles.append(Line2D([0], [0], label="parabolic line", **PARABOLIC_STYLE))
        ax.legend(handles=handles, loc="upper right", fontsize=8)
        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(spec.title or f"Geodesics of {m.name}")
        fig.tight_layout()
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    log.info("portrait with %d paths written to %s", len(paths), out)
    return paths


def _draw_admissible(ax, m, spec):
    from .errors import NotTransverse
    from .lift import admissible_directions

    try:
        adm = admissible_directions(m, tuple(spec.launch))
    except NotTransverse:
        return
    (x0, x1), (y0, y1) = spec.window
    r = 0.15 * math.hypot(x1 - x0, y1 - y0)
    px, py = spec.launch
    for d in adm.directions:
        if d.kind == "isotropic":
            continue
        dx, dy = d.direction.vector()
        ax.plot([round(px - r * dx, DIGITS), round(px + r * dx, DIGITS)],
                [round(py - r * dy, DIGITS), round(py + r * dy, DIGITS)], **DASHED)
