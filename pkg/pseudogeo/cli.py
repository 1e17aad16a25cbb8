# cli.py
"""
Command-line front end.

    main.py list
    main.py integrate  --metric klein --start "0,1,1,0" --t-max 3
    main.py integrate  --metric sphere --from-parabolic "0,0" --alpha 1 --side plus
    main.py admissible --metric torus:rho=2 --point "0,3*pi/4"
    main.py classify   --metric sphere --y0 0 [--side region-plus] [--format csv]
    main.py portrait   --metric sphere --launch "0,0" --alpha 0.3,1,3 --out sphere.svg
    main.py facts      --metric torus

Results go to --out or stdout; status lines and errors go to stderr.
Exit codes: 0 success, 1 bad input, 2 integration stopped by step underflow.
"""

import argparse
import logging
import sys

from .catalog import check_facts, list_entries, lookup, parse_metric_ref
from .config import load_metric_config
from .errors import GeodesicError
from .expr import evaluate_constant
from .flow import (
    IntegrationOptions,
    PhaseState,
    SHOOT_DENSE,
    StopReason,
    integrate_natural,
    shoot_from_parabolic,
)
from .lift import admissible_directions
from .portrait import PortraitSpec, render_portrait
from .serialize import (
    admissible_to_dict,
    classification_to_csv,
    classification_to_dict,
    dumps,
    path_to_json,
)
from .symmetry import classify_family

log = logging.getLogger(__name__)

# ---- CONFIG ----
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
SIDE_SPECS = ("auto", "plus", "minus", "both", "region-plus", "region-minus")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with 1 on usage errors (2 is reserved)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ {self.prog}: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def _numbers(text, n=None):
    try:
        values = [evaluate_constant(v.strip()) for v in text.split(",") if v.strip()]
    except GeodesicError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if n is not None and len(values) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated values, got {text!r}")
    return values


def _pair(text):
    return tuple(_numbers(text, 2))


def _state(text):
    return _numbers(text, 4)


def _window(text):
    try:
        xs, ys = text.split(",")
        (x0, x1), (y0, y1) = (tuple(evaluate_constant(v) for v in part.split(":")) for part in (xs, ys))
    except (ValueError, GeodesicError) as exc:
        raise argparse.ArgumentTypeError(f"window must look like x0:x1,y0:y1, got {text!r}") from exc
    return (x0, x1), (y0, y1)


def build_parser():
    p = _Parser(prog="main.py", description="Geodesics of 2D pseudo-Riemannian metrics")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def metric_args(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--metric", help="catalog name, optionally name:key=value,...")
        g.add_argument("--config", help="TOML metric definition")

    def common(sp):
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--no-progress", action="store_true", help="Disable tqdm progress bars")

    sub.add_parser("list", help="list built-in metrics")

    sp = sub.add_parser("integrate", help="integrate one geodesic")
    metric_args(sp)
    common(sp)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--start", type=_state, help='"x,y,vx,vy"')
    g.add_argument("--from-parabolic", type=_pair, help='"x0,y0" of a parabolic point')
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--side", choices=("plus", "minus"), default="plus")
    sp.add_argument("--branch", choices=("left", "right"), default="right")
    sp.add_argument("--t-max", type=float, default=10.0)
    sp.add_argument("--dense", type=int, default=0, help="interpolated samples per step")

    sp = sub.add_parser("admissible", help="admissible directions at a parabolic point")
    metric_args(sp)
    common(sp)
    sp.add_argument("--point", type=_pair, required=True, help='"x,y"')

    sp = sub.add_parser("classify", help="classify geodesics leaving y = y0")
    metric_args(sp)
    common(sp)
    sp.add_argument("--y0", type=evaluate_constant, required=True)
    sp.add_argument("--side", choices=SIDE_SPECS, default="auto")
    sp.add_argument("--include-special", action="store_true", help="list the horizontal launch too")
    sp.add_argument("--verify", action="store_true", help="integrate one representative per class")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("portrait", help="SVG phase portrait of a geodesic family")
    metric_args(sp)
    common(sp)
    sp.add_argument("--window", type=_window, default=((-2.0, 2.0), (-2.0, 2.0)), help="x0:x1,y0:y1")
    sp.add_argument("--launch", type=_pair, help='"x0,y0" launch point of a family')
    sp.add_argument("--alpha", type=_numbers, default=[], help="comma-separated launch constants")
    sp.add_argument("--h2", type=_numbers, default=[], help="comma-separated energy levels")
    sp.add_argument("--start", type=_state, action="append", default=[], help='extra "x,y,vx,vy"')
    sp.add_argument("--side", choices=("plus", "minus", "both"), default="both")
    sp.add_argument("--t-max", type=float, default=5.0)
    sp.add_argument("--format", choices=("svg",), default="svg")

    sp = sub.add_parser("facts", help="check the recorded facts of a catalog metric")
    metric_args(sp)
    common(sp)
    return p


def _entry(args):
    if args.config:
        return load_metric_config(args.config)
    name, params = parse_metric_ref(args.metric)
    return lookup(name, params)


def _emit(text, out, what):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"✅ {what} saved to: {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def cmd_list(args):
    entries = list_entries()
    for schema, description in entries:
        print(f"{schema:<24} {description}")
    print(f"✅ {len(entries)} metrics", file=sys.stderr)
    return EXIT_OK


def cmd_integrate(args):
    entry = _entry(args)
    if args.start is not None:
        opts = IntegrationOptions(dense_samples=args.dense)
        path = integrate_natural(entry.metric, PhaseState(*args.start), args.t_max, opts)
    else:
        opts = IntegrationOptions(dense_samples=args.dense or SHOOT_DENSE)
        path = shoot_from_parabolic(entry.metric, args.from_parabolic, args.alpha, args.side,
                                    args.branch, opts, args.t_max)
    _emit(path_to_json(path, entry.name), args.out, "Geodesic")
    end = path.endpoint
    print(f"✅ {len(path)} samples, stop: {path.stop_reason.value}, end ({end.x:.6g}, {end.y:.6g})",
          file=sys.stderr)
    return EXIT_NUMERICAL if path.stop_reason == StopReason.STEP_UNDERFLOW else EXIT_OK


def cmd_admissible(args):
    entry = _entry(args)
    adm = admissible_directions(entry.metric, args.point)
    _emit(dumps(admissible_to_dict(adm, entry.name)), args.out, "Admissible directions")
    return EXIT_OK


def cmd_classify(args):
    entry = _entry(args)
    table = classify_family(entry.metric, args.y0, args.side, include_special=args.include_special,
                            verify=args.verify, progress=not args.no_progress)
    if args.format == "csv":
        if args.out:
            classification_to_csv(table, args.out)
            print(f"✅ Classification saved to: {args.out}", file=sys.stderr)
        else:
            classification_to_csv(table, sys.stdout)
    else:
        _emit(dumps(classification_to_dict(table)), args.out, "Classification")
    print(f"✅ {len(table)} classes, boundaries {table.boundaries}", file=sys.stderr)
    return EXIT_OK


def cmd_portrait(args):
    entry = _entry(args)
    if not args.out:
        print("❌ portrait needs --out", file=sys.stderr)
        return EXIT_INPUT
    sides = ("plus", "minus") if args.side == "both" else (args.side,)
    spec = PortraitSpec(window=args.window, launch=args.launch, alphas=args.alpha, h2=args.h2,
                        sides=sides, starts=[PhaseState(*s) for s in args.start], t_max=args.t_max)
    paths = render_portrait(entry.metric, spec, args.out, progress=not args.no_progress)
    print(f"✅ Portrait with {len(paths)} geodesics saved to: {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_facts(args):
    entry = _entry(args)
    results = check_facts(entry)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.kind:<20} {r.detail}" for r in results]
    _emit("\n".join(lines) + "\n", args.out, "Fact report")
    failed = sum(not r.passed for r in results)
    mark = "✅" if not failed else "❌"
    print(f"{mark} {len(results) - failed}/{len(results)} facts hold for {entry.name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_INPUT


COMMANDS = {
    "list": cmd_list,
    "integrate": cmd_integrate,
    "admissible": cmd_admissible,
    "classify": cmd_classify,
    "portrait": cmd_portrait,
    "facts": cmd_facts,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except GeodesicError as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INPUT
