"""Command-line front end.

Exit status: 0 when the record is consistent with a classical state (or is the
vacuum), 2 when nonclassicality is witnessed, 1 on bad input or processing
errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal
from importlib import resources
from pathlib import Path

from . import numeric
from .classicality import DEFAULT_DEPTH_CAP, NONCLASSICAL, analyze, pnd_from_q
from .moments import gamma_closed_form, q_from_pnd
from .numeric import DOUBLE, EXTENDED, MODES
from .pnd import PND, generate_pnd, state_from_dict

EXIT_CONSISTENT = 0
EXIT_ERROR = 1
EXIT_NONCLASSICAL = 2

TAIL_MASS = 1e-12
MAX_AUTO_K = 4000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input


def preset_names():
    folder = resources.files("pndclass") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def _read_json(source):
    """JSON from a file path, falling back to a bundled preset of that name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    else:
        name = path.name[:-5] if path.name.endswith(".json") else path.name
        if name not in preset_names():
            raise FileNotFoundError(f"{source}: no such file or bundled preset")
        text = (resources.files("pndclass") / "presets" / f"{name}.json").read_text()
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{source}: malformed JSON ({exc})") from None


def auto_K(spec, mode=DOUBLE, start=20):
    """Smallest tried K whose record misses less than ``TAIL_MASS`` probability."""
    K = start
    while True:
        p = generate_pnd(spec, K, mode)
        if p.complete:
            return K
        missing = 1 - numeric.to_float(numeric.fsum(p.probabilities, p.mode))
        if missing < TAIL_MASS or K >= MAX_AUTO_K:
            return K
        K = int(K * 1.5) + 1


def load_input(args):
    """``(pnd, gamma)`` from the analyze arguments; ``gamma`` only for state specs."""
    mode = args.mode
    if args.q is not None:
        try:
            values = [numeric.parse_number(v, mode) for v in args.q.split(",") if v.strip()]
        except (ValueError, ArithmeticError):
            raise ValueError(f"cannot parse q-values {args.q!r}") from None
        if not values:
            raise ValueError("--q needs at least one value")
        return pnd_from_q(values, mode, label="inline q-values"), None
    data = _read_json(args.pnd if args.pnd is not None else args.state)
    if args.pnd is not None or "p" in data:
        # presets may hold a measured record rather than a state description
        pnd = PND.from_dict(data, mode)
        if args.K is not None:
            pnd = pnd.truncate(args.K)
        return pnd, None
    spec = state_from_dict(data)
    K = args.K if args.K is not None else int(data.get("K", 0)) or auto_K(spec, mode)
    pnd = generate_pnd(spec, K, mode)
    if data.get("label"):
        pnd = PND(pnd.probabilities, pnd.normalization, str(data["label"]), pnd.complete)
    depth = args.depth if args.depth is not None else min((K - 1) // 2, DEFAULT_DEPTH_CAP)
    try:
        gamma = gamma_closed_form(spec, 2 * depth + 1, mode)
        if mode == DOUBLE and not all(math.isfinite(g) for g in gamma.values):
            gamma = gamma_closed_form(spec, 2 * depth + 1, EXTENDED)
    except (OverflowError, ValueError):
        gamma = None
    return pnd, gamma


# ---------------------------------------------------------------------------
# output


def figure_csv(pnd):
    """CSV text with columns n, p_n, q_n at 17 significant digits."""
    q = q_from_pnd(pnd)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "p_n", "q_n"])
    for n, (p, qn) in enumerate(zip(pnd.probabilities, q.values)):
        writer.writerow([n, _fmt(p), _fmt(qn)])
    return buf.getvalue()


def _fmt(x):
    if numeric.is_mpf(x):
        import mpmath

        return mpmath.nstr(x, 17, min_fixed=-5, max_fixed=5)
    return f"{numeric.to_float(x):.17g}"


def format_report(report):
    lines = []
    head = {
        NONCLASSICAL: "NONCLASSICAL (witnessed)",
        "consistent": f"consistent with a classical state up to depth {report.depth}",
        "vacuum": "vacuum state, classical",
    }[report.verdict]
    if report.label:
        lines.append(f"input: {report.label}")
    lines.append(f"K = {report.K}, mode = {report.mode}")
    lines.append(f"verdict: {head}")
    for w in report.witnesses:
        lines.append(f"  witness [{w['test']}] n={w['index']}: {w['detail']}")
    lines.append(f"zero rule: {report.zero_rule['message']}")
    if report.local3:
        fails = [e["n"] for e in report.local3 if e["status"] == "fail"]
        lines.append(f"three-term: {len(report.local3)} sites, failures at {fails}" if fails else f"three-term: {len(report.local3)} sites pass")
    if report.local5:
        fails = [e["n"] for e in report.local5 if e["status"] == "fail"]
        lines.append(f"five-term: failures at {fails}" if fails else f"five-term: {len(report.local5)} sites pass")
    if report.dichotomy:
        lines.append(f"dichotomy: {report.dichotomy['kind']}")
    if report.oscillation:
        osc = report.oscillation
        peaks = [pk["n"] for pk in osc["p_maxima"]]
        lines.append(f"q pattern: {osc['pattern']}; p maxima at {peaks}, spacings {osc['p_periods']}")
    if report.hierarchy:
        statuses = [
            f"{row['depth']}:{row['L']['status']}/{row['L~']['status'] if row['L~'] else '-'}" for row in report.hierarchy
        ]
        lines.append("hierarchy L/L~: " + " ".join(statuses))
    if report.mandel_q:
        mq = report.mandel_q
        tag = "" if mq["definitive"] else " (not definitive)"
        lines.append(f"Mandel Q = {mq['value']}{tag}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args):
    if args.depth is not None and args.depth < 0:
        raise ValueError("--depth must be >= 0")
    pnd, gamma = load_input(args)
    report = analyze(pnd, depth=args.depth, tolerance=args.tol, exhaustive=args.exhaustive, gamma=gamma)
    text_out = sys.stdout
    if args.plot is not None:
        data = figure_csv(pnd)
        if args.plot == "-":
            sys.stdout.write(data)
            text_out = sys.stderr
        else:
            Path(args.plot).write_text(data)
    if args.json is not None:
        if args.json == "-":
            print(report.to_json(), file=sys.stdout)
            text_out = sys.stderr
        else:
            Path(args.json).write_text(report.to_json() + "\n")
    print(format_report(report), file=text_out)
    return EXIT_NONCLASSICAL if report.nonclassical else EXIT_CONSISTENT


def cmd_figure(args):
    data = _read_json(args.name)
    spec = state_from_dict(data)
    K = args.K if args.K is not None else int(data.get("K", 0)) or auto_K(spec, args.mode)
    text = figure_csv(generate_pnd(spec, K, args.mode))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_CONSISTENT


def cmd_presets(args):
    for name in preset_names():
        data = _read_json(name)
        print(f"{name}: {data.get('label', '')}")
    return EXIT_CONSISTENT


def build_parser():
    parser = _Parser(prog="pndclass", description="Classicality tests for photon number distributions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="run the classicality tests on one input")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--pnd", metavar="PATH", help="PND JSON file {p, mode, label}")
    src.add_argument("--state", metavar="PATH", help="state JSON file or bundled preset name")
    src.add_argument("--q", metavar="LIST", help="comma-separated q-values q_0,q_1,...")
    a.add_argument("--K", type=int, help="truncation index (states: default from the file or automatic)")
    a.add_argument("--depth", type=int, help="deepest Hankel order to check")
    a.add_argument("--mode", choices=MODES, default=None, help="arithmetic mode (default: exact for --q, double otherwise)")
    a.add_argument("--exhaustive", action="store_true", help="run every test even after a witness")
    a.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
    a.add_argument("--plot", metavar="PATH", nargs="?", const="-", help="write n,p_n,q_n CSV (stdout if no path)")
    a.add_argument("--tol", type=float, help="relative tolerance (default depends on the mode)")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("figure", help="CSV data for a preset or state file")
    f.add_argument("name", help="preset name or state JSON path")
    f.add_argument("--K", type=int)
    f.add_argument("--mode", choices=MODES, default=DOUBLE)
    f.add_argument("-o", "--output", metavar="PATH")
    f.set_defaults(func=cmd_figure)

    p = sub.add_parser("presets", help="list bundled presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "mode", "") is None:
            args.mode = "exact" if args.q is not None else DOUBLE
        if getattr(args, "tol", None) is not None and args.tol < 0:
            raise ValueError("--tol must be >= 0")
        return args.func(args)
    except UsageError as exc:
        print(f"pndclass: error: {exc}", file=sys.stderr)
    except (ValueError, TypeError, OSError, ArithmeticError) as exc:
        print(f"pndclass: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
