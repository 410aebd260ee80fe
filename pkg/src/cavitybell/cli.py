"""Command-line front end: ``cavitybell table1 | fig1 | fig2 | correlate | scan``.

Exit codes: 0 success, 1 usage error, 2 config parse error, 3 failed
internal consistency check.
"""

from __future__ import annotations

import argparse
import ast
import csv
import math
import operator
import sys
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .bell import (
    DEFAULT_ETA_RANGE,
    DEFAULT_N_LIST,
    FIG2_ETA1,
    RabiSubcase,
    bell_sum,
    bloch_restricted_settings,
    check_result,
    eta_grid,
    objective,
    scan_curve_fig1,
    scan_curve_fig2,
    smax_phase_analytic,
    table1,
)
from .correlators import (
    AGREEMENT_TOL,
    Scheme,
    alpha_from_angles,
    beta_from_angles,
    coefficients,
    correlation_closed_form,
    correlation_generic,
)
from .evolution import InitialCase, Scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3
CHECK_TOL = 1e-9
CHECK_SAMPLES = 200

ROW_HEADER = ["case", "scheme", "subcase", "n", "eta1", "eta2", "a1", "a1p", "a2", "a2p", "alpha", "beta", "S"]


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


# -- numbers -----------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos}


def parse_number(text: str) -> float:
    """Evaluate a float literal or simple expression such as ``pi/(4*sqrt(2))``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot parse number {text!r}: {exc}") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def parse_n_list(text: str) -> list[int]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("n list is empty")
    out = []
    for t in items:
        if not t.isdigit():
            raise ValueError(f"photon number must be a non-negative integer, got {t!r}")
        out.append(int(t))
    return sorted(set(out))


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def fmt(x) -> str:
    x = float(x) + 0.0
    return f"{x:.6g}"


def display2(x: float) -> str:
    return str(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# -- output ------------------------------------------------------------------

def write_rows(header: list[str], rows: list[list[str]], out: str | None, fmt_name: str) -> None:
    delimiter = "\t" if fmt_name == "tsv" else ","
    if out is None:
        w = csv.writer(sys.stdout, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    try:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror or exc}") from None


def write_plot(path: str, curves: list[tuple[str, np.ndarray]], xlabel: str, ylabel: str) -> None:
    """Render curves as a standalone SVG line plot."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "cavitybell"
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, data in curves:
        ax.plot(data[:, 0], data[:, 1], lw=0.8, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend(fontsize="small")
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise CliError(f"cannot write plot {path}: {exc.strerror or exc}") from None
    finally:
        plt.close(fig)


def _stride_indices(count: int, extra=()) -> list[int]:
    stride = max(1, count // CHECK_SAMPLES)
    return sorted(set(range(0, count, stride)) | {int(i) for i in extra})


# -- selectors ---------------------------------------------------------------

def _selected(values: list[str] | None, parse, universe):
    if not values:
        return list(universe)
    chosen = {parse(v) for v in values}
    return [u for u in universe if u in chosen]


def _eta_range(args, default: tuple[float, float]) -> tuple[float, float]:
    lo = default[0] if args.eta_min is None else args.eta_min
    hi = default[1] if args.eta_max is None else args.eta_max
    if not hi > lo:
        raise CliError(f"empty eta range [{lo}, {hi}]")
    return lo, hi


def _step(args, default: float) -> float:
    step = default if args.step is None else args.step
    if not step > 0:
        raise CliError(f"step must be positive, got {step}")
    return step


# -- commands ----------------------------------------------------------------

def cmd_table1(args) -> int:
    cells = [(c, s, r)
             for c in _selected(args.case, InitialCase.parse, InitialCase)
             for s in _selected(args.scheme, Scheme.parse, Scheme)
             for r in _selected(args.subcase, RabiSubcase.parse, RabiSubcase)]
    n_list = args.n if args.n is not None else list(DEFAULT_N_LIST)
    step2d = args.step2d
    if not step2d > 0:
        raise CliError(f"--step2d must be positive, got {step2d}")
    results = table1(n_list, _eta_range(args, DEFAULT_ETA_RANGE), _step(args, 1e-3), step2d, cells)
    rows, worst = [], 0.0
    for best, per_n in results:
        worst = max(worst, check_result(best))
        st = best.settings
        rows.append([str(best.case), str(best.scheme), str(best.subcase), str(best.n),
                     fmt(best.eta1), fmt(best.eta2), fmt(st.a1), fmt(st.a1p), fmt(st.a2), fmt(st.a2p),
                     fmt(best.alpha), fmt(best.beta), fmt(best.s_max), display2(best.s_max)])
    write_rows(ROW_HEADER + ["S_display"], rows, args.out, args.format)
    if worst > CHECK_TOL:
        raise CliError(f"state-vector CHSH sum disagrees with reported maximum by {worst:.3g}", EXIT_CHECK)
    return EXIT_OK


def cmd_fig1(args) -> int:
    data = scan_curve_fig1(_eta_range(args, DEFAULT_ETA_RANGE), _step(args, 1e-3))
    write_rows(["eta2", "value"], [[fmt(x), fmt(y)] for x, y in data], args.out, args.format)
    if args.plot:
        write_plot(args.plot, [("sin(eta2 sqrt2) cos(eta2)", data)], "eta2", "sin(eta2 sqrt2) cos(eta2)")
    return EXIT_OK


def _check_curve(case, n, eta1, data) -> float:
    """Largest gap between a restricted Bloch maximum and the state-vector CHSH sum, on a sample of rows."""
    worst = 0.0
    for i in _stride_indices(len(data), [np.argmax(data[:, 1])]):
        eta2, s = data[i]
        sc = Scenario(case, n, eta1, eta2)
        coef = coefficients(sc)
        st = bloch_restricted_settings(math.atan2(coef.alpha, coef.beta))
        worst = max(worst, abs(bell_sum(sc, Scheme.BLOCH, st) - s))
    return worst


def cmd_fig2(args) -> int:
    eta1 = FIG2_ETA1 if args.eta1 is None else args.eta1
    n_list = args.n if args.n is not None else [1]
    if len(n_list) != 1:
        raise CliError("fig2 takes a single --n")
    n = n_list[0]
    data = scan_curve_fig2(eta1, n, _eta_range(args, (0.0, 18.8)), _step(args, 1e-3))
    write_rows(["eta2", "smax"], [[fmt(x), fmt(y)] for x, y in data], args.out, args.format)
    if args.plot:
        write_plot(args.plot, [("III B ii", data)], "eta2", "S_max")
    worst = _check_curve(InitialCase.III, n, eta1, data)
    if worst > CHECK_TOL:
        raise CliError(f"curve disagrees with state-vector CHSH sum by {worst:.3g}", EXIT_CHECK)
    return EXIT_OK


def _single(values, parse, name):
    if not values or len(values) != 1:
        raise CliError(f"correlate needs exactly one --{name}")
    return parse(values[0])


def cmd_correlate(args) -> int:
    case = _single(args.case, InitialCase.parse, "case")
    scheme = _single(args.scheme, Scheme.parse, "scheme")
    if args.n is None or len(args.n) != 1:
        raise CliError("correlate needs exactly one --n")
    eta1 = args.eta1 if args.eta1 is not None else args.eta
    eta2 = args.eta2 if args.eta2 is not None else args.eta
    if eta1 is None or eta2 is None:
        raise CliError("correlate needs --eta or both --eta1 and --eta2")
    sc = Scenario(case, args.n[0], eta1, eta2)
    m = scheme.settings(args.a1, args.a2)
    e_gen = correlation_generic(sc, m)
    e_closed = correlation_closed_form(sc, m)
    coef = coefficients(sc)
    diff = abs(e_gen - e_closed)
    ok = diff < AGREEMENT_TOL
    write_rows(["case", "scheme", "n", "eta1", "eta2", "a1", "a2", "E_generic", "E_closed", "alpha", "beta",
                "abs_diff", "check"],
               [[str(case), str(scheme), str(sc.n), fmt(eta1), fmt(eta2), fmt(args.a1), fmt(args.a2),
                 fmt(e_gen), fmt(e_closed), fmt(coef.alpha), fmt(coef.beta), fmt(diff), "PASS" if ok else "FAIL"]],
               args.out, args.format)
    if not ok:
        raise CliError(f"closed form and state-vector correlation differ by {diff:.3g}", EXIT_CHECK)
    return EXIT_OK


# -- scan config -------------------------------------------------------------

@dataclass
class RunConfig:
    cases: list[InitialCase] = field(default_factory=lambda: list(InitialCase))
    schemes: list[Scheme] = field(default_factory=lambda: list(Scheme))
    subcases: list[RabiSubcase] = field(default_factory=lambda: list(RabiSubcase))
    n: list[int] = field(default_factory=lambda: [1])
    eta_min: float = DEFAULT_ETA_RANGE[0]
    eta_max: float = DEFAULT_ETA_RANGE[1]
    step: float = 1e-2
    eta1: float | None = None
    eta1_step: float = 1e-2
    out: str | None = None
    format: str = "csv"
    plot: str | None = None


def _parse_format(text: str) -> str:
    v = text.strip().lower()
    if v not in ("csv", "tsv"):
        raise ValueError(f"format must be csv or tsv, got {text!r}")
    return v


def _positive(text: str) -> float:
    v = parse_number(text)
    if not v > 0:
        raise ValueError(f"must be positive, got {text!r}")
    return v


_CONFIG_KEYS = {
    "case": ("cases", lambda v: [InitialCase.parse(x) for x in _split(v)]),
    "scheme": ("schemes", lambda v: [Scheme.parse(x) for x in _split(v)]),
    "subcase": ("subcases", lambda v: [RabiSubcase.parse(x) for x in _split(v)]),
    "n": ("n", parse_n_list),
    "eta_min": ("eta_min", parse_number),
    "eta_max": ("eta_max", parse_number),
    "step": ("step", _positive),
    "eta1": ("eta1", parse_number),
    "eta1_step": ("eta1_step", _positive),
    "out": ("out", str.strip),
    "format": ("format", _parse_format),
    "plot": ("plot", str.strip),
}


def parse_config(text: str, source: str = "config") -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma-separated."""
    cfg = RunConfig()
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{source}:{lineno}: expected key = value", EXIT_CONFIG)
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise CliError(f"{source}:{lineno}: unknown key {key!r}", EXIT_CONFIG)
        if key in seen:
            raise CliError(f"{source}:{lineno}: duplicate key {key!r} (first on line {seen[key]})", EXIT_CONFIG)
        seen[key] = lineno
        attr, parse = _CONFIG_KEYS[key]
        try:
            parsed = parse(value)
        except ValueError as exc:
            raise CliError(f"{source}:{lineno}: {key}: {exc}", EXIT_CONFIG) from None
        if isinstance(parsed, list) and not parsed:
            raise CliError(f"{source}:{lineno}: {key}: empty list", EXIT_CONFIG)
        setattr(cfg, attr, parsed)
    if not cfg.eta_max > cfg.eta_min:
        line = seen.get("eta_max", seen.get("eta_min", 0))
        raise CliError(f"{source}:{line}: empty eta range [{cfg.eta_min}, {cfg.eta_max}]", EXIT_CONFIG)
    return cfg


def _scan_block(cfg: RunConfig, case, scheme, subcase, n) -> np.ndarray:
    """Columns (eta1, eta2, alpha, beta, S) for one selector tuple."""
    eta2 = eta_grid(cfg.eta_min, cfg.eta_max, cfg.step)
    if subcase is RabiSubcase.EQUAL:
        eta1 = eta2
    elif cfg.eta1 is not None:
        eta1 = np.full_like(eta2, cfg.eta1)
    else:
        inner = eta_grid(cfg.eta_min, cfg.eta_max, cfg.eta1_step)
        s = objective(case, scheme, n, inner[:, None], eta2[None, :])
        eta1 = inner[np.argmax(s, axis=0)]
    alpha = alpha_from_angles(case, n, eta1, eta2)
    beta = beta_from_angles(case, n, eta1, eta2)
    s = objective(case, scheme, n, eta1, eta2)
    return np.column_stack([eta1, eta2, alpha, beta, s])


def _settings_for(scheme, alpha, beta):
    if scheme is Scheme.PHASE:
        return smax_phase_analytic(alpha)[1]
    return bloch_restricted_settings(math.atan2(alpha, beta))


def run_scan(cfg: RunConfig) -> tuple[list[list[str]], list[tuple[str, np.ndarray]], float]:
    rows, curves, worst = [], [], 0.0
    for case in sorted(set(cfg.cases), key=list(InitialCase).index):
        for scheme in sorted(set(cfg.schemes), key=list(Scheme).index):
            for subcase in sorted(set(cfg.subcases), key=list(RabiSubcase).index):
                for n in sorted(set(cfg.n)):
                    block = _scan_block(cfg, case, scheme, subcase, n)
                    curves.append((f"{case} {scheme} {subcase} n={n}", block[:, [1, 4]]))
                    for i in _stride_indices(len(block), [np.argmax(block[:, 4])]):
                        e1, e2, a, b, s = block[i]
                        st = _settings_for(scheme, a, b)
                        worst = max(worst, abs(bell_sum(Scenario(case, n, e1, e2), scheme, st) - s))
                    for e1, e2, a, b, s in block:
                        st = _settings_for(scheme, a, b)
                        rows.append([str(case), str(scheme), str(subcase), str(n), fmt(e1), fmt(e2),
                                     fmt(st.a1), fmt(st.a1p), fmt(st.a2), fmt(st.a2p), fmt(a), fmt(b), fmt(s)])
    return rows, curves, worst


def cmd_scan(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {args.config}: {exc.strerror or exc}", EXIT_CONFIG) from None
    cfg = parse_config(text, args.config)
    out = args.out if args.out is not None else cfg.out
    fmt_name = args.format if args.format_given else cfg.format
    plot = args.plot if args.plot is not None else cfg.plot
    rows, curves, worst = run_scan(cfg)
    write_rows(ROW_HEADER, rows, out, fmt_name)
    if plot:
        write_plot(plot, curves, "eta2", "S")
    if worst > CHECK_TOL:
        raise CliError(f"scan disagrees with state-vector CHSH sum by {worst:.3g}", EXIT_CHECK)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _arg_type(fn):
    def wrapped(text):
        try:
            return fn(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    wrapped.__name__ = fn.__name__
    return wrapped


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "tsv"), default=None)
    common.add_argument("--step", type=_arg_type(parse_number), metavar="R", help="eta grid step")
    common.add_argument("--eta-min", type=_arg_type(parse_number), metavar="R")
    common.add_argument("--eta-max", type=_arg_type(parse_number), metavar="R")
    common.add_argument("--n", type=_arg_type(parse_n_list), metavar="LIST", help="photon numbers, e.g. 0,1,2,4")
    common.add_argument("--case", type=_split, metavar="I|II|III")
    common.add_argument("--scheme", type=_split, metavar="phase|bloch")
    common.add_argument("--subcase", type=_split, metavar="equal|unequal")
    common.add_argument("--plot", metavar="PATH", help="also write an SVG plot of the curve(s)")

    parser = _Parser(prog="cavitybell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("table1", parents=[common], help="maximum CHSH sum for all 12 configurations")
    p.add_argument("--step2d", type=_arg_type(parse_number), default=1e-2, metavar="R",
                   help="grid step of the 2-D scan for Bloch read-out with unequal angles")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fig1", parents=[common], help="tabulate sin(eta2 sqrt2) cos(eta2)")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", parents=[common], help="restricted Bloch S_max against eta2, case III")
    p.add_argument("--eta1", type=_arg_type(parse_number), metavar="R", help="default pi/(4 sqrt2)")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("correlate", parents=[common], help="correlation at one point, both routes")
    p.add_argument("--eta", type=_arg_type(parse_number), metavar="R", help="common Rabi angle")
    p.add_argument("--eta1", type=_arg_type(parse_number), metavar="R")
    p.add_argument("--eta2", type=_arg_type(parse_number), metavar="R")
    p.add_argument("--a1", type=_arg_type(parse_number), default=0.0, metavar="R", help="phi1 or theta1")
    p.add_argument("--a2", type=_arg_type(parse_number), default=0.0, metavar="R", help="phi2 or theta2")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("scan", parents=[common], help="sweep defined by a key=value config file")
    p.add_argument("config", help="config file path")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    args.format_given = args.format is not None
    if args.format is None:
        args.format = "csv"
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cavitybell: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"cavitybell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
