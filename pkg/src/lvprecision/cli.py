"""Command-line interface.

Exit codes: 0 success, 2 usage or parse error, 3 validation error,
4 computation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import __version__
from .analytic import analytic_reports
from .config import load_model_config
from .errors import ComputationError, ParseError, ValidationError
from .mc import METHODS, McConfig, convergence_diagnostic, estimate_prmse, estimate_reliability
from .models import Score, is_discrete
from .quadrature import build_grid, format_pattern, pattern_table, true_score_curve
from .regression import fit_spline_surface
from .simulation import simulate, write_sample_csv

EXIT_USAGE, EXIT_VALIDATION, EXIT_COMPUTATION = 2, 3, 4
SURFACE_STEPS = 41
SURFACE_RANGE = (-3.0, 3.0)


class UsageError(Exception):
    pass


def parse_observed(text: str) -> Score:
    """``sum`` or ``eap[:<latent>]``, e.g. ``eap:eta_2`` or ``eap:true_sum``."""
    head, _, tail = text.partition(":")
    if head in ("sum", "summed"):
        if tail:
            raise UsageError(f"summed score takes no target: {text!r}")
        return Score.summed()
    if head == "eap":
        return Score.eap(parse_latent(tail) if tail else Score.lv(0))
    raise UsageError(f"unknown observed score {text!r}; use sum or eap[:latent]")


def parse_latent(text: str) -> Score:
    """``eta``, ``eta_<k>`` (1-based) or ``true_sum``."""
    if text in ("true_sum", "true_summed", "tau"):
        return Score.true_summed()
    if text == "eta":
        return Score.lv(0)
    if text.startswith("eta_") and text[4:].isdigit() and int(text[4:]) >= 1:
        return Score.lv(int(text[4:]) - 1)
    raise UsageError(f"unknown latent score {text!r}; use eta, eta_<k> or true_sum")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    return [_positive_int(part) for part in text.split(",") if part]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.4f}"
    return str(value)


def render(header, rows, fmt: str) -> str:
    """CSV (full precision) or an aligned text table (4 decimals)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for v in row])
        return buf.getvalue()
    cells = [list(map(str, header))] + [["NA" if v is None else _fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(args, model):
    lo, hi = args.range
    return build_grid(model.latent, args.nodes, lo, hi)


def _mc_config(args) -> McConfig:
    lo, hi = args.range
    return McConfig(n=args.n, seed=args.seed, method=args.method, nodes=args.nodes,
                    lo=lo, hi=hi, df=args.df)


def _score_for(args) -> Score:
    if args.kind == "reliability":
        return parse_observed(args.score or "sum")
    return parse_latent(args.latent or "eta")


def cmd_score_table(args) -> None:
    model = load_model_config(args.model)
    table = pattern_table(model, _grid(args, model))
    d = model.latent.dimension
    eap_cols = ["eap_eta"] if d == 1 else [f"eap_eta_{i + 1}" for i in range(d)]
    header = ["pattern", "prob"] + eap_cols + ["s"]
    rows = [
        [format_pattern(p), float(pr), *map(float, e), float(s)]
        for p, pr, e, s in zip(table["patterns"], table["probability"], table["eap"], table["summed"])
    ]
    _emit(render(header, rows, args.format), args.out)


def cmd_analytic(args) -> None:
    model = load_model_config(args.model)
    grid = _grid(args, model) if is_discrete(model) and model.latent.dimension == 1 else None
    reports = analytic_reports(model, grid)
    rows = [[name, rep.value, rep.method] for name, rep in reports]
    _emit(render(["coefficient", "value", "method"], rows, args.format), args.out)


def cmd_mc(args) -> None:
    model = load_model_config(args.model)
    cfg = _mc_config(args)
    score = _score_for(args)
    sample = simulate(model, cfg.n, cfg.seed)
    estimator = estimate_reliability if args.kind == "reliability" else estimate_prmse
    report = estimator(model, score, cfg, sample)
    if args.dump_sample:
        values = {score.label: sample.observed(score, cfg.grid(model)) if score.is_observed
                  else sample.latent(score, cfg.grid(model))}
        write_sample_csv(sample, args.dump_sample, values)
    rows = [[f"{report.kind}({score.label})", report.value, report.method, report.n, report.seed,
             report.diagnostic("half_width"), report.diagnostic("regressor")]]
    header = ["coefficient", "value", "method", "n", "seed", "half_width", "regressor"]
    _emit(render(header, rows, args.format), args.out)


def cmd_curve(args) -> None:
    model = load_model_config(args.model)
    if model.latent.dimension != 1:
        raise ValidationError("curve needs a unidimensional model")
    score = parse_observed(args.score or "sum")
    lo, hi = args.curve_range
    eta = np.linspace(lo, hi, args.steps)
    grid = _grid(args, model) if is_discrete(model) else None
    tau = true_score_curve(model, score, eta, grid)
    rows = [[float(e), float(t)] for e, t in zip(eta, tau)]
    _emit(render(["eta", "true_score"], rows, args.format), args.out)


def cmd_surface(args) -> None:
    model = load_model_config(args.model)
    if model.latent.dimension != 2:
        raise ValidationError("surface needs a two-dimensional latent model")
    cfg = _mc_config(args)
    score = parse_observed(args.score or "sum")
    sample = simulate(model, cfg.n, cfg.seed)
    x = sample.observed(score, cfg.grid(model))
    fit = fit_spline_surface(x, sample.latents, cfg.df)
    axis = np.linspace(*SURFACE_RANGE, SURFACE_STEPS)
    lattice = np.array([(a, b) for a in axis for b in axis])
    fitted = fit.predict(lattice)
    text = render(["eta1", "eta2", "fitted"], [[float(a), float(b), float(f)]
                  for (a, b), f in zip(lattice, fitted)], "csv")
    _emit(f"# r_squared={fit.r_squared!r}\n" + text, args.out)


def cmd_convergence(args) -> None:
    model = load_model_config(args.model)
    cfg = _mc_config(args)
    rows = convergence_diagnostic(model, _score_for(args), cfg, args.n_grid)
    _emit(render(["n", "r_squared", "half_width"],
                 [[r.n, r.r_squared, r.half_width] for r in rows], args.format), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lvprecision",
        description="Reliability and PRMSE of latent-variable measurement models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, quad=True):
        p.add_argument("--model", required=True, help="JSON model configuration")
        p.add_argument("--format", choices=("pretty", "csv"), default="pretty")
        p.add_argument("--out", help="write output to this file instead of stdout")
        if quad:
            p.add_argument("--nodes", type=_positive_int, default=61,
                           help="quadrature nodes per dimension (default 61)")
            p.add_argument("--range", type=float, nargs=2, default=(-6.0, 6.0),
                           metavar=("LO", "HI"), help="quadrature range in SD units")

    def mc_opts(p, n_default=10**6):
        p.add_argument("--n", type=_positive_int, default=n_default, help="Monte Carlo sample size")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--method", choices=METHODS, default="auto")
        p.add_argument("--df", type=_positive_int, default=8, help="spline df per dimension")

    def score_opts(p):
        p.add_argument("--kind", choices=("reliability", "prmse"), default="reliability")
        p.add_argument("--score", help="observed score: sum, eap, eap:eta_2, eap:true_sum")
        p.add_argument("--latent", help="latent score: eta, eta_<k>, true_sum")

    p = sub.add_parser("score-table", help="probability and EAP of every response pattern")
    common(p)
    p.set_defaults(func=cmd_score_table)

    p = sub.add_parser("analytic", help="analytic reliability and PRMSE")
    common(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("mc", help="Monte Carlo estimate of one coefficient")
    common(p)
    mc_opts(p)
    score_opts(p)
    p.add_argument("--dump-sample", metavar="CSV", help="also write the simulated sample")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("curve", help="true score curve of an observed score (d = 1)")
    common(p)
    p.add_argument("--score", help="observed score: sum or eap")
    p.add_argument("--curve-range", type=float, nargs=2, default=(-4.0, 4.0), metavar=("LO", "HI"))
    p.add_argument("--steps", type=_positive_int, default=161)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("surface", help="fitted spline surface of an observed score (d = 2)")
    common(p)
    mc_opts(p)
    p.add_argument("--score", help="observed score: sum, eap, eap:eta_2")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("convergence", help="MC estimate and half-width across sample sizes")
    common(p)
    mc_opts(p)
    score_opts(p)
    p.add_argument("--n-grid", type=_int_list, default=[10**3, 10**4, 10**5, 10**6])
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ComputationError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
