# cli.py
"""Batch front end: `python cli.py <command> [inputs] [flags]`.

Exit codes: 0 computed, 1 property refuted, 2 input error.
"""
import sys
import json
import logging
import argparse
from dataclasses import dataclass, asdict, field

from dotenv import load_dotenv

# Load .env first, *then* import the library (it reads settings at import time)
load_dotenv()

import utils  # noqa: E402
from utils import FockPreserveError, VERSION  # noqa: E402
from poly import MPoly, parse_poly, indices_up_to  # noqa: E402
from stability import Region, is_stable_uni, is_stable_multi  # noqa: E402
from operators import (op_from_dict, symbol, classify_preserver, apply_op, dual_symbol,  # noqa: E402
                       op_from_symbol)
from fock import (Weight, GaussQuad, GaussianForm, fock_norm_sq, fock_inner,  # noqa: E402
                  apply_integral_rep, EXACT, MONTE_CARLO)
from leeyang import (SpinModel, HypothesisError, measure_from_dict, transform, fugacity_zeros,  # noqa: E402
                     closed_form_zeros, ly_grid_check, gls_compose, LeeYangError)
from report_gen import build_report, write_report, summary_markdown  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_REFUTED, EXIT_INPUT = 0, 1, 2
COMMANDS = ("check-stable", "symbol", "classify", "fock-norm", "apply", "adjoint",
            "ly-zeros", "transform", "gls")
MC_AGREEMENT_SIGMAS = 4.0


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    degree: int = 4
    trials: int = 1000
    seed: int = 42
    tol: float = 1e-9
    format: str = "json"
    out: str | None = None
    region: str = "upper"
    field: str = "complex"
    alpha: list | None = None
    beta: list | None = None
    gamma: list | None = None
    mode: str = EXACT
    samples: int = 20000
    direction: list | None = None
    phi_degree: int = 60

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise FockPreserveError(f"unknown command {self.command!r}")
        if self.degree < 0:
            raise FockPreserveError("--degree must be >= 0")
        if self.trials < 1:
            raise FockPreserveError("--trials must be >= 1")
        if not self.tol > 0:
            raise FockPreserveError("--tol must be positive")
        if self.format not in ("json", "csv"):
            raise FockPreserveError(f"unknown format {self.format!r}")


class InputError(FockPreserveError, ValueError):
    """Unreadable or malformed input file."""


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}") from e


def _need(cfg, count):
    if len(cfg.inputs) != count:
        raise InputError(f"{cfg.command} takes {count} input file(s), got {len(cfg.inputs)}")
    return [load_json(p) for p in cfg.inputs]


def _weight(values, n, default=1.0):
    if values is None:
        return Weight.of(default, n)
    return Weight.of(values[0] if len(values) == 1 else values, n)


def _coeff_rows(p: MPoly, split=None):
    rows = []
    for alpha, c in p.sorted_terms:
        row = {"alpha": " ".join(str(a) for a in alpha), "re": c.real, "im": c.imag}
        if split is not None:
            z, w = split.parts(alpha)
            row["z"], row["w"] = " ".join(map(str, z)), " ".join(map(str, w))
        rows.append(row)
    return rows


# --- Commands: each returns (exit_code, result, tables) ---
def cmd_check_stable(cfg):
    (data,) = _need(cfg, 1)
    p = parse_poly(data)
    region = Region.parse(cfg.region)
    if p.nvars == 1:
        verdict = is_stable_uni(p, region, cfg.tol)
    else:
        verdict = is_stable_multi(p, region, cfg.trials, cfg.seed, cfg.tol)
    result = {"headline": f"{cfg.region} stability: {verdict.outcome}", "polynomial": p.to_string(),
              "verdict": verdict.to_dict(), "outcome": verdict.outcome}
    return (EXIT_REFUTED if verdict.refuted else EXIT_OK), result, {}


def cmd_symbol(cfg):
    (data,) = _need(cfg, 1)
    G = symbol(op_from_dict(data), cfg.degree)
    result = {"headline": f"symbol truncated at w-degree {cfg.degree}", "symbol": G.to_dict(),
              "symbol_string": G.poly.to_string(
                  [f"z{j}" for j in range(G.m_out)] + [f"w{j}" for j in range(G.n_in)]),
              "terms": len(G.poly.terms)}
    return EXIT_OK, result, {"coefficients": _coeff_rows(G.poly, G.split)}


def cmd_classify(cfg):
    (data,) = _need(cfg, 1)
    c = classify_preserver(op_from_dict(data), cfg.field, cfg.degree, cfg.trials, cfg.seed, cfg.tol)
    headline = f"{c.kind} (rank {c.rank})"
    if c.witness_input is not None:
        headline += f": {c.witness_input.to_string(['z'])} -> {c.witness_output.to_string(['z'])}"
    result = {"headline": headline, "classification": c.to_dict(), "kind": c.kind,
              "rank": c.rank, "refuted": c.refuted}
    return (EXIT_REFUTED if c.refuted else EXIT_OK), result, {}


def cmd_fock_norm(cfg):
    (data,) = _need(cfg, 1)
    p = parse_poly(data)
    beta = _weight(cfg.beta, p.nvars)
    value = fock_norm_sq(p, beta)
    return EXIT_OK, {"headline": f"norm squared {value:.12g}", "value": value, "beta": beta.to_list(),
                     "polynomial": p.to_string()}, {}


def cmd_apply(cfg):
    op_data, poly_data = _need(cfg, 2)
    T, f = op_from_dict(op_data), parse_poly(poly_data)
    alpha = _weight(cfg.alpha, T.n_in)
    direct = apply_op(T, f, cfg.degree)
    quad = GaussQuad(cfg.mode, cfg.samples, cfg.seed)
    integral = apply_integral_rep(T, f, alpha, quad, max(cfg.degree, f.degree))
    rows, worst = [], 0.0
    for gamma in sorted(set(direct.terms) | set(integral.poly.terms), key=lambda g: (sum(g), g)):
        if sum(gamma) > cfg.degree:
            continue
        a, b = direct.terms.get(gamma, 0j), integral.poly.terms.get(gamma, 0j)
        row = {"alpha": " ".join(map(str, gamma)), "direct_re": a.real, "direct_im": a.imag,
               "integral_re": b.real, "integral_im": b.imag, "abs_diff": abs(a - b)}
        if cfg.mode == MONTE_CARLO:
            se = integral.stderr.get(gamma, 0.0)
            row["stderr"] = se
            row["z_score"] = abs(a - b) / se if se > 0 else (0.0 if a == b else float("inf"))
            worst = max(worst, row["z_score"])
        else:
            worst = max(worst, abs(a - b))
        rows.append(row)
    agree = worst <= (MC_AGREEMENT_SIGMAS if cfg.mode == MONTE_CARLO else 1e-12 * (1 + direct.norm1()))
    result = {"headline": f"direct vs integral representation ({cfg.mode}): {'agree' if agree else 'differ'}",
              "direct": direct.to_dict(), "integral": integral.to_dict(), "agree": agree,
              "worst": worst, "alpha": alpha.to_list()}
    return EXIT_OK, result, {"agreement": rows}


def cmd_adjoint(cfg):
    (data,) = _need(cfg, 1)
    T = op_from_dict(data)
    alpha, beta = _weight(cfg.alpha, T.n_in), _weight(cfg.beta, T.m_out)
    G = symbol(T, cfg.degree)
    G_star = dual_symbol(G, alpha, beta)
    T_star = op_from_symbol(G_star)
    rows, worst = [], 0.0
    for a in indices_up_to(T.n_in, cfg.degree):
        Tf = apply_op(T, MPoly.monomial(a))
        for c in indices_up_to(T.m_out, cfg.degree):
            g = MPoly.monomial(c)
            lhs = fock_inner(Tf, g, beta)
            rhs = fock_inner(MPoly.monomial(a), apply_op(T_star, g), alpha)
            res = abs(lhs - rhs) / (1 + abs(lhs))
            worst = max(worst, res)
            if lhs != 0 or rhs != 0:
                rows.append({"alpha": " ".join(map(str, a)), "gamma": " ".join(map(str, c)),
                             "lhs_re": lhs.real, "lhs_im": lhs.imag, "rhs_re": rhs.real,
                             "rhs_im": rhs.imag, "residual": res})
    result = {"headline": f"adjoint duality residual {worst:.3g}", "dual_symbol": G_star.to_dict(),
              "max_residual": worst, "alpha": alpha.to_list(), "beta": beta.to_list()}
    return EXIT_OK, result, {"duality": rows}


def cmd_ly_zeros(cfg):
    (data,) = _need(cfg, 1)
    model = SpinModel.from_dict(data)
    fz = fugacity_zeros(model, cfg.direction)
    result = {"headline": f"{len(fz.zeros)} zeros, max ||u|-1| = {fz.max_deviation:.3g}",
              "zeros": fz.to_dict(), "max_deviation": fz.max_deviation, "holds": fz.holds}
    return (EXIT_OK if fz.holds else EXIT_REFUTED), result, {"zeros": fz.rows()}


def cmd_transform(cfg):
    (data,) = _need(cfg, 1)
    mu = measure_from_dict(data)
    tr = transform(mu, cfg.degree)
    grid = ly_grid_check(mu)
    try:
        zeros = [{"re": z.real, "im": z.imag} for z in closed_form_zeros(mu, 5)]
    except LeeYangError:
        zeros = []
    result = {"headline": f"{mu.kind}: {tr.closed_form}", "transform": tr.to_dict(),
              "grid_check": grid.to_dict(), "closed_form_zeros": zeros, "ly_grid_holds": grid.holds}
    return EXIT_OK, result, {"coefficients": _coeff_rows(tr.poly)}


def cmd_gls(cfg):
    (data,) = _need(cfg, 1)
    try:
        phi_data, g_data = data["phi"], data["g"]
    except (KeyError, TypeError) as e:
        raise InputError(f"gls input needs 'phi' and 'g': {e}") from e
    if isinstance(phi_data, dict) and "kind" in phi_data:
        phi_hat = transform(measure_from_dict(phi_data), cfg.phi_degree).poly
    else:
        phi_hat = parse_poly(phi_data)
    if isinstance(g_data, dict) and "matrix" in g_data:
        g = GaussianForm.from_dict(g_data)
    else:
        g = parse_poly(g_data)
    n = phi_hat.nvars
    alpha = _weight(cfg.alpha, n)
    gamma = _weight(cfg.gamma, n)
    beta = _weight(cfg.beta, n, default=[a + c for a, c in zip(alpha.beta, gamma.beta)])
    res = gls_compose(phi_hat, g, alpha, gamma, beta, cfg.degree, cfg.trials, cfg.seed, cfg.tol)
    result = {"headline": f"psi_hat Lee-Yang check: {res.verdict.outcome}", "gls": res.to_dict(),
              "outcome": res.verdict.outcome, "bound": res.bound}
    return (EXIT_REFUTED if res.verdict.refuted else EXIT_OK), result, {"psi_hat": _coeff_rows(res.psi_hat)}


DISPATCH = {
    "check-stable": cmd_check_stable,
    "symbol": cmd_symbol,
    "classify": cmd_classify,
    "fock-norm": cmd_fock_norm,
    "apply": cmd_apply,
    "adjoint": cmd_adjoint,
    "ly-zeros": cmd_ly_zeros,
    "transform": cmd_transform,
    "gls": cmd_gls,
}


def run(command, config: RunConfig):
    """Execute one command; returns (exit_code, payload or None)."""
    try:
        code, result, tables = DISPATCH[command](config)
    except HypothesisError as e:
        logger.error("[%s Error] %s", command, e)
        payload = build_report(command, asdict(config), {"error": str(e), "hypothesis": e.hypothesis},
                               exit_code=EXIT_INPUT)
        return EXIT_INPUT, payload
    except FockPreserveError as e:
        logger.error("[%s Error] %s", command, e)
        return EXIT_INPUT, build_report(command, asdict(config), {"error": str(e)}, exit_code=EXIT_INPUT)
    return code, build_report(command, asdict(config), result, tables, exit_code=code)


# --- Argument parsing ---
def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser():
    parser = argparse.ArgumentParser(prog="fock-preserve",
                                     description="Zero-preserver checks for polynomials, operators and Lee-Yang measures.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--degree", type=int, default=4, help="truncation degree D")
    common.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials")
    common.add_argument("--seed", type=int, default=utils.DEFAULT_SEED)
    common.add_argument("--tol", type=float, default=utils.DEFAULT_TOL)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="report path (stdout when omitted)")
    common.add_argument("--region", choices=("upper", "right", "real"), default="upper")
    common.add_argument("--field", choices=("complex", "real"), default="complex")
    common.add_argument("--alpha", type=_floats, default=None, help="input weight, e.g. 1 or 1,2")
    common.add_argument("--beta", type=_floats, default=None, help="output weight")
    common.add_argument("--gamma", type=_floats, default=None, help="gls weight gamma")
    common.add_argument("--mode", choices=(EXACT, MONTE_CARLO), default=EXACT)
    common.add_argument("--samples", type=int, default=20000, help="Monte Carlo samples")
    common.add_argument("--direction", type=_ints, default=None, help="fugacity direction, e.g. 1,2")
    common.add_argument("--phi-degree", type=int, default=60, help="truncation of a measure transform in gls")

    sub = parser.add_subparsers(dest="command", required=True)
    inputs = {"apply": ("operator", "polynomial")}
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        for arg in inputs.get(name, ("input",)):
            p.add_argument(arg)
    return parser


def config_from_args(args) -> RunConfig:
    paths = [getattr(args, k) for k in ("operator", "polynomial", "input") if getattr(args, k, None)]
    return RunConfig(command=args.command, inputs=paths, degree=args.degree, trials=args.trials,
                     seed=args.seed, tol=args.tol, format=args.format, out=args.out,
                     region=args.region, field=args.field, alpha=args.alpha, beta=args.beta,
                     gamma=args.gamma, mode=args.mode, samples=args.samples,
                     direction=args.direction, phi_degree=args.phi_degree)


def main(argv=None):
    logging.basicConfig(level=getattr(logging, utils.LOG_LEVEL, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except FockPreserveError as e:
        logger.error("[%s Error] %s", args.command, e)
        return EXIT_INPUT
    code, payload = run(args.command, config)
    text = write_report(payload, config.format, config.out)
    if config.out:
        sys.stdout.write(summary_markdown(payload))
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
