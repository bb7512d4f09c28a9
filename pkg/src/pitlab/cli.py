"""Command line front end.

Exit codes: 0 success, 1 a check or invariant failed, 2 usage or
configuration error. Failures print one JSON record on stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from contextlib import nullcontext

import numpy as np

from . import hp
from .acceptance import run_suite
from .coeffs import CoefficientSequence, make_quadratic_phase, make_rational_phase
from .evaluate import GridSpec, SeriesKernel, eval_f, eval_grid, evaluation_overrides
from .growth import indicator_estimate, levy_ratio, pit_detect
from .panto import eval_trig_sum, trig_sum_reduction
from .zeros import SectorBox, locate_zeros


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--alpha", help="quadratic phase parameter: sqrt2, golden, pi, p/q or a decimal")
    common.add_argument("--config", help="JSON file with a 'family' entry and default parameters")
    common.add_argument("--tolerance", type=float, help="absolute accuracy target for every evaluation")
    common.add_argument("--precision-bits", type=int, help="working precision for every evaluation")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--threads", type=int, default=1, help="worker processes where supported")

    p = _Parser(prog="pitlab", description="Entire functions with unimodular Taylor phases.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("eval", parents=[common], help="f(z) with error bounds")
    s.add_argument("--z", type=_pair, required=True, metavar="RE,IM")

    s = sub.add_parser("grid", parents=[common], help="log|f| on a polar grid (CSV)")
    s.add_argument("--rmin", type=float, required=True)
    s.add_argument("--rmax", type=float, required=True)
    s.add_argument("--nr", type=int, required=True)
    s.add_argument("--ntheta", type=int, required=True)

    s = sub.add_parser("zeros", parents=[common], help="certified zeros in a sector (CSV or .json)")
    s.add_argument("--rmax", type=float, required=True)
    s.add_argument("--rmin", type=float, default=0.0)
    s.add_argument("--sector", type=_pair, metavar="LO,HI", help="angular range in radians")

    s = sub.add_parser("indicator", parents=[common], help="indicator estimate (CSV)")
    s.add_argument("--rwindow", type=_pair, required=True, metavar="LO,HI")
    s.add_argument("--ntheta", type=int, default=128)
    s.add_argument("--rho", type=float, default=1.0)

    s = sub.add_parser("pits", parents=[common], help="pit components (JSON)")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--rmin", type=float, default=25.0)
    s.add_argument("--rmax", type=float, default=30.0)
    s.add_argument("--dr", type=float, default=0.1)
    s.add_argument("--ntheta", type=int, default=2048)
    s.add_argument("--href", type=float, default=1.0, help="reference indicator value")

    s = sub.add_parser("ratio", parents=[common], help="M(r)/m2(r) series (CSV)")
    s.add_argument("--r", type=_floats, required=True, metavar="LIST")

    s = sub.add_parser("trigsum", parents=[common], help="exact trigonometric sum for rational alpha (JSON)")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--check-points", type=int, default=0, help="compare with the series at this many points")
    s.add_argument("--check-radius", type=float, default=10.0)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--suite", choices=["quick", "full"], default="quick")
    s.add_argument("--criteria", type=_floats, help="subset of criterion numbers")
    return p


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _merge(args: argparse.Namespace, cfg: dict) -> None:
    """Config values fill in flags that were not given on the command line."""
    for key, val in cfg.items():
        attr = key.replace("-", "_")
        if attr == "family":
            continue
        if hasattr(args, attr) and getattr(args, attr) in (None, []):
            setattr(args, attr, val)


def _family(args, cfg: dict) -> CoefficientSequence:
    if args.alpha is not None:
        return make_quadratic_phase(args.alpha)
    if "family" in cfg:
        return CoefficientSequence.from_dict(cfg["family"])
    return make_quadratic_phase("sqrt2")


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(writer_obj) -> str:
    buf = io.StringIO()
    writer_obj.to_csv(buf)
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# --------------------------------------------------------------------------

def cmd_eval(args, seq):
    res = eval_f(seq, complex(*args.z), eps=args.tolerance, precision=args.precision_bits)
    v = res.complex
    _emit(args, _dumps({"z": list(args.z), "re": v.real, "im": v.imag, "truncation_bound": res.truncation_bound,
                        "rounding_bound": res.rounding_bound, "terms_used": res.terms_used,
                        "precision_bits": res.precision_bits}))


def cmd_grid(args, seq):
    grid = GridSpec(list(np.linspace(args.rmin, args.rmax, args.nr)), args.ntheta)
    _emit(args, _csv_text(eval_grid(seq, grid, eps=args.tolerance, workers=args.threads)))


def cmd_zeros(args, seq):
    lo, hi = args.sector if args.sector else (-math.pi, math.pi)
    zs = locate_zeros(seq, SectorBox(args.rmin, args.rmax, lo, hi))
    text = _dumps(zs.to_dict()) if (args.out or "").endswith(".json") else _csv_text(zs)
    _emit(args, text)
    if not zs.completeness_certificate:
        raise CheckFailed(f"zero set incomplete: found {sum(z.multiplicity for z in zs.zeros)} of {zs.box_winding}")


def cmd_indicator(args, seq):
    lo, hi = args.rwindow
    thetas = -math.pi + 2 * math.pi * np.arange(args.ntheta) / args.ntheta
    _emit(args, _csv_text(indicator_estimate(seq, thetas, (lo, hi), args.rho)))


def cmd_pits(args, seq):
    rs = np.arange(args.rmin, args.rmax + 0.5 * args.dr, args.dr)
    rep = pit_detect(seq, rs, args.ntheta, args.delta, args.eta, h_ref=args.href)
    _emit(args, json.dumps([p.to_dict() for p in rep.pits], sort_keys=True, indent=2) + "\n")
    if args.out:
        sys.stdout.write(_dumps({"pits": len(rep.pits), "covering_sum": rep.covering_sum, "eta": rep.eta}))


def cmd_ratio(args, seq):
    _emit(args, _csv_text(levy_ratio(seq, args.r)))


def cmd_trigsum(args, seq):
    prec = args.precision_bits or 128
    ts = trig_sum_reduction(args.p, args.q, prec)
    out = ts.to_dict()
    failed = 0
    if args.check_points:
        rseq = make_rational_phase(args.p, args.q)
        kernel = SeriesKernel(rseq, args.check_radius, eps=args.tolerance)
        worst = 0.0
        for j in range(args.check_points):
            # deterministic points spread over the disc
            z = complex(args.check_radius * math.sqrt((j + 0.5) / args.check_points)
                        * np.exp(2j * math.pi * j * 0.6180339887498949))
            fs = kernel.f(z)
            tv = eval_trig_sum(ts, z, kernel.P)
            with hp.workprec(kernel.P):
                diff = hp.abs_mid(fs.value - tv)
            bound = fs.total_bound + hp.radius(tv)
            worst = max(worst, diff / bound if bound > 0 else (0.0 if diff == 0 else math.inf))
            failed += diff > bound
        out["check"] = {"points": args.check_points, "radius": args.check_radius,
                        "max_diff_over_bound": worst, "failures": int(failed)}
    _emit(args, _dumps(out))
    if failed:
        raise CheckFailed(f"{failed} check points disagree beyond their bounds")


def cmd_verify(args, seq):
    only = [int(x) for x in args.criteria] if args.criteria else None
    results = run_suite(args.suite == "quick", only)
    for r in results:
        print(r.line(), flush=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(_dumps([r.to_dict() for r in results]))
    failed = [r.number for r in results if not r.passed]
    if failed:
        raise CheckFailed(f"criteria failed: {failed}")


COMMANDS = {"eval": cmd_eval, "grid": cmd_grid, "zeros": cmd_zeros, "indicator": cmd_indicator,
            "pits": cmd_pits, "ratio": cmd_ratio, "trigsum": cmd_trigsum, "verify": cmd_verify}


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True) + "\n")
    return code


def run_command(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(args.config)
        _merge(args, cfg)
        seq = _family(args, cfg)
    except (UsageError, argparse.ArgumentTypeError, OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        return _error(type(exc).__name__, str(exc), 2)
    ctx = evaluation_overrides(args.tolerance, args.precision_bits) \
        if (args.tolerance or args.precision_bits) and args.command != "verify" else nullcontext()
    try:
        with ctx:
            COMMANDS[args.command](args, seq)
    except CheckFailed as exc:
        return _error("CheckFailed", str(exc), 1)
    except (UsageError, ValueError) as exc:
        return _error(type(exc).__name__, str(exc), 2)
    except Exception as exc:  # numerical failures: boundary too close, no convergence, ...
        return _error(type(exc).__name__, str(exc), 1)
    return 0


def main() -> None:
    sys.exit(run_command())
