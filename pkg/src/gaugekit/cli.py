"""Command-line front end.

Subcommands: ``partition | check | root | extremum | certify | verify``.
Output is machine-readable (JSON by default) and fully deterministic:
identical inputs produce byte-identical output.  Every partition or
certificate is re-checked in-process before it is emitted; an artifact
that fails its own checker is an internal error (exit 70), never output.

Exit codes:
    0   success
    1   check/verify found violations
    2   partitioning failed (stall or depth exhausted); diagnostic on stdout
    3   no sign change across the interval (root)
    4   iteration budget exceeded
    5   certification failed (stall, violated bound, or exact hit)
    64  usage error
    65  unparseable input data (expressions, gauges, files, domains)
    70  internal error: a produced artifact failed its own checker
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import analysis, cousin, expr
from .errors import CapExceededError
from .induction import InductionPolicy
from .intervals import (
    ConstantGauge,
    Gauge,
    GaugeNonpositiveError,
    Interval,
    PiecewiseConstantGauge,
    TaggedPartition,
    is_delta_fine,
    partition_from_json,
    partition_to_dict,
    validate_partition,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARTITION_FAILED = 2
EXIT_NO_SIGN_CHANGE = 3
EXIT_CAP_EXCEEDED = 4
EXIT_CERTIFY_FAILED = 5
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70

ENV_MAX_STEPS = "GAUGEKIT_MAX_STEPS"


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit 64
        raise _UsageError(message)


def _parse_gauge_spec(spec: str) -> Gauge:
    kind, sep, body = spec.partition(":")
    if not sep:
        raise _DataError(f"gauge spec needs a 'const:', 'pw:', or 'expr:' prefix: {spec!r}")
    try:
        if kind == "const":
            return ConstantGauge(float(body))
        if kind == "pw":
            breakpoints, values = [], []
            for chunk in body.split(","):
                b, s2, v = chunk.partition(":")
                if not s2:
                    raise ValueError(f"piecewise entry {chunk!r} is not 'breakpoint:value'")
                breakpoints.append(float(b))
                values.append(float(v))
            return PiecewiseConstantGauge(tuple(breakpoints), tuple(values))
        if kind == "expr":
            return expr.ExprGauge(expr.parse(body))
    except (ValueError, expr.ParseError) as e:
        raise _DataError(f"bad gauge spec {spec!r}: {e}") from None
    raise _DataError(f"unknown gauge kind {kind!r} (expected const, pw, or expr)")


def _parse_interval(values: Sequence[float]) -> Interval:
    lo, hi = values
    try:
        dom = Interval(lo, hi)
    except ValueError as e:
        raise _DataError(str(e)) from None
    if not dom.lo < dom.hi:
        raise _DataError(f"interval must be nondegenerate, got [{dom.lo!r}, {dom.hi!r}]")
    return dom


def _env_max_steps() -> int | None:
    raw = os.environ.get(ENV_MAX_STEPS)
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise _DataError(f"{ENV_MAX_STEPS} must be an integer, got {raw!r}") from None
    if n <= 0:
        raise _DataError(f"{ENV_MAX_STEPS} must be positive, got {n}")
    return n


def _policy(args) -> InductionPolicy:
    max_steps = getattr(args, "max_steps", None) or _env_max_steps()
    if max_steps is not None:
        return InductionPolicy(max_steps=max_steps)
    return InductionPolicy()


def _parsed_function(text: str):
    try:
        ast = expr.parse(text)
    except expr.ParseError as e:
        raise _DataError(f"bad expression {text!r}: {e}") from None
    return ast, expr.as_function(ast)


def _lipschitz(args, ast, dom: Interval) -> analysis.Lipschitz:
    if args.lipschitz is not None:
        if not args.lipschitz > 0.0:
            raise _DataError(f"--lipschitz must be positive, got {args.lipschitz!r}")
        return analysis.Lipschitz(args.lipschitz)
    try:
        return analysis.Lipschitz(expr.lipschitz_bound(ast, dom))
    except (expr.NotDifferentiableError, expr.EvalDomainError) as e:
        raise _DataError(f"cannot derive a Lipschitz bound (pass --lipschitz): {e}") from None


def _write_output(args, text: str):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit(args, payload: dict, csv_rows: tuple[list[str], list[list]] | None = None,
          human: str | None = None):
    if args.format == "json":
        _write_output(args, json.dumps(payload, indent=2) + "\n")
        return
    if args.format == "csv":
        if csv_rows is None:
            rows = ([k for k in payload], [[payload[k] for k in payload]])
        else:
            rows = csv_rows
        header, body = rows
        lines = [",".join(header)]
        lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row)
                  for row in body]
        print("note: csv output is lossy; use json for replayable artifacts",
              file=sys.stderr)
        _write_output(args, "\n".join(lines) + "\n")
        return
    _write_output(args, (human if human is not None
                         else json.dumps(payload, indent=2)) + "\n")


def _write_trace(path: str | None, steps: list[tuple[float, float]]):
    if path is None:
        return
    with open(path, "w") as fh:
        for s, t in steps:
            fh.write(json.dumps({"s": s, "t": t}) + "\n")


def _partition_payload(p: TaggedPartition) -> dict:
    return partition_to_dict(p)


def _self_check_partition(p: TaggedPartition, gauge: Gauge) -> str | None:
    report = validate_partition(p)
    if not report.ok:
        return f"produced partition is invalid: {report.violations[0].detail}"
    fine = is_delta_fine(p, gauge)
    if not fine.fine:
        return (f"produced partition is not delta-fine: cell {fine.first_violation} "
                f"overshoots by {fine.margin!r}")
    return None


# --- Subcommands --------------------------------------------------------------


def _cmd_partition(args) -> int:
    gauge = _parse_gauge_spec(args.gauge)
    dom = _parse_interval(args.interval)
    kinds = {"creep": cousin.StrategyKind.GREEDY_CREEP,
             "bisect": cousin.StrategyKind.BISECTION,
             "hybrid": cousin.StrategyKind.HYBRID}
    max_cells = args.max_cells or _env_max_steps() or cousin.DEFAULT_MAX_CELLS
    strategy = cousin.PartitionStrategy(kinds[args.strategy], max_cells=max_cells,
                                        max_depth=args.max_depth)
    result = cousin.fine_partition(gauge, dom, strategy)
    if isinstance(result, cousin.PartitionFailure):
        payload: dict = {"status": "failed"}
        if result.stall is not None:
            payload["stall"] = {"frontier": result.stall.frontier,
                                "cells_emitted": len(result.stall.cells_so_far)}
        if result.depth_exceeded is not None:
            cell = result.depth_exceeded.deepest_cell
            payload["depth_exceeded"] = {"cell": {"lo": cell.lo, "hi": cell.hi}}
        _emit(args, payload)
        return EXIT_PARTITION_FAILED
    problem = _self_check_partition(result, gauge)
    if problem is not None:
        print(f"internal error: {problem}", file=sys.stderr)
        return EXIT_INTERNAL
    payload = _partition_payload(result)
    rows = (["lo", "hi", "tag"],
            [[ti.cell.lo, ti.cell.hi, ti.tag] for ti in result.cells])
    human = "\n".join(f"[{ti.cell.lo!r}, {ti.cell.hi!r}] tag {ti.tag!r}"
                      for ti in result.cells)
    _emit(args, payload, csv_rows=rows, human=human)
    return EXIT_OK


def _cmd_check(args) -> int:
    gauge = _parse_gauge_spec(args.gauge)
    try:
        with open(args.partition) as fh:
            text = fh.read()
    except OSError as e:
        raise _DataError(f"cannot read partition file: {e}") from None
    try:
        p = partition_from_json(text)
    except ValueError as e:
        raise _DataError(str(e)) from None
    report = validate_partition(p)
    payload: dict = {
        "valid": report.ok,
        "violations": [{"index": v.index, "kind": v.kind, "detail": v.detail}
                       for v in report.violations],
    }
    fineness = is_delta_fine(p, gauge)
    payload["fine"] = fineness.fine
    payload["first_violation"] = fineness.first_violation
    payload["margin"] = fineness.margin
    ok = report.ok and fineness.fine
    human = "ok" if ok else json.dumps(payload, indent=2)
    _emit(args, payload, human=human)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_root(args) -> int:
    dom = _parse_interval(args.interval)
    ast, f = _parsed_function(args.f)
    mod = _lipschitz(args, ast, dom)
    trace: list = []
    try:
        result = analysis.find_root(f, args.y, dom, mod, args.tol,
                                    policy=_policy(args), trace=trace)
    except analysis.NoSignChangeError as e:
        _emit(args, {"error": "no_sign_change", "detail": str(e)})
        return EXIT_NO_SIGN_CHANGE
    finally:
        _write_trace(args.trace, trace)
    payload = {"c": result.c, "residual_bound": result.residual_bound}
    _emit(args, payload, human=f"c = {result.c!r} (|f(c) - y| <= {result.residual_bound!r})")
    return EXIT_OK


def _cmd_extremum(args) -> int:
    dom = _parse_interval(args.interval)
    ast, f = _parsed_function(args.f)
    mod = _lipschitz(args, ast, dom)
    if args.maximum:
        est = analysis.approx_sup(f, dom, mod, args.tol, policy=_policy(args))
        payload = {"extremum": "max", "lo": est.sup_lo, "hi": est.sup_hi,
                   "candidate": est.argmax_candidate}
    else:
        est = analysis.approx_inf(f, dom, mod, args.tol, policy=_policy(args))
        payload = {"extremum": "min", "lo": est.sup_lo, "hi": est.sup_hi,
                   "candidate": est.argmax_candidate}
    human = (f"{payload['extremum']} in [{payload['lo']!r}, {payload['hi']!r}], "
             f"candidate x = {payload['candidate']!r}")
    _emit(args, payload, human=human)
    return EXIT_OK


def _cmd_certify(args) -> int:
    dom = _parse_interval(args.interval)
    ast, f = _parsed_function(args.f)
    mod = _lipschitz(args, ast, dom)
    trace: list = []
    try:
        if args.no_root is not None:
            result = analysis.no_root_certificate(f, args.no_root, dom, mod,
                                                  _policy(args), trace=trace)
            if isinstance(result, analysis.StallAtRoot):
                _emit(args, {"error": "stall", "stall_point": result.point,
                             "reason": result.diagnostic.reason.value})
                return EXIT_CERTIFY_FAILED
            verified = analysis.verify_sign_certificate(result, f, mod)
        else:
            result = analysis.bound_certificate(f, args.bound, dom, mod,
                                                _policy(args), trace=trace)
            if isinstance(result, analysis.StallNearMax):
                _emit(args, {"error": "stall", "stall_point": result.point,
                             "reason": result.diagnostic.reason.value})
                return EXIT_CERTIFY_FAILED
            verified = analysis.verify_bound_certificate(result, f, mod)
    except analysis.TargetHitExactlyError as hit:
        _emit(args, {"error": "target_hit_exactly", "x": hit.x})
        return EXIT_CERTIFY_FAILED
    except analysis.BoundViolatedError as hit:
        _emit(args, {"error": "bound_violated", "x": hit.x, "value": hit.value})
        return EXIT_CERTIFY_FAILED
    finally:
        _write_trace(args.trace, trace)
    if not verified:
        print("internal error: produced certificate failed its own checker",
              file=sys.stderr)
        return EXIT_INTERNAL
    payload = analysis.certificate_to_dict(result)
    rows = (["lo", "hi", "s", "fs", "delta"],
            [[p.cell.lo, p.cell.hi, p.sample, p.value, p.radius] for p in result.pieces])
    _emit(args, payload, csv_rows=rows)
    return EXIT_OK


def _cmd_verify(args) -> int:
    ast, f = _parsed_function(args.f)
    try:
        with open(args.certificate) as fh:
            text = fh.read()
    except OSError as e:
        raise _DataError(f"cannot read certificate file: {e}") from None
    try:
        cert = analysis.certificate_from_dict(json.loads(text))
    except (ValueError, json.JSONDecodeError) as e:
        raise _DataError(f"malformed certificate: {e}") from None
    mod = _lipschitz(args, ast, cert.domain)
    if isinstance(cert, analysis.SignCertificate):
        ok = analysis.verify_sign_certificate(cert, f, mod)
    else:
        ok = analysis.verify_bound_certificate(cert, f, mod)
    _emit(args, {"verified": ok})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --- Parser -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "csv", "human"), default="json")
    p.add_argument("--output", metavar="PATH", default=None)


def _add_function_flags(p: argparse.ArgumentParser):
    p.add_argument("--f", required=True, metavar="EXPR", help="function of x")
    p.add_argument("--lipschitz", type=float, default=None, metavar="L",
                   help="Lipschitz constant; derived from --f when omitted")
    p.add_argument("--max-steps", type=int, default=None, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="gaugekit", description=__doc__,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="build a delta-fine tagged partition")
    p.add_argument("--gauge", required=True, metavar="SPEC",
                   help="const:<v> | pw:<b0:v0,b1:v1,...> | expr:<text>")
    p.add_argument("--interval", required=True, nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--strategy", choices=("creep", "bisect", "hybrid"), default="hybrid")
    p.add_argument("--max-cells", type=int, default=None, metavar="N")
    p.add_argument("--max-depth", type=int, default=cousin.DEFAULT_MAX_DEPTH, metavar="N")
    _add_common(p)
    p.set_defaults(run=_cmd_partition)

    p = sub.add_parser("check", help="validate a partition file against a gauge")
    p.add_argument("--partition", required=True, metavar="FILE")
    p.add_argument("--gauge", required=True, metavar="SPEC")
    _add_common(p)
    p.set_defaults(run=_cmd_check)

    p = sub.add_parser("root", help="locate f(x) = y given a sign change")
    _add_function_flags(p)
    p.add_argument("--y", type=float, default=0.0, metavar="Y")
    p.add_argument("--interval", required=True, nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--trace", metavar="PATH", default=None,
                   help="write step history as JSON lines")
    _add_common(p)
    p.set_defaults(run=_cmd_root)

    p = sub.add_parser("extremum", help="bracket the max or min of f")
    _add_function_flags(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--max", dest="maximum", action="store_true")
    group.add_argument("--min", dest="maximum", action="store_false")
    p.add_argument("--interval", required=True, nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(run=_cmd_extremum)

    p = sub.add_parser("certify", help="emit a sign or bound certificate")
    _add_function_flags(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--no-root", type=float, default=None, metavar="Y",
                       help="certify f != Y on the interval")
    group.add_argument("--bound", type=float, default=None, metavar="M",
                       help="certify f < M on the interval")
    p.add_argument("--interval", required=True, nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--trace", metavar="PATH", default=None)
    _add_common(p)
    p.set_defaults(run=_cmd_certify)

    p = sub.add_parser("verify", help="replay a certificate file")
    p.add_argument("--certificate", required=True, metavar="FILE")
    _add_function_flags(p)
    _add_common(p)
    p.set_defaults(run=_cmd_verify)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.run(args)
    except _DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (expr.ParseError, expr.EvalDomainError, expr.NotDifferentiableError,
            GaugeNonpositiveError, analysis.MalformedModulusError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except CapExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP_EXCEEDED


if __name__ == "__main__":
    raise SystemExit(main())
