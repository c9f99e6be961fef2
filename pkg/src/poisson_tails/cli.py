"""Command-line surface: tail bounds with the exact oracle alongside,
curve comparison with CSV emission, the invariant suites, and operator
experiments.

Exit status contract: 0 success, 1 usage or parse error, 2 validation
suite violation, 3 I/O failure.  Invalid bound preconditions are data,
not errors: they come back as rows with valid=false.

Output is a human table by default; --format json|csv switch to machine
forms serialized at full float precision (17 significant digits) so
reruns are byte-identical.  The human table's precision follows the
POISSON_TAILS_PRECISION environment variable (default 12, the envelope
contract's minimum).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

from . import bounds, compare, exact, szasz, validate
from .divergence import Side, TailQuery, discretize

__all__ = ["OutputEnvelope", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for suite
    # violations here, so parse problems are rethrown and mapped to 1
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError("%s\n%s" % (message, self.format_usage().rstrip()))


@dataclass
class OutputEnvelope:
    command: str
    parameters: dict
    results: list[dict]
    warnings: list[str] = field(default_factory=list)


def _precision() -> int:
    raw = os.environ.get("POISSON_TAILS_PRECISION", "")
    try:
        prec = int(raw)
    except ValueError:
        return 12
    return min(max(prec, 12), 17)


def _fmt(v: object, prec: int) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        if math.isnan(v):
            return "-"
        return "%.*g" % (prec, v)
    if v is None or v == "":
        return "-"
    return str(v)


def _human(env: OutputEnvelope) -> str:
    prec = _precision()
    lines = ["command: %s" % env.command]
    for key, val in env.parameters.items():
        lines.append("  %s = %s" % (key, _fmt(val, prec)))
    if env.results:
        cols = list(env.results[0].keys())
        table = [[_fmt(row.get(c), prec) for c in cols] for row in env.results]
        widths = [max(len(c), *(len(r[i]) for r in table)) for i, c in enumerate(cols)]
        lines.append("")
        lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip())
        for r in table:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    for w in env.warnings:
        lines.append("warning: %s" % w)
    return "\n".join(lines) + "\n"


def _jsonable(v: object) -> object:
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("-inf" if v < 0 else "inf")
    return v


def _json(env: OutputEnvelope) -> str:
    payload = {
        "command": env.command,
        "parameters": {k: _jsonable(v) for k, v in env.parameters.items()},
        "results": [{k: _jsonable(v) for k, v in row.items()} for row in env.results],
        "warnings": env.warnings,
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _csv_cell(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v).replace(",", ";")


def _csv(env: OutputEnvelope) -> str:
    lines = ["# command=%s" % env.command]
    for key, val in env.parameters.items():
        lines.append("# %s=%s" % (key, _csv_cell(val)))
    for w in env.warnings:
        lines.append("# warning: %s" % w)
    if env.results:
        cols = list(env.results[0].keys())
        lines.append(",".join(cols))
        for row in env.results:
            lines.append(",".join(_csv_cell(row.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


_RENDER = {"human": _human, "json": _json, "csv": _csv}

_LOWER_FAMILIES = {
    bounds.BoundFamily.THM1_LOWER,
    bounds.BoundFamily.THM1_LOWER_SHARP,
    bounds.BoundFamily.THM2_LOWER,
    bounds.BoundFamily.THM2_LOWER_SHARP,
    bounds.BoundFamily.SHORT_PHI_LOWER,
    bounds.BoundFamily.KLAR_LOWER,
}


def _bound_row(result: bounds.BoundResult, exact_value: float) -> dict:
    if not result.valid:
        slack = math.nan
    elif result.family in _LOWER_FAMILIES:
        slack = exact_value - result.value
    else:
        slack = result.value - exact_value
    return {
        "family": result.family.value,
        "value": result.value,
        "valid": result.valid,
        "note": result.precondition_note,
        "slack": slack,
    }


_RIGHT_FAMILIES = ("thm1", "blm", "short-explicit", "klar")
_LEFT_FAMILIES = ("thm2", "blm", "short-phi")


def _cmd_bound(args: argparse.Namespace) -> tuple[OutputEnvelope, int]:
    side = Side.RIGHT if args.side == "right" else Side.LEFT
    if side is Side.RIGHT:
        if args.b is None or args.a is not None:
            raise _UsageError("the right side takes --b <threshold> (and no --a)")
        threshold = args.b
        allowed = _RIGHT_FAMILIES
    else:
        if args.a is None or args.b is not None:
            raise _UsageError("the left side takes --a <threshold> (and no --b)")
        threshold = args.a
        allowed = _LEFT_FAMILIES
    if args.family != "all" and args.family not in allowed:
        raise _UsageError(
            "family %r does not apply to the %s side (choose from %s)"
            % (args.family, args.side, ", ".join(allowed))
        )
    query = TailQuery(n=args.n, x=args.x, threshold=threshold, side=side)
    grid_index = discretize(query).grid_index
    if side is Side.RIGHT:
        exact_value = exact.poisson_sf(args.n * args.x, max(grid_index, 1))
    else:
        exact_value = exact.poisson_cdf(args.n * args.x, max(grid_index, 0))
    wanted = allowed if args.family == "all" else (args.family,)
    results: list[bounds.BoundResult] = []
    for family in wanted:
        if family == "thm1":
            lo, sharp, up = bounds.thm1_bounds(query)
            results.extend([lo, sharp, up] if args.sharp else [lo, up])
        elif family == "thm2":
            lo, sharp, up = bounds.thm2_bounds(query)
            results.extend([lo, sharp, up] if args.sharp else [lo, up])
        elif family == "blm":
            results.append(bounds.blm_bounds(query))
        elif family == "short-explicit":
            results.append(bounds.short_explicit(query))
        elif family == "short-phi":
            results.extend(bounds.short_phi_sandwich(args.n, args.x, threshold))
        elif family == "klar":
            results.extend(bounds.klar_sandwich(args.n, args.x, threshold, args.klar_k))
    rows = [
        {
            "family": "exact",
            "value": exact_value,
            "valid": True,
            "note": "",
            "slack": math.nan,
        }
    ]
    rows.extend(_bound_row(r, exact_value) for r in results)
    warnings = [
        "%s invalid: %s" % (r.family.value, r.precondition_note)
        for r in results
        if not r.valid
    ]
    env = OutputEnvelope(
        command="bound",
        parameters={
            "side": args.side,
            "n": args.n,
            "x": args.x,
            "threshold": threshold,
            "grid_index": grid_index,
            "family": args.family,
            "klar_k": args.klar_k,
        },
        results=rows,
        warnings=warnings,
    )
    return env, 0


def _cmd_compare(args: argparse.Namespace) -> tuple[OutputEnvelope, int]:
    if args.out is not None:
        cs, rows = compare.write_curve_csv(args.out, args.n, args.b, args.samples)
        text = None
    else:
        cs, rows, text = compare.curve_csv_text(args.n, args.b, args.samples)
    warnings = []
    nbeta = round(cs.beta * args.n)
    if nbeta < 9:
        warnings.append(
            "nbeta=%d < 9: the y<z<x<beta_hat ordering is not asserted" % nbeta
        )
    env = OutputEnvelope(
        command="compare",
        parameters={
            "n": args.n,
            "b": args.b,
            "samples": args.samples,
            "out": args.out or "",
        },
        results=[
            {
                "beta": cs.beta,
                "x_hat": cs.x_hat,
                "y_hat": cs.y_hat,
                "z_hat": cs.z_hat,
                "beta_hat": cs.beta_hat,
                "ordering_ok": cs.ordering_ok(),
                "rows": len(rows),
            }
        ],
        warnings=warnings,
    )
    # the machine CSV for this command IS the curve schema
    if args.out is None and args.format == "csv":
        env.results = []
        return env, 0, text  # type: ignore[return-value]
    return env, 0


_SUITE_PARAMS = {
    "tails": (),
    "lemma3": ("kmax",),
    "stirling": ("kmax",),
    "identity8": ("points", "seed"),
    "median": ("kmax",),
    "crossovers": (),
    "szasz": (),
}


def _cmd_validate(args: argparse.Namespace) -> tuple[OutputEnvelope, int]:
    allowed = _SUITE_PARAMS[args.suite]
    params = {}
    for name in ("kmax", "points", "seed"):
        value = getattr(args, name)
        if value is None:
            continue
        if name not in allowed:
            raise _UsageError("--%s does not apply to the %s suite" % (name, args.suite))
        params[name] = value
    result = validate.run_suite(args.suite, **params)
    env = OutputEnvelope(
        command="validate",
        parameters={"suite": args.suite, **params},
        results=[
            {
                "suite": result.suite,
                "points": result.points,
                "violations": result.violations,
                "worst_slack": result.worst,
                "ok": result.ok,
            }
        ],
        warnings=list(result.notes),
    )
    return env, (0 if result.ok else 2)


def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError("%s takes two comma-separated numbers, got %r" % (flag, text))
    try:
        lo = float(parts[0])
        hi = math.inf if parts[1].strip() in ("inf", "") else float(parts[1])
    except ValueError:
        raise _UsageError("%s takes two comma-separated numbers, got %r" % (flag, text)) from None
    return lo, hi


def _default_window(desc: szasz.Descriptor) -> tuple[float, float] | None:
    if isinstance(desc, szasz.PatchedAffine):
        return (desc.a, desc.b)
    if isinstance(desc, szasz.PowerDeficit):
        return (desc.a, math.inf)
    return None


def _default_affine(desc: szasz.Descriptor) -> tuple[float, float] | None:
    if isinstance(desc, szasz.PatchedAffine):
        return (desc.slope, desc.intercept)
    if isinstance(desc, szasz.Affine):
        return (desc.slope, desc.intercept)
    if isinstance(desc, szasz.PowerDeficit):
        return (0.0, 0.0)
    if isinstance(desc, szasz.Polynomial) and desc.growth_degree() <= 1:
        coeffs = tuple(desc.coeffs) + (0.0, 0.0)
        return (coeffs[1], coeffs[0])
    return None


def _cmd_szasz(args: argparse.Namespace) -> tuple[OutputEnvelope, int]:
    desc = szasz.parse_descriptor(args.fn)
    if (args.n is None) == (args.n_sweep is None):
        raise _UsageError("exactly one of --n and --n-sweep is required")
    if args.n is not None:
        ns = [args.n]
    else:
        try:
            ns = [int(tok) for tok in args.n_sweep.split(",")]
        except ValueError:
            raise _UsageError("--n-sweep takes comma-separated integers") from None
    if any(n < 1 for n in ns):
        raise _UsageError("every n must be >= 1")
    if args.p is not None and args.sup_norm is not None:
        raise _UsageError("--p and --sup-norm are mutually exclusive")

    parameters = {
        "fn": args.fn,
        "x": args.x,
        "n": ",".join(str(n) for n in ns),
        "tolerance": args.tolerance,
    }
    boundary = (
        isinstance(desc, szasz.PowerDeficit)
        and abs(args.x - desc.a) <= 1e-12 * max(1.0, abs(desc.a))
    )
    rows = []
    if boundary:
        parameters["mode"] = "boundary-rate"
        for n in ns:
            lhs, rhs = szasz.boundary_rate(desc.a, desc.s, n)
            rows.append({"n": n, "error": lhs, "prediction": rhs, "ratio": lhs / rhs})
    elif args.p is not None or args.sup_norm is not None:
        window = _parse_pair(args.window, "--window") if args.window else _default_window(desc)
        if window is None:
            raise _UsageError("this descriptor carries no window; pass --window a,b")
        affine_ref = (
            _parse_pair(args.affine, "--affine") if args.affine else _default_affine(desc)
        )
        if affine_ref is None:
            raise _UsageError("this descriptor has no implied affine reference; pass --affine slope,intercept")
        parameters["window"] = "%g,%g" % window
        parameters["affine_ref"] = "%g,%g" % affine_ref
        parameters["mode"] = "moment-bound" if args.p is not None else "sup-bound"
        for n in ns:
            problem = szasz.SzaszProblem(
                target=desc,
                affine_ref=affine_ref,
                window=window,
                x=args.x,
                p=args.p,
                sup_mode=args.p is None,
            )
            value = szasz.szasz_apply(desc, n, args.x, args.tolerance).value
            actual = abs(value - desc(args.x))
            if args.p is not None:
                bound = szasz.theorem3_bound(problem, n)
            else:
                bound = szasz.remark5_bound(problem, args.sup_norm, n)
            rows.append(
                {
                    "n": n,
                    "value": value,
                    "actual_error": actual,
                    "bound": bound,
                    "actual_rate": (-math.log(actual) / n) if actual > 0.0 else math.inf,
                    "bound_rate": (-math.log(bound) / n) if bound > 0.0 else math.inf,
                }
            )
    else:
        parameters["mode"] = "apply"
        for n in ns:
            ov = szasz.szasz_apply(desc, n, args.x, args.tolerance)
            rows.append(
                {
                    "n": n,
                    "value": ov.value,
                    "actual_error": abs(ov.value - desc(args.x)),
                    "truncation_index": ov.truncation_index,
                    "remainder_bound": ov.truncation_remainder_bound,
                }
            )
    env = OutputEnvelope(command="szasz", parameters=parameters, results=rows)
    return env, 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poisson-tails", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("human", "json", "csv"), default="human")

    p_bound = sub.add_parser("bound", help="tail bounds plus the exact oracle at one query")
    p_bound.add_argument("--side", choices=("right", "left"), required=True)
    p_bound.add_argument("--n", type=int, required=True)
    p_bound.add_argument("--x", type=float, required=True)
    p_bound.add_argument("--b", type=float, help="right-tail threshold")
    p_bound.add_argument("--a", type=float, help="left-tail threshold")
    p_bound.add_argument(
        "--family",
        choices=("all", "thm1", "thm2", "blm", "short-phi", "short-explicit", "klar"),
        default="all",
    )
    p_bound.add_argument("--klar-k", type=int, default=1, help="window length of the mass sandwich")
    p_bound.add_argument("--sharp", action="store_true", help="include the proof-sharp lower variants")
    add_format(p_bound)
    p_bound.set_defaults(run=_cmd_bound)

    p_compare = sub.add_parser("compare", help="quotient-curve sampling and CSV emission")
    p_compare.add_argument("--n", type=int, required=True)
    p_compare.add_argument("--b", type=float, required=True)
    p_compare.add_argument("--samples", type=int, default=500)
    p_compare.add_argument("--out", help="write the curve CSV here instead of stdout")
    add_format(p_compare)
    p_compare.set_defaults(run=_cmd_compare)

    p_validate = sub.add_parser("validate", help="run one invariant sweep")
    p_validate.add_argument("--suite", choices=sorted(validate.SUITES), required=True)
    p_validate.add_argument("--kmax", type=int)
    p_validate.add_argument("--points", type=int)
    p_validate.add_argument("--seed", type=int)
    add_format(p_validate)
    p_validate.set_defaults(run=_cmd_validate)

    p_szasz = sub.add_parser("szasz", help="operator application and its error bounds")
    p_szasz.add_argument("--fn", required=True, help="function descriptor, e.g. affine:2,1")
    p_szasz.add_argument("--n", type=int)
    p_szasz.add_argument("--n-sweep", help="comma-separated n values")
    p_szasz.add_argument("--x", type=float, required=True)
    p_szasz.add_argument("--window", help="override window a,b (b may be inf)")
    p_szasz.add_argument("--affine", help="override affine reference slope,intercept")
    p_szasz.add_argument("--p", type=float, help="norm exponent for the moment route")
    p_szasz.add_argument("--sup-norm", type=float, help="sup of |f - l| for the sup route")
    p_szasz.add_argument("--tolerance", type=float, default=1e-12)
    add_format(p_szasz)
    p_szasz.set_defaults(run=_cmd_szasz)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        outcome = args.run(args)
    except _UsageError as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    except szasz.DescriptorParseError as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    except ValueError as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    except OSError as err:
        print("i/o error: %s" % err, file=sys.stderr)
        return 3
    if len(outcome) == 3:
        env, code, raw_text = outcome
        sys.stdout.write(raw_text)
        return code
    env, code = outcome
    sys.stdout.write(_RENDER[args.format](env))
    return code


if __name__ == "__main__":
    sys.exit(main())
