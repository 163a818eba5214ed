import argparse
import json
import logging
import sys
import time
from decimal import Decimal, InvalidOperation

from pydantic import ValidationError

from config import settings
from src.density.euler_product import density_auto, density_per_prime, gap_interval
from src.exceptions import ExpoError
from src.exponent_sets.exponent_set import format_exponent_set, format_family, parse_exponent_set, parse_family
from src.factor_sieve.constants import LEMMA_CONSTANTS, constants_fingerprint, embedded_constants
from src.factor_sieve.sieve import build_sieve, count_members
from src.verify.harness import (
    MIN_REPORT_X,
    audit_lemma1,
    verify_density,
    verify_family,
    verify_powerful_asymptotic,
)
from src.verify.reports import reports_to_frame, rows_to_frame, summarize_reports
from src.cli.rendering import CommandOutput, RunManifest, render_csv, render_json

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def positive_int(text: str) -> int:
    """Integers written plainly or as 1e6 / 10**6."""
    try:
        if "**" in text:
            base, exponent = text.split("**", 1)
            value = int(base) ** int(exponent)
        else:
            number = Decimal(text)
            if number != number.to_integral_value():
                raise ValueError
            value = int(number)
    except (ValueError, InvalidOperation):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def int_list(text: str) -> list[int]:
    return [positive_int(item) for item in text.split(",") if item]


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _sieve_for(args: argparse.Namespace, limit: int):
    return build_sieve(max(limit, 2), cap=args.sieve_cap)


def cmd_density(args: argparse.Namespace) -> CommandOutput:
    exponent_set = parse_exponent_set(args.set_spec)
    result = density_auto(exponent_set, args.route, args.prime_limit, args.eps, args.a_limit)
    return CommandOutput(
        command="density",
        params={
            "set": format_exponent_set(exponent_set),
            "route": args.route,
            "prime_limit": args.prime_limit,
            "eps": args.eps,
            "a_limit": args.a_limit,
        },
        value=result.value,
        error_bound=result.error_bound,
        extra={"result": result.model_dump(mode="json")},
    )


def cmd_count(args: argparse.Namespace) -> CommandOutput:
    exponent_set = parse_exponent_set(args.set_spec)
    sieve = _sieve_for(args, args.x)
    params = {"set": format_exponent_set(exponent_set), "x": args.x, "prime_limit": args.prime_limit}

    if args.x < MIN_REPORT_X:
        # too small for the remainder envelope; the count alone
        return CommandOutput(command="count", params=params, value=count_members(sieve, args.x, exponent_set))

    report = verify_density(sieve, exponent_set, [args.x], prime_limit=args.prime_limit)[0]
    return CommandOutput(
        command="count",
        params=params,
        value=report.exact_count,
        rows=[report.model_dump(mode="json", exclude={"density"}) | {"density": report.density.value}],
    )


def cmd_family(args: argparse.Namespace) -> CommandOutput:
    family = parse_family(args.rule)
    params = {"rule": format_family(family), "terms": args.terms, "xs": args.xs}
    result = density_per_prime(family, args.terms, args.eps)
    output = CommandOutput(
        command="family",
        params=params,
        value=result.value,
        error_bound=result.error_bound,
        extra={"result": result.model_dump(mode="json")},
    )
    if args.xs:
        sieve = _sieve_for(args, max(args.xs))
        reports = verify_family(sieve, family, args.xs, args.terms)
        output.rows = reports_to_frame(reports).to_dict(orient="records")
    return output


def cmd_verify(args: argparse.Namespace) -> CommandOutput:
    exponent_set = parse_exponent_set(args.set_spec)
    sieve = _sieve_for(args, max(args.xs))
    reports = verify_density(sieve, exponent_set, args.xs, prime_limit=args.prime_limit)
    frame = reports_to_frame(reports)
    if args.out:
        frame.to_csv(args.out, index=False, float_format="%.12g")
        logger.info(f"Wrote {len(frame)} report rows to {args.out}")

    return CommandOutput(
        command="verify",
        params={"set": format_exponent_set(exponent_set), "xs": args.xs, "prime_limit": args.prime_limit},
        error_bound=reports[0].density.error_bound,
        value=reports[0].density.value,
        rows=frame.to_dict(orient="records"),
        extra={"summary": summarize_reports(reports)},
    )


def cmd_audit_lemma1(args: argparse.Namespace) -> CommandOutput:
    sieve = _sieve_for(args, max(args.xs, default=2))
    rows = audit_lemma1(sieve, args.rs, args.xs)
    return CommandOutput(
        command="audit-lemma1",
        params={"rs": args.rs, "xs": args.xs},
        rows=rows_to_frame(rows).to_dict(orient="records"),
        extra={"passed": all(row.ok for row in rows)},
    )


def cmd_powerful(args: argparse.Namespace) -> CommandOutput:
    xs = args.xs or [args.x]
    rows = verify_powerful_asymptotic(xs)
    return CommandOutput(
        command="powerful",
        params={"x": args.x, "xs": args.xs},
        value=rows[-1].count if args.xs is None else None,
        rows=rows_to_frame(rows).to_dict(orient="records"),
        extra={"passed": all(row.ok for row in rows)},
    )


def cmd_gap(args: argparse.Namespace) -> CommandOutput:
    interval = gap_interval(args.prime_limit, args.eps)
    return CommandOutput(
        command="gap",
        params={"prime_limit": args.prime_limit, "eps": args.eps},
        extra={
            "certified": interval.certified,
            "result": interval.model_dump(mode="json", exclude={"no2", "with2"}),
        },
    )


def cmd_constants(args: argparse.Namespace) -> CommandOutput:
    return CommandOutput(
        command="constants",
        params={},
        extra={
            "lemma": LEMMA_CONSTANTS.model_dump(),
            "embedded": embedded_constants(),
            "fingerprint": constants_fingerprint(),
        },
    )


COMMANDS = {
    "density": cmd_density,
    "count": cmd_count,
    "family": cmd_family,
    "verify": cmd_verify,
    "audit-lemma1": cmd_audit_lemma1,
    "powerful": cmd_powerful,
    "gap": cmd_gap,
    "constants": cmd_constants,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=settings.default_output_format)
    common.add_argument("--sieve-cap", type=positive_int, default=settings.sieve_cap)
    common.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=settings.log_level.upper(),
    )
    common.add_argument("--no-timing", action="store_true", help="Report wall_time_ms as 0 for byte-stable output")

    parser = argparse.ArgumentParser(
        prog="expo",
        description="Counting, densities and verification for exponentially S-numbers",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    density = commands.add_parser("density", parents=[common], help="Density of E(S)")
    density.add_argument("set_spec", metavar="SET")
    density.add_argument("--route", choices=["auto", "eq4", "eq11", "eq8"], default="auto")
    density.add_argument("--prime-limit", type=positive_int, default=settings.default_prime_limit)
    density.add_argument("--eps", type=positive_float, default=settings.default_eps)
    density.add_argument("--a-limit", type=positive_int, default=settings.sum_form_a_limit)

    count = commands.add_parser("count", parents=[common], help="Exact count of S-numbers <= x")
    count.add_argument("set_spec", metavar="SET")
    count.add_argument("--x", type=positive_int, required=True)
    count.add_argument("--prime-limit", type=positive_int, default=settings.verify_prime_limit)

    family = commands.add_parser("family", parents=[common], help="Density of a per-prime family")
    family.add_argument("--rule", required=True, help="prefix | list:<set>;...:default:<set>")
    family.add_argument("--terms", type=positive_int, required=True)
    family.add_argument("--eps", type=positive_float, default=settings.default_eps)
    family.add_argument("--xs", type=int_list, default=None)

    verify = commands.add_parser("verify", parents=[common], help="Count reports against the density")
    verify.add_argument("set_spec", metavar="SET")
    verify.add_argument("--xs", type=int_list, required=True)
    verify.add_argument("--out", default=None, help="Also write the report table to this CSV file")
    verify.add_argument("--prime-limit", type=positive_int, default=settings.verify_prime_limit)

    lemma = commands.add_parser("audit-lemma1", parents=[common], help="Grid audit of the b_r(x) bound")
    lemma.add_argument("--rs", type=int_list, required=True)
    lemma.add_argument("--xs", type=int_list, required=True)

    powerful = commands.add_parser("powerful", parents=[common], help="Powerful-number counts and main term")
    powerful.add_argument("--x", type=positive_int, default=None)
    powerful.add_argument("--xs", type=int_list, default=None)

    gap = commands.add_parser("gap", parents=[common], help="Certified gap between the two density regimes")
    gap.add_argument("--prime-limit", type=positive_int, default=settings.default_prime_limit)
    gap.add_argument("--eps", type=positive_float, default=settings.default_eps)

    commands.add_parser("constants", parents=[common], help="Embedded constants and their fingerprint")
    return parser


def _report_error(error: Exception, exit_code: int, rule: str) -> int:
    logger.error(f"{rule}: {error}")
    print(json.dumps({"error": str(error), "rule": rule}, sort_keys=True), file=sys.stderr)
    return exit_code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.getLogger().setLevel(args.log_level)

    if args.command == "powerful" and args.x is None and args.xs is None:
        parser.error("powerful needs --x or --xs")

    started = time.perf_counter()
    try:
        output = COMMANDS[args.command](args)
    except ExpoError as e:
        return _report_error(e, e.exit_code, e.rule)
    except ValidationError as e:
        return _report_error(e, 3, "precondition")

    elapsed_ms = 0 if args.no_timing else int((time.perf_counter() - started) * 1000)
    manifest = RunManifest(command=args.command, parameters=output.params, wall_time_ms=elapsed_ms)

    if args.format == "csv":
        print(render_csv(output), end="")
        print(manifest.model_dump_json(), file=sys.stderr)
    else:
        print(render_json(output, manifest))
    return 0


if __name__ == "__main__":
    sys.exit(main())
