"""Command-line entry point: ``kmono <verb> [input] [flags]``.

Artifacts are read from a path (``-`` for stdin) and written as JSON to stdout
or ``--output``. Exit codes: 0 on success, 1 when a property fails (the
witness is printed on stdout), 2 on usage, parse or precondition errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from pydantic import BaseModel, ValidationError

from .compounding import CompoundInput, compound, indicator_decomposition
from .configs import default_seed, parse_mode
from .errors import ClosureViolationError, KMonoError, NotMonotoneError, PreconditionError
from .grid_monotone import GridFunction, check_fully_k, check_n_monotone, df_to_measure, lemma3_approx
from .interval_partition import VectorFamily, partition_upper, verify_partition
from .messages import CheckResult, Report, dump_artifact, get_artifact
from .multilinear import MLPoly, compose_univariate, extend, partial
from .subset_core import PBFunction, gen_fully_k, is_fully_k, mask_of
from .suites import run_selftest
from .types import parse_rational
from .univariate import AnyMap, get_map, named_map

logger = logging.getLogger("kmono")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _sub_axes(text: str) -> list[list[Fraction]]:
    return [[parse_rational(value) for value in axis.split(",")] for axis in text.split(";")]


def _load(path: str) -> dict[str, Any]:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        message = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(message, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return message


def _read[T: BaseModel](args: argparse.Namespace, expected: type[T]) -> T:
    return get_artifact(_load(args.input), expected)


def _emit(args: argparse.Namespace, data: Any) -> None:
    text = json.dumps(data, indent=None if args.json else 2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)


def _emit_report(args: argparse.Namespace, report: Report) -> int:
    if args.json or args.output:
        _emit(args, dump_artifact(report))
    else:
        print(report.verdict.upper())
        for witness in report.witnesses:
            print(json.dumps(witness))
        if report.result is not None:
            print(json.dumps(report.result, indent=2))
    return report.exit_code


def _check_report(result: CheckResult, started: float) -> Report:
    witnesses = [] if result.holds else [result.witness.model_dump(mode="json", exclude_none=True)]
    return Report(
        verdict="pass" if result.holds else "fail",
        witnesses=witnesses,
        timing_ms=(time.perf_counter() - started) * 1000,
    )


def check_pb(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    f = _read(args, PBFunction)
    return _emit_report(args, _check_report(is_fully_k(f, args.k, args.mode, args.epsilon), started))


def check_grid(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    F = _read(args, GridFunction)
    if args.n is not None:
        result = check_n_monotone(F, args.n, args.mode, args.epsilon)
    elif args.k is not None:
        result = check_fully_k(F, args.k, args.mode, args.epsilon)
    else:
        raise UsageError("check-grid needs --k or --n")
    return _emit_report(args, _check_report(result, started))


def _map(args: argparse.Namespace) -> AnyMap | None:
    if args.map_file is not None:
        return get_map(_load(args.map_file))
    return None if args.map is None else named_map(args.map)


def extend_command(args: argparse.Namespace) -> int:
    f = _read(args, PBFunction)
    phi = _map(args)
    p = extend(f) if phi is None else compose_univariate(phi, f)
    _emit(args, dump_artifact(p))
    return 0


def derive(args: argparse.Namespace) -> int:
    message = _load(args.input)
    # Bare tables have "values", polynomials "coeffs".
    if message.get("kind", "pb_function" if "values" in message else "ml_poly") == "pb_function":
        p = extend(get_artifact(message, PBFunction))
    else:
        p = get_artifact(message, MLPoly)
    _emit(args, dump_artifact(partial(p, mask_of(args.beta))))
    return 0


def partition(args: argparse.Namespace) -> int:
    family = _read(args, VectorFamily)
    k = family.k if args.k is None else args.k
    result = partition_upper(family, k, use_base_case=args.base_case)
    if args.verify:
        diagnostics = verify_partition(result, family, k)
        if not diagnostics.valid:
            logger.error("partition failed verification: %s", diagnostics)
            message = f"partition failed verification: {diagnostics.model_dump_json()}"
            return _fail(args, message, 1, diagnostics=diagnostics.model_dump(mode="json"))
    _emit(args, dump_artifact(result))
    return 0


def compound_command(args: argparse.Namespace) -> int:
    _emit(args, dump_artifact(compound(_read(args, CompoundInput))))
    return 0


def certify(args: argparse.Namespace) -> int:
    inputs = _read(args, CompoundInput)
    points = []
    for i, g in enumerate(inputs.gs, start=1):
        mu = df_to_measure(g)
        if mu.masses != (1,):
            raise PreconditionError(f"g_{i} is not the d.f. of a point mass")
        points.append(mu.points[0])
    k = inputs.grid.dim if args.k is None else args.k
    _emit(args, dump_artifact(indicator_decomposition(inputs.f, k, points, inputs.grid)))
    return 0


def measure(args: argparse.Namespace) -> int:
    _emit(args, dump_artifact(df_to_measure(_read(args, GridFunction), args.epsilon)))
    return 0


def approx(args: argparse.Namespace) -> int:
    _emit(args, dump_artifact(lemma3_approx(_read(args, GridFunction), args.sub)))
    return 0


def gen(args: argparse.Namespace) -> int:
    f = gen_fully_k(args.d, args.k, args.mode, args.seed, path=args.path, budget=args.budget)
    _emit(args, dump_artifact(f))
    return 0


def selftest(args: argparse.Namespace) -> int:
    report = run_selftest(args.seed, trials=args.trials, mutate=args.mutate, logger=logger)
    return _emit_report(args, report)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Compact JSON output, reports included.")
    common.add_argument("--output", "-o", help="Write the result here instead of stdout.")
    common.add_argument("--seed", type=int, default=default_seed(), help="Seed (default: $KMONO_SEED or 1).")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    checked = argparse.ArgumentParser(add_help=False)
    checked.add_argument("--mode", type=parse_mode, default="increasing", help="inc, dec or alt.")
    checked.add_argument("--epsilon", type=float, default=0.0, help="Tolerance, floating inputs only.")

    parser = argparse.ArgumentParser(prog="kmono", description="Certify higher order monotonicity.")
    verbs = parser.add_subparsers(dest="verb", required=True)

    def verb(
        name: str,
        handler: Callable[[argparse.Namespace], int],
        summary: str,
        *parents: argparse.ArgumentParser,
        takes_input: bool = True,
    ) -> argparse.ArgumentParser:
        sub = verbs.add_parser(name, parents=[common, *parents], help=summary)
        if takes_input:
            sub.add_argument("input", help="Artifact path, or - for stdin.")
        sub.set_defaults(handler=handler)
        return sub

    sub = verb("check-pb", check_pb, "Check a pseudo-Boolean table.", checked)
    sub.add_argument("--k", type=int, required=True)

    sub = verb("check-grid", check_grid, "Check a grid function.", checked)
    sub.add_argument("--k", type=int)
    sub.add_argument("--n", type=_int_list, help="Comma separated multi-index, e.g. 2,1.")

    sub = verb("extend", extend_command, "Multilinear extension of a table.")
    maps = sub.add_mutually_exclusive_group()
    maps.add_argument("--map", help="Compose with identity, sqrt, log1p or power(theta) first.")
    maps.add_argument("--map-file", help="Compose with a JSON map, e.g. {\"type\": \"table\", \"pairs\": [...]}.")

    sub = verb("derive", derive, "Partial derivative of an extension.")
    sub.add_argument("--beta", type=_int_list, required=True, help="Comma separated variables.")

    sub = verb("partition", partition, "Set-interval partition of a vector family.")
    sub.add_argument("--k", type=int)
    sub.add_argument("--base-case", action="store_true", help="Stop the recursion at d = k + 1.")
    sub.add_argument("--verify", action="store_true")

    verb("compound", compound_command, "Compound f with g_1, ..., g_d.")

    sub = verb("certify", certify, "Indicator decomposition of a point-mass compound.")
    sub.add_argument("--k", type=int)

    sub = verb("measure", measure, "Measure of a distribution function.")
    sub.add_argument("--epsilon", type=float, default=0.0)

    sub = verb("approx", approx, "Normalized sub-grid approximation.")
    sub.add_argument("--sub", type=_sub_axes, required=True, help="Sub-axes, e.g. '0,1;0,2'.")

    sub = verb("gen", gen, "Generate a fully k-monotone table.", checked, takes_input=False)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--path", choices=["mixed", "combination", "rejection"], default="mixed")
    sub.add_argument("--budget", type=int, default=1000)

    sub = verb("selftest", selftest, "Run the acceptance suite.", takes_input=False)
    sub.add_argument("--trials", type=int, help="Cap every randomized trial count.")
    sub.add_argument("--mutate", action="store_true", help=argparse.SUPPRESS)
    return parser


def _fail(args: argparse.Namespace, message: str, code: int, **fields: Any) -> int:
    if args.json:
        print(json.dumps({"error": message} | fields))
    else:
        print(f"kmono: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except (NotMonotoneError, ClosureViolationError) as e:
        witnesses = [] if e.witness is None else [e.witness.model_dump(mode="json", exclude_none=True)]
        seed = getattr(e, "seed", None)
        if not witnesses and seed is None:
            return _fail(args, str(e), 1)
        report = Report(verdict="fail", witnesses=witnesses, seed=seed, result={"error": str(e)})
        return _emit_report(args, report)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or e.title
        return _fail(args, f"invalid {e.title} field {field!r}: {error['msg']}", 2, field=field)
    except UsageError as e:
        return _fail(args, str(e), 2)
    except (KMonoError, ValueError, OSError) as e:
        return _fail(args, str(e), 2)


if __name__ == "__main__":
    sys.exit(main())
