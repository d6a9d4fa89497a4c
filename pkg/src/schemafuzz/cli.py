"""Command line interface: ``schemafuzz run``."""

from __future__ import annotations

import argparse
import os
import sys

from .checks import Thresholds, resolve_check_set
from .engine import CampaignConfig, Engine
from .errors import FatalSchemaError, ParseError, RemoteRef, SchemafuzzError, UnsupportedSpec
from .report import emit_report
from .transport import NetworkTransport


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schemafuzz",
        description="Schema-derived web API fuzzer: generate valid and invalid "
                    "requests from an OpenAPI document and check HTTP semantics.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a fuzzing campaign")
    run.add_argument("--schema", required=True,
                     help="OpenAPI document: local path or http(s) URL")
    run.add_argument("--base-url", required=True, help="target service base URL")
    run.add_argument("--checks", default="default",
                     help="default | all | negative | comma-separated check kinds")
    run.add_argument("--max-examples", type=int, default=20,
                     help="test cases per operation (default 20)")
    run.add_argument("--seed", type=int, default=None,
                     help="campaign seed (falls back to $SCHEMAFUZZ_SEED, then 0)")
    run.add_argument("--stateful", action="store_true",
                     help="also run link-driven request sequences")
    stop = run.add_mutually_exclusive_group()
    stop.add_argument("--exclusive-stop", dest="stop_policy", action="store_const",
                      const="first_failure_per_operation",
                      help="stop an operation after its first defect (default)")
    stop.add_argument("--exhaustive", dest="stop_policy", action="store_const",
                      const="exhaustive", help="keep fuzzing after failures")
    run.add_argument("--header", action="append", default=[], metavar="'Name: value'",
                     help="extra request header; repeatable")
    run.add_argument("--exclude-path", action="append", default=[], metavar="GLOB",
                     help="skip operations whose path matches; repeatable")
    run.add_argument("--report-json", metavar="FILE",
                     help="also write the JSON report here")
    run.add_argument("--max-response-time", type=float, metavar="MS",
                     help="enable the response-time check with this threshold")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--timeout", type=float, default=10.0,
                     help="per-request timeout, seconds (default 10)")
    run.add_argument("--max-recursion-depth", type=int, default=3,
                     help="recursive $ref unroll depth (default 3)")
    run.add_argument("--no-shrink", action="store_true",
                     help="report the first failing example without minimising")
    run.add_argument("--insecure", action="store_true",
                     help="skip TLS certificate verification")
    run.set_defaults(stop_policy="first_failure_per_operation")
    return parser


def _parse_headers(raw: list[str]) -> tuple[tuple[str, str], ...]:
    headers = []
    for item in raw:
        name, sep, value = item.partition(":")
        if not sep or not name.strip():
            raise ValueError(f"header must look like 'Name: value', got {item!r}")
        headers.append((name.strip(), value.strip()))
    return tuple(headers)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("SCHEMAFUZZ_SEED", "0"))

    check_set = resolve_check_set(args.checks)
    thresholds = Thresholds()
    if args.max_response_time is not None:
        from .checks import CheckKind
        check_set = frozenset(check_set) | {CheckKind.RESPONSE_TIME_EXCEEDED}
        thresholds = Thresholds(max_response_seconds=args.max_response_time / 1000.0)

    try:
        config = CampaignConfig(
            base_url=args.base_url,
            check_set=check_set,
            max_examples_per_operation=args.max_examples,
            seed=seed,
            mode="both" if args.stateful else "unit",
            stop_policy=args.stop_policy,
            workers=args.workers,
            exclude_paths=tuple(args.exclude_path),
            headers=_parse_headers(args.header),
            thresholds=thresholds,
            timeout=args.timeout,
            max_recursion_depth=args.max_recursion_depth,
            shrink_enabled=False if args.no_shrink else None,
        )
        engine = Engine(args.schema, config, NetworkTransport(verify_tls=not args.insecure))
        report = engine.run()
    except (FatalSchemaError, ParseError, UnsupportedSpec, RemoteRef) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, SchemafuzzError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    sys.stdout.write(emit_report(report, "text").decode("utf-8"))
    if args.report_json:
        with open(args.report_json, "wb") as handle:
            handle.write(emit_report(report, "json"))
    return report.exit_code()


if __name__ == "__main__":
    raise SystemExit(main())
