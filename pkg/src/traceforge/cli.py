"""Command-line launcher.

    traceforge <target> [--config PATH] [--only KIND,...] [--out PATH]
    traceforge --serve PORT [--config PATH]

Batch mode runs every trace against the target and writes result.xml;
--serve starts the HTTP service (and the web console when built).

Exit codes: 0 success, 1 no connectivity, 2 invalid parameter or missing
configuration, 3 at least one trace did not fully succeed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import find_config_path, load_config
from .controller import TraceController
from .errors import (
    ConfigMissingError,
    InvalidParameterError,
    NoConnectivityError,
    ProtocolViolationError,
    TraceError,
)
from .model import TraceKind, TraceStatus, make_target

EXIT_OK = 0
EXIT_NO_CONNECTIVITY = 1
EXIT_INVALID_PARAMETER = 2
EXIT_PARTIAL = 3

FRONTEND_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traceforge",
        description="Collect digital traces (DNS, Whois, TLS, content, reputation) "
                    "for a target website.",
    )
    parser.add_argument("target", nargs="?", help="target hostname, e.g. www.bfh.ch")
    parser.add_argument("--config", help="configuration file (default: $TRACEFORGE_CONFIG "
                                         "or ./dignite.conf)")
    parser.add_argument("--only", help="comma-separated trace kinds to run "
                                       f"({','.join(k.value for k in TraceKind)})")
    parser.add_argument("--out", default="result.xml", help="export file path")
    parser.add_argument("--http-port", type=int, default=None, help="target plain HTTP port")
    parser.add_argument("--https-port", type=int, default=None, help="target HTTPS port")
    parser.add_argument("--serve", type=int, metavar="PORT",
                        help="start the HTTP service instead of batch mode")
    return parser


def _parse_kinds(only: str | None) -> list[TraceKind] | None:
    if not only:
        return None
    return [TraceKind.from_name(name.strip()) for name in only.split(",") if name.strip()]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(find_config_path(args.config))
    except (ConfigMissingError, ProtocolViolationError, InvalidParameterError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_INVALID_PARAMETER

    if args.serve is not None:
        import uvicorn

        from .service import create_app

        controller = TraceController(config)
        static_dir = FRONTEND_DIST if FRONTEND_DIST.is_dir() else None
        uvicorn.run(create_app(controller, static_dir=static_dir),
                    host="127.0.0.1", port=args.serve)
        return EXIT_OK

    if not args.target:
        print("a target is required in batch mode", file=sys.stderr)
        return EXIT_INVALID_PARAMETER
    try:
        target = make_target(args.target, args.http_port, args.https_port)
        kinds = _parse_kinds(args.only)
        controller = TraceController(config)
        results = controller.run_all_traces(target, out_path=args.out, kinds=kinds)
    except NoConnectivityError as err:
        print(f"no connectivity: {err}", file=sys.stderr)
        return EXIT_NO_CONNECTIVITY
    except InvalidParameterError as err:
        print(f"invalid parameter: {err}", file=sys.stderr)
        return EXIT_INVALID_PARAMETER
    except TraceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID_PARAMETER

    for result in results:
        print(f"{result.kind.value}: {result.status.value}")
        for warning in result.warnings:
            print(f"  warning: {warning}")
    print(f"exported {len(results)} trace results to {args.out}")
    if all(result.status is TraceStatus.SUCCESS for result in results):
        return EXIT_OK
    return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
