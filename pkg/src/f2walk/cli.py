"""Command-line front end: a thin client of the HTTP service.

Every command posts its validated configuration to the service --
in-process by default, or a remote instance via --server -- and writes
the returned report and tables to the output directory.  Exit codes:
0 all pass criteria met, 2 a check failed, 3 invalid configuration,
4 infrastructure failure (caps, lookahead, transport).
"""

from __future__ import annotations

import argparse
import asyncio
import configparser
import os
import sys

import httpx

from . import __version__
from .config import COMMANDS
from .errors import ConfigError
from .reports import canonical_json, render_csv, write_files

EXIT_CHECK = 2
EXIT_CONFIG = 3
EXIT_INFRA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="f2walk",
        description="Spherical-average and maximal-function experiments "
        "on free-group systems.",
    )
    parser.add_argument("--version", action="version", version=f"f2walk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} pipeline")
        cmd.add_argument("--config", help="INI config file")
        cmd.add_argument("--seed", type=int, help="override the run seed")
        cmd.add_argument("--out", help="output directory (default $F2WALK_OUT or ./reports)")
        cmd.add_argument("--workers", type=int, help="override the worker count")
        cmd.add_argument("--server", help="remote service URL (default: in-process)")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def read_sections(path: str | None) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    return {name: dict(parser.items(name)) for name in parser.sections()}


def post_run(payload: dict, server: str | None) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            response = client.post("/run", json=payload)
            response.raise_for_status()
            return response.json()

    from .service import app

    async def _call() -> dict:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://f2walk.internal", timeout=None
        ) as client:
            response = await client.post("/run", json=payload)
            response.raise_for_status()
            return response.json()

    return asyncio.run(_call())


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    out_dir = args.out or os.environ.get("F2WALK_OUT") or "./reports"
    try:
        sections = read_sections(args.config)
    except ConfigError as exc:
        print(f"config-invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    payload = {
        "sections": sections,
        "command": args.command,
        "seed": args.seed,
        "workers": args.workers,
    }
    try:
        body = post_run(payload, args.server)
    except httpx.HTTPError as exc:
        print(f"infra-failed: transport error: {exc}", file=sys.stderr)
        return EXIT_INFRA

    status = body["status"]
    if status == "config-invalid":
        print(f"config-invalid: {body['report'].get('error', '')}", file=sys.stderr)
        return EXIT_CONFIG

    tables = {
        name: (t["header"], t["rows"]) for name, t in body.get("tables", {}).items()
    }
    written = write_files(out_dir, body["name"], body["report"], tables)
    for path in sorted(written):
        print(path)
    print(f"{body['name']}: {'PASS' if body['passed'] else 'FAIL'} ({status})")
    return int(body["exit_code"])


if __name__ == "__main__":
    sys.exit(main())
