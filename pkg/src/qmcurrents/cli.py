"""Command-line client for the experiment service.

The CLI is a thin HTTP client: by default it mounts the FastAPI app
in-process (no server needed), and with ``--server URL`` it talks to a
running instance instead.  Exit codes: 0 success, 2 config error,
3 solver failure.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

from .config import ConfigError, load_config_file
from .experiments import Table
from .tables import render_table, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge to the ASGI app so the CLI needs no server."""

    def __init__(self, app) -> None:
        self._transport = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def call() -> httpx.Response:
            response = await self._transport.handle_async_request(request)
            await response.aread()
            return response

        response = asyncio.run(call())
        return httpx.Response(
            response.status_code, headers=response.headers, content=response.content, request=request
        )


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from .service import app

    return httpx.Client(transport=_InProcessTransport(app), base_url="http://qmcurrents.local", timeout=None)


def _error_kind(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
    except Exception:
        return "solver"
    if isinstance(detail, dict):
        return detail.get("kind", "solver")
    return "config" if response.status_code in (400, 422) else "solver"


def _table_from_payload(payload: dict, config: dict) -> Table:
    return Table(
        columns=tuple(payload["columns"]),
        rows=tuple(tuple(r) for r in payload["rows"]),
        config=config,
    )


def _run(name: str, config_path: str | None, out: str | None, fmt: str | None,
         threads: int | None, seedless: bool, server: str | None) -> None:
    try:
        cfg = load_config_file(config_path) if config_path else load_config_file_or_default()
        if threads is not None:
            cfg = cfg.model_copy(update={"threads": threads})
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    out_path = out or (cfg.output.path if cfg.output else None) or f"{name}.csv"
    out_fmt = fmt or (cfg.output.format if cfg.output else "csv")

    body = cfg.model_dump(mode="json")
    with _client(server) as client:
        payloads = []
        for _ in range(2 if seedless else 1):
            resp = client.post(f"/v1/{name}", json=body)
            if resp.status_code >= 400:
                kind = _error_kind(resp)
                click.echo(f"{kind} error: {resp.text}", err=True)
                sys.exit(EXIT_CONFIG if kind == "config" else EXIT_SOLVER)
            payloads.append(resp.json())

    data = payloads[0]
    table = _table_from_payload(data["table"], data["config"])
    trace = (
        _table_from_payload(data["trace"], data["config"]) if data.get("trace") is not None else None
    )
    if seedless:
        second = _table_from_payload(payloads[1]["table"], payloads[1]["config"])
        if render_table(table, out_fmt) != render_table(second, out_fmt):
            click.echo("determinism check failed: two identical runs differ", err=True)
            sys.exit(EXIT_SOLVER)
    written = write_outputs(out_path, out_fmt, table, trace)
    for path in written:
        click.echo(str(path))
    if data.get("any_failed"):
        click.echo("solver failure: one or more rows carry a failure flag", err=True)
        sys.exit(EXIT_SOLVER)
    sys.exit(EXIT_OK)


def load_config_file_or_default():
    from .config import parse_config

    return parse_config({})


def _experiment_command(name: str):
    @click.command(name=name, help=f"Run the {name} experiment.")
    @click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file.")
    @click.option("--out", type=click.Path(), default=None, help="Output table path.")
    @click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None)
    @click.option("--threads", type=int, default=None, help="Worker threads for grid points.")
    @click.option("--seedless", is_flag=True, help="Run twice and assert byte-identical output.")
    @click.option("--server", default=None, help="Base URL of a running service (default: in-process).")
    def cmd(config_path, out, fmt, threads, seedless, server):
        _run(name, config_path, out, fmt, threads, seedless, server)

    return cmd


@click.group()
def main() -> None:
    """Measurement-induced currents in monitored lattice models."""


for _name in ("spectrum", "pulse", "bloch-sweep", "tau-sweep", "floquet", "zeno-report"):
    main.add_command(_experiment_command(_name))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("qmcurrents.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
