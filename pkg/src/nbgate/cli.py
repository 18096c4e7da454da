"""Command line front end.

serve runs the HTTP gateway; scenario and bench run the evaluation
harness in process; login, logs, and blocks are small clients for a
running gateway.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .scenarios import SCENARIO_NUMBERS, run_scenario


@click.group()
def main() -> None:
    """Ledger-backed AAA gateway for the SDN northbound interface."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--peers", default=3, show_default=True, type=int, help="Endorsing peers in the deployment.")
@click.option("--admin-password", default="admin", show_default=True)
@click.option(
    "--verify-delay",
    default=0.0,
    show_default=True,
    type=float,
    help="Injected latency per verification, in seconds.",
)
def serve(host: str, port: int, peers: int, admin_password: str, verify_delay: float) -> None:
    """Run the HTTP gateway until interrupted."""
    import uvicorn

    from .gateway.app import create_app
    from .gateway.service import GatewayService

    service = GatewayService(
        num_peers=peers, admin_password=admin_password, verify_delay=verify_delay
    )
    uvicorn.run(create_app(service), host=host, port=port)


@main.command()
@click.argument("number", type=click.IntRange(min(SCENARIO_NUMBERS), max(SCENARIO_NUMBERS)))
@click.option(
    "--quota-limit",
    type=int,
    default=None,
    help="Override the request quota (rate-limit scenario only).",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Also write the report JSON to a file.",
)
def scenario(number: int, quota_limit: int | None, out: Path | None) -> None:
    """Run one scripted evaluation scenario and print its JSON report."""
    options = {}
    if quota_limit is not None:
        options["limit"] = quota_limit
    report = run_scenario(number, **options)
    text = json.dumps(report, indent=2)
    click.echo(text)
    if out is not None:
        out.write_text(text + "\n")
    sys.exit(0 if report["passed"] else 1)


@main.command()
@click.option("--requests", default=bench_mod.DEFAULT_REQUESTS, show_default=True, type=int)
@click.option(
    "--delay",
    default=bench_mod.DEFAULT_DELAY_SECONDS,
    show_default=True,
    type=float,
    help="Injected ledger delay per verification, in seconds.",
)
@click.option("--workers", default=bench_mod.DEFAULT_WORKERS, show_default=True, type=int)
@click.option(
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False, path_type=Path),
)
def bench(requests: int, delay: float, workers: int, out_dir: Path) -> None:
    """Benchmark cached vs uncached verification; write CSV rows and a figure."""
    report = bench_mod.benchmark(requests, ledger_delay=delay, workers=workers)
    out_dir.mkdir(parents=True, exist_ok=True)
    cached_csv = bench_mod.write_csv(report["cached"]["records"], out_dir / "bench_cached.csv")
    uncached_csv = bench_mod.write_csv(
        report["uncached"]["records"], out_dir / "bench_uncached.csv"
    )
    figure = bench_mod.render_figure(report, out_dir / "bench.png")
    click.echo(json.dumps(bench_mod.summary(report), indent=2))
    click.echo("wrote %s, %s, %s" % (cached_csv, uncached_csv, figure))


def _print_response(answer) -> None:
    try:
        click.echo(json.dumps(answer.json(), indent=2))
    except ValueError:
        click.echo(answer.text)
    if answer.status_code >= 400:
        sys.exit(1)


@main.command()
@click.argument("participant_id")
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--password", prompt=True, hide_input=True)
def login(participant_id: str, server: str, password: str) -> None:
    """Obtain a bearer token from a running gateway."""
    import httpx

    _print_response(
        httpx.post(
            server + "/auth/login",
            json={"participant-id": participant_id, "password": password},
        )
    )


@main.command()
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--bearer", required=True, help="Bearer token from the login command.")
@click.option("--offset", default=0, show_default=True, type=int)
@click.option("--limit", default=20, show_default=True, type=int)
def logs(server: str, bearer: str, offset: int, limit: int) -> None:
    """Read committed verification log entries from a running gateway."""
    import httpx

    _print_response(
        httpx.get(
            server + "/logs",
            params={"offset": offset, "limit": limit},
            headers={"Authorization": "Bearer " + bearer},
        )
    )


@main.command()
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
@click.option("--bearer", required=True, help="Bearer token from the login command.")
@click.option("--start", default=0, show_default=True, type=int)
@click.option("--limit", default=10, show_default=True, type=int)
def blocks(server: str, bearer: str, start: int, limit: int) -> None:
    """Read the block chain from a running gateway, tamper check included."""
    import httpx

    _print_response(
        httpx.get(
            server + "/blocks",
            params={"start": start, "limit": limit},
            headers={"Authorization": "Bearer " + bearer},
        )
    )


if __name__ == "__main__":
    main()
