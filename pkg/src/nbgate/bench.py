"""Latency benchmark for the verification path.

Drives identical GET requests through a mock controller twice, once with
the verdict cache and once without, against gateways configured with an
injected per-verification delay standing in for real ledger latency.
Reports per-request latency, cache hit ratio, the cached/uncached
speedup, and whether both runs committed the same log entries.
"""

from __future__ import annotations

import csv
import statistics
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter

from .controller import MockController, attach_controller
from .gateway.service import GatewayService
from .scenarios import seed_fixture

BENCH_APP = "FW_APP"
BENCH_URL = "/wm/firewall/module/status/json"

DEFAULT_REQUESTS = 1000
DEFAULT_DELAY_SECONDS = 0.1
DEFAULT_WORKERS = 32

CSV_FIELDS = ("request_index", "latency_ms", "cache_hit", "verdict")


@dataclass(frozen=True)
class RequestRecord:
    request_index: int
    latency_ms: float
    cache_hit: bool
    verdict: str


def _drive_sequential(
    controller: MockController, token_id: str, num_requests: int
) -> list[RequestRecord]:
    records = []
    for index in range(num_requests):
        start = perf_counter()
        answer = controller.handle(token_id, "GET", BENCH_URL)
        records.append(
            RequestRecord(
                index,
                (perf_counter() - start) * 1000.0,
                answer.cache_hit,
                answer.verdict.action.value,
            )
        )
    return records


def _drive_parallel(
    controller: MockController, token_id: str, num_requests: int, workers: int
) -> list[RequestRecord]:
    def one(index: int) -> RequestRecord:
        start = perf_counter()
        answer = controller.handle(token_id, "GET", BENCH_URL)
        return RequestRecord(
            index,
            (perf_counter() - start) * 1000.0,
            answer.cache_hit,
            answer.verdict.action.value,
        )

    if num_requests == 0:
        return []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(num_requests)))


def latency_stats(records: list[RequestRecord]) -> dict:
    if not records:
        return {}
    values = [record.latency_ms for record in records]
    return {"min": min(values), "max": max(values), "mean": statistics.fmean(values)}


def _log_multiset(entries: list[dict]) -> Counter:
    # Token ids differ between deployments, so compare the stable fields.
    return Counter(
        (
            entry["url"],
            entry["http_method"],
            entry["permission_id"],
            entry["application_id"],
            entry["action"],
            entry["message"],
        )
        for entry in entries
    )


def _run_mode(
    num_requests: int, ledger_delay: float, workers: int, cache_enabled: bool
) -> dict:
    # Quota headroom keeps rate limiting out of the measurement.
    gateway = GatewayService(
        verify_delay=ledger_delay,
        quota_limit=max(1200, 2 * num_requests + 100),
    )
    fixture = seed_fixture(gateway)
    access = fixture.app_named(BENCH_APP)
    controller = attach_controller(
        gateway,
        fixture.controller_id,
        fixture.controller_password,
        fixture.controller_wallet,
        cache_enabled=cache_enabled,
        refresh_workers=workers,
    )
    logs_before = gateway.reader.log_count()
    if cache_enabled:
        # Sequential so every request after the first can hit the cache;
        # the background refreshes overlap with the loop.
        records = _drive_sequential(controller, access.token_id, num_requests)
    else:
        # Without the cache every request waits out the ledger delay, so
        # they are issued concurrently to keep the wall time bounded.
        records = _drive_parallel(controller, access.token_id, num_requests, workers)
    controller.close()
    entries = gateway.reader.logs(offset=logs_before)
    hits = sum(1 for record in records if record.cache_hit)
    return {
        "cache_enabled": cache_enabled,
        "records": records,
        "stats": latency_stats(records),
        "hit_ratio": hits / len(records) if records else None,
        "log_entries": len(entries),
        "log_multiset": _log_multiset(entries),
    }


def benchmark(
    num_requests: int = DEFAULT_REQUESTS,
    *,
    ledger_delay: float = DEFAULT_DELAY_SECONDS,
    workers: int = DEFAULT_WORKERS,
) -> dict:
    """Measure the cached and uncached verification paths side by side."""
    if num_requests < 0:
        raise ValueError("num_requests must be non-negative")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    cached = _run_mode(num_requests, ledger_delay, workers, cache_enabled=True)
    uncached = _run_mode(num_requests, ledger_delay, workers, cache_enabled=False)
    speedup = None
    if cached["stats"] and uncached["stats"] and cached["stats"]["mean"] > 0:
        speedup = uncached["stats"]["mean"] / cached["stats"]["mean"]
    return {
        "requests": num_requests,
        "ledger_delay_s": ledger_delay,
        "workers": workers,
        "cached": cached,
        "uncached": uncached,
        "speedup": speedup,
        "accounting_equal": (
            cached["log_entries"] == uncached["log_entries"]
            and cached["log_multiset"] == uncached["log_multiset"]
        ),
    }


def summary(report: dict) -> dict:
    """The JSON-friendly slice of a benchmark report (no per-request rows)."""
    def mode_summary(mode: dict) -> dict:
        return {
            "stats_ms": mode["stats"],
            "hit_ratio": mode["hit_ratio"],
            "log_entries": mode["log_entries"],
        }

    return {
        "requests": report["requests"],
        "ledger_delay_s": report["ledger_delay_s"],
        "workers": report["workers"],
        "cached": mode_summary(report["cached"]),
        "uncached": mode_summary(report["uncached"]),
        "speedup": report["speedup"],
        "accounting_equal": report["accounting_equal"],
    }


def write_csv(records: list[RequestRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for record in records:
            writer.writerow(
                [
                    record.request_index,
                    "%.3f" % record.latency_ms,
                    str(record.cache_hit).lower(),
                    record.verdict,
                ]
            )
    return path


def render_figure(report: dict, path: str | Path) -> Path:
    """Plot per-request latency for both runs next to the CSV output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, ax = plt.subplots(figsize=(9, 5))
    plotted = False
    for mode, color in (("uncached", "#c44e52"), ("cached", "#4c72b0")):
        records = report[mode]["records"]
        if not records:
            continue
        ax.plot(
            [r.request_index for r in records],
            [r.latency_ms for r in records],
            label="%s (mean %.2f ms)" % (mode, report[mode]["stats"]["mean"]),
            color=color,
            linewidth=0.8,
        )
        plotted = True
    ax.set_yscale("log")
    ax.set_xlabel("request index")
    ax.set_ylabel("latency (ms, log scale)")
    title = "Verification latency, cache on vs off"
    if report["speedup"]:
        title += " (%.1fx mean speedup)" % report["speedup"]
    ax.set_title(title)
    if plotted:
        ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
