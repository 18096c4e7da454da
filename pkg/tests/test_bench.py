"""Benchmark mechanics: records, statistics, CSV and figure output."""

from __future__ import annotations

import csv

import pytest

from nbgate.bench import (
    CSV_FIELDS,
    RequestRecord,
    benchmark,
    latency_stats,
    render_figure,
    summary,
    write_csv,
)


@pytest.fixture(scope="module")
def small_report():
    return benchmark(30, ledger_delay=0.02, workers=8)


def test_no_requests_is_harmless():
    report = benchmark(0, ledger_delay=0.0, workers=2)
    assert report["cached"]["stats"] == {}
    assert report["uncached"]["stats"] == {}
    assert report["cached"]["hit_ratio"] is None
    assert report["speedup"] is None
    assert report["accounting_equal"] is True


@pytest.mark.parametrize("kwargs", [{"num_requests": -1}, {"workers": 0}])
def test_bad_parameters_rejected(kwargs):
    with pytest.raises(ValueError):
        benchmark(kwargs.get("num_requests", 1), workers=kwargs.get("workers", 1))


def test_cached_run_hits_after_first_request(small_report):
    cached = small_report["cached"]
    assert cached["hit_ratio"] == pytest.approx(29 / 30)
    assert cached["records"][0].cache_hit is False
    assert all(record.cache_hit for record in cached["records"][1:])
    assert all(record.verdict == "ACCEPT" for record in cached["records"])


def test_uncached_run_pays_the_delay(small_report):
    uncached = small_report["uncached"]
    assert uncached["hit_ratio"] == 0.0
    assert uncached["stats"]["min"] >= 20.0


def test_accounting_identical_across_modes(small_report):
    assert small_report["cached"]["log_entries"] == 30
    assert small_report["uncached"]["log_entries"] == 30
    assert small_report["accounting_equal"] is True


def test_speedup_reflects_the_injected_delay(small_report):
    assert small_report["speedup"] > 2


def test_latency_stats_shape():
    records = [RequestRecord(i, float(i + 1), False, "ACCEPT") for i in range(4)]
    stats = latency_stats(records)
    assert stats == {"min": 1.0, "max": 4.0, "mean": 2.5}
    assert latency_stats([]) == {}


def test_summary_is_json_friendly(small_report):
    import json

    text = json.dumps(summary(small_report))
    assert "records" not in text


def test_csv_roundtrip(tmp_path, small_report):
    path = write_csv(small_report["cached"]["records"], tmp_path / "rows.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 31
    index, latency, hit, verdict = rows[1]
    assert index == "0"
    assert float(latency) >= 0.0
    assert hit in {"true", "false"}
    assert verdict == "ACCEPT"


def test_figure_rendered(tmp_path, small_report):
    path = render_figure(small_report, tmp_path / "latency.png")
    payload = path.read_bytes()
    assert payload[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(payload) > 1000


def test_figure_with_empty_report(tmp_path):
    report = benchmark(0, ledger_delay=0.0, workers=2)
    path = render_figure(report, tmp_path / "empty.png")
    assert path.exists()
