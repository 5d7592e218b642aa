#!/usr/bin/env python3
"""
Тесты командной строки: JSON-сводки в stdout и коды выхода.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent))

import json

import pytest

from config import settings
from interface.cli import main


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setattr(settings, "EXPORT_DIR", str(tmp_path / "exports"))


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_gen_color_validate(tmp_path, capsys):
    instance = tmp_path / "p3.json"
    code, payload = _run(capsys, "gen", "--graph", "path", "--n", "3", "--q", "2", "--out", str(instance))
    assert code == 0
    assert payload["edges"] == 2 and payload["q"] == 2

    colouring = tmp_path / "p3_colouring.json"
    code, summary = _run(capsys, "color", str(instance), "--out", str(colouring), "--resample-log", str(tmp_path / "log.csv"))
    assert code == 0
    assert summary["success"] and summary["valid"]
    assert summary["halt_reason"] == "skipped"
    assert colouring.exists()

    code, report = _run(capsys, "validate", str(instance), str(colouring))
    assert code == 0
    assert report["valid"]


def test_validate_rejects_conflict(tmp_path, capsys):
    instance = tmp_path / "c4.json"
    _run(capsys, "gen", "--graph", "cycle", "--n", "4", "--q", "2", "--out", str(instance))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colours": [[0, 1], [1, 1], [2, 2], [3, 2]]}), encoding="utf-8")
    code, report = _run(capsys, "validate", str(instance), str(bad))
    assert code == 5
    assert [0, 1, 1, 1] in report["conflicts"]


def test_oracle_decisions(tmp_path, capsys):
    instance = tmp_path / "c4_shift.json"
    _run(capsys, "gen", "--graph", "cycle", "--n", "4", "--corr", "shift", "--q", "2", "--out", str(instance))
    code, payload = _run(capsys, "oracle", str(instance))
    assert code == 0
    assert payload["decision"] == "uncolourable"
    assert payload["witness"] is None

    code, payload = _run(capsys, "oracle", str(instance), "--min-q", "--builder", "shift", "--q-max", "4")
    assert code == 0
    assert payload["min_q"] == 3


def test_finisher_cap_exit_code(tmp_path, capsys):
    instance = tmp_path / "c4_shift.json"
    _run(capsys, "gen", "--graph", "cycle", "--n", "4", "--corr", "shift", "--q", "2", "--out", str(instance))
    code, payload = _run(capsys, "color", str(instance), "--resample-cap", "5")
    assert code == 4
    assert payload["error"] == "ResampleCapExceeded"


def test_simulate(tmp_path, capsys):
    out = tmp_path / "trajectory.csv"
    code, payload = _run(capsys, "simulate", "--eps", "0.1", "--delta", "1e100", "--out", str(out))
    assert code == 0
    assert payload["halt_reason"] == "ratio_exceeded"
    assert payload["report"]["growth_holds"]
    assert out.exists()

    code, payload = _run(capsys, "simulate", "--eps", "0.1", "--delta", "1e6")
    assert code == 2
    assert payload["error"] == "NoProgress"

    code, payload = _run(capsys, "simulate", "--crossover", "--eps", "0.05", "--grid", "1e6", "1e100")
    assert code == 0
    assert [point["status"] for point in payload["points"]] == ["no_progress", "ratio_exceeded"]

    code, payload = _run(capsys, "simulate", "--crossover", "--eps", "0.2")
    assert code == 2
    assert payload["error"] == "DomainError"


def test_missing_instance_is_invalid_input(tmp_path, capsys):
    code, payload = _run(capsys, "color", str(tmp_path / "nothing.json"))
    assert code == 2
    assert payload["error"] == "InstanceFormatError"


def test_runs_traces_and_stats(tmp_path, capsys):
    instance = tmp_path / "random.json"
    _run(
        capsys, "gen", "--graph", "random", "--n", "40", "--degree", "10",
        "--corr", "random", "--q", "12", "--density", "0.25", "--seed", "1", "--out", str(instance),
    )
    traces = tmp_path / "traces"
    engine = ["--eps", "0.2", "--ln-factor", "5", "--engineering-mode"]
    code, payload = _run(capsys, "color", str(instance), "--runs", "3", "--traces", str(traces), *engine)
    assert code == 0
    assert payload["runs"] == 3
    assert payload["invalid_successes"] == []

    files = sorted(str(path) for path in traces.glob("trace_seed*.csv"))
    assert len(files) == 3
    report_path = tmp_path / "report.csv"
    code, payload = _run(capsys, "stats", "--traces", *files, "--out", str(report_path))
    assert code == 0
    assert payload["runs"] == 3
    assert {row["metric"] for row in payload["report"]} == {"loss", "retention", "t_prime"}
    assert report_path.exists()


def _bench_instance(tmp_path, capsys):
    instance = tmp_path / "random.json"
    _run(
        capsys, "gen", "--graph", "random", "--n", "40", "--degree", "10",
        "--corr", "random", "--q", "12", "--density", "0.25", "--seed", "1", "--out", str(instance),
    )
    return instance


def test_color_outputs_are_byte_identical(tmp_path, capsys):
    instance = _bench_instance(tmp_path, capsys)
    engine = ["--eps", "0.2", "--ln-factor", "5", "--engineering-mode", "--seed", "11"]
    payloads = []
    for name in ("first", "second"):
        code, payload = _run(
            capsys, "color", str(instance), *engine,
            "--out", str(tmp_path / f"{name}.json"),
            "--trace", str(tmp_path / f"{name}_trace.csv"),
            "--resample-log", str(tmp_path / f"{name}_log.csv"),
        )
        assert code == 0
        payloads.append(payload)

    assert payloads[0] == payloads[1]
    for suffix in (".json", "_trace.csv", "_log.csv"):
        first = (tmp_path / f"first{suffix}").read_bytes()
        second = (tmp_path / f"second{suffix}").read_bytes()
        assert first == second


def test_color_with_imported_schedule(tmp_path, capsys):
    instance = _bench_instance(tmp_path, capsys)
    schedule = tmp_path / "schedule.csv"
    code, payload = _run(
        capsys, "simulate", "--eps", "0.2", "--delta", "10", "--ln-factor", "5",
        "--engineering-mode", "--out", str(schedule),
    )
    assert code == 0
    assert payload["mode"] == "engineering"

    engine = ["--eps", "0.2", "--ln-factor", "5", "--seed", "3"]
    code, summary = _run(capsys, "color", str(instance), *engine, "--schedule", str(schedule))
    assert code == 0
    assert summary["schedule_mode"] == "imported"
    assert summary["fallback"] is None
    assert summary["iterations"] == 1
    assert summary["success"] and summary["valid"]

    # Импортированное расписание совпадает с вычисленным настольным
    code, computed = _run(capsys, "color", str(instance), *engine, "--engineering-mode")
    assert code == 0
    assert computed["schedule_mode"] == "engineering"
    assert computed["nibble_coloured"] == summary["nibble_coloured"]

    code, payload = _run(capsys, "color", str(instance), *engine, "--schedule", str(tmp_path / "missing.csv"))
    assert code == 2


def test_stats_report_defaults_to_export_dir(tmp_path, capsys):
    instance = tmp_path / "c6.json"
    _run(capsys, "gen", "--graph", "cycle", "--n", "6", "--q", "3", "--out", str(instance))
    code, payload = _run(capsys, "stats", str(instance), "--runs", "2")
    assert code == 0
    expected = tmp_path / "exports" / "concentration_report.csv"
    assert payload["report_file"] == str(expected)
    assert expected.exists()
