#!/usr/bin/env python3
"""
Тесты конвейера: nibble -> остаточный экземпляр -> финишёр -> проверка,
запасной путь без nibble и серии независимых прогонов.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent))

import math

import pytest

from config import settings
from core.correspondence import EdgeCorrespondence, identity_correspondence, random_correspondence, shift_correspondence
from core.exceptions import InvalidCorrespondence
from core.graph import gen_cycle, gen_path, gen_random_max_degree
from core.validator import validate_colouring
from pipeline.models import EngineOptions
from pipeline.orchestrator import ColouringOrchestrator


def test_small_delta_falls_back_to_finisher():
    graph = gen_path(3)
    corr = identity_correspondence(graph, 2)
    result = ColouringOrchestrator(EngineOptions(seed=0)).run(graph, corr)
    summary = result.summary
    assert summary.halt_reason == "skipped"
    assert summary.fallback
    assert summary.iterations == 0
    assert not summary.finisher.hypothesis_ok
    assert summary.finisher.success
    assert summary.success and summary.valid
    assert validate_colouring(graph, corr, result.colouring).valid


def test_strict_hypothesis_stops_before_finisher():
    graph = gen_path(3)
    corr = identity_correspondence(graph, 2)
    result = ColouringOrchestrator(EngineOptions(strict_hypothesis=True)).run(graph, corr)
    assert not result.summary.success
    assert not result.summary.finisher.success
    assert "гипотеза" in result.summary.error
    assert result.colouring == {}


def test_edgeless_graph():
    graph = gen_path(1)
    result = ColouringOrchestrator().run(graph, identity_correspondence(graph, 3))
    assert result.summary.halt_reason == "edgeless"
    assert result.summary.success
    assert result.colouring == {}


def test_full_pipeline_with_nibble_phase():
    graph = gen_random_max_degree(40, 10, seed=1)
    corr = random_correspondence(graph, 12, 0.25, seed=5)
    options = EngineOptions(eps=0.2, seed=3, ln_factor=5.0, engineering_mode=True)
    result = ColouringOrchestrator(options).run(graph, corr)
    summary = result.summary

    assert summary.schedule_mode == "engineering"
    assert summary.fallback is None
    assert summary.iterations == len(result.trace) == 1
    assert summary.nibble_coloured > 0
    assert summary.finisher.residual_edges == graph.edge_count - summary.nibble_coloured
    assert summary.success and summary.valid
    assert sorted(result.colouring) == list(range(graph.edge_count))
    assert validate_colouring(graph, corr, result.colouring).valid
    assert summary.finisher.resamples == len(result.resample_log)


def test_pipeline_is_reproducible():
    graph = gen_random_max_degree(40, 10, seed=1)
    corr = random_correspondence(graph, 12, 0.25, seed=5)
    options = EngineOptions(eps=0.2, seed=7, ln_factor=5.0, engineering_mode=True)
    first = ColouringOrchestrator(options).run(graph, corr)
    second = ColouringOrchestrator(options).run(graph, corr)
    assert first.colouring == second.colouring
    assert first.summary == second.summary


def test_run_rejects_invalid_correspondence():
    graph = gen_path(3)
    bad = EdgeCorrespondence(graph, 2, {(0, 1): [(1, 1), (2, 1)]})
    orchestrator = ColouringOrchestrator()
    with pytest.raises(InvalidCorrespondence):
        orchestrator.run(graph, bad)

    results = orchestrator.run_many(graph, bad, [0, 1])
    assert [r.summary.halt_reason for r in results] == ["error", "error"]
    assert all("InvalidCorrespondence" in r.summary.error for r in results)


def test_run_many_keeps_seed_order():
    graph = gen_cycle(6)
    corr = identity_correspondence(graph, 3)
    results = ColouringOrchestrator(max_workers=2).run_many(graph, corr, [4, 1, 9])
    assert [r.summary.seed for r in results] == [4, 1, 9]
    assert all(r.summary.success for r in results)
    assert all(validate_colouring(graph, corr, r.colouring).valid for r in results)


def test_engine_options_validation():
    with pytest.raises(ValueError):
        EngineOptions(truncation_mode="largest")
    with pytest.raises(ValueError):
        EngineOptions(eps=0.0)
    assert EngineOptions().retry_limit >= 1


def _series_instances():
    """Четыре экземпляра по 250 прогонов: q = ⌈1.2Δ⌉."""
    dense = gen_random_max_degree(12, 6, seed=1)
    mixed = gen_random_max_degree(12, 5, seed=2)
    sparse = gen_random_max_degree(10, 4, seed=3)
    cycle = gen_cycle(8)

    def q_for(graph):
        return math.ceil(1.2 * graph.max_degree)

    return [
        ("identity", dense, identity_correspondence(dense, q_for(dense))),
        ("random", mixed, random_correspondence(mixed, q_for(mixed), 0.5, seed=7)),
        ("identity", sparse, identity_correspondence(sparse, q_for(sparse))),
        ("shift", cycle, shift_correspondence(cycle, q_for(cycle), [(0, 1)])),
    ]


def test_thousand_runs_never_report_invalid_colouring():
    options = EngineOptions(
        eps=0.2, ln_factor=5.0, engineering_mode=True,
        resample_cap_per_edge=settings.SERIES_RESAMPLE_CAP_PER_EDGE,
    )
    orchestrator = ColouringOrchestrator(options)
    total = 0
    for kind, graph, corr in _series_instances():
        results = orchestrator.run_many(graph, corr, list(range(250)))
        successes = 0
        for result in results:
            summary = result.summary
            total += 1
            if summary.finisher is not None and summary.finisher.success:
                assert summary.valid, f"{kind}: seed {summary.seed}"
                assert validate_colouring(graph, corr, result.colouring).valid
                assert sorted(result.colouring) == list(range(graph.edge_count))
                successes += 1
            else:
                assert not summary.success
                assert summary.error
        print(f"{kind}, m={graph.edge_count}, q={corr.q}: успешно {successes} из {len(results)}")
        assert successes > 0
    assert total == 1000
