#!/usr/bin/env python3
"""
Тесты процедуры nibble: шаги итерации на маленьких графах и полный прогон по расписанию.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent))

import math

import numpy as np
import pytest

from analysis.nibble import (
    _run_iteration,
    activation_round,
    assignment_mask,
    assignment_pairs,
    compute_T_prime,
    conflict_removal,
    equalizing_flips,
    finalize_iteration,
    init_state,
    refresh_trackers,
    run_nibble,
    truncate_lists,
)
from analysis.param_recursion import TrajectoryRow, engineering_trajectory, imported_trajectory, keep_value, list_target
from core.correspondence import (
    EdgeCorrespondence,
    correspondence_from_pairs,
    identity_correspondence,
    random_correspondence,
)
from core.exceptions import (
    InvalidCorrespondence,
    ListTooShort,
    ProbabilityOverflow,
    RetryExhausted,
    ScheduleEmpty,
)
from core.graph import gen_complete, gen_cycle, gen_path, gen_random_max_degree, gen_star
from core.validator import validate_colouring
from utils.rng import RandomStreams


def _bench_instance():
    graph = gen_random_max_degree(40, 10, seed=1)
    return graph, identity_correspondence(graph, 12), engineering_trajectory(0.2, 10, ln_factor=5.0)


def test_init_state_full_lists_and_trackers():
    graph = gen_cycle(4)
    state = init_state(graph, identity_correspondence(graph, 3))
    assert state.lists.all()
    assert state.tracker.all()
    assert not state.assigned.any()
    assert state.uncoloured.all()
    assert (state.tracker_counts() == 1).all()
    assert (state.step_counts == 1).all()
    assert state.tracker_set(0, 1, 2) == [1]
    assert state.list_of(2) == [1, 2, 3]
    assert state.colouring() == {}


def test_init_state_rejects_invalid_correspondence():
    graph = gen_path(3)
    bad = EdgeCorrespondence(graph, 2, {(0, 1): [(1, 1), (1, 2)]})
    with pytest.raises(InvalidCorrespondence):
        init_state(graph, bad)


def test_truncate_smallest_refreshes_trackers():
    graph = gen_cycle(4)
    state = init_state(graph, identity_correspondence(graph, 3))
    truncate_lists(state, 2)
    assert state.list_of(0) == [1, 2]
    counts = state.tracker_counts()
    assert (counts[:, :, :2] == 1).all()
    assert (counts[:, :, 2] == 0).all()
    assert (state.step_counts == counts).all()
    with pytest.raises(ListTooShort):
        truncate_lists(state, 3)


def test_truncate_random_is_reproducible():
    graph = gen_complete(5)
    corr = identity_correspondence(graph, 6)
    a = truncate_lists(init_state(graph, corr), 3, "random", RandomStreams(4))
    b = truncate_lists(init_state(graph, corr), 3, "random", RandomStreams(4))
    assert (a.lists.sum(axis=1) == 3).all()
    assert (a.lists == b.lists).all()
    with pytest.raises(ValueError):
        truncate_lists(init_state(graph, corr), 3, "random")
    with pytest.raises(ValueError):
        truncate_lists(init_state(graph, corr), 3, "largest")


def test_missing_partners_give_empty_trackers():
    graph = gen_star(3)
    state = init_state(graph, correspondence_from_pairs(graph, 2, {}))
    refresh_trackers(state)
    assert not state.tracker.any()


def test_activation_only_on_live_pairs():
    graph = gen_path(4)
    state = init_state(graph, identity_correspondence(graph, 2))
    state.uncoloured[2] = False
    state.lists[0, 1] = False
    # Вероятность 1/(L ln) >= 1: активируется всё, что разрешено
    mask = activation_round(state, 0.5, 1.0, RandomStreams(0))
    assert mask.tolist() == [[True, False], [True, True], [False, False]]
    assert assignment_pairs(mask) == {(0, 1), (1, 1), (1, 2)}
    assert (assignment_mask(state, {(0, 1), (1, 1), (1, 2)}) == mask).all()


def test_conflict_removal_is_simultaneous():
    graph = gen_path(3)
    state = init_state(graph, identity_correspondence(graph, 2))
    conflict_removal(state, assignment_mask(state, {(0, 1), (1, 1)}))
    # Оба назначения снимают друг друга, хотя каждое и так было бы потеряно
    assert state.list_of(0) == [2]
    assert state.list_of(1) == [2]
    assert assignment_pairs(state.assigned) == set()
    assert state.lost_at[0, 1, 0] and state.lost_at[1, 0, 0]
    assert state.lost_at.sum() == 2


def test_conflict_removal_one_side():
    graph = gen_path(3)
    state = init_state(graph, identity_correspondence(graph, 2))
    conflict_removal(state, assignment_mask(state, {(0, 2)}))
    assert state.list_of(0) == [1, 2]
    assert state.list_of(1) == [1]
    assert assignment_pairs(state.assigned) == {(0, 2)}
    # Трекер T(0, 1, 2) пуст: цвет 2 ушёл из L(1)
    assert state.tracker_set(0, 1, 2) == []
    assert state.tracker_set(0, 1, 1) == [1]


def test_equalizing_flips_extremes():
    graph = gen_path(3)
    corr = identity_correspondence(graph, 2)

    state = init_state(graph, corr)
    equalizing_flips(state, 1.0, 2.0, 2.0, 1.0, RandomStreams(0))
    assert state.lists.all()
    assert not state.lost_at.any()

    state = init_state(graph, corr)
    equalizing_flips(state, 0.0, 2.0, 2.0, 1.0, RandomStreams(0))
    assert not state.lists.any()
    assert state.lost_at.all()


def test_equalizing_flips_overflow():
    graph = gen_star(4)
    state = init_state(graph, identity_correspondence(graph, 2))
    with pytest.raises(ProbabilityOverflow) as info:
        equalizing_flips(state, 0.5, 10.0, 2.0, 2.0, RandomStreams(0))
    assert info.value.vertex == 0
    assert info.value.size == 3


def test_finalize_colours_surviving_assignments():
    graph = gen_path(3)
    state = init_state(graph, identity_correspondence(graph, 2))
    state.assigned[0, 1] = True
    outcome = finalize_iteration(state, 1.0, 1.0)
    assert outcome.property_holds
    assert outcome.stats["newly_retained"] == 1
    assert outcome.stats["uncoloured"] == 1
    assert state.colouring() == {0: 2}
    assert state.tracker_set(1, 1, 2) == []
    assert state.iteration == 1
    assert not state.assigned.any()


def test_finalize_reports_short_lists():
    graph = gen_path(3)
    state = init_state(graph, identity_correspondence(graph, 2))
    state.lists[1, :] = False
    state.lists[0, 0] = False
    outcome = finalize_iteration(state, 2.0, 1.0)
    assert not outcome.property_holds
    # Самые короткие списки первыми
    assert outcome.violations[0].startswith("|L(1)| = 0")
    assert outcome.violations[1].startswith("|L(0)| = 1")


def test_compute_t_prime():
    graph = gen_star(3)
    before = init_state(graph, identity_correspondence(graph, 2))
    assert before.tracker_set(0, 0, 1) == [1, 2]

    after = before.copy()
    after.lost_at[1, 1, 0] = True
    assert compute_T_prime(before, after, 0, 0, 1) == {2}

    after.assigned[2, 1] = True
    assert compute_T_prime(before, after, 0, 0, 1) == set()
    assert compute_T_prime(before, after, 0, 0, 2) == {1}


def test_resalting_vertex_changes_only_its_decisions():
    graph = gen_complete(6)
    corr = identity_correspondence(graph, 8)
    base = RandomStreams(5)
    salted = base.with_salts({3: 17})
    at_u = np.array(graph.edges) == 3
    touches_u = at_u.any(axis=1)

    state = truncate_lists(init_state(graph, corr), 8)
    a = activation_round(state, 1.0, 2.0, base)
    b = activation_round(state, 1.0, 2.0, salted)
    assert (a[~touches_u] == b[~touches_u]).all()
    assert (a[touches_u] != b[touches_u]).any()

    first = equalizing_flips(state.copy(), 0.5, 1e9, 1.0, 10.0, base)
    second = equalizing_flips(state.copy(), 0.5, 1e9, 1.0, 10.0, salted)
    assert (first.lost_at[~at_u] == second.lost_at[~at_u]).all()
    assert (first.lost_at[at_u] != second.lost_at[at_u]).any()


def test_run_nibble_partial_colouring_is_valid():
    graph, corr, schedule = _bench_instance()
    run = run_nibble(graph, corr, 0.2, schedule, seed=3)
    assert len(run.trace) == schedule.runnable_iterations == 1
    assert run.halt_reason == "L_below"
    assert run.colouring
    assert validate_colouring(graph, corr, run.colouring, require_total=False).valid
    assert run.trace[0].loss_trials > 0
    assert run.total_attempts >= 1

    again = run_nibble(graph, corr, 0.2, schedule, seed=3)
    assert again.colouring == run.colouring


def test_run_nibble_without_instrumentation():
    graph, corr, schedule = _bench_instance()
    run = run_nibble(graph, corr, 0.2, schedule, seed=3, instrument=False, truncation_mode="random")
    assert run.trace[0].loss_trials == 0
    assert validate_colouring(graph, corr, run.colouring, require_total=False).valid


def test_run_nibble_schedule_checks():
    graph, _, schedule = _bench_instance()
    with pytest.raises(ScheduleEmpty):
        run_nibble(graph, identity_correspondence(graph, 11), 0.2, schedule)

    edgeless = gen_path(1)
    run = run_nibble(edgeless, identity_correspondence(edgeless, 3), 0.2, schedule)
    assert run.halt_reason == "edgeless"
    assert run.colouring == {}


def test_run_nibble_retry_exhausted():
    graph = gen_path(3)
    corr = identity_correspondence(graph, 3)
    rows = [
        TrajectoryRow(0, 3.0, 1.0, keep_value(3.0, 1.0, 2.0, 1000.0), 3.0),
        TrajectoryRow(1, 100.0, 1.0, 0.0, 100.0),
    ]
    # Активации почти не случаются, а L_1 = 100 недостижимо
    schedule = imported_trajectory(0.2, 2.0, rows, ln_factor=1000.0)
    with pytest.raises(RetryExhausted) as info:
        run_nibble(graph, corr, 0.2, schedule, retry_limit=3)
    assert info.value.iteration == 0
    assert info.value.attempts == 3
    assert info.value.violations


def test_activation_frequency_matches_probability():
    """Частота активаций на 10^6 парах (ребро, цвет) в пределах 3 стандартных ошибок от 1/(L ln)."""
    graph = gen_path(101)
    state = init_state(graph, identity_correspondence(graph, 100))
    streams = RandomStreams(8)
    L, ln = 4.0, 5.0
    p = 1.0 / (L * ln)

    attempts = 100
    trials = attempts * graph.edge_count * 100
    hits = sum(int(activation_round(state, L, ln, streams, attempt).sum()) for attempt in range(attempts))
    std_error = math.sqrt(p * (1.0 - p) / trials)
    print(f"Частота активаций {hits / trials:.6f}, ожидание {p:.6f}, ошибка {std_error:.2e}")
    assert trials == 1_000_000
    assert abs(hits / trials - p) < 3 * std_error


def _step_by_hand(graph, corr, schedule, seed):
    """Одна итерация по шагам; возвращает состояние после усечения и после фиксации."""
    streams = RandomStreams(seed)
    row, next_row = schedule.rows[0], schedule.rows[1]
    state = truncate_lists(init_state(graph, corr), list_target(row.L))
    before = state.copy()
    step_lists = state.lists.copy()
    assignments = activation_round(state, row.L, schedule.ln_factor, streams)
    conflict_removal(state, assignments)
    equalizing_flips(state, row.keep, row.L, schedule.ln_factor, row.T, streams, step_lists=step_lists)
    finalize_iteration(state, next_row.L, next_row.T)
    return before, state


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_next_trackers_lie_in_t_prime(seed):
    graph = gen_random_max_degree(40, 10, seed=1)
    corr = random_correspondence(graph, 12, 0.5, seed=4)
    schedule = engineering_trajectory(0.2, 10, ln_factor=5.0)
    before, after = _step_by_hand(graph, corr, schedule, seed)

    shrunk = 0
    for e in range(graph.edge_count):
        for v in graph.edges[e]:
            for c in range(1, corr.q + 1):
                t_next = set(after.tracker_set(e, v, c))
                t_prime = compute_T_prime(before, after, e, v, c)
                assert t_next <= t_prime
                assert t_prime <= set(before.tracker_set(e, v, c))
                shrunk += len(before.tracker_set(e, v, c)) - len(t_next)
    assert shrunk > 0


def test_trackers_consistent_after_iteration():
    graph = gen_random_max_degree(40, 10, seed=1)
    corr = random_correspondence(graph, 12, 0.5, seed=4)
    schedule = engineering_trajectory(0.2, 10, ln_factor=5.0)
    state = init_state(graph, corr)
    original = state.copy()

    trial, outcome = _run_iteration(
        state, schedule.rows[0], schedule.rows[1], schedule, RandomStreams(6), 0, "smallest", False,
    )
    # Исходное состояние не меняется
    assert (state.lists == original.lists).all()
    assert (state.tracker == original.tracker).all()
    assert outcome.stats["newly_retained"] > 0

    lists = {e: set(trial.list_of(e)) for e in range(graph.edge_count)}
    for e in range(graph.edge_count):
        for v in graph.edges[e]:
            for c in range(1, corr.q + 1):
                expected = sorted(
                    f for f in graph.incident_edges(e, v)
                    if trial.uncoloured[e] and trial.uncoloured[f] and c in lists[e]
                    and corr.partner(e, c, f) in lists[f]
                )
                assert trial.tracker_set(e, v, c) == expected
