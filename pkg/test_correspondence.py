#!/usr/bin/env python3
"""
Тесты рёберного соответствия, его конструкторов и проверки раскрасок.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent))

import pytest

from core.correspondence import (
    EdgeCorrespondence,
    correspondence_from_pairs,
    identity_correspondence,
    random_correspondence,
    shift_correspondence,
    validate_correspondence,
)
from core.exceptions import NotACycle, NotIncident
from core.graph import gen_complete, gen_cycle, gen_path, gen_random_max_degree, gen_star
from core.validator import is_proper_edge_colouring, validate_colouring


def test_identity_partner_is_same_colour():
    graph = gen_star(3)
    corr = identity_correspondence(graph, 4)
    assert corr.partner(0, 3, 1) == 3
    assert corr.partner(2, 1, 0) == 1
    assert corr.partner(0, 5, 1) is None
    assert validate_correspondence(corr).ok


def test_partner_requires_incident_edges():
    graph = gen_path(4)
    corr = identity_correspondence(graph, 2)
    with pytest.raises(NotIncident):
        corr.partner(0, 1, 2)
    with pytest.raises(NotIncident):
        corr.pairs_for(0, 0)


def test_reversed_key_is_normalised():
    graph = gen_path(3)
    corr = correspondence_from_pairs(graph, 3, {(1, 0): [(1, 2), (3, 1)]})
    assert list(corr.matchings) == [(0, 1)]
    assert corr.matchings[(0, 1)] == ((1, 3), (2, 1))
    # Со стороны ребра 1: пара (1, 2) означает, что цвет 1 на 1 блокирует 2 на 0
    assert corr.partner(1, 1, 0) == 2
    assert corr.partner(0, 2, 1) == 1
    assert corr.pairs_for(1, 0) == [(1, 2), (3, 1)]


def test_shift_correspondence_on_cycle():
    graph = gen_cycle(4)
    corr = shift_correspondence(graph, 3, [(0, 1)])
    assert corr.matchings[(0, 1)] == ((1, 2), (2, 3), (3, 1))
    assert corr.partner(0, 3, 1) == 1
    assert corr.partner(1, 1, 0) == 3
    assert corr.matchings[(1, 2)] == ((1, 1), (2, 2), (3, 3))
    assert validate_correspondence(corr).ok

    with pytest.raises(NotACycle):
        shift_correspondence(gen_path(4), 3, [(0, 1)])
    with pytest.raises(NotIncident):
        shift_correspondence(graph, 3, [(0, 2)])


def test_random_correspondence_is_valid_and_reproducible():
    graph = gen_random_max_degree(12, 4, seed=3)
    a = random_correspondence(graph, 6, 0.5, seed=11)
    b = random_correspondence(graph, 6, 0.5, seed=11)
    assert a.matchings == b.matchings
    assert validate_correspondence(a).ok
    assert all(len(pairs) == 3 for pairs in a.matchings.values())
    assert all(len(pairs) == 0 for pairs in random_correspondence(graph, 6, 0.0, seed=1).matchings.values())
    with pytest.raises(ValueError):
        random_correspondence(graph, 6, 1.5, seed=1)


def test_partner_matrix_is_zero_based_both_ways():
    graph = gen_path(3)
    corr = correspondence_from_pairs(graph, 3, {(0, 1): [(1, 3)]})
    matrix = corr.partner_matrix()
    assert matrix[(0, 1)].tolist() == [2, -1, -1]
    assert matrix[(1, 0)].tolist() == [-1, -1, 0]


def test_validate_reports_first_violation_in_key_order():
    graph = gen_complete(3)
    bad = EdgeCorrespondence(graph, 2, {
        (1, 2): [(1, 1), (1, 2)],
        (0, 1): [(1, 3)],
    })
    report = validate_correspondence(bad)
    assert not report.ok
    assert report.pair == (0, 1)
    assert "вне диапазона" in report.reason

    dup_second = EdgeCorrespondence(gen_path(3), 2, {(0, 1): [(1, 2), (2, 2)]})
    report = validate_correspondence(dup_second)
    assert not report.ok and "второй" in report.reason

    not_incident = EdgeCorrespondence(gen_path(4), 2, {(0, 2): [(1, 1)]})
    assert validate_correspondence(not_incident).pair == (0, 2)

    assert not validate_correspondence(EdgeCorrespondence(gen_path(3), 0, {})).ok


def test_validate_colouring_detects_conflicts():
    graph = gen_cycle(4)
    corr = identity_correspondence(graph, 2)
    good = {0: 1, 1: 2, 2: 1, 3: 2}
    report = validate_colouring(graph, corr, good)
    assert report.valid
    assert is_proper_edge_colouring(graph, good)

    bad = {0: 1, 1: 1, 2: 2, 3: 2}
    report = validate_colouring(graph, corr, bad)
    assert not report.valid
    assert (0, 1, 1, 1) in report.conflicts
    assert not is_proper_edge_colouring(graph, bad)


def test_validate_colouring_partial_and_range():
    graph = gen_cycle(4)
    corr = identity_correspondence(graph, 2)
    partial = {0: 1, 2: 1}
    assert not validate_colouring(graph, corr, partial).valid
    assert validate_colouring(graph, corr, partial, require_total=False).valid
    report = validate_colouring(graph, corr, {0: 3, 1: 2, 2: 1, 3: 2})
    assert report.out_of_range == [0]
    assert report.uncoloured == []


def test_shifted_pair_changes_which_colourings_are_valid():
    graph = gen_cycle(4)
    corr = shift_correspondence(graph, 2, [(0, 1)])
    # Под сдвигом на паре {0, 1} одинаковые цвета допустимы, разные - нет
    same = validate_colouring(graph, corr, {0: 1, 1: 1}, require_total=False)
    assert same.valid
    report = validate_colouring(graph, corr, {0: 1, 1: 2, 2: 1, 3: 2})
    assert report.conflicts == [(0, 1, 1, 2)]
