import pytest
from hypothesis import given
from hypothesis import strategies as st

from turfsim.strategy import MINUS_INF, expected_return, rank_areas

from oracles import greedy_order

U = (30.0, 20.0, 10.0)


def test_expected_return_examples():
    assert expected_return(30, 1, 1.0) == 29
    assert expected_return(30, 1, 0.05) == pytest.approx(10)
    assert expected_return(30, 1, 0.0) == MINUS_INF


def test_equal_priors_follow_revenue():
    assert rank_areas(U, 1.0, [0.9, 0.9, 0.9]) == [0, 1, 2]


def test_certainly_occupied_area_dropped():
    assert rank_areas(U, 1.0, [0.0, 1.0, 1.0]) == [1, 2]


def test_ranking_need_not_follow_revenue():
    assert rank_areas(U, 1.0, [0.034, 0.9, 0.9]) == [1, 2, 0]


def test_skip_unprofitable_cuts_at_zero():
    beliefs = [0.02, 0.9, 0.9]  # area 0 return is 30 - 50 < 0
    assert rank_areas(U, 1.0, beliefs) == [1, 2, 0]
    assert rank_areas(U, 1.0, beliefs, skip_unprofitable=True) == [1, 2]


def test_ties_go_to_lower_id():
    assert rank_areas((10.0, 10.0 - 1e-9), 1.0, [0.5, 0.5]) == [0, 1]
    # identical returns: 12 - 1/0.5 == 11 - 1/1
    assert rank_areas((12.0, 11.0), 1.0, [0.5, 1.0]) == [0, 1]
    assert rank_areas((12.0, 11.0), 2.0, [1.0, 1.0]) == [0, 1]


ladders = st.lists(st.floats(2.0, 500.0), min_size=1, max_size=8, unique=True).map(
    lambda xs: tuple(sorted(xs, reverse=True))
)


@st.composite
def cases(draw):
    revs = draw(ladders)
    beliefs = draw(st.lists(st.floats(0.0, 1.0), min_size=len(revs), max_size=len(revs)))
    return revs, draw(st.floats(0.01, 5.0)), beliefs


@given(cases(), st.booleans())
def test_matches_selection_sort(case, skip):
    revs, c, beliefs = case
    cutoff = 0.0 if skip else MINUS_INF
    assert rank_areas(revs, c, beliefs, skip) == greedy_order(revs, c, beliefs, cutoff)


@given(cases())
def test_output_is_duplicate_free_subset(case):
    revs, c, beliefs = case
    order = rank_areas(revs, c, beliefs)
    assert len(set(order)) == len(order)
    assert set(order) == {m for m, q in enumerate(beliefs) if q > 0 and revs[m] - c / q > MINUS_INF}


@given(cases(), st.data())
def test_raising_belief_never_moves_area_later(case, data):
    revs, c, beliefs = case
    m = data.draw(st.integers(0, len(revs) - 1))
    higher = list(beliefs)
    higher[m] = data.draw(st.floats(beliefs[m], 1.0))
    before, after = rank_areas(revs, c, beliefs), rank_areas(revs, c, higher)
    if m in before:
        assert after.index(m) <= before.index(m)
    else:
        assert m not in before


@given(ladders, st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_equal_beliefs_order_by_revenue(revs, q, c):
    assert rank_areas(revs, c, [q] * len(revs)) == list(range(len(revs)))
