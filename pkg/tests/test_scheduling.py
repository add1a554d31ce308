import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetsim.config import SimConfig
from hetsim.network import generate_fig3_snapshot
from hetsim.scheduling import (
    CellLoad,
    access_probability,
    cell_loads,
    greedy_access_prob_mc,
)


def test_empty_cell_admits_certainly():
    assert access_probability(CellLoad(0, 0, "round_robin")) == 1.0
    assert access_probability(CellLoad(0, 0, "greedy")) == 1.0


def test_round_robin_three_incumbents():
    assert access_probability(CellLoad(0, 3, "round_robin")) == 0.25


def test_greedy_matches_round_robin_analytically():
    for n in range(8):
        assert access_probability(CellLoad(0, n, "greedy")) == access_probability(
            CellLoad(0, n, "round_robin")
        )


@given(n=st.integers(0, 500))
def test_access_probability_strictly_decreasing(n):
    p = access_probability(CellLoad(0, n))
    assert 0 < p <= 1
    assert access_probability(CellLoad(0, n + 1)) < p


def test_access_probability_validates():
    with pytest.raises(ValueError):
        access_probability(CellLoad(0, -1))
    with pytest.raises(ValueError):
        access_probability(CellLoad(0, 1, "priority"))


def test_greedy_mc_empty_cell_exact():
    assert greedy_access_prob_mc(0, 1000, 1) == 1.0


def test_greedy_mc_four_incumbents():
    est = greedy_access_prob_mc(4, 100_000, 7)
    assert est == pytest.approx(0.2, abs=0.01)


def test_greedy_mc_deterministic():
    assert greedy_access_prob_mc(3, 5000, 42) == greedy_access_prob_mc(3, 5000, 42)


@pytest.mark.parametrize("n", range(11))
def test_greedy_mc_within_three_sigma(n):
    trials = 20_000
    est = greedy_access_prob_mc(n, trials, 123 + n)
    p = 1.0 / (n + 1)
    sigma = np.sqrt(p * (1 - p) / trials)
    assert abs(est - p) <= 3 * sigma + 1e-12


def test_round_robin_shares_sum_to_one_per_cell():
    # each admitted user's share is 1 / (others + 1); shares add up to 1
    snap = generate_fig3_snapshot(SimConfig(), 10, 5)
    counts = cell_loads(snap)
    for b, total in enumerate(counts):
        if total == 0:
            continue
        members = [u.id for u in snap.users if u.home_bs == b]
        shares = [
            access_probability(
                CellLoad(b, int(cell_loads(snap, exclude_user=uid)[b]))
            )
            for uid in members
        ]
        assert sum(shares) == pytest.approx(1.0, rel=1e-12)


def test_cell_loads_exclusion():
    snap = generate_fig3_snapshot(SimConfig(), 4, 8)
    base = cell_loads(snap)
    without = cell_loads(snap, exclude_user=0)
    assert base[0] - without[0] == 1
    assert np.array_equal(base[1:], without[1:])
