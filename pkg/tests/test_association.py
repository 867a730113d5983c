import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from irsthz.association import (
    AssociationMatrix,
    RateMatrix,
    associate,
    blocking_pairs,
    build_preferences,
    exhaustive,
    gale_shapley,
    greedy,
    is_stable,
    overhead_slots,
    random_assoc,
    rate_matrix,
)
from oracles import best_pairing, best_pairing_sum, count_blocking_pairs, sorted_pairing_sum

HAND_R = rate_matrix([4, 2, 1], [3, 5, 2])

rates = st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=6)


def _gs(R):
    return gale_shapley(build_preferences(R), R)


def test_rate_matrix_hand_example():
    assert np.array_equal(HAND_R.R, [[3, 4, 2], [2, 2, 2], [1, 1, 1]])
    assert HAND_R.L == 3 and HAND_R.M == 3
    with pytest.raises(ValueError):
        HAND_R.R[0, 0] = 9.0
    with pytest.raises(ValueError):
        rate_matrix([-1.0], [1.0])
    with pytest.raises(ValueError):
        RateMatrix([[math.nan]])


def test_preferences_order_and_ties():
    prefs = build_preferences(HAND_R)
    assert prefs.ur_pref[0].tolist() == [1, 0, 2]
    assert prefs.ur_pref[1].tolist() == [0, 1, 2]     # all equal: index order
    assert prefs.dr_pref[1].tolist() == [0, 1, 2]


def test_deferred_acceptance_hand_example():
    a = _gs(HAND_R)
    assert a.pairs == {0: 1, 1: 0, 2: 2}
    assert a.total(HAND_R) == 7.0
    assert a.proposals == 5 and a.tau == 5
    assert is_stable(a, HAND_R)
    swapped = AssociationMatrix({0: 0, 1: 1, 2: 2}, 0, "x", L=3, M=3)
    assert (0, 1) in blocking_pairs(swapped, HAND_R)


def test_association_matrix_validation():
    with pytest.raises(ValueError):
        AssociationMatrix({0: 1, 1: 1}, 0, "x")
    with pytest.raises(ValueError):
        AssociationMatrix({0: 1}, -1, "x")
    a = AssociationMatrix({1: 0, 0: 2}, 0, "x", L=2, M=3)
    assert a.to_list() == [[0, 2], [1, 0]]
    assert a.as_matrix().tolist() == [[0, 0, 1], [1, 0, 0]]


@settings(max_examples=200, deadline=None)
@given(rates, rates)
def test_deferred_acceptance_stable_and_one_to_one(ul, dl):
    R = rate_matrix(ul, dl)
    a = _gs(R)
    assert len(a.pairs) == min(R.L, R.M)
    assert len(set(a.pairs.values())) == len(a.pairs)
    assert count_blocking_pairs(a.pairs, R.R) == 0
    assert is_stable(a, R)
    assert a.proposals <= R.L * R.M


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_deferred_acceptance_stable_on_generic_matrices(seed, L, M):
    R = np.random.default_rng(seed).uniform(0, 10, (L, M))
    a = _gs(R)
    assert count_blocking_pairs(a.pairs, R) == 0


def test_min_structure_deferred_acceptance_is_optimal():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        L = int(rng.integers(1, 7))
        ul, dl = rng.uniform(0, 10, L), rng.uniform(0, 10, L)
        R = rate_matrix(ul, dl)
        assert _gs(R).total(R) == pytest.approx(sorted_pairing_sum(ul, dl), rel=1e-12)


def test_exhaustive_matches_enumeration_oracle():
    rng = np.random.default_rng(1)
    for _ in range(300):
        L, M = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        R = rng.uniform(0, 10, (L, M))
        a = exhaustive(R)
        assert a.total(R) == pytest.approx(best_pairing_sum(R), rel=1e-12)
        assert a.evaluations == math.perm(max(L, M), min(L, M))
        if L <= M:
            assert tuple(a.pairs[l] for l in range(L)) == best_pairing(R)[0]


def test_exhaustive_keeps_first_of_tied_pairings():
    R = np.ones((3, 3))
    assert exhaustive(R).pairs == {0: 0, 1: 1, 2: 2}


def test_exhaustive_cap():
    with pytest.raises(ValueError):
        exhaustive(np.ones((10, 10)))
    with pytest.raises(ValueError):
        exhaustive(np.ones((2, 4)), cap=3)
    assert exhaustive(np.ones((2, 4)), cap=4).evaluations == 12


def test_unequal_sides():
    rng = np.random.default_rng(2)
    R = rng.uniform(0, 1, (5, 3))
    for tag in ("gs", "es", "greedy", "random"):
        a = associate(tag, R, np.random.default_rng(0))
        assert len(a.pairs) == 3
        assert set(a.pairs.values()) <= {0, 1, 2}


def test_ordering_of_strategies():
    rng = np.random.default_rng(3)
    for _ in range(300):
        L = int(rng.integers(1, 7))
        R = rate_matrix(rng.uniform(0, 5, L), rng.uniform(0, 5, L))
        es = exhaustive(R).total(R)
        assert es >= _gs(R).total(R) - 1e-12
        assert es >= greedy(R, rng).total(R) - 1e-12
        assert es >= random_assoc(L, L, rng).total(R) - 1e-12


def test_greedy_without_conflict_is_deterministic():
    R = np.array([[5.0, 1.0], [1.0, 5.0]])
    a = greedy(R, np.random.default_rng(0))
    assert a.pairs == {0: 0, 1: 1} and a.tau == 2


def test_greedy_breaks_ties_uniformly():
    # every uplink IRS wants DR 0; the winner must be uniform over the three
    R = np.array([[9.0, 1.0, 0.5], [9.0, 2.0, 0.5], [9.0, 3.0, 0.5]])
    rng = np.random.default_rng(4)
    wins = Counter(greedy(R, rng).partner_of_dr()[0] for _ in range(6000))
    assert chisquare([wins[i] for i in range(3)]).pvalue > 1e-3
    # losers pick in index order: the lower-index loser takes DR 1
    a = greedy(R, np.random.default_rng(5))
    losers = sorted(l for l in range(3) if a.pairs[l] != 0)
    assert a.pairs[losers[0]] == 1 and a.pairs[losers[1]] == 2


def test_random_pairing_is_uniform():
    rng = np.random.default_rng(6)
    seen = Counter(tuple(random_assoc(3, 3, rng).pairs.values()) for _ in range(12_000))
    assert len(seen) == 6
    assert chisquare(list(seen.values())).pvalue > 1e-3


def test_overhead_slots():
    assert overhead_slots("gs", 4, 4, 200, proposals=7) == 7
    assert overhead_slots("gs", 4, 4, 5, proposals=7) == 5
    assert overhead_slots("es", 4, 4, 200) == 24
    assert overhead_slots("es", 6, 6, 200) == 200
    assert overhead_slots("es", 2, 4, 200) == 12
    assert overhead_slots("greedy", 4, 3, 200) == 4
    assert overhead_slots("random", 4, 4, 200) == 1
    with pytest.raises(ValueError):
        overhead_slots("gs", 4, 4, 200)
    with pytest.raises(ValueError):
        overhead_slots("es", 4, 4, 0)
    with pytest.raises(ValueError):
        overhead_slots("bogus", 4, 4, 200)


def test_dispatch_rejects_unknown_tag():
    with pytest.raises(ValueError):
        associate("bogus", HAND_R)
