import itertools
import math
import random
from fractions import Fraction as F

import pytest

from downup.stats import chi_square_test
from downup.urns import (
    SeatingState,
    UrnError,
    betabin_pmf,
    decrement_pmf,
    dirmult_pmf,
    dirmult_pmf_lenient,
    ocrp_permutation_pmf,
    record_count,
    restaurant_next_distribution,
    sample_from,
    simulate_ocrp,
    simulate_urn,
    simulate_urn_sequence,
)


def compositions(n, k):
    """All nonnegative integer k-tuples summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


# ---------------------------------------------------------------- dirmult


def test_dirmult_symmetric_single_trial():
    assert dirmult_pmf(1, [1, 1], [1, 0]) == F(1, 2)


def test_dirmult_hand_value():
    # 2!/(2!0!) * 1/((3/2)(5/2)) * (1/2)(3/2) = 1/5
    assert dirmult_pmf(2, [F(1, 2), 1], [2, 0]) == F(1, 5)


@pytest.mark.parametrize("weights", [[1, 1], [F(1, 2), F(3, 4)], [F(2, 3), 1, F(1, 5)], [2, F(1, 7), 3, F(5, 2)]])
def test_dirmult_normalisation(weights):
    n = 3
    total = sum(dirmult_pmf(n, weights, c) for c in compositions(n, len(weights)))
    assert total == 1


def test_dirmult_validation():
    with pytest.raises(UrnError):
        dirmult_pmf(2, [1, 1], [1])
    with pytest.raises(UrnError):
        dirmult_pmf(2, [1, 1], [3, -1])
    with pytest.raises(UrnError):
        dirmult_pmf(2, [1, 0], [1, 1])
    with pytest.raises(UrnError):
        dirmult_pmf(2, [1, 1], [1, 0])


def test_dirmult_matches_betabin_everywhere():
    w1, w2, n = F(2, 3), F(5, 4), 6
    for k in range(n + 1):
        assert dirmult_pmf(n, [w1, w2], [k, n - k]) == betabin_pmf(n, w1, w2, k)


def test_dirmult_lenient_zero_weight():
    assert dirmult_pmf_lenient(3, [1, 0], [3, 0]) == 1
    assert dirmult_pmf_lenient(3, [1, 0], [2, 1]) == 0
    assert dirmult_pmf_lenient(2, [F(1, 2), 0, F(1, 2)], [2, 0, 0]) == dirmult_pmf(
        2, [F(1, 2), F(1, 2)], [2, 0]
    )


# ---------------------------------------------------------------- table order


def test_record_count():
    assert record_count((1, 2)) == 2
    assert record_count((2, 1)) == 1
    assert record_count((2, 4, 1, 3)) == 2


def test_ocrp_single_table():
    assert ocrp_permutation_pmf((1,), F(1, 3), F(2, 5)) == 1


def test_ocrp_theta_equal_alpha_uniform():
    assert ocrp_permutation_pmf((1, 2), F(1, 2), F(1, 2)) == F(1, 2)
    assert ocrp_permutation_pmf((2, 1), F(1, 2), F(1, 2)) == F(1, 2)


def test_ocrp_hand_values():
    assert ocrp_permutation_pmf((2, 1), 1, 2) == F(1, 3)
    assert ocrp_permutation_pmf((1, 2), 1, 2) == F(2, 3)


@pytest.mark.parametrize("L", range(1, 7))
def test_ocrp_normalisation(L):
    alpha, theta = F(3, 4), F(1, 4)
    total = sum(ocrp_permutation_pmf(s, alpha, theta) for s in itertools.permutations(range(1, L + 1)))
    assert total == 1


@pytest.mark.parametrize("L", range(1, 6))
def test_ocrp_theta_zero_degenerate(L):
    alpha = F(1, 2)
    total = 0
    for s in itertools.permutations(range(1, L + 1)):
        p = ocrp_permutation_pmf(s, alpha, 0)
        assert (p > 0) == (record_count(s) == 1)
        total += p
    assert total == 1


def test_ocrp_alpha_zero_rejected():
    with pytest.raises(UrnError):
        ocrp_permutation_pmf((1, 2), 0, F(1, 2))


# ---------------------------------------------------------------- decrement matrix


def test_decrement_lone_customer():
    assert decrement_pmf(1, 1, F(1, 2), F(1, 2)) == 1


def test_decrement_hand_values():
    assert decrement_pmf(2, 1, F(1, 2), F(1, 2)) == F(2, 3)
    assert decrement_pmf(2, 2, F(1, 2), F(1, 2)) == F(1, 3)


@pytest.mark.parametrize("alpha,theta", [(F(1, 2), F(1, 2)), (F(3, 4), F(1, 4)), (F(2, 3), 0), (F(1, 3), 2)])
def test_decrement_row_sum(alpha, theta):
    for n in (1, 2, 5):
        assert sum(decrement_pmf(n, m, alpha, theta) for m in range(1, n + 1)) == 1


def test_decrement_out_of_range():
    with pytest.raises(UrnError):
        decrement_pmf(3, 0, F(1, 2), F(1, 2))
    with pytest.raises(UrnError):
        decrement_pmf(3, 4, F(1, 2), F(1, 2))


# ---------------------------------------------------------------- seating rule


def test_restaurant_empty_state():
    state = SeatingState((), F(1, 2), F(1, 2))
    assert restaurant_next_distribution(state) == [(("new", None), 1)]
    assert restaurant_next_distribution(state, ordered=True) == [(("new", 0), 1)]


def test_restaurant_hand_values():
    state = SeatingState((2, 1), F(1, 2), F(1, 2))
    dist = dict(restaurant_next_distribution(state))
    assert dist[("table", 1)] == F(3, 7)
    assert dist[("table", 2)] == F(1, 7)
    assert dist[("new", None)] == F(3, 7)


def test_restaurant_ordered_gap_split():
    alpha, theta = F(2, 3), F(1, 5)
    state = SeatingState((1, 1), alpha, theta, order=(1, 2))
    dist = dict(restaurant_next_distribution(state, ordered=True))
    new_total = 2 * alpha + theta
    # left, middle, right gaps
    assert dist[("new", 0)] == alpha / (2 + theta)
    assert dist[("new", 1)] == alpha / (2 + theta)
    assert dist[("new", 2)] == theta / (2 + theta)
    assert dist[("new", 0)] / (new_total / (2 + theta)) == alpha / new_total


@pytest.mark.parametrize("ordered", [False, True])
def test_restaurant_total_mass(ordered):
    state = SeatingState((3, 1, 2), F(1, 2), F(1, 4), order=(2, 3, 1))
    assert sum(p for _, p in restaurant_next_distribution(state, ordered=ordered)) == 1


def test_seating_state_validation():
    with pytest.raises(UrnError):
        SeatingState((0, 1), F(1, 2), F(1, 2))
    with pytest.raises(UrnError):
        SeatingState((1, 1), F(1, 2), F(1, 2), order=(1, 3))
    with pytest.raises(UrnError):
        SeatingState((1,), F(1, 2), -1)
    # negative alpha with theta = 2*alpha is fine
    SeatingState((1,), -F(1, 2), -1)


# ---------------------------------------------------------------- sampling paths


def test_sample_from_is_deterministic_given_stream():
    rng1, rng2 = random.Random(11), random.Random(11)
    pairs = [("a", F(1, 3)), ("b", F(1, 3)), ("c", F(1, 3))]
    draws1 = [sample_from(pairs, rng1) for _ in range(50)]
    draws2 = [sample_from(pairs, rng2) for _ in range(50)]
    assert draws1 == draws2


def test_urn_counts_match_dirmult_chisquare():
    rng = random.Random(20240817)
    weights = [F(1, 2), 1, F(3, 2)]
    n, runs = 5, 100_000
    observed = {}
    for _ in range(runs):
        c = simulate_urn(n, weights, rng)
        observed[c] = observed.get(c, 0) + 1
    reference = {c: dirmult_pmf(n, weights, c) for c in compositions(n, 3)}
    result = chi_square_test(observed, reference)
    assert result["p"] > 0.001


def test_urn_conditional_first_draw():
    # empirical frequency of {X_1 = j | final counts} is n_j / n within 3 sigma
    rng = random.Random(99)
    weights = [F(1, 2), F(3, 4)]
    n, runs = 4, 40_000
    hits = {}
    tots = {}
    for _ in range(runs):
        seq = simulate_urn_sequence(n, weights, rng)
        counts = (seq.count(0), seq.count(1))
        tots[counts] = tots.get(counts, 0) + 1
        if seq[0] == 0:
            hits[counts] = hits.get(counts, 0) + 1
    for counts, t in tots.items():
        if t < 500:
            continue
        p = counts[0] / n
        freq = hits.get(counts, 0) / t
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / t)
        assert abs(freq - p) < 3 * sigma + 1e-9, (counts, freq, p)


def test_ocrp_order_matches_pmf_chisquare():
    rng = random.Random(4)
    alpha, theta = F(1, 2), F(1, 4)
    for L, n, runs in ((3, 3, 25_000), (5, 6, 8_000)):
        observed = {}
        while sum(observed.values()) < runs:
            st = simulate_ocrp(n, alpha, theta, rng)
            if st.tables != L:
                continue
            observed[st.order] = observed.get(st.order, 0) + 1
        reference = {
            s: ocrp_permutation_pmf(s, alpha, theta)
            for s in itertools.permutations(range(1, L + 1))
        }
        result = chi_square_test(observed, reference)
        assert result["p"] > 0.001, (L, result)


def test_leftmost_table_matches_decrement_chisquare():
    rng = random.Random(31)
    alpha, theta = F(1, 2), F(3, 4)
    n, runs = 6, 30_000
    observed = {}
    for _ in range(runs):
        st = simulate_ocrp(n, alpha, theta, rng)
        leftmost_table = st.order.index(1) + 1
        m = st.counts[leftmost_table - 1]
        observed[m] = observed.get(m, 0) + 1
    reference = {m: decrement_pmf(n, m, alpha, theta) for m in range(1, n + 1)}
    result = chi_square_test(observed, reference)
    assert result["p"] > 0.001, result
