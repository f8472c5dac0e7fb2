"""Exchangeable-partition building blocks.

Polya urns, the Dirichlet-multinomial, ordered and unordered Chinese
restaurant seating rules, the table-order law of the ordered restaurant,
and the decrement matrix (the law of the leftmost block).

No gamma function is ever evaluated: every gamma ratio that appears in the
probability mass functions telescopes to a finite product, so all values
are exact rationals whenever the inputs are rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

__all__ = [
    "UrnError",
    "SeatingState",
    "dirmult_pmf",
    "betabin_pmf",
    "ocrp_permutation_pmf",
    "record_count",
    "decrement_pmf",
    "restaurant_next_distribution",
    "sample_from",
    "sample_dirmult",
    "sample_betabin",
    "sample_decrement",
    "simulate_urn",
    "simulate_ocrp",
    "sample_table_order",
]


class UrnError(ValueError):
    pass


def _exactify(x):
    """Plain ints join the exact backend; floats and Fractions pass through."""
    return Fraction(x) if isinstance(x, int) else x


def _validate_crp_params(alpha, theta):
    if 0 <= alpha <= 1:
        if not theta > -alpha:
            raise UrnError(f"need theta > -alpha, got ({alpha}, {theta})")
    elif alpha < 0:
        # theta = l_max * alpha for some positive integer l_max
        ratio = theta / alpha
        if theta >= 0 or ratio != int(ratio) or int(ratio) < 1:
            raise UrnError(f"alpha < 0 requires theta = l_max*alpha, got ({alpha}, {theta})")
    else:
        raise UrnError(f"alpha > 1 not allowed, got {alpha}")


@dataclass(frozen=True)
class SeatingState:
    """Occupancy of a Chinese restaurant.

    ``counts`` lists customers per table in order of table appearance.  In
    ordered mode ``order`` is the permutation sigma with sigma(m) the
    left-to-right position of the m-th table to appear.
    """

    counts: tuple = ()
    alpha: object = 0
    theta: object = 1
    order: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(self.counts))
        if any(c < 1 for c in self.counts):
            raise UrnError("table counts must be >= 1")
        _validate_crp_params(self.alpha, self.theta)
        if self.order is not None:
            object.__setattr__(self, "order", tuple(self.order))
            if sorted(self.order) != list(range(1, len(self.counts) + 1)):
                raise UrnError("order must be a permutation of [number of tables]")

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def tables(self) -> int:
        return len(self.counts)


def dirmult_pmf(n: int, weights: Sequence, counts: Sequence[int]):
    """Dirichlet-multinomial mass at ``counts`` for ``n`` trials.

    Evaluates
        n! Gamma(W) / Gamma(n+W) * prod_j Gamma(n_j + w_j) / (n_j! Gamma(w_j))
    with W the total weight, via rising factorials.  Exact for rational
    weights.  All weights must be strictly positive; see
    ``dirmult_pmf_lenient`` for the degenerate extension.
    """
    weights = [_exactify(w) for w in weights]
    counts = list(counts)
    if len(weights) != len(counts):
        raise UrnError("weights and counts must have the same length")
    if any(w <= 0 for w in weights):
        raise UrnError("weights must be positive")
    if any(c < 0 for c in counts):
        raise UrnError("counts must be nonnegative")
    if sum(counts) != n:
        raise UrnError(f"counts must sum to n={n}")
    return _dirmult_value(n, weights, counts)


def _dirmult_value(n, weights, counts):
    total = sum(weights)
    one = _one_like(total)
    value = _multinomial(counts)
    num = one
    for w, c in zip(weights, counts):
        for i in range(c):
            num = num * (w + i)
    den = one
    for i in range(n):
        den = den * (total + i)
    return value * num / den


def _one_like(x):
    """Exact one for rational inputs, float one otherwise."""
    return Fraction(1) if isinstance(x, (int, Fraction)) else 1.0


def dirmult_pmf_lenient(n: int, weights: Sequence, counts: Sequence[int]):
    """Dirichlet-multinomial allowing zero weights.

    A zero-weight colour can never be drawn, so the mass is zero unless its
    count is zero, in which case the colour is dropped.  Needed at the
    degenerate parameter boundaries (gamma = alpha, gamma = 0, alpha = 1).
    """
    weights = [_exactify(w) for w in weights]
    counts = list(counts)
    if len(weights) != len(counts):
        raise UrnError("weights and counts must have the same length")
    pos_w, pos_c = [], []
    for w, c in zip(weights, counts):
        if w == 0:
            if c != 0:
                return 0 * _as_scalar(weights)
        else:
            pos_w.append(w)
            pos_c.append(c)
    if not pos_w:
        raise UrnError("total weight must be positive")
    if sum(pos_c) != n or any(c < 0 for c in pos_c):
        return 0 * _as_scalar(weights)
    return _dirmult_value(n, pos_w, pos_c)


def _as_scalar(weights):
    return weights[0] if weights else 1


def _multinomial(counts):
    n = sum(counts)
    out = 1
    for c in counts:
        out *= math.comb(n, c)
        n -= c
    return out


def betabin_pmf(n: int, w1, w2, k: int):
    """Beta-binomial mass: the k = 2 Dirichlet-multinomial marginal."""
    return dirmult_pmf_lenient(n, [w1, w2], [k, n - k])


def record_count(sigma: Sequence[int]) -> int:
    """Number of record values of a permutation (position 1 always counts)."""
    records = 0
    best = 0
    for value in sigma:
        if value > best:
            records += 1
            best = value
    return records


def ocrp_permutation_pmf(sigma: Sequence[int], alpha, theta):
    """Law of the table order of an ordered Chinese restaurant.

    ``sigma`` maps table (in order of appearance) to left-to-right
    position.  The mass is (theta/alpha)^R(sigma) Gamma(theta/alpha) /
    Gamma(theta/alpha + L) with R the record count; the gamma ratio
    telescopes.  At theta = 0 the law degenerates to the uniform law on the
    (L-1)! permutations with a single record.
    """
    sigma = tuple(sigma)
    alpha, theta = _exactify(alpha), _exactify(theta)
    L = len(sigma)
    if sorted(sigma) != list(range(1, L + 1)):
        raise UrnError("sigma must be a permutation of [L]")
    if alpha <= 0:
        if L <= 1:
            return Fraction(1) if isinstance(alpha, (int, Fraction)) else 1.0
        raise UrnError("alpha = 0 has no ordered table law for L >= 2")
    if theta < 0:
        raise UrnError("need theta >= 0")
    if L == 0:
        return alpha / alpha  # one, in the right type
    if theta == 0:
        one = alpha / alpha
        if record_count(sigma) == 1:
            return one / math.factorial(L - 1)
        return one * 0
    ratio = theta / alpha
    value = ratio ** record_count(sigma)
    den = 1
    for i in range(L):
        den = den * (ratio + i)
    return value / den


def decrement_pmf(n: int, m: int, alpha, theta):
    """Mass q_{alpha,theta}(n, m) of the leftmost-block size.

    q(n, m) = C(n,m) ((n-m)alpha + m theta)/n
              * Gamma(m-alpha)/Gamma(1-alpha) * Gamma(n-m+theta)/Gamma(n+theta).

    The first gamma ratio is prod_{i=1}^{m-1} (i - alpha), the second is
    1 / prod_{i=n-m}^{n-1} (i + theta).  For m = n and theta = 0 the zero
    factors cancel and the value stays finite; that cancellation is done
    symbolically here so theta = 0 is exact.
    """
    if not 1 <= m <= n:
        raise UrnError(f"need 1 <= m <= n, got m={m}, n={n}")
    alpha, theta = _exactify(alpha), _exactify(theta)
    _validate_crp_params(alpha, theta)
    one = _one_like(alpha) if isinstance(theta, (int, Fraction)) else 1.0
    num = one
    for i in range(1, m):
        num = num * (i - alpha)
    if m == n:
        # C(n,n) = 1; (m theta / n) / prod_{i=0}^{n-1}(theta+i): the theta
        # factors cancel, leaving 1 / prod_{i=1}^{n-1}(theta+i).
        den = one
        for i in range(1, n):
            den = den * (theta + i)
        return num / den
    den = n * one
    for i in range(n - m, n):
        den = den * (theta + i)
    return math.comb(n, m) * ((n - m) * alpha + m * theta) * num / den


def restaurant_next_distribution(state: SeatingState, ordered: bool = False):
    """Seating law for the next customer.

    Returns a list of (outcome, probability).  Outcomes are ("table", l)
    for the existing tables l (1-based, order of appearance) and, in
    unordered mode, ("new", None); in ordered mode the new-table mass is
    split over gaps ("new", g) with g = 0 the leftmost gap, g = 1..L-1 the
    gap right of left-to-right position g, and g = L the rightmost gap.
    """
    alpha, theta = state.alpha, state.theta
    n, L = state.n, state.tables
    one = Fraction(1) if isinstance(alpha, (int, Fraction)) and isinstance(theta, (int, Fraction)) else 1.0
    if n == 0:
        return [(("new", 0) if ordered else ("new", None), one)]
    denom = n + theta
    out = [(("table", l), (state.counts[l - 1] - alpha) / denom) for l in range(1, L + 1)]
    if not ordered:
        out.append((("new", None), (L * alpha + theta) / denom))
    else:
        for g in range(L):
            out.append((("new", g), alpha / denom))
        out.append((("new", L), theta / denom))
    return out


def sample_from(outcomes_and_weights, rng, total=None):
    """One inverse-CDF draw from a finite distribution.

    The single audited sampling path: every discrete draw in the package
    funnels through here.  Weights may be Fractions or floats; they are
    compared against a uniform draw scaled by their total.
    """
    pairs = list(outcomes_and_weights)
    if total is None:
        total = sum(w for _, w in pairs)
    if total <= 0:
        raise UrnError("total weight must be positive")
    u = rng.random() * float(total)
    acc = 0.0
    for outcome, w in pairs:
        acc += float(w)
        if u < acc:
            return outcome
    # Guard against float round-off at the right edge.
    for outcome, w in reversed(pairs):
        if w > 0:
            return outcome
    raise UrnError("no positive-weight outcome")


def sample_betabin(n: int, w1, w2, rng) -> int:
    """Draw from BetaBin^n(w1, w2) by sequential urn draws."""
    k = 0
    a, b = float(w1), float(w2)
    for i in range(n):
        if rng.random() * (a + b + i) < a + k:
            k += 1
    return k


def sample_dirmult(n: int, weights: Sequence, rng) -> tuple:
    """Draw from DirMult^n(weights) via conditional beta-binomials."""
    weights = [float(w) for w in weights]
    remaining = n
    tail = sum(weights)
    out = []
    for j, w in enumerate(weights[:-1]):
        tail -= w
        if remaining == 0 or w == 0:
            k = 0
        elif tail == 0:
            k = remaining
        else:
            k = sample_betabin(remaining, w, tail, rng)
        out.append(k)
        remaining -= k
    out.append(remaining)
    return tuple(out)


def sample_decrement(n: int, alpha, theta, rng) -> int:
    """Draw the leftmost-block size from q_{alpha,theta}(n, .)."""
    weights = [(m, decrement_pmf(n, m, alpha, theta)) for m in range(1, n + 1)]
    return sample_from(weights, rng, total=sum(w for _, w in weights))


def simulate_urn(n: int, weights: Sequence, rng) -> tuple:
    """Colour counts of n sequential draws from a generalized Polya urn."""
    weights = [float(w) for w in weights]
    counts = [0] * len(weights)
    total = sum(weights)
    for step in range(n):
        j = sample_from(
            ((i, weights[i] + counts[i]) for i in range(len(weights))),
            rng,
            total=total + step,
        )
        counts[j] += 1
    return tuple(counts)


def simulate_urn_sequence(n: int, weights: Sequence, rng) -> list:
    """The full colour sequence of n draws from a generalized Polya urn."""
    weights = [float(w) for w in weights]
    counts = [0] * len(weights)
    total = sum(weights)
    seq = []
    for step in range(n):
        j = sample_from(
            ((i, weights[i] + counts[i]) for i in range(len(weights))),
            rng,
            total=total + step,
        )
        counts[j] += 1
        seq.append(j)
    return seq


def simulate_ocrp(n: int, alpha, theta, rng) -> SeatingState:
    """Seat n customers in an ordered (alpha, theta) restaurant."""
    a, t = float(alpha), float(theta)
    counts: list[int] = []
    positions: list[int] = []  # positions[m-1] = left-to-right slot of table m
    for m in range(n):
        L = len(counts)
        if m == 0:
            pairs = [(("new", 0), 1.0)]
            total = 1.0
        else:
            pairs = [(("table", l), counts[l] - a) for l in range(L)]
            pairs += [(("new", g), a) for g in range(L)]
            pairs.append((("new", L), t))
            total = m + t
        kind, where = sample_from(pairs, rng, total=total)
        if kind == "table":
            counts[where] += 1
        else:
            # new table after gap ``where``: slots > where shift right
            positions = [p + 1 if p > where else p for p in positions]
            positions.append(where + 1)
            counts.append(1)
    return SeatingState(tuple(counts), alpha, theta, tuple(positions))


def sample_table_order(L: int, alpha, theta, rng) -> tuple:
    """Draw the table order sigma of an ordered restaurant with L tables.

    Builds the permutation by the arrival dynamic: table m goes leftmost
    with weight alpha, into any of the m-2 interior gaps with weight alpha
    each, and rightmost with weight theta.
    """
    if L == 0:
        return ()
    if alpha <= 0 and L >= 2:
        raise UrnError("alpha = 0 has no ordered table law for L >= 2")
    positions = [1]
    a, t = float(alpha), float(theta)
    for m in range(2, L + 1):
        gaps = [(g, a) for g in range(m - 1)] + [(m - 1, t)]
        g = sample_from(gaps, rng, total=(m - 1) * a + t)
        positions = [p + 1 if p > g else p for p in positions]
        positions.append(g + 1)
    return tuple(positions)
