"""Model parameters and the exact/float numeric backends.

Every probability computed by this package is an ordinary Python number:
``fractions.Fraction`` in exact mode, ``float`` otherwise.  The mode is
decided once, at parameter construction, and everything downstream follows
the types of the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Scalar = Union[Fraction, float, int]


def parse_scalar(text: str, exact: bool = True) -> Scalar:
    """Parse "p/q" or a decimal literal.

    Exact mode returns a Fraction (decimals are converted exactly, so
    "0.5" becomes 1/2); float mode returns a float.
    """
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        value = Fraction(int(num), int(den))
    else:
        value = Fraction(text)
    return value if exact else float(value)


@dataclass(frozen=True)
class Params:
    """The pair (alpha, gamma) with 0 <= gamma <= alpha <= 1.

    ``exact`` selects the rational backend; weights and probabilities are
    then Fractions and identities can be checked with zero residual.
    """

    alpha: Scalar
    gamma: Scalar
    exact: bool = True

    def __post_init__(self):
        alpha, gamma = self.alpha, self.gamma
        if self.exact:
            alpha, gamma = Fraction(alpha), Fraction(gamma)
        else:
            alpha, gamma = float(alpha), float(gamma)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)
        if not (0 <= gamma <= alpha <= 1):
            raise ValueError(f"need 0 <= gamma <= alpha <= 1, got ({alpha}, {gamma})")

    @property
    def theta(self) -> Scalar:
        """Right-gap weight alpha - gamma of the branch-point restaurant."""
        return self.alpha - self.gamma

    @property
    def one(self) -> Scalar:
        return Fraction(1) if self.exact else 1.0

    def degeneracies(self) -> tuple[str, ...]:
        """Parameter classes with a restricted recurrent class.

        The chain is still well defined for these, but only a subset of the
        state space communicates; callers may want to warn.
        """
        tags = []
        if self.alpha == 1 and self.gamma == 0:
            tags.append("alpha=1,gamma=0")
        else:
            if self.alpha == 1:
                tags.append("alpha=1")
            if self.gamma == 0:
                tags.append("gamma=0")
        if self.gamma == self.alpha:
            tags.append("gamma=alpha (binary)")
        return tuple(tags)

    def as_float(self) -> "Params":
        return Params(float(self.alpha), float(self.gamma), exact=False)
