"""Exact-rational rate calculus for two-block M-estimation problems.

A population criterion that is locally bounded below by ``|a|^alpha + |b|^beta``
and carries negative cross terms of joint homogeneity ``(gamma_i, eta_i)``
determines the convergence exponents of the slow block ``a`` and the fast
block ``b``.  All arithmetic here is done with :class:`fractions.Fraction`:
the coupled/decoupled dichotomy hinges on an exact equality of products of
exponents, which floating point cannot certify.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

__all__ = [
    "Regime",
    "RateSpec",
    "RateResult",
    "CoarseRateSpec",
    "RateSpecError",
    "derive_rates",
    "coarse_rates",
]


class RateSpecError(ValueError):
    """A rate specification violates one of the admissibility hypotheses."""


class Regime(enum.Enum):
    COUPLED = "coupled"
    DECOUPLED = "decoupled"


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise RateSpecError(
            f"exponent {x!r} is a float; pass ints, strings or Fractions so the "
            "calculus stays exact"
        )
    return Fraction(x)


@dataclass(frozen=True)
class RateSpec:
    """Exponent profile of a criterion with a singular quadratic approximation.

    ``alpha`` and ``beta`` are the homogeneity degrees of the positive parts
    in the slow and fast blocks; ``terms`` lists the ``(gamma_i, eta_i)``
    degrees of the sign-indefinite cross terms (may be empty).
    """

    alpha: Fraction
    beta: Fraction
    terms: tuple[tuple[Fraction, Fraction], ...] = ()

    def __init__(self, alpha, beta, terms: Iterable = ()):
        object.__setattr__(self, "alpha", _as_fraction(alpha))
        object.__setattr__(self, "beta", _as_fraction(beta))
        object.__setattr__(
            self,
            "terms",
            tuple((_as_fraction(g), _as_fraction(e)) for g, e in terms),
        )
        self._validate()

    def _validate(self) -> None:
        a, b = self.alpha, self.beta
        if not a > b:
            raise RateSpecError(f"hypothesis alpha > beta violated: {a} <= {b}")
        if not b > 1:
            raise RateSpecError(f"hypothesis beta > 1 violated: beta = {b}")
        for i, (g, e) in enumerate(self.terms, start=1):
            if not e > 0:
                raise RateSpecError(f"hypothesis eta > 0 violated by term {i}: eta = {e}")
            if not e < b:
                raise RateSpecError(
                    f"hypothesis beta > eta violated by term {i}: eta = {e} >= beta = {b}"
                )
            if not g > 0:
                raise RateSpecError(
                    f"hypothesis gamma > 0 violated by term {i}: gamma = {g}"
                )
            # A cross term must be dominated by the positive parts near the
            # origin (gamma/alpha + eta/beta >= 1), otherwise no nonnegative
            # criterion has this profile and the rate formulas break down.
            if g * b + e * a < a * b:
                raise RateSpecError(
                    f"cross term {i} with (gamma, eta) = ({g}, {e}) is not dominated: "
                    f"gamma/alpha + eta/beta = {g / a + e / b} < 1"
                )


@dataclass(frozen=True)
class RateResult:
    """Derived exponents: the estimator blocks behave like n^-tau_a, n^-tau_b."""

    tau_a: Fraction
    tau_b: Fraction
    lambda0: Fraction
    lambdas: tuple[Fraction, ...]
    active_indices: frozenset[int]  # 1-based indices i with lambda_i == tau_b
    lambda0_active: bool
    regime: Regime

    def as_dict(self) -> dict:
        """JSON-friendly view with fractions rendered as strings."""
        return {
            "tau_a": str(self.tau_a),
            "tau_b": str(self.tau_b),
            "lambda0": str(self.lambda0),
            "lambdas": [str(l) for l in self.lambdas],
            "active_indices": sorted(self.active_indices),
            "lambda0_active": self.lambda0_active,
            "regime": self.regime.value,
        }


def derive_rates(spec: RateSpec) -> RateResult:
    """Compute the two-block rate exponents and the regime classification.

    The slow block gets ``tau_a = 1/(2(alpha - 1))``.  Candidate exponents for
    the fast block are ``lambda_0 = 1/(2(beta - 1))`` and, per cross term,
    ``lambda_i = tau_a * gamma_i / (beta - eta_i)``; the fast rate is their
    minimum and every minimizer stays active in the limit objective.  The
    regime is coupled exactly when ``alpha * tau_a == beta * tau_b``, in which
    case the two blocks must be solved as a joint argmin rather than
    sequentially.
    """
    a, b = spec.alpha, spec.beta
    tau_a = Fraction(1, 2) / (a - 1)
    lambda0 = Fraction(1, 2) / (b - 1)
    lambdas = tuple(tau_a * g / (b - e) for g, e in spec.terms)
    tau_b = min((lambda0, *lambdas))
    active = frozenset(i for i, l in enumerate(lambdas, start=1) if l == tau_b)
    regime = Regime.COUPLED if a * tau_a == b * tau_b else Regime.DECOUPLED
    result = RateResult(
        tau_a=tau_a,
        tau_b=tau_b,
        lambda0=lambda0,
        lambdas=lambdas,
        active_indices=active,
        lambda0_active=(lambda0 == tau_b),
        regime=regime,
    )
    # Holds for every admissible profile; guaranteed by the domination check.
    assert a * tau_a <= b * tau_b
    return result


@dataclass(frozen=True)
class CoarseRateSpec:
    """Inputs for the first-pass rate bound that balances a deterministic
    envelope ``|a|^alpha + |b|^beta`` against noise of size
    ``sum_i n^-eta_i * |(a, b)|^gamma_i``."""

    alpha: Fraction
    beta: Fraction
    noise_terms: tuple[tuple[Fraction, Fraction], ...]

    def __init__(self, alpha, beta, noise_terms: Iterable):
        object.__setattr__(self, "alpha", _as_fraction(alpha))
        object.__setattr__(self, "beta", _as_fraction(beta))
        object.__setattr__(
            self,
            "noise_terms",
            tuple((_as_fraction(g), _as_fraction(e)) for g, e in noise_terms),
        )
        self._validate()

    def _validate(self) -> None:
        a, b = self.alpha, self.beta
        if a < b:
            raise RateSpecError(f"hypothesis alpha >= beta violated: {a} < {b}")
        if not self.noise_terms:
            raise RateSpecError("at least one noise term is required")
        for i, (g, e) in enumerate(self.noise_terms, start=1):
            if g < 0 or e < 0:
                raise RateSpecError(f"noise term {i} has a negative exponent")
            if not g < a:
                raise RateSpecError(
                    f"hypothesis gamma < alpha violated by noise term {i}: "
                    f"gamma = {g} >= alpha = {a}"
                )


def coarse_rates(spec: CoarseRateSpec) -> tuple[Fraction, Fraction]:
    """First-pass exponents: ``tau_a = min_i eta_i/(alpha - gamma_i)`` for the
    slow block and the formal bound ``alpha * tau_a / beta`` for the fast one
    (the fast bound is typically improved by a second, recentred balance)."""
    a, b = spec.alpha, spec.beta
    tau_a = min(e / (a - g) for g, e in spec.noise_terms)
    return tau_a, a * tau_a / b


def parse_fraction(text: str) -> Fraction:
    """Parse '3', '1/2' etc. into an exact Fraction (CLI helper)."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise RateSpecError(f"cannot parse {text!r} as a fraction") from exc
