"""Numerical laboratory for mixed-rates M-estimation.

Implements three estimators whose components converge at different powers of
the sample size, the exact rate calculus predicting those powers, samplers
for the limiting distributions, and a Monte Carlo harness that verifies the
predictions at desk scale.
"""

__version__ = "0.1.0"

from .rates import (
    CoarseRateSpec,
    RateResult,
    RateSpec,
    RateSpecError,
    Regime,
    coarse_rates,
    derive_rates,
)

__all__ = [
    "__version__",
    "CoarseRateSpec",
    "RateResult",
    "RateSpec",
    "RateSpecError",
    "Regime",
    "coarse_rates",
    "derive_rates",
]
