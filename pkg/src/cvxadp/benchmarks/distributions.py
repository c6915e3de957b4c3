"""Truncated normal draws for the benchmark disturbances."""

import math
from dataclasses import dataclass

from scipy.special import ndtr, ndtri

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TruncatedNormalSpec:
    mean: float
    std: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError("std must be positive")
        if not self.lower < self.upper:
            raise ValueError("need lower < upper")


def _phi(x):
    return math.exp(-0.5 * x * x) / _SQRT2PI


def _interval_mass(a, b):
    # evaluate in whichever tail keeps ndtr away from saturation at 1
    if a + b > 0:
        return ndtr(-a) - ndtr(-b)
    return ndtr(b) - ndtr(a)


def sample_truncated_normal(spec, rng):
    """One draw from Normal(mean, std^2) conditioned on [lower, upper].

    Rejection sampling, switching to inverse-CDF when the acceptance
    probability drops under 1% (far-tail truncations).  Deterministic for a
    given generator state.
    """
    a = (spec.lower - spec.mean) / spec.std
    b = (spec.upper - spec.mean) / spec.std
    mass = _interval_mass(a, b)
    if mass >= 0.01:
        for _ in range(10000):
            u = rng.standard_normal()
            if a <= u <= b:
                return spec.mean + spec.std * u
    if a + b > 0:
        # work on the survival scale where the right tail keeps resolution
        v = ndtr(-b) + rng.random() * mass
        x = -float(ndtri(v))
    else:
        v = ndtr(a) + rng.random() * mass
        x = float(ndtri(v))
    x = min(max(x, a), b)
    return spec.mean + spec.std * x


def truncated_mean(spec):
    """Analytic mean of the truncated normal."""
    a = (spec.lower - spec.mean) / spec.std
    b = (spec.upper - spec.mean) / spec.std
    mass = _interval_mass(a, b)
    return spec.mean + spec.std * (_phi(a) - _phi(b)) / mass
