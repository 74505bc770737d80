"""Closed-form crop geometry plus Monte-Carlo cross-checks.

The random-resized-crop sampler draws an area fraction a ~ U[lo^2, hi^2]
where lo/hi are linear-scale bounds; sigma = sqrt(a) is the linear scale
of the crop.  Two derived quantities drive the progressive schedules:

  perceptual ratio   E[sigma]        = (2/3)(hi^3-lo^3)/(hi^2-lo^2)
  apparent size      h / E[sigma]

The printed schedule tables this package reproduces carry exactly 2/3 of
both quantities; ``table_geometry`` exposes the equation values and the
table-scaled values side by side rather than picking one.

Note that h / E[sigma] is not E[h/sigma]; the true expectation
2h/(lo+hi) is exposed only through the Monte-Carlo estimator, which is
the independent oracle for all of the above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .rng import SampleRng


@dataclass(frozen=True)
class ScaleBounds:
    """Linear-scale bounds (sigma_lo, sigma_hi], both in (0, 1]."""

    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        if not 0.0 < self.sigma_lo <= self.sigma_hi <= 1.0:
            raise ValueError(
                f"need 0 < sigma_lo <= sigma_hi <= 1, got {self}")

    @classmethod
    def from_area(cls, area_lo: float, area_hi: float) -> "ScaleBounds":
        return cls(math.sqrt(area_lo), math.sqrt(area_hi))

    def area_bounds(self) -> tuple[float, float]:
        return self.sigma_lo ** 2, self.sigma_hi ** 2


@dataclass(frozen=True)
class GeometryReport:
    perceptual_ratio: float
    apparent_size: float
    table_ratio: float
    table_apparent: float
    out_size: int


def expected_perceptual_ratio(bounds: ScaleBounds) -> float:
    """E[sigma]; the degenerate lo == hi case is the analytic limit."""
    lo, hi = bounds.sigma_lo, bounds.sigma_hi
    if lo == hi:
        return lo
    return (2.0 / 3.0) * (hi ** 3 - lo ** 3) / (hi ** 2 - lo ** 2)


def expected_apparent_size(out_size: float, bounds: ScaleBounds) -> float:
    """h / E[sigma]: pixel size at which content appears after crop+resize."""
    return out_size / expected_perceptual_ratio(bounds)


def table_geometry(out_size: int, bounds: ScaleBounds) -> GeometryReport:
    ratio = expected_perceptual_ratio(bounds)
    apparent = out_size / ratio
    return GeometryReport(ratio, apparent,
                          (2.0 / 3.0) * ratio, (2.0 / 3.0) * apparent,
                          out_size)


def masked_perceptual_ratio(mask_ratio: float, patch: int, out_size: int) -> float:
    """Average fraction of image content hidden by one masked patch: m*p/h."""
    if not 0.0 <= mask_ratio <= 1.0:
        raise ValueError(f"mask ratio must be in [0, 1], got {mask_ratio}")
    if patch <= 0 or out_size % patch != 0:
        raise ConfigError(
            f"patch size {patch} does not divide output size {out_size}")
    return mask_ratio * patch / out_size


@dataclass(frozen=True)
class ScaleStats:
    mean_sigma: float
    mean_apparent: float
    se_sigma: float
    se_apparent: float


def mc_estimate_scale_stats(bounds: ScaleBounds, out_size: float, n: int,
                            rng: SampleRng) -> ScaleStats:
    """Monte-Carlo oracle for the closed forms above.

    Draws a ~ U[lo^2, hi^2] and accumulates sqrt(a) and h/sqrt(a);
    standard errors are sample std / sqrt(n).
    """
    if n < 2:
        raise ValueError("need at least 2 draws")
    a_lo, a_hi = bounds.area_bounds()
    u = rng.random_array(n)
    a = a_lo + (a_hi - a_lo) * u
    sigma = a ** 0.5
    apparent = out_size / sigma
    return ScaleStats(
        float(sigma.mean()),
        float(apparent.mean()),
        float(sigma.std(ddof=1) / math.sqrt(n)),
        float(apparent.std(ddof=1) / math.sqrt(n)),
    )
