"""Payment rules and bid strategies shared by the solvers and the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PaymentRule:
    """Mix of first and second price with an optional reserve.

    On a win the bidder pays ``(1 - kappa) * bid + kappa * price_to_beat``
    where the price to beat is clamped up to ``reserve``.  ``kappa = 1`` is the
    second-price auction, ``kappa = 0`` first price.
    """

    kappa: float = 1.0
    reserve: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.kappa <= 1.0):
            raise ConfigError(f"kappa must lie in [0, 1], got {self.kappa}", key="kappa")
        if not (math.isfinite(self.reserve) and self.reserve >= 0.0):
            raise ConfigError(f"reserve must be >= 0, got {self.reserve}", key="reserve")

    def payment(self, bid, price_to_beat):
        bid = np.asarray(bid, dtype=float)
        floor = np.maximum(np.asarray(price_to_beat, dtype=float), self.reserve)
        # pure rules exact; the mixed form is exact on the diagonal bid == floor
        if self.kappa == 1.0:
            return floor * np.ones_like(bid)
        if self.kappa == 0.0:
            return bid * np.ones_like(floor)
        return bid - self.kappa * (bid - floor)

    @property
    def name(self) -> str:
        if self.kappa == 1.0:
            return "second-price"
        if self.kappa == 0.0:
            return "first-price"
        return f"mixed(kappa={self.kappa:g})"


SECOND_PRICE = PaymentRule(1.0)
FIRST_PRICE = PaymentRule(0.0)


@dataclass(frozen=True)
class BidStrategy:
    """Affine bid map ``v -> slope * v + intercept``."""

    slope: float
    intercept: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and self.slope >= 0.0):
            raise ConfigError(f"bid slope must be a finite value >= 0, got {self.slope}", key="slope")
        if not math.isfinite(self.intercept):
            raise ConfigError("bid intercept must be finite", key="intercept")

    def bid(self, values):
        return self.slope * np.asarray(values, dtype=float) + self.intercept

    __call__ = bid

    @property
    def linear(self) -> bool:
        return self.intercept == 0.0

    def scaled(self, factor: float) -> "BidStrategy":
        return BidStrategy(self.slope * factor, self.intercept * factor)

    def __str__(self):
        if self.linear:
            return f"{self.slope:g}v"
        return f"{self.slope:g}v{self.intercept:+g}"
