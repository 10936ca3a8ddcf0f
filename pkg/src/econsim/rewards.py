"""Per-agent rewards, raw and normalised.

Normalised forms divide each quantity by the median operating point of the
action grids (see :class:`econsim.grids.NormConstants`) so all learners see
O(1) rewards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from econsim.grids import E, NormConstants


@dataclass(frozen=True)
class HouseholdPrefs:
    gamma: float
    nu: float = 0.5
    mu: float = 0.0
    beta: float = 0.99

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.nu < 0 or self.mu < 0:
            raise ValueError("nu and mu must be nonnegative")
        if not 0 < self.beta <= 1:
            raise ValueError("discount must lie in (0, 1]")


@dataclass(frozen=True)
class GovPrefs:
    theta: float = 0.1
    beta: float = 0.99
    iota_cap: float = 100.0
    m_floor: float = 1.0

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.iota_cap <= 0:
            raise ValueError("iota_cap must be positive")


def isoelastic(x: float, gamma: float) -> float:
    """x**(1-gamma)/(1-gamma) for x >= 0."""
    return x ** (1.0 - gamma) / (1.0 - gamma)


def household_utility(c: float, n: float, m: float, prefs: HouseholdPrefs) -> float:
    g = prefs.gamma
    savings = math.copysign(isoelastic(abs(m), g), m) if m != 0 else 0.0
    return isoelastic(c, g) + prefs.mu * savings - prefs.nu * n * n


def household_utility_aug(eta: float, c: float, n: float, m: float, prefs: HouseholdPrefs) -> float:
    """Household utility plus the benefit of paying for ``eta * c`` with credits."""
    return household_utility(c, n, m, prefs) + isoelastic(eta * c, prefs.gamma)


def firm_reward(p: float, total_c: float, w: float, total_n: float, inventory_next: float,
                chi: float) -> float:
    return p * total_c - w * total_n - chi * p * inventory_next


def central_bank_reward(pi: float, y: float, lam: float, pi_star: float) -> float:
    """Inflation-gap penalty plus output bonus.

    Pass ``y / norm.output`` for the normalised form.
    """
    return -(pi - pi_star) ** 2 + lam * y * y


def inverse_liquidity(m: float, p: float, c: float, iota_cap: float = 100.0,
                      m_floor: float = 1.0) -> float:
    """Spending-to-savings ratio, bounded at ``iota_cap`` for households near or below zero savings."""
    if c <= 0:
        return 0.0
    if m <= m_floor:
        return iota_cap
    return min(p * c / m, iota_cap)


def government_reward(household_total: float, iota: Sequence[float], credits_next: Sequence[float],
                      theta: float, norm: Optional[NormConstants] = None) -> float:
    weighted = math.fsum(i * k for i, k in zip(iota, credits_next))
    if norm is not None:
        weighted /= norm.n_households * norm.spending
    return theta * household_total + weighted


def normalize_household_args(c: float, n: float, m: float, count: int,
                             norm: NormConstants) -> tuple[float, float, float]:
    if count < 1:
        raise ValueError("count must be >= 1")
    return c, n / norm.labor, m / (norm.labor * count * norm.wage)


def normalize_firm_reward(p: float, total_c: float, w: float, total_n: float,
                          inventory_next: float, count: int, chi: float,
                          norm: NormConstants) -> float:
    if count < 1:
        raise ValueError("count must be >= 1")
    sales = p * total_c / (norm.price * count * norm.consumption)
    wages = w * total_n / (norm.wage * count * norm.labor)
    holding = chi * p * inventory_next / (count * E * norm.price * norm.labor)
    return sales - wages - holding
