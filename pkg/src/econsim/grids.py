"""Discrete action grids and normalisation constants.

All defaults reproduce the desk-scale economy: three households, one firm,
one central bank and one government.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Tuple

LABOR = (0.0, 240.0, 480.0, 720.0, 960.0)
CONSUMPTION = (0.0, 6.0, 12.0, 18.0, 24.0)
ETA = (0.0, 0.25, 0.5, 0.75, 1.0)
PRICE = (188.0, 255.0, 322.0, 389.0, 456.0)
WAGE = (7.25, 19.655, 32.06, 44.465, 56.87)
# Top point is the stated maximum 5.7%, not 0.25 + 4 * 1.375 = 5.75%.
INTEREST = (0.0025, 0.01625, 0.03, 0.04375, 0.057)
TAX = (0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37)
WEIGHT_GRANULARITY = 4


def compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """Integer compositions of ``total`` into ``parts`` nonnegative pieces.

    Ordered descending-lexicographically, so the first composition puts the
    whole mass on the first household and the last one on the final household.
    """
    if parts == 1:
        return [(total,)]
    out = []
    for head in range(total, -1, -1):
        for tail in compositions(total - head, parts - 1):
            out.append((head,) + tail)
    return out


@dataclass(frozen=True)
class ActionGrids:
    labor: Tuple[float, ...] = LABOR
    consumption: Tuple[float, ...] = CONSUMPTION
    eta: Tuple[float, ...] = ETA
    price: Tuple[float, ...] = PRICE
    wage: Tuple[float, ...] = WAGE
    interest: Tuple[float, ...] = INTEREST
    tax: Tuple[float, ...] = TAX
    weight_granularity: int = WEIGHT_GRANULARITY

    def __post_init__(self):
        for name in ("labor", "consumption", "eta", "price", "wage", "interest", "tax"):
            values = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, values)
            if len(values) == 0:
                raise ValueError(f"grid {name!r} is empty")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValueError(f"grid {name!r} must be strictly increasing")
        if any(v < 0 for v in self.labor + self.consumption):
            raise ValueError("labor and consumption grids must be nonnegative")
        if self.eta[0] < 0 or self.eta[-1] > 1:
            raise ValueError("eta grid must lie in [0, 1]")
        if self.price[0] <= 0 or self.wage[0] < 0:
            raise ValueError("prices must be positive and wages nonnegative")
        if self.tax[0] < 0 or self.tax[-1] >= 1:
            raise ValueError("tax rates must lie in [0, 1)")
        if self.weight_granularity < 1:
            raise ValueError("weight_granularity must be >= 1")

    def weights(self, n_households: int) -> list[tuple[float, ...]]:
        g = self.weight_granularity
        return [tuple(k / g for k in comp) for comp in compositions(g, n_households)]

    def median(self, name: str) -> float:
        values = getattr(self, name)
        return values[len(values) // 2]

    def digest(self, n_households: int) -> str:
        """Stable hash identifying the grids a checkpoint was trained on."""
        payload = dict(asdict(self), n_households=n_households)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class NormConstants:
    """Median operating point used to put every reward on an O(1) scale."""

    n_households: int = 3
    alpha: float = 0.67
    labor: float = 480.0
    wage: float = 32.06
    price: float = 322.0
    consumption: float = 12.0
    output: float = field(init=False)

    def __post_init__(self):
        if self.n_households < 1:
            raise ValueError("need at least one household")
        object.__setattr__(self, "output", (self.n_households * self.labor) ** self.alpha)

    @property
    def spending(self) -> float:
        """Median spending of one household, p~ * c~."""
        return self.price * self.consumption

    @classmethod
    def from_grids(cls, grids: ActionGrids, n_households: int, alpha: float) -> "NormConstants":
        return cls(
            n_households=n_households,
            alpha=alpha,
            labor=grids.median("labor"),
            wage=grids.median("wage"),
            price=grids.median("price"),
            consumption=grids.median("consumption"),
        )


E = math.e
