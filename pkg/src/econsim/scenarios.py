"""The three tax-credit studies as reproducible scenario definitions.

A: no credits during training, flat 10% tax, households without the
   credit-spend action; government scripted.
B: A's agents plus the credit-spend action, a fixed $5000 credit per
   household per quarter; government scripted.
C: B plus a learning government that redistributes last quarter's revenue.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from econsim.agents import BANK, FIRM, GOV, agent_ids, household_id
from econsim.dynamics import BankParams, EconomyConfig, FirmParams
from econsim.grids import ActionGrids
from econsim.rewards import GovPrefs, HouseholdPrefs

# Ordered from the most liquid household to the least liquid one.
PREF_TABLE: Tuple[HouseholdPrefs, ...] = (
    HouseholdPrefs(gamma=0.1, nu=0.5, mu=0.4, beta=0.99),
    HouseholdPrefs(gamma=0.2, nu=0.5, mu=0.2, beta=0.99),
    HouseholdPrefs(gamma=0.3, nu=0.5, mu=0.1, beta=0.99),
)

FIXED_CREDIT = 5000.0
SCRIPTED_TAX = 0.10


@dataclass(frozen=True)
class Scenario:
    name: str
    learners: Tuple[str, ...]
    learning_rates: Dict[str, float]
    credit_mode: str = "fixed"
    fixed_credit: float = 0.0
    eta_enabled: bool = False
    fixed_tax: float = SCRIPTED_TAX
    prefs: Tuple[HouseholdPrefs, ...] = PREF_TABLE
    horizon: int = 12
    firm: FirmParams = FirmParams()
    bank: BankParams = BankParams()
    government: GovPrefs = GovPrefs()
    grids: ActionGrids = ActionGrids()
    # Fixed grid values for agents that do not learn.
    scripted: Dict[str, tuple] = field(default_factory=dict)

    def economy(self, credit_override: Optional[float] = None) -> EconomyConfig:
        """Economy for this scenario; ``credit_override`` switches to fixed credits of that size."""
        mode, credit = self.credit_mode, self.fixed_credit
        if credit_override is not None:
            mode, credit = "fixed", float(credit_override)
        return EconomyConfig(
            households=self.prefs, firm=self.firm, bank=self.bank, government=self.government,
            grids=self.grids, horizon=self.horizon, credit_mode=mode, fixed_credit=credit,
            eta_enabled=self.eta_enabled, initial_tax=self.fixed_tax,
        )

    def scripted_values(self) -> Dict[str, tuple]:
        """Grid values played by every non-learning agent."""
        cfg = self.economy()
        n = cfg.n_households
        g = cfg.grids
        defaults = {
            FIRM: (g.median("wage"), g.median("price")),
            BANK: (g.interest[0],),
            GOV: (self.fixed_tax, g.weights(n)[0]),
        }
        for i in range(n):
            defaults[household_id(i)] = (g.median("labor"), g.median("consumption")) + (
                (g.eta[0],) if self.eta_enabled else ())
        out = {}
        for agent in agent_ids(cfg):
            if agent not in self.learners:
                out[agent] = tuple(self.scripted.get(agent, defaults[agent]))
        return out

    def with_households(self, n: int) -> "Scenario":
        """Same scenario restricted to the first ``n`` households (for smoke runs)."""
        prefs = self.prefs[:n]
        keep = {household_id(i) for i in range(n)} | {FIRM, BANK, GOV}
        learners = tuple(a for a in self.learners if a in keep)
        rates = {a: lr for a, lr in self.learning_rates.items() if a in keep}
        return replace(self, prefs=prefs, learners=learners, learning_rates=rates)


def _households(n: int = 3) -> Tuple[str, ...]:
    return tuple(household_id(i) for i in range(n))


def scenario_a() -> Scenario:
    hh = _households()
    rates = {a: 0.01 for a in hh} | {FIRM: 0.005, BANK: 0.001}
    return Scenario(name="A", learners=hh + (FIRM, BANK), learning_rates=rates,
                    credit_mode="fixed", fixed_credit=0.0, eta_enabled=False)


def scenario_b() -> Scenario:
    hh = _households()
    rates = {a: 0.002 for a in hh} | {FIRM: 0.005, BANK: 0.005}
    return Scenario(name="B", learners=hh + (FIRM, BANK), learning_rates=rates,
                    credit_mode="fixed", fixed_credit=FIXED_CREDIT, eta_enabled=True)


def scenario_c() -> Scenario:
    hh = _households()
    rates = {a: 0.002 for a in hh} | {FIRM: 0.005, BANK: 0.005, GOV: 0.001}
    return Scenario(name="C", learners=hh + (FIRM, BANK, GOV), learning_rates=rates,
                    credit_mode="revenue", fixed_credit=0.0, eta_enabled=True)


SCENARIOS = {"A": scenario_a, "B": scenario_b, "C": scenario_c}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name.upper()]()
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}") from None
