"""State-transition equations of the economy and the per-quarter step.

One call to :func:`step` advances the economy by one quarter:

1. agents act simultaneously (the :class:`JointAction` passed in);
2. the production shock is drawn and the production factor evolves;
3. the firm produces from this quarter's labour;
4. consumption requests are rationed against the *pre-production* inventory;
5. income tax is collected on this quarter's wages;
6. savings are updated with this quarter's credits;
7. inventory is updated;
8. rewards are computed;
9. prices, wage, rate, tax and credits chosen this quarter are installed
   for the next one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from econsim.grids import ActionGrids, NormConstants
from econsim import rewards as rw

HISTORY = 5


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


# --------------------------------------------------------------------------
# elementary equations


def ration_consumption(requests: Sequence[float], inventory: float) -> list[float]:
    """Proportional rationing of the firm's inventory across requests."""
    if inventory < 0:
        raise ContractError(f"inventory must be nonnegative, got {inventory}")
    if any(c < 0 for c in requests):
        raise ContractError(f"consumption requests must be nonnegative, got {list(requests)}")
    total = math.fsum(requests)
    if total == 0:
        return [0.0 for _ in requests]
    if total <= inventory:
        return [float(c) for c in requests]
    return [min(c, inventory * c / total) for c in requests]


def update_savings(m: float, r: float, n: float, w: float, p: float, c: float,
                   tau: float, kappa: float) -> float:
    return (1.0 + r) * m + (n * w - p * c) - tau * n * w + kappa


def evolve_production_factor(eps_prev: float, rho: float, shock: float) -> float:
    if not eps_prev > 0:
        raise ContractError(f"production factor must be positive, got {eps_prev}")
    return eps_prev ** rho * math.exp(shock)


def produce(total_labor: float, eps: float, alpha: float) -> int:
    """Cobb-Douglas output, floored to whole goods."""
    if total_labor <= 0:
        return 0
    return int(math.floor(eps * total_labor ** alpha))


def update_inventory(inventory: int, produced: int, consumed: float) -> int:
    if consumed > inventory + 1e-9 * max(1, inventory):
        raise AssertionError(f"sold {consumed} goods from an inventory of {inventory}")
    # Requests are whole goods, and a rationed market sells out exactly, so the
    # remainder is integral up to float error in the proportional shares.
    return max(int(round(inventory + produced - consumed)), 0)


def inflation(p_t: float, p_tm4: float) -> float:
    if not p_tm4 > 0:
        raise ContractError("lagged price must be positive")
    return p_t / p_tm4


def collect_tax(tau: float, labor: Sequence[float], w: float) -> float:
    return math.fsum(tau * n * w for n in labor)


def clip_eta(eta: float, kappa: float, p: float, c: float) -> float:
    """Largest credit-spend fraction not exceeding ``eta`` with p*c*eta <= kappa."""
    spend = p * c
    if spend <= 0:
        return eta
    return min(eta, kappa / spend)


def allocate_credits(weights: Sequence[float], revenue: float) -> list[float]:
    """Split ``revenue`` by ``weights``; the last share absorbs rounding drift."""
    if any(x < 0 for x in weights) or abs(math.fsum(weights) - 1.0) > 1e-9:
        raise ContractError(f"allocation weights must lie on the simplex, got {list(weights)}")
    credits = [x * revenue for x in weights[:-1]]
    credits.append(max(revenue - math.fsum(credits), 0.0))
    return credits


# --------------------------------------------------------------------------
# configuration and state


@dataclass(frozen=True)
class FirmParams:
    alpha: float = 0.67
    rho: float = 0.97
    sigma: float = 0.1
    chi: float = 0.1
    beta: float = 0.99
    eps0: float = 1.0
    inventory0: int = 0


@dataclass(frozen=True)
class BankParams:
    lam: float = 1.0
    pi_star: float = 1.02
    beta: float = 0.99


@dataclass(frozen=True)
class EconomyConfig:
    """Everything that stays fixed across an episode."""

    households: Tuple[rw.HouseholdPrefs, ...] = (
        rw.HouseholdPrefs(gamma=0.1, nu=0.5, mu=0.4),
        rw.HouseholdPrefs(gamma=0.2, nu=0.5, mu=0.2),
        rw.HouseholdPrefs(gamma=0.3, nu=0.5, mu=0.1),
    )
    firm: FirmParams = FirmParams()
    bank: BankParams = BankParams()
    government: rw.GovPrefs = rw.GovPrefs()
    grids: ActionGrids = ActionGrids()
    horizon: int = 12
    # "revenue": credits are the government's allocation of last quarter's tax.
    # "fixed": every household receives ``fixed_credit`` each quarter.
    credit_mode: str = "revenue"
    fixed_credit: float = 0.0
    eta_enabled: bool = True
    initial_price: Optional[float] = None
    initial_wage: Optional[float] = None
    initial_rate: Optional[float] = None
    initial_tax: Optional[float] = None
    initial_savings: float = 0.0
    norm: NormConstants = field(init=False)

    def __post_init__(self):
        if self.credit_mode not in ("revenue", "fixed"):
            raise ContractError(f"unknown credit_mode {self.credit_mode!r}")
        if self.horizon < 1:
            raise ContractError("horizon must be positive")
        if not self.households:
            raise ContractError("need at least one household")
        if self.fixed_credit < 0:
            raise ContractError("fixed_credit must be nonnegative")
        g = self.grids
        defaults = dict(initial_price=g.median("price"), initial_wage=g.median("wage"),
                        initial_rate=g.interest[0], initial_tax=g.tax[0])
        for key, value in defaults.items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, value)
        object.__setattr__(self, "norm", NormConstants.from_grids(g, len(self.households), self.firm.alpha))

    @property
    def n_households(self) -> int:
        return len(self.households)


@dataclass(frozen=True)
class HouseholdState:
    m: float = 0.0
    c_prev: float = 0.0
    kappa: float = 0.0


@dataclass(frozen=True)
class FirmState:
    inventory: int = 0
    eps: float = 1.0
    price: float = 322.0
    wage: float = 32.06
    labor_prev: float = 0.0
    output_prev: int = 0


@dataclass(frozen=True)
class MacroState:
    rate: float
    tax: float
    price_history: Tuple[float, ...]
    t: int = 0
    revenue: float = 0.0

    @property
    def price_lag4(self) -> float:
        return self.price_history[-5]


@dataclass(frozen=True)
class EconomyState:
    households: Tuple[HouseholdState, ...]
    firm: FirmState
    macro: MacroState

    @property
    def t(self) -> int:
        return self.macro.t

    @property
    def credits(self) -> Tuple[float, ...]:
        return tuple(h.kappa for h in self.households)


@dataclass(frozen=True)
class HouseholdAction:
    labor: float
    consumption: float
    eta: float = 0.0


@dataclass(frozen=True)
class JointAction:
    households: Tuple[HouseholdAction, ...]
    wage: float
    price: float
    rate: float
    tax: float
    weights: Tuple[float, ...]


@dataclass(frozen=True)
class StepOutcome:
    consumption: Tuple[float, ...]
    eta_effective: Tuple[float, ...]
    output: int
    inflation: float
    revenue: float
    shock: float
    eps: float
    inventory_before: int
    savings_before: Tuple[float, ...]
    rewards_raw: dict
    rewards: dict


def initial_state(config: EconomyConfig) -> EconomyState:
    n = config.n_households
    kappa0 = config.fixed_credit if config.credit_mode == "fixed" else 0.0
    households = tuple(HouseholdState(m=config.initial_savings, kappa=kappa0) for _ in range(n))
    firm = FirmState(inventory=config.firm.inventory0, eps=config.firm.eps0,
                     price=config.initial_price, wage=config.initial_wage)
    macro = MacroState(rate=config.initial_rate, tax=config.initial_tax,
                       price_history=(config.initial_price,) * HISTORY)
    return EconomyState(households=households, firm=firm, macro=macro)


def validate_action(action: JointAction, config: EconomyConfig) -> None:
    g = config.grids
    if len(action.households) != config.n_households:
        raise ContractError("one household action per household required")
    for a in action.households:
        if a.labor not in g.labor or a.consumption not in g.consumption:
            raise ContractError(f"household action off grid: {a}")
        if config.eta_enabled and a.eta not in g.eta:
            raise ContractError(f"eta off grid: {a.eta}")
        if not config.eta_enabled and a.eta != 0.0:
            raise ContractError("eta must be 0 when the credit-spend action is disabled")
    if action.wage not in g.wage or action.price not in g.price:
        raise ContractError(f"firm action off grid: w={action.wage}, p={action.price}")
    if action.rate not in g.interest:
        raise ContractError(f"interest rate off grid: {action.rate}")
    if action.tax not in g.tax:
        raise ContractError(f"tax rate off grid: {action.tax}")
    if len(action.weights) != config.n_households:
        raise ContractError("one allocation weight per household required")


def step(state: EconomyState, action: JointAction, config: EconomyConfig,
         rng: Optional[np.random.Generator] = None, shock: Optional[float] = None,
         check: bool = True) -> Tuple[EconomyState, StepOutcome]:
    """Advance the economy one quarter.

    The shock is drawn from ``rng`` unless given explicitly.
    """
    if state.macro.t >= config.horizon:
        raise ContractError("episode already finished")
    if check:
        validate_action(action, config)
    fp, norm = config.firm, config.norm
    hh, firm, macro = state.households, state.firm, state.macro
    p, w, r, tau = firm.price, firm.wage, macro.rate, macro.tax

    if shock is None:
        shock = float(rng.normal(0.0, fp.sigma)) if fp.sigma > 0 else 0.0
    eps = evolve_production_factor(firm.eps, fp.rho, shock)

    labor = [a.labor for a in action.households]
    total_labor = math.fsum(labor)
    output = produce(total_labor, eps, fp.alpha)

    consumption = ration_consumption([a.consumption for a in action.households], firm.inventory)
    total_consumed = math.fsum(consumption)

    revenue = collect_tax(tau, labor, w)

    eta_eff = []
    savings = []
    for h, a, c in zip(hh, action.households, consumption):
        eta_eff.append(clip_eta(a.eta, h.kappa, p, c) if config.eta_enabled else 0.0)
        savings.append(update_savings(h.m, r, a.labor, w, p, c, tau, h.kappa))

    inventory = update_inventory(firm.inventory, output, total_consumed)

    if config.credit_mode == "revenue":
        next_credits = allocate_credits(action.weights, revenue)
    else:
        next_credits = [config.fixed_credit] * config.n_households

    pi = inflation(p, macro.price_lag4)
    raw, normed = _rewards(config, state, action, consumption, eta_eff, savings,
                           inventory, output, pi, next_credits)

    new_households = tuple(
        HouseholdState(m=m, c_prev=c, kappa=k)
        for m, c, k in zip(savings, consumption, next_credits)
    )
    new_firm = FirmState(inventory=inventory, eps=eps, price=action.price, wage=action.wage,
                         labor_prev=total_labor, output_prev=output)
    new_macro = MacroState(rate=action.rate, tax=action.tax,
                           price_history=macro.price_history[1:] + (action.price,),
                           t=macro.t + 1, revenue=revenue)
    outcome = StepOutcome(
        consumption=tuple(consumption), eta_effective=tuple(eta_eff), output=output,
        inflation=pi, revenue=revenue, shock=shock, eps=eps,
        inventory_before=firm.inventory, savings_before=tuple(h.m for h in hh),
        rewards_raw=raw, rewards=normed,
    )
    return EconomyState(new_households, new_firm, new_macro), outcome


def _rewards(config, state, action, consumption, eta_eff, savings, inventory,
             output, pi, next_credits):
    norm, fp, bank, gov = config.norm, config.firm, config.bank, config.government
    n_hh = config.n_households
    p, w = state.firm.price, state.firm.wage
    raw, normed = {}, {}
    h_raw, h_norm = [], []
    for i, (prefs, a, c, eta, m_next) in enumerate(
            zip(config.households, action.households, consumption, eta_eff, savings)):
        c_n, n_n, m_n = rw.normalize_household_args(c, a.labor, m_next, n_hh, norm)
        if config.eta_enabled:
            u_raw = rw.household_utility_aug(eta, c, a.labor, m_next, prefs)
            u_norm = rw.household_utility_aug(eta, c_n, n_n, m_n, prefs)
        else:
            u_raw = rw.household_utility(c, a.labor, m_next, prefs)
            u_norm = rw.household_utility(c_n, n_n, m_n, prefs)
        h_raw.append(u_raw)
        h_norm.append(u_norm)
        raw[f"household_{i}"] = u_raw
        normed[f"household_{i}"] = u_norm

    total_labor = math.fsum(a.labor for a in action.households)
    total_consumed = math.fsum(consumption)
    raw["firm"] = rw.firm_reward(p, total_consumed, w, total_labor, inventory, fp.chi)
    normed["firm"] = rw.normalize_firm_reward(p, total_consumed, w, total_labor, inventory,
                                              n_hh, fp.chi, norm)
    raw["central_bank"] = rw.central_bank_reward(pi, output, bank.lam, bank.pi_star)
    normed["central_bank"] = rw.central_bank_reward(pi, output / norm.output, bank.lam, bank.pi_star)

    iota = [rw.inverse_liquidity(h.m, p, c, gov.iota_cap, gov.m_floor)
            for h, c in zip(state.households, consumption)]
    raw["government"] = rw.government_reward(math.fsum(h_raw), iota, next_credits, gov.theta)
    normed["government"] = rw.government_reward(math.fsum(h_norm), iota, next_credits, gov.theta,
                                                 norm=norm)
    return raw, normed
