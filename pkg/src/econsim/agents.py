"""Observations, discrete action spaces and a gym-style multi-agent wrapper.

Agent ids are ``household_0 .. household_{N-1}``, ``firm``, ``central_bank``
and ``government``.  Every agent picks one flat categorical index per step;
indices map row-major onto the agent's sub-grids:

* household: (labor, consumption[, eta])
* firm: (wage, price)
* central bank: (rate,)
* government: (tax, allocation weights)
"""
from __future__ import annotations

import math
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from econsim.dynamics import (
    ContractError,
    EconomyConfig,
    EconomyState,
    HouseholdAction,
    JointAction,
    StepOutcome,
    initial_state,
    step,
)

FIRM = "firm"
BANK = "central_bank"
GOV = "government"

HOUSEHOLD_FIELDS = ("m", "r", "tau", "kappa", "p", "w")
FIRM_FIELDS = ("eps_prev", "Y", "p", "w", "sum_n", "sum_c")
BANK_FIELDS = ("p_lag4", "p", "y")


def household_id(i: int) -> str:
    return f"household_{i}"


def household_index(agent: str) -> int:
    return int(agent.rsplit("_", 1)[1])


def is_household(agent: str) -> bool:
    return agent.startswith("household_")


def agent_ids(config: EconomyConfig) -> list[str]:
    return [household_id(i) for i in range(config.n_households)] + [FIRM, BANK, GOV]


def _check_agent(agent: str, config: EconomyConfig) -> None:
    if agent in (FIRM, BANK, GOV):
        return
    if is_household(agent):
        try:
            i = household_index(agent)
        except ValueError:
            i = -1
        if 0 <= i < config.n_households:
            return
    raise ContractError(f"unknown agent id {agent!r}")


# --------------------------------------------------------------------------
# observations


def observation_fields(agent: str, config: EconomyConfig) -> Tuple[str, ...]:
    _check_agent(agent, config)
    if is_household(agent):
        return HOUSEHOLD_FIELDS
    if agent == FIRM:
        return FIRM_FIELDS
    if agent == BANK:
        return BANK_FIELDS
    return ("tau",) + tuple(f"kappa_{i}" for i in range(config.n_households)) + ("revenue",)


def observation_scale(agent: str, config: EconomyConfig) -> np.ndarray:
    """Divisors applied to the raw observation; multiply back to invert."""
    norm = config.norm
    money = norm.spending
    if is_household(agent):
        scale = (money, 1.0, 1.0, money, norm.price, norm.wage)
    elif agent == FIRM:
        scale = (1.0, norm.output, norm.price, norm.wage, norm.labor, norm.consumption)
    elif agent == BANK:
        scale = (norm.price, norm.price, norm.output)
    else:
        _check_agent(agent, config)
        scale = (1.0,) + (money,) * config.n_households + (money,)
    return np.array(scale, dtype=float)


def observe_raw(state: EconomyState, agent: str, config: EconomyConfig) -> np.ndarray:
    _check_agent(agent, config)
    firm, macro = state.firm, state.macro
    if is_household(agent):
        h = state.households[household_index(agent)]
        vals = (h.m, macro.rate, macro.tax, h.kappa, firm.price, firm.wage)
    elif agent == FIRM:
        sum_c = math.fsum(h.c_prev for h in state.households)
        vals = (firm.eps, firm.inventory, firm.price, firm.wage, firm.labor_prev, sum_c)
    elif agent == BANK:
        vals = (macro.price_lag4, firm.price, firm.output_prev)
    else:
        vals = (macro.tax,) + state.credits + (macro.revenue,)
    return np.array(vals, dtype=float)


def observe(state: EconomyState, agent: str, config: EconomyConfig, scaled: bool = True) -> np.ndarray:
    obs = observe_raw(state, agent, config)
    if scaled:
        obs = obs / observation_scale(agent, config)
    return obs


def observation_size(agent: str, config: EconomyConfig) -> int:
    return len(observation_fields(agent, config))


# --------------------------------------------------------------------------
# actions


def subgrid_sizes(agent: str, config: EconomyConfig) -> Tuple[int, ...]:
    _check_agent(agent, config)
    g = config.grids
    if is_household(agent):
        sizes = (len(g.labor), len(g.consumption))
        return sizes + ((len(g.eta),) if config.eta_enabled else ())
    if agent == FIRM:
        return (len(g.wage), len(g.price))
    if agent == BANK:
        return (len(g.interest),)
    return (len(g.tax), len(g.weights(config.n_households)))


def action_space_size(agent: str, config: EconomyConfig) -> int:
    return math.prod(subgrid_sizes(agent, config))


def encode_action(agent: str, indices: Sequence[int], config: EconomyConfig) -> int:
    """Flat categorical index of a tuple of sub-grid indices (row-major)."""
    sizes = subgrid_sizes(agent, config)
    if len(indices) != len(sizes):
        raise ContractError(f"{agent} expects {len(sizes)} grid indices, got {len(indices)}")
    flat = 0
    for idx, size in zip(indices, sizes):
        if not 0 <= idx < size:
            raise ContractError(f"grid index {idx} out of range [0, {size})")
        flat = flat * size + int(idx)
    return flat


def decode_indices(agent: str, flat: int, config: EconomyConfig) -> Tuple[int, ...]:
    sizes = subgrid_sizes(agent, config)
    total = math.prod(sizes)
    if not 0 <= flat < total:
        raise ContractError(f"action index {flat} out of range [0, {total}) for {agent}")
    out = []
    for size in reversed(sizes):
        flat, rem = divmod(int(flat), size)
        out.append(rem)
    return tuple(reversed(out))


def decode_action(agent: str, flat: int, config: EconomyConfig):
    """Grid values for a flat index.

    Returns a :class:`HouseholdAction`, ``(wage, price)``, ``rate`` or
    ``(tax, weights)`` depending on the agent.
    """
    g = config.grids
    idx = decode_indices(agent, flat, config)
    if is_household(agent):
        eta = g.eta[idx[2]] if config.eta_enabled else 0.0
        return HouseholdAction(labor=g.labor[idx[0]], consumption=g.consumption[idx[1]], eta=eta)
    if agent == FIRM:
        return g.wage[idx[0]], g.price[idx[1]]
    if agent == BANK:
        return g.interest[idx[0]]
    return g.tax[idx[0]], g.weights(config.n_households)[idx[1]]


def joint_action(indices: Mapping[str, int], config: EconomyConfig) -> JointAction:
    households = tuple(decode_action(household_id(i), indices[household_id(i)], config)
                       for i in range(config.n_households))
    wage, price = decode_action(FIRM, indices[FIRM], config)
    rate = decode_action(BANK, indices[BANK], config)
    tax, weights = decode_action(GOV, indices[GOV], config)
    return JointAction(households=households, wage=wage, price=price, rate=rate, tax=tax,
                       weights=weights)


def value_index(agent: str, values: Sequence, config: EconomyConfig) -> int:
    """Flat index of an action given by grid values rather than grid indices."""
    g = config.grids
    if is_household(agent):
        grids = [g.labor, g.consumption] + ([g.eta] if config.eta_enabled else [])
    elif agent == FIRM:
        grids = [g.wage, g.price]
    elif agent == BANK:
        grids = [g.interest]
    else:
        grids = [g.tax, g.weights(config.n_households)]
    try:
        idx = [list(grid).index(v) for grid, v in zip(grids, values)]
    except ValueError as exc:
        raise ContractError(f"{agent} action {values} is not on the grid") from exc
    return encode_action(agent, idx, config)


# --------------------------------------------------------------------------
# gym-style wrapper


class MarketGame:
    """Simultaneous-move Markov game over :func:`econsim.dynamics.step`.

    ``step`` takes a dict of flat action indices, one per agent, and returns
    ``(observations, rewards, done, outcome)`` with normalised rewards.
    """

    def __init__(self, config: EconomyConfig, seed: Optional[int] = None):
        self.config = config
        self.agents = agent_ids(config)
        self.rng = np.random.default_rng(seed)
        self.state: EconomyState = initial_state(config)

    def reset(self, seed: Optional[int] = None) -> Dict[str, np.ndarray]:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.state = initial_state(self.config)
        return self.observations()

    def observations(self) -> Dict[str, np.ndarray]:
        return {a: observe(self.state, a, self.config) for a in self.agents}

    def step(self, indices: Mapping[str, int]):
        action = joint_action(indices, self.config)
        self.state, outcome = step(self.state, action, self.config, rng=self.rng)
        done = self.state.t >= self.config.horizon
        return self.observations(), dict(outcome.rewards), done, outcome

    def action_space_size(self, agent: str) -> int:
        return action_space_size(agent, self.config)

    def observation_size(self, agent: str) -> int:
        return observation_size(agent, self.config)
