"""Independent PPO learners trained against each other in the economy.

Each iteration plays ``episodes_per_iter`` episodes in lockstep (so every
policy sees one batched forward pass per quarter), then updates every
learning agent on its own rewards.  Agents that do not learn play the
scenario's scripted grid values.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from econsim import agents as ag
from econsim.dynamics import EconomyConfig, initial_state, step
from econsim.policy import HIDDEN, PolicyParams, init_params, policy_forward, sample_action
from econsim.ppo import Adam, Batch, PPOSettings, compute_gae, discounted_return, ppo_update
from econsim.scenarios import Scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 300
    episodes_per_iter: int = 32
    epochs: int = 4
    minibatch: int = 128
    clip: float = 0.2
    gae_lambda: float = 0.95
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    hidden: tuple = HIDDEN
    seed: int = 0
    # Overrides of the scenario's per-agent learning rates.
    learning_rates: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.iterations < 0 or self.episodes_per_iter < 1:
            raise ValueError("iterations must be >= 0 and episodes_per_iter >= 1")
        if not 0 < self.clip < 1:
            raise ValueError("clip ratio must lie in (0, 1)")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if any(lr <= 0 for lr in self.learning_rates.values()):
            raise ValueError("learning rates must be positive")

    @property
    def ppo(self) -> PPOSettings:
        return PPOSettings(clip=self.clip, epochs=self.epochs, minibatch=self.minibatch,
                           vf_coef=self.vf_coef, ent_coef=self.ent_coef)


def discount_of(agent: str, config: EconomyConfig) -> float:
    if ag.is_household(agent):
        return config.households[ag.household_index(agent)].beta
    if agent == ag.FIRM:
        return config.firm.beta
    if agent == ag.BANK:
        return config.bank.beta
    return config.government.beta


@dataclass
class Rollout:
    obs: Dict[str, np.ndarray]
    actions: Dict[str, np.ndarray]
    logp: Dict[str, np.ndarray]
    values: Dict[str, np.ndarray]
    rewards: Dict[str, np.ndarray]
    rows: List[dict]


def rollout(config: EconomyConfig, policies: Mapping[str, PolicyParams],
            scripted: Mapping[str, int], n_episodes: int, seed_seq: np.random.SeedSequence,
            record: bool = False, episode_offset: int = 0) -> Rollout:
    """Play ``n_episodes`` full episodes in lockstep.

    Shocks come from one stream and each agent's action draws from its own
    stream, all spawned from ``seed_seq``; two calls with equal seeds but
    different economies therefore see identical shocks and paired uniforms.
    """
    agents = ag.agent_ids(config)
    missing = [a for a in agents if a not in policies and a not in scripted]
    if missing:
        raise ValueError(f"no policy or scripted action for {missing}")
    children = seed_seq.spawn(1 + len(agents))
    env_rng = np.random.default_rng(children[0])
    act_rngs = {a: np.random.default_rng(s) for a, s in zip(agents, children[1:])}

    E, H = n_episodes, config.horizon
    out_obs = {a: np.zeros((E, H, ag.observation_size(a, config))) for a in policies}
    out_act = {a: np.zeros((E, H), dtype=int) for a in agents}
    out_logp = {a: np.zeros((E, H)) for a in policies}
    out_val = {a: np.zeros((E, H)) for a in policies}
    out_rew = {a: np.zeros((E, H)) for a in agents}
    rows: List[dict] = []

    states = [initial_state(config) for _ in range(E)]
    sigma = config.firm.sigma
    for t in range(H):
        shocks = env_rng.normal(0.0, sigma, size=E) if sigma > 0 else np.zeros(E)
        for a in agents:
            if a in policies:
                obs = (np.stack([ag.observe(s, a, config) for s in states]) if E
                       else np.zeros((0, ag.observation_size(a, config))))
                probs, values = policy_forward(policies[a], obs)
                idx, logp = sample_action(probs, act_rngs[a])
                out_obs[a][:, t] = obs
                out_logp[a][:, t] = logp
                out_val[a][:, t] = values
                out_act[a][:, t] = idx
            else:
                out_act[a][:, t] = scripted[a]
        for e in range(E):
            action = ag.joint_action({a: int(out_act[a][e, t]) for a in agents}, config)
            before = states[e]
            states[e], outcome = step(before, action, config, shock=float(shocks[e]), check=False)
            for a in agents:
                out_rew[a][e, t] = outcome.rewards[a]
            if record:
                rows.append(_log_row(episode_offset + e, t, before, states[e], action, outcome, config))
    return Rollout(out_obs, out_act, out_logp, out_val, out_rew, rows)


def _log_row(episode, t, before, after, action, outcome, config) -> dict:
    row = {"episode": episode, "t": t}
    for i, (a, h0, h1) in enumerate(zip(action.households, before.households, after.households)):
        row[f"n_{i}"] = a.labor
        row[f"c_act_{i}"] = a.consumption
        row[f"c_{i}"] = outcome.consumption[i]
        row[f"eta_chosen_{i}"] = a.eta
        row[f"eta_eff_{i}"] = outcome.eta_effective[i]
        row[f"m_{i}"] = h1.m
        row[f"kappa_{i}"] = h0.kappa
        row[f"kappa_next_{i}"] = h1.kappa
        row[f"reward_{i}"] = outcome.rewards[ag.household_id(i)]
    row.update(
        p=before.firm.price, w=before.firm.wage, r=before.macro.rate, tau=before.macro.tax,
        Y=before.firm.inventory, y=outcome.output, eps=outcome.eps, pi=outcome.inflation,
        revenue=outcome.revenue, firm_reward=outcome.rewards[ag.FIRM],
        cb_reward=outcome.rewards[ag.BANK], gov_reward=outcome.rewards[ag.GOV],
    )
    return row


@dataclass
class TrainResult:
    scenario: Scenario
    config: TrainConfig
    policies: Dict[str, PolicyParams]
    curves: List[dict]
    diagnostics: List[dict]
    iteration: int


def initial_policies(scenario: Scenario, config: TrainConfig) -> Dict[str, PolicyParams]:
    econ = scenario.economy()
    ss = np.random.SeedSequence([config.seed, 0xC0DE])
    rngs = [np.random.default_rng(s) for s in ss.spawn(len(scenario.learners))]
    return {
        a: init_params(ag.observation_size(a, econ), ag.action_space_size(a, econ), rng,
                       hidden=config.hidden)
        for a, rng in zip(scenario.learners, rngs)
    }


def scripted_indices(scenario: Scenario) -> Dict[str, int]:
    econ = scenario.economy()
    return {a: ag.value_index(a, v, econ) for a, v in scenario.scripted_values().items()}


def train(scenario: Scenario, config: TrainConfig,
          callback: Optional[Callable[[int, dict], None]] = None) -> TrainResult:
    """Run ``config.iterations`` rollout/update rounds for every learning agent."""
    econ = scenario.economy()
    policies = initial_policies(scenario, config)
    scripted = scripted_indices(scenario)
    rates = dict(scenario.learning_rates) | dict(config.learning_rates)
    optimizers = {a: Adam(lr=rates[a]) for a in scenario.learners}
    update_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5EED]))
    settings = config.ppo
    curves, diagnostics = [], []

    for it in range(config.iterations):
        ro = rollout(econ, policies, scripted, config.episodes_per_iter,
                     np.random.SeedSequence([config.seed, it]))
        row = {"iteration": it}
        for a in scenario.learners:
            beta = discount_of(a, econ)
            row[a] = float(discounted_return(ro.rewards[a], beta).mean())
            adv, ret = compute_gae(ro.rewards[a], ro.values[a], beta, config.gae_lambda)
            batch = Batch(
                obs=ro.obs[a].reshape(-1, ro.obs[a].shape[-1]),
                actions=ro.actions[a].ravel(),
                logp=ro.logp[a].ravel(),
                advantages=adv.ravel(),
                returns=ret.ravel(),
            )
            diag = ppo_update(policies[a], batch, optimizers[a], settings, update_rng)
            diagnostics.append({"iteration": it, "agent": a, **diag})
        curves.append(row)
        if callback is not None:
            callback(it, row)
    return TrainResult(scenario, config, policies, curves, diagnostics, config.iterations)


def final_window(curves: List[dict], agent: str, fraction: float = 0.1) -> float:
    """Mean of an agent's curve over the last ``fraction`` of iterations."""
    if not curves:
        return math.nan
    k = max(1, int(math.ceil(len(curves) * fraction)))
    return float(np.mean([row[agent] for row in curves[-k:]]))
