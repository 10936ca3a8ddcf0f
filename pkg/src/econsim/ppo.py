"""Generalised advantage estimation and the clipped-surrogate update."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from econsim.policy import PolicyParams, ppo_loss

log = logging.getLogger(__name__)


class UpdateError(RuntimeError):
    """A PPO update produced a non-finite loss or gradient."""


def compute_gae(rewards: np.ndarray, values: np.ndarray, discount: float,
                lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and returns for finite-horizon episodes.

    ``rewards`` and ``values`` have shape (episodes, horizon); the value after
    the last step is 0 since every episode ends there.
    """
    rewards = np.atleast_2d(np.asarray(rewards, dtype=float))
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must be aligned")
    adv = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[0])
    next_value = np.zeros(rewards.shape[0])
    for t in reversed(range(rewards.shape[1])):
        delta = rewards[:, t] + discount * next_value - values[:, t]
        running = delta + discount * lam * running
        adv[:, t] = running
        next_value = values[:, t]
    return adv, adv + values


def normalize_advantages(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    adv = np.asarray(adv, dtype=float)
    std = adv.std()
    return (adv - adv.mean()) / (std + eps)


def discounted_return(rewards: np.ndarray, discount: float) -> np.ndarray:
    """Discounted sum over the last axis."""
    rewards = np.asarray(rewards, dtype=float)
    weights = discount ** np.arange(rewards.shape[-1])
    return rewards @ weights


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    t: int = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class Batch:
    """Flattened on-policy samples for one agent."""

    obs: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self):
        return len(self.actions)


@dataclass(frozen=True)
class PPOSettings:
    clip: float = 0.2
    epochs: int = 4
    minibatch: int = 128
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    max_grad_norm: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.clip < 1:
            raise ValueError("clip ratio must lie in (0, 1)")
        if self.epochs < 1 or self.minibatch < 1:
            raise ValueError("epochs and minibatch must be positive")


def ppo_update(params: PolicyParams, batch: Batch, optimizer: Adam, settings: PPOSettings,
               rng: np.random.Generator) -> dict:
    """Several epochs of minibatch Adam steps on the clipped-surrogate loss.

    ``params.flat`` is replaced in place; returns averaged diagnostics.
    """
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    adv = normalize_advantages(batch.advantages)
    flat = params.flat.copy()
    history = []
    for _ in range(settings.epochs):
        order = rng.permutation(n)
        for start in range(0, n, settings.minibatch):
            mb = order[start:start + settings.minibatch]
            terms, grad = ppo_loss(params, flat, batch.obs[mb], batch.actions[mb], batch.logp[mb],
                                   adv[mb], batch.returns[mb], clip=settings.clip,
                                   vf_coef=settings.vf_coef, ent_coef=settings.ent_coef)
            if not (np.isfinite(terms.loss) and np.all(np.isfinite(grad))):
                raise UpdateError(f"non-finite loss in PPO update: {terms}")
            if settings.max_grad_norm is not None:
                norm = np.linalg.norm(grad)
                if norm > settings.max_grad_norm:
                    grad = grad * (settings.max_grad_norm / norm)
            flat = optimizer.step(flat, grad)
            history.append(terms)
    params.flat = flat
    return {
        "loss": float(np.mean([h.loss for h in history])),
        "policy_loss": float(np.mean([h.policy_loss for h in history])),
        "value_loss": float(np.mean([h.value_loss for h in history])),
        "entropy": float(np.mean([h.entropy for h in history])),
        "approx_kl": float(np.mean([h.approx_kl for h in history])),
        "clip_fraction": float(np.mean([h.clip_fraction for h in history])),
    }
