"""Categorical policy and value networks on a flat parameter vector.

Two separate tanh MLPs share the same trunk shape: a policy network ending in
a logits head over the agent's flat action space and a value network ending
in a scalar.  The flat vector holds, in order,

    policy: W_1, b_1, ..., W_k, b_k, W_out (h_k x A), b_out (A)
    value:  V_1, c_1, ..., V_k, c_k, V_out (h_k x 1), c_out (1)

with every weight matrix stored row-major as (fan_in, fan_out).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

HIDDEN = (64, 64)


@dataclass
class PolicyParams:
    obs_dim: int
    n_actions: int
    hidden: Tuple[int, ...] = HIDDEN
    flat: Optional[np.ndarray] = None
    shapes: list = field(init=False, repr=False)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.shapes = _layout(self.obs_dim, self.n_actions, self.hidden)
        size = sum(int(np.prod(s)) for s in self.shapes)
        if self.flat is None:
            self.flat = np.zeros(size)
        self.flat = np.asarray(self.flat, dtype=float)
        if self.flat.shape != (size,):
            raise ValueError(f"expected {size} parameters, got {self.flat.shape}")

    @property
    def size(self) -> int:
        return self.flat.size

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.obs_dim, self.n_actions, self.hidden, self.flat.copy())

    def views(self, flat: Optional[np.ndarray] = None) -> list[np.ndarray]:
        """Reshaped views into ``flat`` (default: own parameters), one per tensor."""
        flat = self.flat if flat is None else flat
        out, pos = [], 0
        for shape in self.shapes:
            n = int(np.prod(shape))
            out.append(flat[pos:pos + n].reshape(shape))
            pos += n
        return out


def _layout(obs_dim: int, n_actions: int, hidden: Tuple[int, ...]) -> list[tuple]:
    shapes = []
    for out_dim in (n_actions, 1):
        fan_in = obs_dim
        for h in hidden:
            shapes += [(fan_in, h), (h,)]
            fan_in = h
        shapes += [(fan_in, out_dim), (out_dim,)]
    return shapes


def init_params(obs_dim: int, n_actions: int, rng: np.random.Generator,
                hidden: Sequence[int] = HIDDEN, gain: float = np.sqrt(2.0)) -> PolicyParams:
    """Orthogonal hidden layers, zero output layers (uniform initial policy)."""
    params = PolicyParams(obs_dim, n_actions, tuple(hidden))
    views = params.views()
    n_layers = len(params.hidden) + 1
    for net in range(2):
        for layer in range(n_layers):
            w = views[net * 2 * n_layers + 2 * layer]
            if layer == n_layers - 1:
                w[...] = 0.0
            else:
                w[...] = _orthogonal(w.shape, rng) * gain
    return params


def _orthogonal(shape: tuple, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(max(shape), min(shape)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if q.shape == shape else q.T


def _mlp_forward(x: np.ndarray, tensors: list[np.ndarray]):
    acts = [x]
    h = x
    n_layers = len(tensors) // 2
    for layer in range(n_layers):
        w, b = tensors[2 * layer], tensors[2 * layer + 1]
        z = h @ w + b
        h = np.tanh(z) if layer < n_layers - 1 else z
        acts.append(h)
    return h, acts


def _mlp_backward(grad_out: np.ndarray, tensors: list[np.ndarray], acts: list[np.ndarray]) -> list[np.ndarray]:
    grads = [None] * len(tensors)
    n_layers = len(tensors) // 2
    delta = grad_out
    for layer in reversed(range(n_layers)):
        grads[2 * layer] = acts[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ tensors[2 * layer].T) * (1.0 - acts[layer] ** 2)
    return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _split(params: PolicyParams, flat: Optional[np.ndarray] = None):
    views = params.views(flat)
    half = len(views) // 2
    return views[:half], views[half:]


def policy_forward(params: PolicyParams, obs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Action probabilities and value estimates for a batch (or a single) observation."""
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 1
    if single:
        obs = obs[None, :]
    if obs.shape[1] != params.obs_dim:
        raise ValueError(f"observation has {obs.shape[1]} entries, policy expects {params.obs_dim}")
    pol, val = _split(params)
    logits, _ = _mlp_forward(obs, pol)
    values, _ = _mlp_forward(obs, val)
    probs, values = softmax(logits), values[:, 0]
    return (probs[0], values[0]) if single else (probs, values)


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse-CDF draw, one uniform per row, so equal seeds give paired draws."""
    probs = np.atleast_2d(probs)
    u = rng.random(probs.shape[0])
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    idx = (u[:, None] >= cdf).sum(axis=1)
    # Never land on a zero-probability tail entry.
    idx = np.minimum(idx, probs.shape[1] - 1)
    while True:
        bad = probs[np.arange(len(idx)), idx] <= 0
        if not bad.any():
            break
        idx[bad] -= 1
    with np.errstate(divide="ignore"):
        logp = np.log(probs[np.arange(len(idx)), idx])
    return idx, logp


@dataclass
class LossTerms:
    loss: float
    policy_loss: float
    value_loss: float
    entropy: float
    approx_kl: float
    clip_fraction: float


def ppo_loss(params: PolicyParams, flat: np.ndarray, obs: np.ndarray, actions: np.ndarray,
             old_logp: np.ndarray, advantages: np.ndarray, returns: np.ndarray,
             clip: float = 0.2, vf_coef: float = 0.5, ent_coef: float = 0.01,
             with_grad: bool = True):
    """Clipped-surrogate loss and its gradient with respect to ``flat``.

    loss = -mean(min(ratio*A, clip(ratio)*A)) + vf_coef*mean((V-R)^2) - ent_coef*mean(H)
    """
    b = obs.shape[0]
    pol, val = _split(params, flat)
    logits, pol_acts = _mlp_forward(obs, pol)
    values, val_acts = _mlp_forward(obs, val)
    values = values[:, 0]

    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    rows = np.arange(b)
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - old_logp)
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip)
    unclipped_obj = ratio * advantages
    clipped_obj = clipped * advantages
    surrogate = np.minimum(unclipped_obj, clipped_obj)
    entropy = -(probs * logp_all).sum(axis=1)

    policy_loss = -surrogate.mean()
    value_loss = np.mean((values - returns) ** 2)
    loss = policy_loss + vf_coef * value_loss - ent_coef * entropy.mean()
    terms = LossTerms(
        loss=float(loss), policy_loss=float(policy_loss), value_loss=float(value_loss),
        entropy=float(entropy.mean()), approx_kl=float(np.mean(old_logp - logp)),
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip)),
    )
    if not with_grad:
        return terms, None

    # d surrogate / d ratio: the unclipped branch always passes A; the clipped
    # branch passes A only while the ratio is inside the trust interval.
    use_unclipped = unclipped_obj <= clipped_obj
    inside = (ratio >= 1.0 - clip) & (ratio <= 1.0 + clip)
    dsurr_dratio = np.where(use_unclipped | inside, advantages, 0.0)
    dloss_dlogp = -(dsurr_dratio * ratio) / b

    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    dlogits = dloss_dlogp[:, None] * (onehot - probs)
    dlogits += ent_coef / b * probs * (logp_all + entropy[:, None])

    dvalues = (2.0 * vf_coef / b) * (values - returns)

    grads = _mlp_backward(dlogits, pol, pol_acts) + _mlp_backward(dvalues[:, None], val, val_acts)
    return terms, np.concatenate([g.ravel() for g in grads])
