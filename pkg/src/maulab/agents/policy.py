"""Policy-gradient bidders: tabular-softmax REINFORCE (VPG) and the deep
policy-gradient variant (DPN) with a factored two-head categorical policy."""

from __future__ import annotations

import numpy as np

from maulab.agents.base import (
    Agent,
    bin_value,
    joint_action_space,
    pack_mlp,
    pack_opt,
    unpack_mlp,
    unpack_opt,
)
from maulab.config import ScenarioConfig
from maulab.grid import BidAction
from maulab.nn import Categorical, OptimState, adam_step_params, backward, forward, mlp_init, softmax


def vpg_update(table: np.ndarray, s: int, a: int, r: float, alpha: float) -> None:
    """Exact score-function update for a softmax-table policy on a single-step
    episode: logits(s,.) += alpha * r * (onehot(a) - pi(s,.))."""
    probs = softmax(table[s])
    onehot = np.zeros_like(probs)
    onehot[a] = 1.0
    table[s] += alpha * r * (onehot - probs)


class VpgAgent(Agent):
    """REINFORCE with a per-value-bin softmax logits table over canonical
    joint bids. Exploration comes from the stochastic policy itself."""

    algo = "vpg"
    kind = "logits_table"

    def __init__(
        self,
        config: ScenarioConfig,
        rng: np.random.Generator,
        value_bins: int = 11,
        alpha: float = 0.2,
        gamma: float = 0.99,
    ):
        super().__init__(config, rng)
        self.value_bins = value_bins
        self.alpha = alpha
        self.gamma = gamma
        self.actions = joint_action_space(config.grid_levels, self.k)
        self.action_index = {a: i for i, a in enumerate(self.actions)}
        self.table = np.zeros((value_bins, len(self.actions)))
        self.t = 0

    def _bin(self, obs: np.ndarray) -> int:
        return bin_value(self.value_of(obs), self.config.value_lo, self.config.value_hi, self.value_bins)

    def act(self, obs: np.ndarray, explore: bool = True) -> BidAction:
        s = self._bin(obs)
        idx = Categorical(self.table[s]).sample(self.rng)
        return BidAction(self.actions[idx])

    def observe(self, transition) -> None:
        if self.frozen:
            return
        s = self._bin(transition.observation)
        a = self.action_index[transition.action.levels]
        vpg_update(self.table, s, a, transition.episode_reward, self.alpha)
        self.t += 1

    def checkpoint_payload(self):
        meta = {
            "value_bins": self.value_bins,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "t": self.t,
        }
        return meta, {"table": self.table}

    def load_payload(self, meta, arrays) -> None:
        self.value_bins = int(meta["value_bins"])
        self.alpha = float(meta["alpha"])
        self.gamma = float(meta["gamma"])
        self.t = int(meta["t"])
        self.table = arrays["table"].copy()


# --- factored two-head categorical machinery (shared with actor-critic) ----

def head_logits(flat_logits: np.ndarray, k: int, levels: int) -> np.ndarray:
    """Reshape a (B, k*levels) network output into (B, k, levels) head logits."""
    return np.atleast_2d(flat_logits).reshape(-1, k, levels)


def heads_stats(logits3: np.ndarray, actions: np.ndarray):
    """Joint log-prob (heads add) and summed entropy for per-head actions."""
    dist = Categorical(logits3)
    logp = dist.log_prob(actions).sum(axis=-1)
    ent = dist.entropy().sum(axis=-1)
    return dist, logp, ent


def score_entropy_logits_grad(
    dist: Categorical, actions: np.ndarray, weights: np.ndarray, entropy_coef: float, scale: float
) -> np.ndarray:
    """Gradient w.r.t. head logits of
    loss = -scale * sum_b [ weights_b * logp_b + entropy_coef * entropy_b ]."""
    B, k, L = dist.probs.shape
    onehot = np.zeros((B, k, L))
    np.put_along_axis(onehot, np.asarray(actions)[..., None], 1.0, axis=-1)
    g = -weights[:, None, None] * (onehot - dist.probs)
    if entropy_coef != 0.0:
        h = dist.entropy()[..., None]  # per-head entropy (B, k, 1)
        g += entropy_coef * dist.probs * (dist.log_probs + h)
    return scale * g


def dpg_update(
    net,
    obs: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    opt: OptimState,
    entropy_coef: float,
    levels: int,
) -> float:
    """Batch policy-gradient step with batch-mean reward centering and an
    entropy bonus. Returns the loss value."""
    B, k = actions.shape
    out, cache = forward(net, obs)
    dist, logp, ent = heads_stats(head_logits(out, k, levels), actions)
    adv = rewards - rewards.mean()
    loss = float(-(logp * adv).mean() - entropy_coef * ent.mean())
    g3 = score_entropy_logits_grad(dist, actions, adv, entropy_coef, 1.0 / B)
    wg, bg = backward(net, cache, g3.reshape(B, k * levels))
    adam_step_params(net, wg, bg, opt)
    return loss


class DpgAgent(Agent):
    """Deep policy gradient: MLP with two categorical heads whose
    log-probabilities add; batch-mean baseline and entropy regularization."""

    algo = "dpn"
    kind = "dpg"

    def __init__(
        self,
        config: ScenarioConfig,
        rng: np.random.Generator,
        hidden: tuple[int, int] = (64, 64),
        batch_size: int = 256,
        lr: float = 3e-4,
        entropy_coef: float = 0.01,
    ):
        super().__init__(config, rng)
        self.levels = config.grid_levels
        layout = (self.k, *hidden, self.k * self.levels)
        self.net = mlp_init(layout, rng)
        self.opt = OptimState(lr=lr)
        self.batch_size = batch_size
        self.entropy_coef = entropy_coef
        self._obs: list[np.ndarray] = []
        self._acts: list[np.ndarray] = []
        self._rews: list[float] = []
        self._pending: np.ndarray | None = None
        self.t = 0

    def act(self, obs: np.ndarray, explore: bool = True) -> BidAction:
        out, _ = forward(self.net, np.asarray(obs, dtype=float))
        dist = Categorical(out.reshape(self.k, self.levels))
        levels = dist.sample(self.rng)
        self._pending = np.asarray(levels, dtype=int)
        return BidAction(tuple(int(l) for l in levels))

    def observe(self, transition) -> None:
        if self.frozen:
            return
        self._obs.append(np.array(transition.observation))
        self._acts.append(self._pending)
        self._rews.append(transition.episode_reward)
        self.t += 1
        if len(self._rews) >= self.batch_size:
            dpg_update(
                self.net,
                np.stack(self._obs),
                np.stack(self._acts),
                np.array(self._rews),
                self.opt,
                self.entropy_coef,
                self.levels,
            )
            self._obs, self._acts, self._rews = [], [], []

    def checkpoint_payload(self):
        meta = {
            "layout": list(self.net.layout),
            "activation": self.net.activation,
            "batch_size": self.batch_size,
            "lr": self.opt.lr,
            "entropy_coef": self.entropy_coef,
            "t": self.t,
            "opt_step": self.opt.step,
        }
        arrays = {}
        arrays.update(pack_mlp("net", self.net))
        self.opt._ensure(self.net.weights + self.net.biases)
        arrays.update(pack_opt("opt", self.opt))
        return meta, arrays

    def load_payload(self, meta, arrays) -> None:
        layout = tuple(int(w) for w in meta["layout"])
        if layout != self.net.layout:
            self.net = mlp_init(layout, 0, meta["activation"])
            self.opt = OptimState(lr=float(meta["lr"]))
        unpack_mlp("net", self.net, arrays)
        unpack_opt("opt", self.opt, arrays, self.net.weights + self.net.biases)
        self.opt.step = int(meta["opt_step"])
        self.t = int(meta["t"])
