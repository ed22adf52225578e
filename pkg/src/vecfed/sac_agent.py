"""Per-vehicle soft actor-critic: replay, twin critics, learned temperature.

The actor maps the 6-dim observation to a squashed Gaussian over transmit
power.  Twin critics with Polyak-averaged targets score (state, action)
pairs; the entropy temperature is tuned toward a fixed target entropy.
All updates are plain Adam steps on analytically backpropagated gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn_core import (AdamState, ParamVector, adam_step, adam_step_array, init_mlp,
                      log1m_tanh2, make_adam, mlp_backward, mlp_forward, soft_update,
                      squash_to_power, LOG_2PI)

STATE_DIM = 6
CRITIC_INPUT_DIM = STATE_DIM + 1


@dataclass
class Transition:
    state: np.ndarray
    action: float
    reward: float
    next_state: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions, uniform sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, STATE_DIM))
        self.actions = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, STATE_DIM))
        self.idx = 0
        self.size = 0

    def add(self, tr: Transition) -> None:
        i = self.idx
        self.states[i] = tr.state
        self.actions[i] = tr.action
        self.rewards[i] = tr.reward
        self.next_states[i] = tr.next_state
        self.idx = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx])


@dataclass
class SacModel:
    actor: ParamVector
    critic1: ParamVector
    critic2: ParamVector
    target1: ParamVector
    target2: ParamVector
    log_beta: np.ndarray          # 1-element array so Adam can update it
    adam_actor: AdamState
    adam_critic1: AdamState
    adam_critic2: AdamState
    adam_beta: AdamState
    update_count: int = 0

    @property
    def beta(self) -> float:
        return float(np.exp(self.log_beta[0]))


def actor_dims(config):
    return (STATE_DIM, *config.actor_hidden, 2)


def critic_dims(config):
    return (CRITIC_INPUT_DIM, *config.critic_hidden, 1)


def new_sac_model(config, rng: np.random.Generator) -> SacModel:
    """Fresh model; the actor's final layer starts near zero so the initial
    policy mean sits at the configured pre-squash bias (0 -> p_max / 2)."""
    actor = init_mlp(actor_dims(config), rng, final_scale=0.01)
    actor.layers[-1][1][0] = config.init_action_bias
    actor.layers[-1][1][1] = config.init_log_std_bias
    critic1 = init_mlp(critic_dims(config), rng)
    critic2 = init_mlp(critic_dims(config), rng)
    return SacModel(
        actor=actor,
        critic1=critic1,
        critic2=critic2,
        target1=critic1.copy(),
        target2=critic2.copy(),
        log_beta=np.array([config.init_log_beta]),
        adam_actor=make_adam(actor.n_params, config.actor_lr),
        adam_critic1=make_adam(critic1.n_params, config.critic_lr),
        adam_critic2=make_adam(critic2.n_params, config.critic_lr),
        adam_beta=make_adam(1, config.temperature_lr),
    )


def build_state(vehicle, system_aoi: float, n_vehicles: int, config) -> np.ndarray:
    """Normalized 6-vector: gain, head age, system age, RSU distance, head size, count."""
    head = vehicle.queue.head
    gain_db = 10.0 * math.log10(max(vehicle.channel.gain, 1e-30))
    dist = math.hypot(vehicle.x - config.rsu_x, vehicle.y - config.rsu_y)
    return np.array([
        gain_db / config.gain_db_norm,
        (head.aoi if head else 0.0) / config.aoi_norm,
        system_aoi / config.aoi_norm,
        dist / config.rsu_radius,
        (head.size if head else 0.0) / config.task_size_max,
        n_vehicles / config.nveh_norm,
    ])


def _critic_input(states: np.ndarray, actions: np.ndarray, config) -> np.ndarray:
    x = np.empty((states.shape[0], CRITIC_INPUT_DIM))
    x[:, :STATE_DIM] = states
    x[:, STATE_DIM] = actions / config.p_max
    return x


def _policy_forward(model: SacModel, states: np.ndarray, eps: np.ndarray, config):
    """Shared actor pass: sample, squash, and log density with frozen noise."""
    out, cache = mlp_forward(model.actor, states, "relu")
    mean = out[:, 0]
    raw_log_std = out[:, 1]
    log_std = np.clip(raw_log_std, config.log_std_min, config.log_std_max)
    std = np.exp(log_std)
    u = mean + std * eps
    tanh_u = np.tanh(u)
    action = (tanh_u + 1.0) * (0.5 * config.p_max)
    log_prob = (-log_std - 0.5 * eps * eps - 0.5 * LOG_2PI
                - log1m_tanh2(u) - math.log(0.5 * config.p_max))
    return {
        "cache": cache, "mean": mean, "raw_log_std": raw_log_std,
        "log_std": log_std, "std": std, "eps": eps, "tanh_u": tanh_u,
        "action": action, "log_prob": log_prob,
    }


def select_action(model: SacModel, state: np.ndarray, rng: np.random.Generator,
                  explore: bool, config) -> float:
    out, _ = mlp_forward(model.actor, state, "relu")
    if not explore:
        return float(squash_to_power(out[0], config.p_max))
    log_std = float(np.clip(out[1], config.log_std_min, config.log_std_max))
    u = out[0] + math.exp(log_std) * rng.standard_normal()
    return float(squash_to_power(u, config.p_max))


def compute_target(model: SacModel, next_states: np.ndarray, rewards: np.ndarray,
                   gamma: float, rng: np.random.Generator, config) -> np.ndarray:
    """Soft Bellman target: r + gamma * (min twin target Q - beta * log pi)."""
    eps = rng.standard_normal(len(next_states))
    pol = _policy_forward(model, next_states, eps, config)
    x = _critic_input(next_states, pol["action"], config)
    q1, _ = mlp_forward(model.target1, x, "relu")
    q2, _ = mlp_forward(model.target2, x, "relu")
    q_min = np.minimum(q1[:, 0], q2[:, 0])
    return rewards + gamma * (q_min - model.beta * pol["log_prob"])


def update_critics(model: SacModel, states: np.ndarray, actions: np.ndarray,
                   targets: np.ndarray, config):
    """One Adam step per critic on the mean squared Bellman residual."""
    x = _critic_input(states, actions, config)
    n = len(targets)
    losses = []
    for critic, adam in ((model.critic1, model.adam_critic1),
                         (model.critic2, model.adam_critic2)):
        q, cache = mlp_forward(critic, x, "relu")
        residual = q[:, 0] - targets
        losses.append(float(np.mean(residual * residual)))
        grads, _ = mlp_backward(critic, cache, (2.0 / n) * residual[:, None])
        adam_step(critic, grads, adam)
    return losses[0], losses[1]


def update_actor(model: SacModel, states: np.ndarray, pol: dict, config) -> float:
    """One Adam step on mean(beta * log pi - min twin Q) with reparameterized actions."""
    beta = model.beta
    n = len(states)
    x = _critic_input(states, pol["action"], config)
    q1, cache1 = mlp_forward(model.critic1, x, "relu")
    q2, cache2 = mlp_forward(model.critic2, x, "relu")
    q1 = q1[:, 0]
    q2 = q2[:, 0]
    q_min = np.minimum(q1, q2)
    loss = float(np.mean(beta * pol["log_prob"] - q_min))

    # dL/d(critic input) through whichever critic realizes the min
    pick1 = (q1 <= q2).astype(np.float64)
    _, gin1 = mlp_backward(model.critic1, cache1, (-pick1 / n)[:, None],
                           with_param_grads=False)
    _, gin2 = mlp_backward(model.critic2, cache2, (-(1.0 - pick1) / n)[:, None],
                           with_param_grads=False)
    d_action = (gin1[:, STATE_DIM] + gin2[:, STATE_DIM]) / config.p_max

    tanh_u = pol["tanh_u"]
    d_action_du = 0.5 * config.p_max * (1.0 - tanh_u * tanh_u)
    # total derivatives of log pi with frozen noise: d/dmean = 2 tanh(u),
    # d/dlog_std = -1 + 2 tanh(u) * std * eps
    std_eps = pol["std"] * pol["eps"]
    d_mean = (beta / n) * (2.0 * tanh_u) + d_action * d_action_du
    d_log_std = ((beta / n) * (-1.0 + 2.0 * tanh_u * std_eps)
                 + d_action * d_action_du * std_eps)
    in_clamp = ((pol["raw_log_std"] > config.log_std_min)
                & (pol["raw_log_std"] < config.log_std_max)).astype(np.float64)
    gout = np.stack([d_mean, d_log_std * in_clamp], axis=1)
    grads, _ = mlp_backward(model.actor, pol["cache"], gout)
    adam_step(model.actor, grads, model.adam_actor)
    return loss


def update_temperature(model: SacModel, log_probs: np.ndarray, config) -> float:
    """Adam step on log beta; the gradient drives mean log pi toward -H_target."""
    grad = float(np.mean(-log_probs - config.entropy_target))
    adam_step_array(model.log_beta, np.array([grad]), model.adam_beta)
    return model.beta


def local_train(vehicle, rng: np.random.Generator, config) -> bool:
    """Run the vehicle's local training round; no-op below the warmup fill.

    Each of the vehicle's ``iterations`` draws one uniform batch and updates
    temperature, actor, and both critics, soft-updating the targets every
    target_update_period iterations.  The last iteration's losses are kept
    for the road-graph node features.
    """
    model, replay = vehicle.sac, vehicle.replay
    if replay.size < config.sac_warmup:
        return False
    actor_loss = critic_loss = 0.0
    states = actions = targets = None
    for it in range(1, vehicle.iterations + 1):
        states, actions, rewards, next_states = replay.sample(rng, config.batch_size)
        eps = rng.standard_normal(config.batch_size)
        pol = _policy_forward(model, states, eps, config)
        update_temperature(model, pol["log_prob"], config)
        actor_loss = update_actor(model, states, pol, config)
        targets = compute_target(model, next_states, rewards, config.discount, rng, config)
        l1, l2 = update_critics(model, states, actions, targets, config)
        critic_loss = 0.5 * (l1 + l2)
        model.update_count += 1
        if it % config.target_update_period == 0:
            soft_update(model.target1, model.critic1, config.tau1)
            soft_update(model.target2, model.critic2, config.tau2)
    # target-critic residual against the last targets, reported as a node feature
    x = _critic_input(states, actions, config)
    tq1, _ = mlp_forward(model.target1, x, "relu")
    tq2, _ = mlp_forward(model.target2, x, "relu")
    resid = np.minimum(tq1[:, 0], tq2[:, 0]) - targets
    vehicle.last_losses = (actor_loss, critic_loss, float(np.mean(resid * resid)))
    return True
