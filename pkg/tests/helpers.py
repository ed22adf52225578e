"""Shared test utilities: finite differences, tiny configs, stub rngs."""

import numpy as np

from vecfed.scenario import ScenarioConfig, desk_config


def tiny_config(**overrides) -> ScenarioConfig:
    """Desk profile shrunk further for unit tests."""
    cfg = desk_config()
    cfg.actor_hidden = (8, 8)
    cfg.critic_hidden = (8, 8)
    cfg.gnn_hidden = (6, 4)
    cfg.gnn_critic_hidden = (8, 8)
    cfg.batch_size = 8
    cfg.gnn_batch_size = 8
    cfg.sac_warmup = 16
    cfg.gnn_warmup = 8
    cfg.replay_capacity = 64
    cfg.gnn_buffer_capacity = 64
    cfg.local_iteration_choices = (2, 3)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class ZeroRng:
    """Stand-in generator whose normal draws are all zero."""

    def standard_normal(self, size=None):
        return 0.0 if size is None else np.zeros(size)


def central_difference(loss, flat: np.ndarray, index: int, h: float = 1e-5) -> float:
    plus = flat.copy()
    plus[index] += h
    minus = flat.copy()
    minus[index] -= h
    return (loss(plus) - loss(minus)) / (2.0 * h)


def max_rel_error(loss, flat: np.ndarray, analytic: np.ndarray, indices,
                  h: float = 1e-5, floor: float = 1e-6) -> float:
    worst = 0.0
    for i in indices:
        fd = central_difference(loss, flat, i, h)
        an = analytic[i]
        worst = max(worst, abs(an - fd) / max(abs(an), abs(fd), floor))
    return worst
