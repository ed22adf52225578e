"""Two-tier federated protocol: entry download, in-range critic mixing,
departure-triggered upload, and cohort averaging at the road-side unit.

Every parameter transfer is a deep copy of flat vectors, so vehicles never
share mutable parameters with each other or with the global store.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn_core import ParamVector, make_adam
from .sac_agent import ReplayBuffer, SacModel, new_sac_model

SAC_NETWORKS = ("actor", "critic1", "critic2", "target1", "target2")


@dataclass
class GlobalModelStore:
    actor: ParamVector
    critic1: ParamVector
    critic2: ParamVector
    target1: ParamVector
    target2: ParamVector
    init_log_beta: float
    version: int = 0

    def networks(self):
        return {name: getattr(self, name) for name in SAC_NETWORKS}

    def param_count(self) -> int:
        return sum(getattr(self, name).n_params for name in SAC_NETWORKS)


def new_global_store(config, rng: np.random.Generator) -> GlobalModelStore:
    model = new_sac_model(config, rng)
    return GlobalModelStore(
        actor=model.actor, critic1=model.critic1, critic2=model.critic2,
        target1=model.target1, target2=model.target2,
        init_log_beta=config.init_log_beta,
    )


def on_enter(vehicle, store: GlobalModelStore, config) -> None:
    """Equip a newly entered vehicle with a snapshot of the global model."""
    model = SacModel(
        actor=store.actor.copy(),
        critic1=store.critic1.copy(),
        critic2=store.critic2.copy(),
        target1=store.target1.copy(),
        target2=store.target2.copy(),
        log_beta=np.array([store.init_log_beta]),
        adam_actor=make_adam(store.actor.n_params, config.actor_lr),
        adam_critic1=make_adam(store.critic1.n_params, config.critic_lr),
        adam_critic2=make_adam(store.critic2.n_params, config.critic_lr),
        adam_beta=make_adam(1, config.temperature_lr),
    )
    vehicle.sac = model
    vehicle.replay = ReplayBuffer(config.replay_capacity)


def local_aggregate(vehicle, models_by_id: dict, weights: dict) -> None:
    """Blend the vehicle's critics with its in-range peers' critics.

    ``weights`` must cover the vehicle itself plus exactly the ids in
    ``models_by_id``; both critics get the same convex combination while the
    actor and targets stay untouched.
    """
    expected = set(models_by_id) | {vehicle.id}
    if set(weights) != expected:
        raise ValueError(f"weight ids {sorted(weights)} != participants {sorted(expected)}")
    for attr in ("critic1", "critic2"):
        own = getattr(vehicle.sac, attr)
        mixed = weights[vehicle.id] * own.flat
        for vid, model in models_by_id.items():
            mixed = mixed + weights[vid] * getattr(model, attr).flat
        own.flat[:] = mixed
    vehicle.local_agg_count += 1


@dataclass
class UploadEvent:
    vehicle_id: int
    payload_bits: float
    power: float       # W
    gain: float        # linear power gain at upload time
    slot: int


def model_upload_power(gain: float, payload_bits: float, config) -> float:
    """Lowest power that pushes the payload through one interference-free slot.

    Inverts the Shannon budget payload <= bandwidth * slot * log2(1 + g*p/noise),
    capped at p_max; a vanished channel gets best-effort p_max.
    """
    if payload_bits <= 0:
        return 0.0
    if gain <= 0:
        return config.p_max
    exponent = payload_bits / (config.bandwidth * config.slot)
    if exponent >= 1000.0:
        return config.p_max
    required = config.noise * (2.0 ** exponent - 1.0) / gain
    return min(config.p_max, required)


def global_aggregate(store: GlobalModelStore, departing_models) -> GlobalModelStore:
    """Replace the store with the unweighted mean over the departing cohort."""
    models = list(departing_models)
    if not models:
        return store
    for name in SAC_NETWORKS:
        stacked = np.stack([getattr(m, name).flat for m in models])
        getattr(store, name).flat[:] = stacked.mean(axis=0)
    store.version += 1
    return store
