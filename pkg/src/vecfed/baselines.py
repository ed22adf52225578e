"""Comparison schemes: continuous global averaging, uniform local averaging,
and a probability-driven best-response power rule.

The best-response scheme is a surrogate: each vehicle trades the staleness
pressure of its head task against the crowd's previous willingness to
transmit, and converts the clipped probability directly into power.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .federated import SAC_NETWORKS


def gfsac_on_train_complete(vehicle, store) -> None:
    """Fold a freshly trained model into the store (equal-weight pairwise
    average) and hand the result straight back to the vehicle."""
    for name in SAC_NETWORKS:
        stored = getattr(store, name)
        local = getattr(vehicle.sac, name)
        stored.flat[:] = 0.5 * (stored.flat + local.flat)
        local.flat[:] = stored.flat
    store.version += 1


def lfsac_local_aggregate(vehicle, in_range_models: dict) -> None:
    """Uniform-weight critic averaging over the vehicle and its in-range peers."""
    if not in_range_models:
        return
    n = len(in_range_models) + 1
    for attr in ("critic1", "critic2"):
        own = getattr(vehicle.sac, attr)
        mixed = own.flat.copy()
        for model in in_range_models.values():
            mixed += getattr(model, attr).flat
        own.flat[:] = mixed / n
    vehicle.local_agg_count += 1


@dataclass
class GdbrState:
    """Previous-slot offloading probabilities, keyed by vehicle id."""
    probabilities: dict = field(default_factory=dict)


def gdbr_step(vehicles, state: GdbrState, system_aoi: float, config) -> dict:
    """Best-response surrogate: benefit is head staleness relative to the
    system average, price is the peers' previous offloading probability.

    Returns {vehicle id -> transmit power}; also rolls the probability state
    forward.  Deterministic given the previous probabilities and ages.
    """
    prev = state.probabilities
    new_probs = {}
    powers = {}
    for v in vehicles:
        head = v.queue.head
        if head is None:
            q = 0.0
        else:
            benefit = head.aoi / max(system_aoi, config.slot)
            others = [p for vid, p in prev.items() if vid != v.id]
            price = sum(others) / len(others) if others else 0.0
            q = min(max(benefit - config.gdbr_kappa * price, 0.0), 1.0)
        new_probs[v.id] = q
        powers[v.id] = q * config.p_max
    state.probabilities = new_probs
    return powers
