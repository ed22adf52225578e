"""Uplink channel: path loss, correlated shadowing, Rayleigh fading, SINR rates.

Large-scale loss is a 28 GHz line-of-sight model, 61.4 + 20*log10(d) dB.
Shadowing follows a spatially-correlated AR(1) process in dB with
correlation exp(-displacement / decorrelation).  Small-scale fading is a
first-order Gauss-Markov Rayleigh process whose slot-to-slot correlation is
J0(2*pi*doppler*slot).  All vehicles share one uplink band, so each
vehicle's rate sees every other transmission (task offloads and model
uploads alike) as interference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

PATH_LOSS_REF_DB = 61.4     # dB at 1 m
PATH_LOSS_EXP_DB = 20.0     # dB per decade
MIN_DISTANCE = 1.0          # m, clamp below this


@dataclass
class ChannelState:
    shadow_db: float              # correlated log-normal shadowing, dB
    h: complex                    # Rayleigh fading coefficient, CN(0,1) at stationarity
    last_position: tuple          # (x, y) of the previous shadowing update
    doppler: float                # Hz, speed * carrier / lightspeed
    gain: float = 0.0             # cached linear power gain for the current slot


def init_channel(position: tuple, speed: float, rng: np.random.Generator, config) -> ChannelState:
    """Fresh channel at spawn: h ~ CN(0,1), shadowing ~ N(0, shadow_sigma^2)."""
    re, im = rng.standard_normal(2)
    return ChannelState(
        shadow_db=config.shadow_sigma * rng.standard_normal(),
        h=complex(re, im) / math.sqrt(2.0),
        last_position=position,
        doppler=speed * config.carrier / config.lightspeed,
    )


def path_loss_db(distance: float) -> float:
    return PATH_LOSS_REF_DB + PATH_LOSS_EXP_DB * math.log10(max(distance, MIN_DISTANCE))


def step_shadowing(state: ChannelState, new_position: tuple, rng: np.random.Generator,
                   config) -> float:
    """AR(1) shadowing update driven by the displacement since last slot."""
    dx = new_position[0] - state.last_position[0]
    dy = new_position[1] - state.last_position[1]
    rho = math.exp(-math.hypot(dx, dy) / config.decorrelation)
    state.shadow_db = rho * state.shadow_db + config.shadow_sigma * rng.standard_normal()
    state.last_position = new_position
    return state.shadow_db


def jakes_correlation(speed: float, config) -> float:
    """Slot-lag fading correlation J0(2*pi*f_d*slot) at the given speed."""
    doppler = speed * config.carrier / config.lightspeed
    return float(j0(2.0 * math.pi * doppler * config.slot))


def step_rayleigh(state: ChannelState, speed: float, rng: np.random.Generator, config) -> complex:
    """Gauss-Markov fading update; the innovation keeps |h|^2 at unit mean."""
    rho = jakes_correlation(speed, config)
    scale = math.sqrt(max(1.0 - rho * rho, 0.0) / 2.0)
    re, im = rng.standard_normal(2)
    state.h = rho * state.h + complex(re * scale, im * scale)
    return state.h


def channel_power_gain(shadow_db: float, pl_db: float, h: complex) -> float:
    """Linear power gain combining large-scale dB losses with |h|^2."""
    return 10.0 ** (-(pl_db + shadow_db) / 10.0) * (h.real * h.real + h.imag * h.imag)


def refresh_gain(state: ChannelState, position: tuple, config) -> float:
    """Recompute the cached linear gain at ``position`` from the current state."""
    dist = math.hypot(position[0] - config.rsu_x, position[1] - config.rsu_y)
    state.gain = channel_power_gain(state.shadow_db, path_loss_db(dist), state.h)
    return state.gain


def step_channel(state: ChannelState, position: tuple, speed: float,
                 rng: np.random.Generator, config) -> float:
    """One-slot update of shadowing and fading; caches and returns the gain."""
    step_shadowing(state, position, rng, config)
    step_rayleigh(state, speed, rng, config)
    return refresh_gain(state, position, config)


def compute_rates(task_powers, gains, upload_powers, upload_gains, config) -> np.ndarray:
    """Shannon uplink rates (bit/s) under mutual and model-upload interference."""
    p = np.asarray(task_powers, dtype=float)
    g = np.asarray(gains, dtype=float)
    signal = g * p
    upload_sum = float(np.sum(np.asarray(upload_powers, dtype=float)
                              * np.asarray(upload_gains, dtype=float))) if len(upload_powers) else 0.0
    interference = signal.sum() - signal + upload_sum
    return config.bandwidth * np.log2(1.0 + signal / (interference + config.noise))
