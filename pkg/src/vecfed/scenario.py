"""Scenario ownership: configuration, random stream, vehicle lifecycle, task generation.

The road spans [-rsu_radius, +rsu_radius] along x.  Lanes are parallel,
lane i sits at y = lane_spacing * i, and the road-side unit is a point at
(rsu_x, rsu_y).  Vehicles enter at the left edge, drive at their lane's
constant speed, and leave once x exceeds rsu_radius.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .aoi_reward import TaskQueue, Task


class ConfigError(ValueError):
    """Raised for invalid configuration values or malformed config files."""


@dataclass
class ScenarioConfig:
    """Single source of truth for every environment and training constant.

    Defaults reproduce the full-scale simulation setting; ``desk_config``
    returns a scaled-down profile suitable for laptop-length experiments.
    """

    # --- road / traffic ---
    lanes: int = 4
    lane_speeds: tuple = (8.3333, 8.3333, 8.3333, 8.3333)        # m/s per lane
    lane_arrival_rates: tuple = (1 / 32, 1 / 32, 1 / 32, 1 / 32)  # vehicles/s per lane
    rsu_radius: float = 250.0          # m, coverage half-length
    v2v_range: float = 100.0           # m
    lane_spacing: float = 3.5          # m between lane centers
    rsu_x: float = 0.0
    rsu_y: float = 10.0

    # --- time / tasks ---
    slot: float = 0.02                 # s per decision slot
    task_mean_interval: float = 0.2    # s, mean inter-generation time
    task_size_min: float = 8e5         # bits (0.1 MB)
    task_size_max: float = 8e7         # bits (10 MB)

    # --- radio ---
    p_max: float = 20.0                # W
    bandwidth: float = 2e8             # Hz shared uplink
    noise: float = 3.98e-14            # W
    shadow_sigma: float = 2.2          # dB
    decorrelation: float = 10.0        # m
    carrier: float = 28e9              # Hz
    lightspeed: float = 3e8            # m/s

    # --- graph / reward ---
    segment_len: float = 50.0          # m per road-graph segment
    penalty_decay: float = 0.9999      # decay of the departure penalty
    penalty_weight: float = 0.9999     # weight of the penalty in the reward
    reward_scale: float = 0.1
    discount: float = 0.95

    # --- run lengths (slots) ---
    train_slots: int = 1_000_000
    test_slots: int = 100_000

    # --- per-vehicle SAC hyperparameters ---
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    replay_capacity: int = 500
    sac_warmup: int = 256
    batch_size: int = 128
    target_update_period: int = 1
    tau1: float = 0.005
    tau2: float = 0.005
    local_iteration_choices: tuple = (5, 10, 20, 40, 50)
    train_period: int = 1              # slots between local-training rounds
    actor_hidden: tuple = (256, 256)
    critic_hidden: tuple = (256, 256)
    entropy_target: float = 1.0
    init_log_beta: float = 0.0
    temperature_lr: float = 1e-3
    init_action_bias: float = 0.0      # initial pre-squash mean; negative starts quiet
    init_log_std_bias: float = 0.0     # initial log-std head offset; sets exploration width
    log_std_min: float = -20.0
    log_std_max: float = 2.0

    # --- GNN / GNN-critic hyperparameters ---
    gnn_lr: float = 1e-3
    gnn_critic_lr: float = 1e-3
    gnn_buffer_capacity: int = 5000
    gnn_warmup: int = 256
    gnn_batch_size: int = 128
    gnn_train_period: int = 10         # slots between GNN training rounds
    gnn_train_iters: int = 5
    gnn_target_update_period: int = 1
    gnn_tau: float = 0.005
    gnn_hidden: tuple = (128, 64)
    gnn_critic_hidden: tuple = (256, 256)
    gnn_feature_scale: tuple = (1.0, 0.01, 1.0, 1.0, 1.0)

    # --- state normalization / misc decisions ---
    gain_db_norm: float = 100.0
    aoi_norm: float = 10.0
    nveh_norm: float = 50.0
    gdbr_kappa: float = 0.5
    param_bits: int = 32               # bits per parameter for upload accounting

    def validate(self) -> None:
        if self.lanes < 1:
            raise ConfigError("lanes must be >= 1")
        if len(self.lane_speeds) != self.lanes or len(self.lane_arrival_rates) != self.lanes:
            raise ConfigError("lane_speeds and lane_arrival_rates must have one entry per lane")
        if self.slot <= 0:
            raise ConfigError("slot must be > 0")
        if self.segment_len <= 0:
            raise ConfigError("segment_len must be > 0")
        n_seg = 2 * self.rsu_radius / self.segment_len
        if abs(n_seg - round(n_seg)) > 1e-9:
            raise ConfigError("2 * rsu_radius must be divisible by segment_len")
        if self.task_size_min > self.task_size_max:
            raise ConfigError("task_size_min must be <= task_size_max")
        if not 0 < self.penalty_decay <= 1:
            raise ConfigError("penalty_decay must lie in (0, 1]")
        if not 0 <= self.discount <= 1:
            raise ConfigError("discount must lie in [0, 1]")
        for name in ("task_size_min", "task_size_max", "p_max", "bandwidth", "noise",
                     "task_mean_interval", "carrier", "lightspeed"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if any(v < 0 for v in self.lane_arrival_rates):
            raise ConfigError("lane arrival rates must be >= 0")
        if any(v < 0 for v in self.lane_speeds):
            raise ConfigError("lane speeds must be >= 0")

    @property
    def segments_per_lane(self) -> int:
        return round(2 * self.rsu_radius / self.segment_len)

    @property
    def n_graph_nodes(self) -> int:
        return self.segments_per_lane * self.lanes

    def canonical_text(self) -> str:
        """Flat key = value dump, one line per field, in declaration order."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]


def with_total_arrival_rate(config: ScenarioConfig, rate: float) -> ScenarioConfig:
    """Split a single total arrival rate evenly over the configured lanes."""
    per_lane = rate / config.lanes
    return dataclasses.replace(config, lane_arrival_rates=(per_lane,) * config.lanes)


def with_uniform_speed(config: ScenarioConfig, speed: float) -> ScenarioConfig:
    return dataclasses.replace(config, lane_speeds=(speed,) * config.lanes)


def desk_config() -> ScenarioConfig:
    """Scaled-down profile: 2 lanes, 50k training slots, small networks.

    Keeps every environment constant at its full-scale value; shrinks run
    length, network widths, batch size, and the per-vehicle training volume
    so that a full training run fits in a few minutes.  The learning knobs
    the tables leave open (discount, temperature schedule, initial policy)
    carry calibrated values: a quiet initial policy with a wide exploration
    spread, a small slowly-adapting temperature, and a scalar-action entropy
    target of -1.
    """
    return ScenarioConfig(
        lanes=2,
        lane_speeds=(8.3333, 8.3333),
        lane_arrival_rates=(1 / 16, 1 / 16),
        train_slots=50_000,
        test_slots=10_000,
        batch_size=64,
        gnn_batch_size=64,
        train_period=10,
        local_iteration_choices=(3, 5, 10, 15, 20),
        actor_hidden=(64, 64),
        critic_hidden=(64, 64),
        gnn_hidden=(32, 16),
        gnn_critic_hidden=(64, 64),
        discount=0.99,
        entropy_target=-1.0,
        init_log_beta=math.log(0.05),
        temperature_lr=1e-4,
        init_action_bias=-2.0,
        init_log_std_bias=0.7,
    )


_TUPLE_FLOAT_FIELDS = {"lane_speeds", "lane_arrival_rates", "gnn_feature_scale"}
_TUPLE_INT_FIELDS = {"local_iteration_choices", "actor_hidden", "critic_hidden",
                     "gnn_hidden", "gnn_critic_hidden"}


def _parse_value(name: str, text: str):
    text = text.strip()
    if name in _TUPLE_FLOAT_FIELDS:
        return tuple(float(x) for x in text.split(",") if x.strip() != "")
    if name in _TUPLE_INT_FIELDS:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    default = ScenarioConfig.__dataclass_fields__[name].default
    if isinstance(default, int):
        return int(float(text)) if "." in text or "e" in text.lower() else int(text)
    return float(text)


def load_config(path: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Read a flat ``key = value`` UTF-8 config file.

    Keys are the ScenarioConfig field names; tuple fields take
    comma-separated values.  Unknown keys raise ConfigError.
    """
    cfg = dataclasses.replace(base) if base is not None else ScenarioConfig()
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                setattr(cfg, key, _parse_value(key, value))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    cfg.validate()
    return cfg


class RngStream:
    """Seeded random stream; identical seeds give identical draw sequences."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.generator = np.random.default_rng(self.seed)


@dataclass
class VehicleState:
    id: int
    lane: int
    x: float                            # m, in [-rsu_radius, rsu_radius] while present
    y: float                            # m, fixed lane offset
    speed: float                        # m/s, constant after spawn
    next_task_time: float               # s, absolute time of the next task clock fire
    channel: object = None              # channel.ChannelState
    queue: TaskQueue = field(default_factory=TaskQueue)
    sac: object = None                  # sac_agent.SacModel (None for model-free schemes)
    replay: object = None               # sac_agent.ReplayBuffer
    iterations: int = 1                 # local training iterations per round
    local_agg_count: int = 0            # times this vehicle joined local aggregation
    last_losses: tuple = (0.0, 0.0, 0.0)  # (actor, critic, target critic)
    # bookkeeping for the one-slot-delayed transition (s, a, r, s')
    pending_state: object = None
    pending_action: float = 0.0
    pending_reward: float = 0.0

    def position(self) -> tuple:
        return (self.x, self.y)


class ArrivalProcess:
    """Per-lane exponential inter-arrival clocks plus the vehicle id counter."""

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator, start: float = 0.0):
        self.next_fire = []
        for rate in config.lane_arrival_rates:
            if rate > 0:
                self.next_fire.append(start + rng.exponential(1.0 / rate))
            else:
                self.next_fire.append(math.inf)
        self.next_id = 0


def advance_arrivals(config: ScenarioConfig, rng: np.random.Generator, now: float,
                     arrivals: ArrivalProcess) -> list:
    """Spawn every vehicle whose lane clock fires within [now, now + slot)."""
    spawned = []
    horizon = now + config.slot
    for lane, rate in enumerate(config.lane_arrival_rates):
        if rate <= 0:
            continue
        while arrivals.next_fire[lane] < horizon:
            arrivals.next_fire[lane] += rng.exponential(1.0 / rate)
            v = VehicleState(
                id=arrivals.next_id,
                lane=lane,
                x=-config.rsu_radius,
                y=config.lane_spacing * lane,
                speed=config.lane_speeds[lane],
                next_task_time=now + rng.exponential(config.task_mean_interval),
                iterations=int(rng.choice(config.local_iteration_choices)),
            )
            arrivals.next_id += 1
            spawned.append(v)
    return spawned


def advance_positions(vehicles: list, config: ScenarioConfig) -> tuple:
    """Move every vehicle by speed * slot; split off those past the right edge."""
    kept, departed = [], []
    for v in vehicles:
        v.x += v.speed * config.slot
        if v.x > config.rsu_radius:
            departed.append(v)
        else:
            kept.append(v)
    return kept, departed


def generate_task(vehicle: VehicleState, rng: np.random.Generator, now: float,
                  config: ScenarioConfig) -> int:
    """Append every task whose clock has fired by ``now``; returns the count.

    The clock is a renewal process: each fire advances it by an exponential
    interval with mean task_mean_interval, anchored at the previous fire so
    slot quantization does not bias the long-run generation rate.
    """
    n = 0
    while vehicle.next_task_time <= now:
        size = rng.uniform(config.task_size_min, config.task_size_max)
        vehicle.queue.tasks.append(Task(size=size, remaining=size, aoi=0.0))
        vehicle.next_task_time += rng.exponential(config.task_mean_interval)
        n += 1
    return n
