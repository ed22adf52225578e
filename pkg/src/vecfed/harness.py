"""End-to-end slot loop: training and testing stages, metrics, sweeps.

Within a slot the order is fixed: move and retire vehicles (departures
upload), admit arrivals (downloads), generate tasks, update channels, build
the road graph, observe states and pick actions, compute rates with every
upload of the slot counted as interference, age the queues, update the
departure penalty and rewards, then train, aggregate locally, train the
GNN, and finally fold departing models into the global store.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import aoi_reward, baselines, channel, federated, road_graph, sac_agent, scenario
from .nn_core import load_params, save_params
from .scenario import RngStream, ScenarioConfig

SCHEMES = ("fgnn", "gfsac", "lfsac", "gdbr")
SAC_SCHEMES = ("fgnn", "gfsac", "lfsac")
RECORD_HEADER = "slot,avg_aoi,avg_power,delivered_bits,n_vehicles,mean_reward"


@dataclass
class MetricsRecord:
    slot: int
    avg_aoi: float
    avg_power: float
    delivered_bits: float
    n_vehicles: int
    mean_reward: float


@dataclass
class RunSummary:
    config_hash: str
    seed: int
    scheme: str
    slots: int
    avg_aoi: float
    avg_power: float
    throughput: float          # delivered bits per second
    mean_reward: float
    mean_vehicles: float
    wall_clock_seconds: float


class Simulation:
    """Mutable state of one replication; single-threaded by construction."""

    def __init__(self, config: ScenarioConfig, seed: int, scheme: str,
                 store=None, training: bool = True):
        if scheme not in SCHEMES:
            raise scenario.ConfigError(f"unknown scheme {scheme!r}")
        config.validate()
        self.config = config
        self.scheme = scheme
        self.training = training
        self.stream = RngStream(seed)
        self.rng = self.stream.generator
        self.vehicles = []
        self.arrivals = scenario.ArrivalProcess(config, self.rng)
        self.penalty = aoi_reward.PenaltyState()
        self.last_system_aoi = 0.0
        self.store = store
        self.gnn = None
        self.gnn_buffer = None
        self.pending_graph = None       # (graph, embeddings, system_aoi)
        self.gdbr = baselines.GdbrState() if scheme == "gdbr" else None
        self.pending_upload_ids = []    # gfsac: vehicles whose upload airs next slot
        if scheme in SAC_SCHEMES and store is None:
            self.store = federated.new_global_store(config, self.rng)
        if scheme == "fgnn" and training:
            self.gnn = road_graph.new_gnn_model(config, self.rng)
            self.gnn_buffer = road_graph.GnnBuffer(config.gnn_buffer_capacity,
                                                   config.n_graph_nodes)
        self.upload_payload_bits = (self.store.param_count() * config.param_bits
                                    if self.store is not None else 0.0)

    # -- slot phases -------------------------------------------------------

    def _admit_and_retire(self, slot: int):
        cfg = self.config
        now = slot * cfg.slot
        self.vehicles, departed = scenario.advance_positions(self.vehicles, cfg)
        upload_events = []
        if self.training and self.scheme in ("fgnn", "lfsac"):
            for v in departed:
                channel.step_channel(v.channel, v.position(), v.speed, self.rng, cfg)
                power = federated.model_upload_power(v.channel.gain,
                                                     self.upload_payload_bits, cfg)
                upload_events.append(federated.UploadEvent(
                    v.id, self.upload_payload_bits, power, v.channel.gain, slot))
        newcomers = scenario.advance_arrivals(cfg, self.rng, now, self.arrivals)
        for v in newcomers:
            v.channel = channel.init_channel(v.position(), v.speed, self.rng, cfg)
            channel.refresh_gain(v.channel, v.position(), cfg)
            if self.scheme in SAC_SCHEMES:
                federated.on_enter(v, self.store, cfg)
        self.vehicles.extend(newcomers)
        for v in self.vehicles:
            assert -cfg.rsu_radius <= v.x <= cfg.rsu_radius, "vehicle outside coverage"
            scenario.generate_task(v, self.rng, now, cfg)
        return departed, upload_events

    def _observe_and_act(self):
        cfg = self.config
        n_vehicles = len(self.vehicles)
        states, powers = {}, {}
        if self.scheme == "gdbr":
            powers = baselines.gdbr_step(self.vehicles, self.gdbr,
                                         self.last_system_aoi, cfg)
            return states, powers
        for v in self.vehicles:
            s = sac_agent.build_state(v, self.last_system_aoi, n_vehicles, cfg)
            if self.training and v.pending_state is not None:
                v.replay.add(sac_agent.Transition(v.pending_state, v.pending_action,
                                                  v.pending_reward, s))
                v.pending_state = None
            states[v.id] = s
            powers[v.id] = sac_agent.select_action(v.sac, s, self.rng,
                                                   explore=self.training, config=cfg)
        return states, powers

    def _transmit_and_score(self, powers, upload_events):
        cfg = self.config
        power_vec = np.array([powers[v.id] for v in self.vehicles])
        gain_vec = np.array([v.channel.gain for v in self.vehicles])
        rates = channel.compute_rates(power_vec, gain_vec,
                                      [e.power for e in upload_events],
                                      [e.gain for e in upload_events], cfg)
        delivered = 0.0
        for v, rate in zip(self.vehicles, rates):
            delivered += aoi_reward.step_queue_aoi(v.queue, float(rate), cfg)
        averages = [aoi_reward.vehicle_avg_aoi(v.queue) for v in self.vehicles]
        system_aoi = aoi_reward.system_avg_aoi(averages)
        return delivered, system_aoi

    def _reward_phase(self, powers, system_aoi, departed, states):
        cfg = self.config
        n_for_penalty = len(self.vehicles) + len(departed)
        departed_avgs = [aoi_reward.vehicle_avg_aoi(v.queue) for v in departed]
        xi = aoi_reward.step_xi(self.penalty, departed_avgs,
                                max(n_for_penalty, 1), cfg)
        rewards = []
        for v in self.vehicles:
            head = v.queue.head
            r = aoi_reward.reward(system_aoi, head.aoi if head else 0.0,
                                  powers[v.id], len(v.queue), xi, cfg)
            rewards.append(r)
            if self.training and self.scheme in SAC_SCHEMES:
                v.pending_state = states[v.id]
                v.pending_action = powers[v.id]
                v.pending_reward = r
        return rewards

    def _learn_phase(self, slot, graph, embeddings):
        cfg = self.config
        if self.scheme not in SAC_SCHEMES:
            return
        trained = []
        if slot % cfg.train_period == 0:
            for v in self.vehicles:
                if sac_agent.local_train(v, self.rng, cfg):
                    trained.append(v)
        if self.scheme == "gfsac":
            for v in trained:
                baselines.gfsac_on_train_complete(v, self.store)
                self.pending_upload_ids.append(v.id)
            return
        models_by_id = {v.id: v.sac for v in self.vehicles}
        for v in trained:
            if self.scheme == "fgnn":
                weights = road_graph.aggregation_weights(embeddings, v, self.vehicles,
                                                         graph, cfg)
                federated.local_aggregate(v, {vid: models_by_id[vid]
                                              for vid in weights if vid != v.id}, weights)
            else:  # lfsac
                peers = {w.id: w.sac for w in self.vehicles
                         if w.id != v.id
                         and math.hypot(v.x - w.x, v.y - w.y) <= cfg.v2v_range}
                baselines.lfsac_local_aggregate(v, peers)

    def _graph_phase(self, slot, graph, embeddings, system_aoi):
        cfg = self.config
        if self.pending_graph is not None:
            prev_graph, prev_emb, prev_aoi = self.pending_graph
            self.gnn_buffer.add(road_graph.GnnTransition(prev_graph, prev_emb,
                                                         prev_aoi, graph))
        self.pending_graph = (graph, embeddings, system_aoi)
        if slot > 0 and slot % cfg.gnn_train_period == 0:
            road_graph.train_gnn(self.gnn, self.gnn_buffer, self.rng, cfg)

    def step(self, slot: int) -> MetricsRecord:
        departed, upload_events = self._admit_and_retire(slot)
        for v in self.vehicles:
            channel.step_channel(v.channel, v.position(), v.speed, self.rng, self.config)
        if self.training and self.scheme == "gfsac" and self.pending_upload_ids:
            pending = set(self.pending_upload_ids)
            self.pending_upload_ids = []
            for v in self.vehicles:
                if v.id in pending:
                    power = federated.model_upload_power(v.channel.gain,
                                                         self.upload_payload_bits,
                                                         self.config)
                    upload_events.append(federated.UploadEvent(
                        v.id, self.upload_payload_bits, power, v.channel.gain, slot))
        graph = embeddings = None
        if self.scheme == "fgnn" and self.training:
            graph = road_graph.build_graph(self.vehicles, self.config)
            embeddings = road_graph.gnn_forward(self.gnn, graph)
        states, powers = self._observe_and_act()
        delivered, system_aoi = self._transmit_and_score(powers, upload_events)
        rewards = self._reward_phase(powers, system_aoi, departed, states)
        if self.training:
            self._learn_phase(slot, graph, embeddings)
            if self.scheme == "fgnn":
                self._graph_phase(slot, graph, embeddings, system_aoi)
            if self.scheme in ("fgnn", "lfsac") and departed:
                federated.global_aggregate(self.store, [v.sac for v in departed])
        self.last_system_aoi = system_aoi
        n = len(self.vehicles)
        return MetricsRecord(
            slot=slot,
            avg_aoi=float(system_aoi),
            avg_power=float(np.mean([powers[v.id] for v in self.vehicles])) if n else 0.0,
            delivered_bits=float(delivered),
            n_vehicles=n,
            mean_reward=float(np.mean(rewards)) if rewards else 0.0,
        )


def _summarize(config, seed, scheme, records, wall_clock) -> RunSummary:
    n = len(records)
    total_bits = sum(r.delivered_bits for r in records)
    return RunSummary(
        config_hash=config.digest(),
        seed=seed,
        scheme=scheme,
        slots=n,
        avg_aoi=sum(r.avg_aoi for r in records) / n if n else 0.0,
        avg_power=sum(r.avg_power for r in records) / n if n else 0.0,
        throughput=total_bits / (n * config.slot) if n else 0.0,
        mean_reward=sum(r.mean_reward for r in records) / n if n else 0.0,
        mean_vehicles=sum(r.n_vehicles for r in records) / n if n else 0.0,
        wall_clock_seconds=wall_clock,
    )


def run_training(config: ScenarioConfig, seed: int, scheme: str = "fgnn",
                 progress_every: int = 0):
    """Train for config.train_slots slots; returns (store, summary, records)."""
    started = time.perf_counter()
    sim = Simulation(config, seed, scheme, training=True)
    records = []
    for slot in range(config.train_slots):
        records.append(sim.step(slot))
        if progress_every and (slot + 1) % progress_every == 0:
            tail = records[-progress_every:]
            print(f"[{scheme} seed={seed}] slot {slot + 1}/{config.train_slots} "
                  f"aoi={sum(r.avg_aoi for r in tail) / len(tail):.3f} "
                  f"power={sum(r.avg_power for r in tail) / len(tail):.2f}",
                  flush=True)
    summary = _summarize(config, seed, scheme, records,
                         time.perf_counter() - started)
    return sim.store, summary, records


def run_test(config: ScenarioConfig, seed: int, store, scheme: str = "fgnn",
             slots: int = None):
    """Deterministic-policy evaluation; no training, aggregation, or uploads."""
    started = time.perf_counter()
    sim = Simulation(config, seed, scheme, store=store, training=False)
    n_slots = config.test_slots if slots is None else slots
    records = [sim.step(slot) for slot in range(n_slots)]
    summary = _summarize(config, seed, scheme, records,
                         time.perf_counter() - started)
    return summary, records


def quarter_means(records) -> tuple:
    """Mean system age over the first and last quarter of a record stream."""
    n = len(records)
    q = max(n // 4, 1)
    first = sum(r.avg_aoi for r in records[:q]) / q
    last_records = records[n - q:]
    last = sum(r.avg_aoi for r in last_records) / len(last_records)
    return first, last


# -- result emission ---------------------------------------------------------

def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records) -> str:
    lines = [RECORD_HEADER]
    for r in records:
        lines.append(",".join(_format(v) for v in
                              (r.slot, r.avg_aoi, r.avg_power, r.delivered_bits,
                               r.n_vehicles, r.mean_reward)))
    return "\n".join(lines) + "\n"


def emit_results(records, summary: RunSummary, out_dir: str, prefix: str = "run",
                 slot_seconds: float = None) -> list:
    """Write records CSV and a JSON summary; optionally a smoothed AoI curve.

    When slot_seconds is given, also writes a downsampled learning curve
    indexed both by slot and by simulated seconds.  Returns the written
    paths; raises OSError with the offending path on failure.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    csv_path = os.path.join(out_dir, f"{prefix}_records.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(records_to_csv(records))
    paths.append(csv_path)
    summary_path = os.path.join(out_dir, f"{prefix}_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(summary_path)
    if slot_seconds is not None and records:
        window = max(len(records) // 200, 1)
        curve_path = os.path.join(out_dir, f"{prefix}_learning_curve.csv")
        with open(curve_path, "w", encoding="utf-8") as fh:
            fh.write("slot,seconds,avg_aoi_smoothed\n")
            for start in range(0, len(records), window):
                chunk = records[start:start + window]
                last = chunk[-1]
                fh.write(f"{last.slot},{repr(last.slot * slot_seconds)},"
                         f"{repr(sum(r.avg_aoi for r in chunk) / len(chunk))}\n")
        paths.append(curve_path)
    return paths


def sweep(config: ScenarioConfig, axis: str, values, schemes, seeds,
          out_dir: str = None, progress_every: int = 0) -> list:
    """Train + test per (value, scheme, seed); returns long-format rows.

    Rows are dicts with keys axis_value, scheme, seed, avg_aoi, avg_power,
    throughput (test-stage metrics).  When out_dir is given, writes
    ``sweep.csv`` plus one aggregated plot-data file per metric.
    """
    if axis not in ("lambda", "speed"):
        raise scenario.ConfigError(f"unknown sweep axis {axis!r}")
    if not values:
        raise scenario.ConfigError("sweep values must be non-empty")
    rows = []
    for value in values:
        if axis == "lambda":
            cfg = scenario.with_total_arrival_rate(config, value)
        else:
            cfg = scenario.with_uniform_speed(config, value)
        for scheme in schemes:
            for seed in seeds:
                if scheme in SAC_SCHEMES:
                    store, _, _ = run_training(cfg, seed, scheme,
                                               progress_every=progress_every)
                else:
                    store = None
                summary, _ = run_test(cfg, seed, store, scheme)
                rows.append({
                    "axis_value": float(value),
                    "scheme": scheme,
                    "seed": seed,
                    "avg_aoi": summary.avg_aoi,
                    "avg_power": summary.avg_power,
                    "throughput": summary.throughput,
                })
    if out_dir is not None:
        write_sweep_files(rows, out_dir)
    return rows


def write_sweep_files(rows, out_dir: str) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, "sweep.csv")]
    with open(paths[0], "w", encoding="utf-8") as fh:
        fh.write("axis_value,scheme,seed,avg_aoi,avg_power,throughput\n")
        for row in rows:
            fh.write(",".join(_format(row[k]) for k in
                              ("axis_value", "scheme", "seed", "avg_aoi",
                               "avg_power", "throughput")) + "\n")
    for metric in ("avg_aoi", "avg_power", "throughput"):
        path = os.path.join(out_dir, f"plot_{metric}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"axis_value,scheme,mean_{metric}\n")
            seen = []
            for row in rows:
                key = (row["axis_value"], row["scheme"])
                if key in seen:
                    continue
                seen.append(key)
                group = [r[metric] for r in rows
                         if (r["axis_value"], r["scheme"]) == key]
                fh.write(f"{_format(key[0])},{key[1]},"
                         f"{_format(sum(group) / len(group))}\n")
        paths.append(path)
    return paths


# -- checkpoints --------------------------------------------------------------

def save_store(path: str, store) -> None:
    save_params(path, store.networks(),
                scalars={"init_log_beta": store.init_log_beta,
                         "version": store.version})


def load_store(path: str):
    named, scalars = load_params(path)
    return federated.GlobalModelStore(
        actor=named["actor"], critic1=named["critic1"], critic2=named["critic2"],
        target1=named["target1"], target2=named["target2"],
        init_log_beta=float(scalars["init_log_beta"]),
        version=int(scalars["version"]),
    )
