"""Comparison schemes: pairwise global averaging, uniform local averaging,
and the probability best-response power rule."""

from types import SimpleNamespace

import numpy as np
import pytest

import vecfed.baselines as bl
import vecfed.federated as fed
import vecfed.road_graph as rg
from vecfed.aoi_reward import Task
from vecfed.nn_core import ParamVector
from vecfed.scenario import ScenarioConfig, VehicleState

from helpers import tiny_config

CFG = tiny_config()


def _scalar_model(value):
    nets = {}
    for name in fed.SAC_NETWORKS:
        pv = ParamVector([(0, 1)])
        pv.flat[:] = value
        nets[name] = pv
    return SimpleNamespace(**nets)


def _vehicle(vid, x=0.0, head_aoi=None):
    v = VehicleState(id=vid, lane=0, x=x, y=0.0, speed=8.0, next_task_time=1e9)
    if head_aoi is not None:
        v.queue.tasks.append(Task(size=1e6, remaining=1e6, aoi=head_aoi))
    return v


# --- continuous global averaging ------------------------------------------------------

def test_gfsac_upload_of_store_model_is_idempotent():
    store = fed.GlobalModelStore(**{n: _scalar_model(2.0).__dict__[n]
                                    for n in fed.SAC_NETWORKS}, init_log_beta=0.0)
    v = _vehicle(1)
    v.sac = _scalar_model(2.0)
    bl.gfsac_on_train_complete(v, store)
    assert store.actor.flat[0] == pytest.approx(2.0, rel=1e-12)
    assert store.version == 1


def test_gfsac_pairwise_mean_and_redownload():
    store = fed.GlobalModelStore(**{n: _scalar_model(2.0).__dict__[n]
                                    for n in fed.SAC_NETWORKS}, init_log_beta=0.0)
    v = _vehicle(1)
    v.sac = _scalar_model(4.0)
    bl.gfsac_on_train_complete(v, store)
    assert store.actor.flat[0] == pytest.approx(3.0, rel=1e-12)
    assert v.sac.actor.flat[0] == pytest.approx(3.0, rel=1e-12)   # handed back


# --- uniform local averaging -----------------------------------------------------------

def test_lfsac_no_neighbors_is_noop():
    v = _vehicle(1)
    v.sac = _scalar_model(4.0)
    bl.lfsac_local_aggregate(v, {})
    assert v.sac.critic1.flat[0] == 4.0
    assert v.local_agg_count == 0


def test_lfsac_uniform_mean_example():
    v = _vehicle(1)
    v.sac = _scalar_model(4.0)
    peers = {2: _scalar_model(0.0), 3: _scalar_model(8.0)}
    bl.lfsac_local_aggregate(v, peers)
    assert v.sac.critic1.flat[0] == pytest.approx(4.0, rel=1e-12)
    assert v.sac.critic2.flat[0] == pytest.approx(4.0, rel=1e-12)
    assert v.sac.actor.flat[0] == 4.0          # actor untouched
    assert v.local_agg_count == 1


def test_lfsac_identical_critics_fixed_point():
    v = _vehicle(1)
    v.sac = _scalar_model(1.5)
    bl.lfsac_local_aggregate(v, {2: _scalar_model(1.5)})
    assert v.sac.critic1.flat[0] == pytest.approx(1.5, rel=1e-12)


def test_lfsac_equals_gnn_weights_when_embeddings_equal():
    cfg = ScenarioConfig()
    vehicles = [_vehicle(i, x=10.0 * i) for i in range(4)]
    graph = rg.build_graph(vehicles, cfg)
    emb = np.full(graph.n_nodes, 1.23)
    for v in vehicles:
        v.sac = _scalar_model(float(v.id))
    target = vehicles[0]
    weights = rg.aggregation_weights(emb, target, vehicles, graph, cfg)
    peers = {v.id: v.sac for v in vehicles if v.id != target.id}
    fed.local_aggregate(target, peers, weights)
    via_gnn = target.sac.critic1.flat[0]

    other = _vehicle(0)
    other.sac = _scalar_model(0.0)
    bl.lfsac_local_aggregate(other, peers)
    assert via_gnn == pytest.approx(other.sac.critic1.flat[0], rel=1e-12)


# --- best-response surrogate --------------------------------------------------------------

def test_gdbr_empty_queue_is_silent():
    state = bl.GdbrState()
    powers = bl.gdbr_step([_vehicle(1)], state, system_aoi=5.0, config=CFG)
    assert powers == {1: 0.0}
    assert state.probabilities == {1: 0.0}


def test_gdbr_full_benefit_no_price():
    state = bl.GdbrState(probabilities={})
    v = _vehicle(1, head_aoi=5.0)
    powers = bl.gdbr_step([v], state, system_aoi=5.0, config=CFG)
    assert powers[1] == pytest.approx(CFG.p_max)     # benefit 1, price 0


def test_gdbr_price_cancels_benefit():
    state = bl.GdbrState(probabilities={2: 1.0, 3: 1.0})
    v = _vehicle(1, head_aoi=2.5)
    powers = bl.gdbr_step([v], state, system_aoi=5.0, config=CFG)
    assert powers[1] == 0.0                          # 0.5 - 0.5 * 1.0


def test_gdbr_probabilities_clamped_and_powers_bounded():
    rng = np.random.default_rng(0)
    state = bl.GdbrState()
    vehicles = [_vehicle(i, head_aoi=float(rng.uniform(0, 50))) for i in range(6)]
    for _ in range(50):
        powers = bl.gdbr_step(vehicles, state, system_aoi=float(rng.uniform(0, 20)),
                              config=CFG)
        for q in state.probabilities.values():
            assert 0.0 <= q <= 1.0
        for p in powers.values():
            assert 0.0 <= p <= CFG.p_max


def test_gdbr_is_deterministic():
    def run():
        state = bl.GdbrState()
        vehicles = [_vehicle(i, head_aoi=3.0 + i) for i in range(4)]
        out = []
        for k in range(20):
            powers = bl.gdbr_step(vehicles, state, system_aoi=4.0, config=CFG)
            out.append(tuple(sorted(powers.items())))
        return out
    assert run() == run()
