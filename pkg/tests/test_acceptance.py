"""Acceptance gate: one test per criterion, each printing a PASS line.

Criteria 5-7 train at desk scale and dominate the runtime; their runs are
shared through module-scoped fixtures.  Run with ``pytest -s`` to watch
progress.
"""

import dataclasses
import math
import time
from types import SimpleNamespace

import mpmath
import numpy as np
import pytest

import vecfed.aoi_reward as ar
import vecfed.baselines as bl
import vecfed.channel as ch
import vecfed.federated as fed
import vecfed.nn_core as nn
import vecfed.road_graph as rg
import vecfed.sac_agent as sa
import vecfed.scenario as sc
from vecfed.harness import (quarter_means, records_to_csv, run_test, run_training,
                            emit_results)
from vecfed.scenario import ScenarioConfig, desk_config

from helpers import max_rel_error, tiny_config

SEEDS = (0, 1, 2, 3, 4)
REL = 1e-9          # deterministic arithmetic tolerance
BESSEL_REL = 1e-8

TABLE = ScenarioConfig()


def _ok(criterion, detail):
    print(f"\nACCEPTANCE {criterion} PASS: {detail}")


# -- shared desk-scale runs (criteria 5-7) -------------------------------------------


@pytest.fixture(scope="module")
def fgnn_runs():
    """Desk-scale fgnn training at the pinned operating point, one per seed."""
    cfg = desk_config()
    out = {}
    for seed in SEEDS:
        t0 = time.perf_counter()
        store, summary, records = run_training(cfg, seed, "fgnn")
        print(f"  [fgnn train seed {seed}] aoi={summary.avg_aoi:.2f} "
              f"({(time.perf_counter() - t0) / 60:.1f} min)", flush=True)
        out[seed] = (store, summary, records)
    return out


@pytest.fixture(scope="module")
def fgnn_tests(fgnn_runs):
    cfg = desk_config()
    out = {}
    for seed in SEEDS:
        summary, _ = run_test(cfg, seed, fgnn_runs[seed][0], "fgnn")
        print(f"  [fgnn test seed {seed}] aoi={summary.avg_aoi:.3f}", flush=True)
        out[seed] = summary
    return out


# -- criterion 1: every derived example against its stated oracle ---------------------


def test_criterion_1_equation_oracles():
    started = time.perf_counter()
    cfg = TABLE

    # kinematics: direct evaluation of x + v * slot
    v = sc.VehicleState(id=0, lane=0, x=0.0, y=0.0, speed=8.333, next_task_time=1e9)
    kept, _ = sc.advance_positions([v], cfg)
    assert abs(kept[0].x - 8.333 * 0.02) < REL

    # path loss anchors of the chosen 28 GHz model
    assert abs(ch.path_loss_db(1.0) - 61.4) < REL
    assert abs(ch.path_loss_db(100.0) - 101.4) < REL

    # shadowing correlation at one decorrelation length: exp(-1)
    state = ch.ChannelState(1.0, 1 + 0j, (0.0, 0.0), 0.0)
    class _Zero:
        def standard_normal(self, size=None):
            return 0.0 if size is None else np.zeros(size)
    out = ch.step_shadowing(state, (cfg.decorrelation, 0.0), _Zero(), cfg)
    assert abs(out - math.exp(-1.0)) < REL

    # doppler and the fading correlation against a high-precision Bessel oracle
    doppler = 8.3333 * cfg.carrier / cfg.lightspeed
    assert abs(doppler - 777.77466) / 777.77466 < 1e-6
    for speed in (2.0, 8.3333, 20.0):
        arg = 2 * math.pi * speed * cfg.carrier / cfg.lightspeed * cfg.slot
        ref = float(mpmath.besselj(0, mpmath.mpf(arg)))
        assert abs(ch.jakes_correlation(speed, cfg) - ref) <= BESSEL_REL * abs(ref)

    # linear gain at 130 dB total loss
    assert abs(ch.channel_power_gain(30.0, 100.0, 1 + 0j) - 1e-13) < REL * 1e-13

    # two symmetric vehicles at the noise floor: B * log2(1.5)
    rates = ch.compute_rates([1.0, 1.0], [cfg.noise, cfg.noise], [], [], cfg)
    assert abs(rates[0] - cfg.bandwidth * math.log2(1.5)) < REL * rates[0]

    # queue branch arithmetic
    q = ar.TaskQueue()
    q.tasks.append(ar.Task(8e5, 8e5, 1.0))
    q.tasks.append(ar.Task(4e7, 4e7, 0.5))
    head = q.tasks[0]
    delivered = ar.step_queue_aoi(q, 1e8, cfg)
    assert delivered == 8e5
    assert abs(head.aoi - 1.008) < REL
    assert abs(q.tasks[0].aoi - 0.52) < REL

    # departure penalty arithmetic
    pen = ar.PenaltyState(1.0)
    assert abs(ar.step_xi(pen, [2.0], 4, cfg) - 1.5) < REL
    pen = ar.PenaltyState(1.0)
    assert abs(ar.step_xi(pen, [], 3, cfg) - 0.9999) < REL

    # reward branches
    assert abs(ar.reward(2.0, 1.0, 10.0, 3, 0.0, cfg) - (-3.2)) < REL
    assert abs(ar.reward(2.0, 0.0, 1.0, 0, 0.0, cfg) - (-0.5)) < REL

    # forward pass against an element-wise oracle
    rng = np.random.default_rng(0)
    pv = nn.init_mlp((6, 32, 32, 1), rng)
    x = rng.standard_normal(6)
    got, _ = nn.mlp_forward(pv, x, "relu")
    h = list(x)
    for k, (w, b) in enumerate(pv.layers):
        h = [b[i] + sum(w[i, j] * h[j] for j in range(w.shape[1]))
             for i in range(w.shape[0])]
        if k < len(pv.layers) - 1:
            h = [z if z > 0 else 0.0 for z in h]
    assert abs(got[0] - h[0]) <= 1e-10 * max(1.0, abs(h[0]))

    # single linear layer closed form
    pv = nn.init_mlp((3, 2), rng)
    xx = rng.standard_normal(3)
    g = rng.standard_normal(2)
    _, cache = nn.mlp_forward(pv, xx, "relu")
    grads, _ = nn.mlp_backward(pv, cache, g)
    assert np.allclose(grads.layers[0][0], np.outer(g, xx), rtol=1e-12)

    # adam first step = -lr * sign within epsilon effect
    p = nn.ParamVector([(1, 1)])
    p.flat[:] = [0.5, -0.5]
    gr = nn.ParamVector([(1, 1)])
    gr.flat[:] = [2.0, -0.03]
    nn.adam_step(p, gr, nn.make_adam(2, 0.01))
    assert abs(p.flat[0] - (0.5 - 0.01)) < 1e-6
    assert abs(p.flat[1] - (-0.5 + 0.01)) < 1e-6

    # soft target blend
    t0 = nn.ParamVector([(1, 1)])
    s0 = nn.ParamVector([(1, 1)])
    s0.flat[:] = 1.0
    nn.soft_update(t0, s0, 0.005)
    assert abs(t0.flat[0] - 0.005) < REL

    # squashed-gaussian density against the CDF-derivative oracle
    from scipy.stats import norm
    mean, log_std = 0.4, -0.3
    for eps in (-1.5, -0.5, 0.0, 0.8, 1.7):
        a, lp = nn.squashed_gaussian_sample(mean, log_std, eps, 20.0)
        u = lambda t: math.atanh(2 * t / 20.0 - 1.0)
        cdf = lambda t: norm.cdf((u(t) - mean) / math.exp(log_std))
        dens = (cdf(a + 1e-6) - cdf(a - 1e-6)) / 2e-6
        assert abs(lp - math.log(dens)) < 1e-3

    # state normalization of the head size
    tcfg = tiny_config()
    veh = sc.VehicleState(id=0, lane=0, x=10.0, y=0.0, speed=8.0, next_task_time=1e9)
    veh.channel = ch.ChannelState(0.0, 1 + 0j, (10.0, 0.0), 0.0, gain=1e-10)
    veh.queue.tasks.append(ar.Task(4e7, 4e7, 1.0))
    state_vec = sa.build_state(veh, 1.0, 3, tcfg)
    assert abs(state_vec[4] - 4e7 / tcfg.task_size_max) < REL

    # zero final actor layer -> midpoint power
    model = sa.new_sac_model(tcfg, rng)
    model.actor.layers[-1][0][:] = 0.0
    model.actor.layers[-1][1][:] = 0.0
    a = sa.select_action(model, state_vec, None, explore=False, config=tcfg)
    assert abs(a - tcfg.p_max / 2) < REL

    # bellman target with constant twin targets 3 and 5
    model.log_beta[:] = -1e3
    for pvv, val in ((model.target1, 3.0), (model.target2, 5.0)):
        pvv.flat[:] = 0.0
        pvv.layers[-1][1][:] = val
    y = sa.compute_target(model, rng.standard_normal((4, 6)), np.ones(4), 0.5,
                          rng, tcfg)
    assert np.allclose(y, 2.5, rtol=1e-12)

    # actor improves against a fixed action-loving critic
    conv_cfg = tiny_config(actor_lr=1e-2)
    m2 = sa.new_sac_model(conv_cfg, np.random.default_rng(13))
    for critic in (m2.critic1, m2.critic2):
        critic.flat[:] = 0.0
        critic.layers[0][0][:, 6] = 20.0
        critic.layers[1][0][:] = 1.0 / critic.layers[1][0].shape[1]
        critic.layers[2][0][:] = 1.0 / critic.layers[2][0].shape[1]
    sbatch = np.random.default_rng(14).standard_normal((8, 6))
    losses = [sa.update_actor(m2, sbatch,
                              sa._policy_forward(m2, sbatch,
                                                 np.random.default_rng(k).standard_normal(8),
                                                 conv_cfg), conv_cfg)
              for k in range(100)]
    assert np.mean(losses[-10:]) < np.mean(losses[:10])

    # road graph: node count, edge geometry, hand-computed propagation
    assert rg.build_graph([], cfg).n_nodes == 40
    va = sc.VehicleState(id=1, lane=0, x=-250 + 175, y=0.0, speed=8.0, next_task_time=1e9)
    vb = sc.VehicleState(id=2, lane=0, x=-250 + 225, y=0.0, speed=8.0, next_task_time=1e9)
    graph = rg.build_graph([va, vb], cfg)
    assert graph.adjacency[3, 4] == 1.0 and graph.adjacency[4, 3] == 1.0

    params = nn.ParamVector([(1, 1), (1, 1)])
    params.layers[0][0][:] = 0.5
    params.layers[0][1][:] = 0.1
    params.layers[1][0][:] = 2.0
    params.layers[1][1][:] = -0.3
    feats = np.array([[1.0], [2.0], [3.0]])
    adj = np.array([[0.0, 1, 0], [1, 0, 1], [0, 1, 0]])
    h0, h1, h2 = math.tanh(1.7), math.tanh(2.2), math.tanh(2.7)
    g0, g1, g2 = 2 * h0 - 0.3, 2 * h1 - 0.3, 2 * h2 - 0.3
    expect = [g0 + g1, g1 + (g0 + g2) / 2, g2 + g1]
    got, _ = rg.gnn_forward_batch(params, feats[None],
                                  rg.propagation_matrix(adj)[None], np.ones(1))
    assert np.allclose(got[0, :, 0], expect, rtol=1e-10)

    # softmax weight example: ln 2 vs ln 1
    emb = np.zeros(graph.n_nodes)
    emb[graph.node_of_vehicle[1]] = math.log(2.0)
    w = rg.aggregation_weights(emb, va, [va, vb], graph, cfg)
    assert abs(w[1] - 2 / 3) < REL and abs(w[2] - 1 / 3) < REL

    # upload power inversion at the one-slot budget
    p = fed.model_upload_power(1e-13, cfg.bandwidth * cfg.slot, cfg)
    assert abs(p - 0.398) < REL

    # convex critic mixing and cohort means on scalar networks
    def scalar_model(*vals):
        nets = {}
        for nm, vv in zip(fed.SAC_NETWORKS, vals):
            pvv = nn.ParamVector([(0, 1)])
            pvv.flat[:] = vv
            nets[nm] = pvv
        return SimpleNamespace(**nets)

    veh2 = sc.VehicleState(id=1, lane=0, x=0.0, y=0.0, speed=8.0, next_task_time=1e9)
    veh2.sac = scalar_model(0, 4, 4, 0, 0)
    fed.local_aggregate(veh2, {2: scalar_model(0, 0, 0, 0, 0),
                              3: scalar_model(0, 8, 8, 0, 0)},
                        {1: 0.5, 2: 0.25, 3: 0.25})
    assert abs(veh2.sac.critic1.flat[0] - 4.0) < REL

    store = fed.GlobalModelStore(**{nm: getattr(scalar_model(0, 0, 0, 0, 0), nm)
                                    for nm in fed.SAC_NETWORKS}, init_log_beta=0.0)
    m_a, m_b = scalar_model(1, 3, 3, 1, 1), scalar_model(3, 5, 5, 3, 3)
    fed.global_aggregate(store, [m_a, m_b])
    assert abs(store.actor.flat[0] - 2.0) < REL
    assert abs(store.critic1.flat[0] - 4.0) < REL

    # pairwise fold and uniform local mean
    store2 = fed.GlobalModelStore(**{nm: getattr(scalar_model(2, 2, 2, 2, 2), nm)
                                     for nm in fed.SAC_NETWORKS}, init_log_beta=0.0)
    veh3 = sc.VehicleState(id=1, lane=0, x=0.0, y=0.0, speed=8.0, next_task_time=1e9)
    veh3.sac = scalar_model(4, 4, 4, 4, 4)
    bl.gfsac_on_train_complete(veh3, store2)
    assert abs(store2.actor.flat[0] - 3.0) < REL
    veh4 = sc.VehicleState(id=1, lane=0, x=0.0, y=0.0, speed=8.0, next_task_time=1e9)
    veh4.sac = scalar_model(4, 4, 4, 4, 4)
    bl.lfsac_local_aggregate(veh4, {2: scalar_model(0, 0, 0, 0, 0),
                                    3: scalar_model(8, 8, 8, 8, 8)})
    assert abs(veh4.sac.critic1.flat[0] - 4.0) < REL

    # best-response surrogate rule evaluations
    tcfg2 = tiny_config()
    state5 = bl.GdbrState(probabilities={})
    veh5 = sc.VehicleState(id=1, lane=0, x=0.0, y=0.0, speed=8.0, next_task_time=1e9)
    veh5.queue.tasks.append(ar.Task(1e6, 1e6, 5.0))
    powers = bl.gdbr_step([veh5], state5, 5.0, tcfg2)
    assert abs(powers[1] - tcfg2.p_max) < REL
    state5 = bl.GdbrState(probabilities={2: 1.0, 3: 1.0})
    veh5.queue.tasks[0].aoi = 2.5
    powers = bl.gdbr_step([veh5], state5, 5.0, tcfg2)
    assert powers[1] == 0.0

    # emitted summary is recomputable from its own CSV
    short = tiny_config()
    short.train_slots = 400
    _, summary, records = run_training(short, 0, "gdbr")
    csv = records_to_csv(records).splitlines()[1:]
    cols = np.array([[float(x) for x in row.split(",")] for row in csv])
    assert abs(np.mean(cols[:, 1]) - summary.avg_aoi) < 1e-9

    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    _ok(1, f"all derived-example oracles hold ({elapsed:.1f} s)")


# -- criterion 2: gradient suite --------------------------------------------------------


def _check_actor_grad(cfg, rng, n_idx=25):
    model = sa.new_sac_model(cfg, rng)
    s = rng.standard_normal((6, 6))
    eps = rng.standard_normal(6)

    def loss(flat):
        probe = sa.new_sac_model(cfg, np.random.default_rng(0))
        probe.critic1.load_flat(model.critic1.flatten())
        probe.critic2.load_flat(model.critic2.flatten())
        probe.log_beta[:] = model.log_beta
        probe.actor.load_flat(flat)
        pol = sa._policy_forward(probe, s, eps, cfg)
        x = sa._critic_input(s, pol["action"], cfg)
        q1, _ = nn.mlp_forward(probe.critic1, x, "relu")
        q2, _ = nn.mlp_forward(probe.critic2, x, "relu")
        return float(np.mean(probe.beta * pol["log_prob"]
                             - np.minimum(q1[:, 0], q2[:, 0])))

    pol = sa._policy_forward(model, s, eps, cfg)
    beta = model.beta
    x = sa._critic_input(s, pol["action"], cfg)
    q1, c1 = nn.mlp_forward(model.critic1, x, "relu")
    q2, c2 = nn.mlp_forward(model.critic2, x, "relu")
    pick1 = (q1[:, 0] <= q2[:, 0]).astype(float)
    _, g1 = nn.mlp_backward(model.critic1, c1, (-pick1 / 6)[:, None], False)
    _, g2 = nn.mlp_backward(model.critic2, c2, (-(1 - pick1) / 6)[:, None], False)
    d_action = (g1[:, 6] + g2[:, 6]) / cfg.p_max
    t = pol["tanh_u"]
    dadu = 0.5 * cfg.p_max * (1 - t * t)
    se = pol["std"] * pol["eps"]
    gout = np.stack([(beta / 6) * (2 * t) + d_action * dadu,
                     ((beta / 6) * (-1 + 2 * t * se) + d_action * dadu * se)], axis=1)
    grads, _ = nn.mlp_backward(model.actor, pol["cache"], gout)
    idx = rng.integers(0, model.actor.n_params, n_idx)
    return max_rel_error(loss, model.actor.flatten(), grads.flat, idx)


def _check_critic_grad(cfg, rng, n_idx=25):
    model = sa.new_sac_model(cfg, rng)
    s = rng.standard_normal((6, 6))
    a = rng.uniform(0, 20, 6)
    y = rng.standard_normal(6)
    x = sa._critic_input(s, a, cfg)

    def loss(flat):
        probe = model.critic1.copy().load_flat(flat)
        q, _ = nn.mlp_forward(probe, x, "relu")
        d = q[:, 0] - y
        return float(np.mean(d * d))

    q, cache = nn.mlp_forward(model.critic1, x, "relu")
    grads, _ = nn.mlp_backward(model.critic1, cache, (2 / 6) * (q[:, 0] - y)[:, None])
    idx = rng.integers(0, model.critic1.n_params, n_idx)
    return max_rel_error(loss, model.critic1.flatten(), grads.flat, idx)


def _check_temperature_grad(cfg, rng):
    log_probs = rng.standard_normal(16)
    analytic = float(np.mean(-log_probs - cfg.entropy_target))

    def loss(lb):
        return lb * float(np.mean(-log_probs - cfg.entropy_target))

    fd = (loss(0.3 + 1e-5) - loss(0.3 - 1e-5)) / 2e-5
    return abs(fd - analytic) / max(abs(fd), 1e-6)


def _check_gnn_grads(cfg, rng, n_idx=25):
    model = rg.new_gnn_model(cfg, rng)
    n = cfg.n_graph_nodes
    feats = rng.uniform(0, 3, (4, n, 5))
    adj = np.zeros((4, n, n))
    for b in range(4):
        for _ in range(10):
            i, j = rng.integers(0, n, 2)
            if i != j:
                adj[b, i, j] = adj[b, j, i] = 1.0
    prop = np.stack([rg.propagation_matrix(adj[b]) for b in range(4)])

    def gnn_loss(flat):
        probe = model.gnn.copy().load_flat(flat)
        emb, _ = rg.gnn_forward_batch(probe, feats, prop, model.feature_scale)
        x = rg._pooled_input(emb[:, :, 0].mean(axis=1), feats)
        q, _ = nn.mlp_forward(model.critic, x, "relu")
        return float(-np.mean(q[:, 0]))

    emb, cache = rg.gnn_forward_batch(model.gnn, feats, prop, model.feature_scale)
    x = rg._pooled_input(emb[:, :, 0].mean(axis=1), feats)
    q, ccache = nn.mlp_forward(model.critic, x, "relu")
    _, gin = nn.mlp_backward(model.critic, ccache, np.full((4, 1), -0.25), False)
    gout = np.repeat(gin[:, 0][:, None, None], n, axis=1) / n
    grads = rg.gnn_backward_batch(model.gnn, cache, gout)
    idx = rng.integers(0, model.gnn.n_params, n_idx)
    err_gnn = max_rel_error(gnn_loss, model.gnn.flatten(), grads.flat, idx)

    y = rng.standard_normal(4)

    def critic_loss(flat):
        probe = model.critic.copy().load_flat(flat)
        q2, _ = nn.mlp_forward(probe, x, "relu")
        d = q2[:, 0] - y
        return float(np.mean(d * d))

    q2, ccache2 = nn.mlp_forward(model.critic, x, "relu")
    cgrads, _ = nn.mlp_backward(model.critic, ccache2,
                                (2 / 4) * (q2[:, 0] - y)[:, None])
    idx = rng.integers(0, model.critic.n_params, n_idx)
    err_critic = max_rel_error(critic_loss, model.critic.flatten(), cgrads.flat, idx)
    return err_gnn, err_critic


def test_criterion_2_gradient_suite():
    started = time.perf_counter()
    worst = 0.0
    desk = desk_config()
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        worst = max(worst, _check_actor_grad(desk, rng))
        worst = max(worst, _check_critic_grad(desk, rng))
        worst = max(worst, _check_temperature_grad(desk, rng))
        worst = max(worst, max(_check_gnn_grads(desk, rng)))
    full = ScenarioConfig()
    for seed in range(2):
        rng = np.random.default_rng(200 + seed)
        worst = max(worst, _check_actor_grad(full, rng, n_idx=10))
        worst = max(worst, _check_critic_grad(full, rng, n_idx=10))
    elapsed = time.perf_counter() - started
    assert worst < 1e-4
    assert elapsed < 120.0
    _ok(2, f"max relative gradient error {worst:.2e} over 10 seeds "
           f"({elapsed:.0f} s)")


# -- criterion 3: channel statistics -----------------------------------------------------


def test_criterion_3_channel_statistics():
    started = time.perf_counter()
    cfg = TABLE
    rng = np.random.default_rng(7)
    speed = 8.333
    n = 1_000_000

    state = ch.init_channel((0.0, 0.0), speed, rng, cfg)
    hs = np.empty(n, dtype=complex)
    for k in range(n):
        hs[k] = ch.step_rayleigh(state, speed, rng, cfg)
    power = np.abs(hs) ** 2
    mean_power = float(power.mean())
    assert 0.98 <= mean_power <= 1.02

    emp = float(np.real(np.mean(hs[1:] * np.conj(hs[:-1]))) / power.mean())
    ref = float(mpmath.besselj(0, mpmath.mpf(2 * math.pi * 777.78 * 0.02)))
    assert abs(emp - ref) <= 0.05 * abs(ref)

    shadow_state = ch.ChannelState(0.0, 1 + 0j, (0.0, 0.0), 0.0)
    xs = np.empty(n)
    x = 0.0
    for k in range(n):
        x += speed * cfg.slot
        xs[k] = ch.step_shadowing(shadow_state, (x, 0.0), rng, cfg)
    emp_shadow = float(np.corrcoef(xs[1:], xs[:-1])[0, 1])
    ref_shadow = math.exp(-speed * cfg.slot / cfg.decorrelation)
    assert abs(emp_shadow - ref_shadow) <= 0.05 * abs(ref_shadow)

    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _ok(3, f"mean |h|^2={mean_power:.4f}, fading lag-1 {emp:+.4f} vs {ref:+.4f}, "
           f"shadow lag-1 {emp_shadow:.4f} vs {ref_shadow:.4f} ({elapsed:.0f} s)")


# -- criterion 4: aggregation algebra ------------------------------------------------------


def test_criterion_4_aggregation_algebra():
    started = time.perf_counter()
    cfg = ScenarioConfig()
    rng = np.random.default_rng(11)
    events = 0
    for trial in range(10_000):
        n = int(rng.integers(1, 9))
        vehicles = []
        for i in range(n):
            v = sc.VehicleState(id=i, lane=int(rng.integers(0, 4)),
                                x=float(rng.uniform(-250, 250)), y=0.0,
                                speed=8.0, next_task_time=1e9)
            v.y = cfg.lane_spacing * v.lane
            pv = nn.ParamVector([(2, 2)])
            pv.flat[:] = rng.uniform(-5, 5, pv.n_params)
            v.sac = SimpleNamespace(critic1=pv, critic2=pv.copy(),
                                    actor=nn.ParamVector([(2, 2)]),
                                    target1=nn.ParamVector([(2, 2)]),
                                    target2=nn.ParamVector([(2, 2)]))
            vehicles.append(v)
        graph = rg.build_graph(vehicles, cfg)
        emb = rng.standard_normal(graph.n_nodes) * 3
        target = vehicles[int(rng.integers(0, n))]
        weights = rg.aggregation_weights(emb, target, vehicles, graph, cfg)
        # weight simplex
        assert abs(sum(weights.values()) - 1.0) <= 1e-12
        assert all(w > 0 for w in weights.values())
        # convexity bound, element-wise
        participants = [target.sac.critic1.flat.copy()]
        models = {}
        for vid in weights:
            if vid != target.id:
                models[vid] = vehicles[vid].sac
                participants.append(vehicles[vid].sac.critic1.flat.copy())
        stacked = np.stack(participants)
        lo, hi = stacked.min(axis=0), stacked.max(axis=0)
        fed.local_aggregate(target, models, weights)
        assert np.all(target.sac.critic1.flat >= lo - 1e-12)
        assert np.all(target.sac.critic1.flat <= hi + 1e-12)
        events += 1
        # idempotence of the global mean over identical copies
        if trial % 100 == 0:
            proto = vehicles[0].sac
            store = fed.GlobalModelStore(
                actor=proto.actor.copy(), critic1=proto.critic1.copy(),
                critic2=proto.critic2.copy(), target1=proto.target1.copy(),
                target2=proto.target2.copy(), init_log_beta=0.0)
            ref = proto.critic1.flatten()
            fed.global_aggregate(store, [proto] * int(rng.integers(1, 6)))
            assert np.allclose(store.critic1.flat, ref, atol=1e-12)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _ok(4, f"{events} randomized aggregation events, zero violations "
           f"({elapsed:.0f} s)")


# -- criterion 5: learning smoke test ---------------------------------------------------------


def test_criterion_5_learning_decline(fgnn_runs):
    ratios = {}
    passed = 0
    for seed in SEEDS:
        _, _, records = fgnn_runs[seed]
        first, last = quarter_means(records)
        ratios[seed] = last / max(first, 1e-9)
        if ratios[seed] <= 0.70:
            passed += 1
    detail = ", ".join(f"seed {s}: {r:.3f}" for s, r in ratios.items())
    assert passed >= 3, f"final/first-quarter ratios: {detail}"
    _ok(5, f"final-quarter age <= 70% of first quarter on {passed}/5 seeds ({detail})")


# -- criterion 6: scheme ordering ---------------------------------------------------------------


def test_criterion_6_scheme_ordering(fgnn_tests):
    cfg = desk_config()
    wins = 0
    rows = []
    for seed in SEEDS:
        store_g, _, _ = run_training(cfg, seed, "gfsac")
        gfsac, _ = run_test(cfg, seed, store_g, "gfsac")
        gdbr, _ = run_test(cfg, seed, None, "gdbr")
        f = fgnn_tests[seed].avg_aoi
        rows.append((seed, f, gfsac.avg_aoi, gdbr.avg_aoi))
        if f <= gfsac.avg_aoi and f <= gdbr.avg_aoi:
            wins += 1
        print(f"  [seed {seed}] fgnn={f:.3f} gfsac={gfsac.avg_aoi:.3f} "
              f"gdbr={gdbr.avg_aoi:.3f}", flush=True)
    assert wins >= 3, f"rows (seed, fgnn, gfsac, gdbr): {rows}"
    _ok(6, f"fgnn test age lowest on {wins}/5 seeds")


# -- criterion 7: density trend -------------------------------------------------------------------


def test_criterion_7_density_trend(fgnn_tests):
    cfg = desk_config()
    aoi = {0.125: {seed: fgnn_tests[seed].avg_aoi for seed in SEEDS}}
    for lam in (1 / 16, 1 / 4):
        aoi[lam] = {}
        swept = sc.with_total_arrival_rate(cfg, lam)
        for seed in SEEDS:
            store, _, _ = run_training(swept, seed, "fgnn")
            summary, _ = run_test(swept, seed, store, "fgnn")
            aoi[lam][seed] = summary.avg_aoi
            print(f"  [lambda {lam:.4f} seed {seed}] aoi={summary.avg_aoi:.3f}",
                  flush=True)
    monotone = sum(1 for seed in SEEDS
                   if aoi[1 / 16][seed] <= aoi[0.125][seed] <= aoi[1 / 4][seed])
    detail = {lam: [round(aoi[lam][s], 2) for s in SEEDS] for lam in sorted(aoi)}
    assert monotone >= 3, f"per-seed ages by rate: {detail}"
    _ok(7, f"age non-decreasing in arrival rate on {monotone}/5 seeds {detail}")


# -- criterion 8: determinism --------------------------------------------------------------------


def test_criterion_8_bit_identical_runs():
    cfg = desk_config()
    cfg.train_slots = 2500
    cfg.test_slots = 1200
    store1, _, rec1 = run_training(cfg, seed=42, scheme="fgnn")
    store2, _, rec2 = run_training(cfg, seed=42, scheme="fgnn")
    assert records_to_csv(rec1) == records_to_csv(rec2)
    assert np.array_equal(store1.actor.flat, store2.actor.flat)
    t1, _ = run_test(cfg, 42, store1, "fgnn")
    _, trec1 = run_test(cfg, 42, store1, "fgnn")
    _, trec2 = run_test(cfg, 42, store2, "fgnn")
    assert records_to_csv(trec1) == records_to_csv(trec2)
    _ok(8, "train and test CSVs bit-identical across reruns")
