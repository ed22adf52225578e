"""Road-segment graph, GNN message passing, and aggregation-weight training.

The road inside coverage is cut into fixed segments of segment_len per
lane; each segment is one graph node whose 5-dim feature row summarizes the
vehicles currently inside it.  Edges join the segments of any two vehicles
within V2V range that sit in different segments.  A small GNN embeds each
node to a scalar; softmaxing the embeddings of a vehicle's own node and its
in-range peers' nodes yields the local federated-aggregation weights.  A
critic over pooled graph summaries scores embedding quality and trains the
GNN toward low system age.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nn_core import (AdamState, ParamVector, adam_step, init_mlp, make_adam,
                      mlp_backward, mlp_forward, soft_update)

N_NODE_FEATURES = 5
CRITIC_INPUT_DIM = 1 + N_NODE_FEATURES   # mean embedding + mean raw features


@dataclass
class RoadGraph:
    features: np.ndarray      # (n_nodes, 5)
    adjacency: np.ndarray     # (n_nodes, n_nodes), symmetric 0/1, zero diagonal
    node_of_vehicle: dict     # vehicle id -> node index
    segments_per_lane: int
    _prop: np.ndarray = None

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def prop(self) -> np.ndarray:
        """Cached propagation matrix I + D^-1 A."""
        if self._prop is None:
            self._prop = propagation_matrix(self.adjacency)
        return self._prop


def segment_index(x: float, config) -> int:
    seg = int((x + config.rsu_radius) // config.segment_len)
    return min(max(seg, 0), config.segments_per_lane - 1)


def node_index(vehicle, config) -> int:
    return vehicle.lane * config.segments_per_lane + segment_index(vehicle.x, config)


def build_graph(vehicles, config) -> RoadGraph:
    """Per-slot graph: segment features and V2V-derived segment edges."""
    n_seg = config.segments_per_lane
    if abs(2 * config.rsu_radius / config.segment_len - n_seg) > 1e-9:
        raise ValueError("2 * rsu_radius must be divisible by segment_len")
    n_nodes = n_seg * config.lanes
    sums = np.zeros((n_nodes, N_NODE_FEATURES))
    counts = np.zeros(n_nodes)
    adjacency = np.zeros((n_nodes, n_nodes))
    node_of = {}
    for v in vehicles:
        node = node_index(v, config)
        node_of[v.id] = node
        counts[node] += 1
        sums[node, 0] += 1.0
        sums[node, 1] += v.local_agg_count
        sums[node, 2] += v.last_losses[0]
        sums[node, 3] += v.last_losses[1]
        sums[node, 4] += v.last_losses[2]
    features = np.zeros((n_nodes, N_NODE_FEATURES))
    occupied = counts > 0
    features[occupied] = sums[occupied] / counts[occupied, None]
    features[occupied, 0] = counts[occupied]
    for i, a in enumerate(vehicles):
        na = node_of[a.id]
        for b in vehicles[i + 1:]:
            nb = node_of[b.id]
            if na == nb:
                continue
            if math.hypot(a.x - b.x, a.y - b.y) <= config.v2v_range:
                adjacency[na, nb] = 1.0
                adjacency[nb, na] = 1.0
    return RoadGraph(features, adjacency, node_of, n_seg)


def propagation_matrix(adjacency: np.ndarray) -> np.ndarray:
    """I + D^-1 A: self term plus degree-normalized neighbor averaging."""
    deg = adjacency.sum(axis=-1, keepdims=True)
    deg = np.where(deg > 0, deg, 1.0)
    return np.eye(adjacency.shape[-1]) + adjacency / deg


@dataclass
class GnnModel:
    gnn: ParamVector              # node transform per layer, tanh hidden, scalar out
    critic: ParamVector           # relu MLP over pooled graph summary
    target_critic: ParamVector
    feature_scale: np.ndarray     # input scaling applied before the first layer
    adam_gnn: AdamState
    adam_critic: AdamState


def gnn_dims(config):
    return (N_NODE_FEATURES, *config.gnn_hidden, 1)


def gnn_critic_dims(config):
    return (CRITIC_INPUT_DIM, *config.gnn_critic_hidden, 1)


def new_gnn_model(config, rng: np.random.Generator) -> GnnModel:
    gnn = init_mlp(gnn_dims(config), rng)
    critic = init_mlp(gnn_critic_dims(config), rng)
    return GnnModel(
        gnn=gnn,
        critic=critic,
        target_critic=critic.copy(),
        feature_scale=np.asarray(config.gnn_feature_scale, dtype=np.float64),
        adam_gnn=make_adam(gnn.n_params, config.gnn_lr),
        adam_critic=make_adam(critic.n_params, config.gnn_critic_lr),
    )


def gnn_forward_batch(params: ParamVector, features: np.ndarray, prop: np.ndarray,
                      feature_scale: np.ndarray):
    """Batched message passing over (batch, nodes, features) inputs.

    Each layer applies the node-wise affine transform, then mixes every node
    with the degree-normalized sum of its neighbors' transforms, then tanh
    (identity on the final scalar layer).
    """
    h = features * feature_scale
    n_layers = len(params.layers)
    activations = [h]
    pre = []
    for k, (w, b) in enumerate(params.layers):
        mixed = prop @ (h @ w.T + b)
        pre.append(mixed)
        h = mixed if k == n_layers - 1 else np.tanh(mixed)
        activations.append(h)
    cache = (activations, pre, prop)
    return h, cache


def gnn_backward_batch(params: ParamVector, cache, output_gradient: np.ndarray) -> ParamVector:
    """Reverse-mode gradients of the batched message-passing forward."""
    activations, _pre, prop = cache
    prop_t = np.swapaxes(prop, -1, -2)
    grads = params.zeros_like()
    delta = output_gradient
    for k in range(len(params.layers) - 1, -1, -1):
        w, _b = params.layers[k]
        gw, gb = grads.layers[k]
        d_affine = prop_t @ delta
        gw[:] = np.einsum("bno,bni->oi", d_affine, activations[k])
        gb[:] = d_affine.sum(axis=(0, 1))
        delta = d_affine @ w
        if k > 0:
            a = activations[k]
            delta = delta * (1.0 - a * a)
    return grads


def gnn_forward(model: GnnModel, graph: RoadGraph):
    """Per-node scalar embeddings for one graph."""
    out, _ = gnn_forward_batch(model.gnn, graph.features[None], graph.prop[None],
                               model.feature_scale)
    return out[0, :, 0]


def aggregation_weights(embeddings: np.ndarray, vehicle, vehicles, graph: RoadGraph,
                        config) -> dict:
    """Softmax over the vehicle's own node embedding and those of in-range peers.

    Returns {vehicle id -> weight}, including the vehicle itself; weights sum
    to 1 and a vehicle with no in-range peer keeps weight 1.
    """
    ids = [vehicle.id]
    values = [embeddings[graph.node_of_vehicle[vehicle.id]]]
    for other in vehicles:
        if other.id == vehicle.id:
            continue
        if math.hypot(vehicle.x - other.x, vehicle.y - other.y) <= config.v2v_range:
            ids.append(other.id)
            values.append(embeddings[graph.node_of_vehicle[other.id]])
    values = np.asarray(values)
    exp = np.exp(values - values.max())
    weights = exp / exp.sum()
    return dict(zip(ids, weights))


@dataclass
class GnnTransition:
    graph: RoadGraph
    embeddings: np.ndarray
    system_aoi: float
    next_graph: RoadGraph


class GnnBuffer:
    """Ring buffer of per-slot graph transitions, stored as flat arrays.

    Graphs are stored as (features, propagation matrix) pairs so training
    batches are plain fancy-indexed gathers.
    """

    def __init__(self, capacity: int, n_nodes: int):
        self.capacity = capacity
        self.features = np.zeros((capacity, n_nodes, N_NODE_FEATURES))
        self.prop = np.zeros((capacity, n_nodes, n_nodes))
        self.embeddings = np.zeros((capacity, n_nodes))
        self.aoi = np.zeros(capacity)
        self.next_features = np.zeros((capacity, n_nodes, N_NODE_FEATURES))
        self.next_prop = np.zeros((capacity, n_nodes, n_nodes))
        self.idx = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, tr: GnnTransition) -> None:
        i = self.idx
        self.features[i] = tr.graph.features
        self.prop[i] = tr.graph.prop
        self.embeddings[i] = tr.embeddings
        self.aoi[i] = tr.system_aoi
        self.next_features[i] = tr.next_graph.features
        self.next_prop[i] = tr.next_graph.prop
        self.idx = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)


def _pooled_input(mean_embeddings: np.ndarray, features: np.ndarray) -> np.ndarray:
    x = np.empty((features.shape[0], CRITIC_INPUT_DIM))
    x[:, 0] = mean_embeddings
    x[:, 1:] = features.mean(axis=1)
    return x


def train_gnn(model: GnnModel, buffer: GnnBuffer, rng: np.random.Generator, config):
    """One training round of the GNN and its critic; no-op below warmup fill.

    The critic regresses pooled (graph, embedding) summaries onto the
    discounted negative system age; the GNN then ascends the critic's score
    of its own embeddings.  Returns (gnn_loss, critic_loss) or None.
    """
    if len(buffer) < config.gnn_warmup:
        return None
    gnn_loss = critic_loss = 0.0
    for it in range(1, config.gnn_train_iters + 1):
        idx = rng.integers(0, len(buffer), size=config.gnn_batch_size)
        feats = buffer.features[idx]
        prop = buffer.prop[idx]
        stored_emb = buffer.embeddings[idx]
        aoi = buffer.aoi[idx]
        next_feats = buffer.next_features[idx]
        next_prop = buffer.next_prop[idx]

        # critic step: TD target on the discounted negative system age
        next_emb, _ = gnn_forward_batch(model.gnn, next_feats, next_prop,
                                        model.feature_scale)
        x_next = _pooled_input(next_emb[:, :, 0].mean(axis=1), next_feats)
        q_next, _ = mlp_forward(model.target_critic, x_next, "relu")
        y = -aoi + config.discount * q_next[:, 0]
        x = _pooled_input(stored_emb.mean(axis=1), feats)
        q, cache = mlp_forward(model.critic, x, "relu")
        residual = q[:, 0] - y
        critic_loss = float(np.mean(residual * residual))
        grads, _ = mlp_backward(model.critic, cache, (2.0 / len(y)) * residual[:, None])
        adam_step(model.critic, grads, model.adam_critic)

        # generator step: raise the critic's score of freshly generated embeddings
        emb, gnn_cache = gnn_forward_batch(model.gnn, feats, prop, model.feature_scale)
        x_gen = _pooled_input(emb[:, :, 0].mean(axis=1), feats)
        q_gen, critic_cache = mlp_forward(model.critic, x_gen, "relu")
        gnn_loss = float(-np.mean(q_gen[:, 0]))
        n = q_gen.shape[0]
        _, gin = mlp_backward(model.critic, critic_cache,
                              np.full((n, 1), -1.0 / n), with_param_grads=False)
        n_nodes = feats.shape[1]
        gout = np.repeat(gin[:, 0][:, None, None], n_nodes, axis=1) / n_nodes
        gnn_grads = gnn_backward_batch(model.gnn, gnn_cache, gout)
        adam_step(model.gnn, gnn_grads, model.adam_gnn)

        if it % config.gnn_target_update_period == 0:
            soft_update(model.target_critic, model.critic, config.gnn_tau)
    return gnn_loss, critic_loss
