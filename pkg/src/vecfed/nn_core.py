"""Minimal dense network engine: forward, analytic backward, Adam, soft updates.

Parameters live in one flat float64 vector per network; each layer's weight
matrix and bias are reshaped views into it.  That makes parameter exchange
(federated averaging, soft target updates, checkpointing) a single vector
operation and keeps gradient checks exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


class ParamVector:
    """Flat parameter storage with per-layer (weight, bias) views.

    ``shapes`` is a sequence of (n_in, n_out) pairs.  Weight matrices are
    stored (n_out, n_in) so a layer computes ``x @ W.T + b``.  The flat
    buffer must never be rebound, only written in place, so the layer views
    stay alive.
    """

    def __init__(self, shapes, flat=None):
        self.shapes = tuple((int(i), int(o)) for i, o in shapes)
        n = sum(i * o + o for i, o in self.shapes)
        if flat is None:
            self.flat = np.zeros(n, dtype=np.float64)
        else:
            flat = np.asarray(flat, dtype=np.float64)
            if flat.shape != (n,):
                raise ValueError(f"flat vector has size {flat.shape}, expected ({n},)")
            self.flat = flat.copy()
        self.layers = []
        ofs = 0
        for n_in, n_out in self.shapes:
            w = self.flat[ofs:ofs + n_in * n_out].reshape(n_out, n_in)
            ofs += n_in * n_out
            b = self.flat[ofs:ofs + n_out]
            ofs += n_out
            self.layers.append((w, b))

    @property
    def n_params(self) -> int:
        return self.flat.size

    def copy(self) -> "ParamVector":
        return ParamVector(self.shapes, self.flat)

    def zeros_like(self) -> "ParamVector":
        return ParamVector(self.shapes)

    def flatten(self) -> np.ndarray:
        return self.flat.copy()

    def load_flat(self, vec) -> "ParamVector":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != self.flat.shape:
            raise ValueError("flat vector shape mismatch")
        self.flat[:] = vec
        return self


def init_mlp(dims, rng: np.random.Generator, final_scale: float = 1.0) -> ParamVector:
    """Xavier-uniform weights, zero biases; the last layer is scaled."""
    shapes = list(zip(dims[:-1], dims[1:]))
    params = ParamVector(shapes)
    for k, (w, _b) in enumerate(params.layers):
        n_out, n_in = w.shape
        limit = math.sqrt(6.0 / (n_in + n_out))
        w[:] = rng.uniform(-limit, limit, size=w.shape)
        if k == len(params.layers) - 1:
            w *= final_scale
    return params


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {kind!r}")


def mlp_forward(params: ParamVector, x, hidden_activation: str = "relu"):
    """Affine + activation per hidden layer, linear final layer.

    Accepts a single input vector or a (batch, dim) matrix; the output
    matches.  The cache holds everything the backward pass needs.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != params.shapes[0][0]:
        raise ValueError(f"input dim {a.shape[1]} != first layer dim {params.shapes[0][0]}")
    n_layers = len(params.layers)
    activations = [a]
    pre = []
    for k, (w, b) in enumerate(params.layers):
        z = a @ w.T + b
        pre.append(z)
        a = z if k == n_layers - 1 else _activate(z, hidden_activation)
        activations.append(a)
    cache = (activations, pre, hidden_activation, single)
    return (a[0] if single else a), cache


def mlp_backward(params: ParamVector, cache, output_gradient, with_param_grads: bool = True):
    """Exact reverse-mode gradients for all weights, biases, and the input.

    Returns (grads, input_gradient); grads is None when with_param_grads is
    False (used when only the input gradient is needed).
    """
    activations, pre, hidden_activation, single = cache
    g = np.asarray(output_gradient, dtype=np.float64)
    if single and g.ndim == 1:
        g = g[None, :]
    grads = params.zeros_like() if with_param_grads else None
    delta = g
    for k in range(len(params.layers) - 1, -1, -1):
        w, _b = params.layers[k]
        if with_param_grads:
            gw, gb = grads.layers[k]
            gw[:] = delta.T @ activations[k]
            gb[:] = delta.sum(axis=0)
        delta = delta @ w
        if k > 0:
            delta = delta * _activate_grad(pre[k - 1], activations[k], hidden_activation)
    gin = delta[0] if single else delta
    return grads, gin


@dataclass
class AdamState:
    lr: float
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def make_adam(size: int, lr: float) -> AdamState:
    return AdamState(lr=lr, m=np.zeros(size), v=np.zeros(size))


def adam_step_array(values: np.ndarray, grad: np.ndarray, state: AdamState) -> np.ndarray:
    """In-place Adam update with bias correction."""
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    values -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return values


def adam_step(params: ParamVector, grads: ParamVector, state: AdamState) -> ParamVector:
    adam_step_array(params.flat, grads.flat, state)
    return params


def soft_update(target: ParamVector, source: ParamVector, tau: float) -> ParamVector:
    """target <- tau * source + (1 - tau) * target, elementwise."""
    target.flat *= 1.0 - tau
    target.flat += tau * source.flat
    return target


def log1m_tanh2(u):
    """log(1 - tanh(u)^2), computed stably for large |u|."""
    u = np.asarray(u, dtype=np.float64)
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def squash_to_power(u, p_max: float):
    """Map an unbounded pre-action to the transmit-power interval [0, p_max]."""
    return (np.tanh(u) + 1.0) * (0.5 * p_max)


def squashed_gaussian_sample(mean, log_std, eps, p_max: float):
    """Reparameterized sample and its log density under the squashed policy.

    eps is standard normal noise supplied by the caller, so gradients can be
    checked with frozen noise.  The log density includes the tanh and affine
    change-of-variables corrections.
    """
    mean = np.asarray(mean, dtype=np.float64)
    log_std = np.asarray(log_std, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    u = mean + np.exp(log_std) * eps
    action = squash_to_power(u, p_max)
    log_prob = (-log_std - 0.5 * eps * eps - 0.5 * LOG_2PI
                - log1m_tanh2(u) - math.log(0.5 * p_max))
    return action, log_prob


def sample_squashed_gaussian(mean: float, log_std: float, rng: np.random.Generator,
                             p_max: float):
    """Draw one squashed-Gaussian action in [0, p_max] with its log density."""
    eps = rng.standard_normal()
    action, log_prob = squashed_gaussian_sample(mean, log_std, eps, p_max)
    return float(action), float(log_prob)


def save_params(path: str, named_params: dict, scalars: dict = None) -> None:
    """Checkpoint a set of ParamVectors to ``path`` (.npz).

    Layout: for each network name, ``<name>__flat`` holds the flattened
    parameter vector and ``<name>__shapes`` the (n_layers, 2) array of
    (n_in, n_out) pairs.  Extra scalar entries are stored under their key.
    """
    payload = {}
    for name, pv in named_params.items():
        payload[f"{name}__flat"] = pv.flat
        payload[f"{name}__shapes"] = np.asarray(pv.shapes, dtype=np.int64)
    for key, value in (scalars or {}).items():
        payload[key] = np.asarray(value)
    np.savez(path, **payload)


def load_params(path: str):
    """Inverse of save_params; returns (dict name -> ParamVector, dict scalars)."""
    data = np.load(path)
    named, scalars = {}, {}
    for key in data.files:
        if key.endswith("__flat"):
            name = key[:-len("__flat")]
            shapes = [tuple(row) for row in data[f"{name}__shapes"]]
            named[name] = ParamVector(shapes, data[key])
        elif not key.endswith("__shapes"):
            scalars[key] = data[key]
    return named, scalars
