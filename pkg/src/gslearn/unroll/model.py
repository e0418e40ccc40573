"""Stacked unrolled networks: parameters, forward sweep and reverse sweep."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, GSLError, LayerError, ParameterError
from ..synth import make_rng
from .layers import make_layer

METHODS = ("glad", "l2g", "gdn")
SIMILARITY_FOR = {"glad": ("covariance", "correlation"), "l2g": ("distance",),
                  "gdn": ("covariance", "correlation")}


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_grad(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def softplus_inv(y):
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ParameterError("softplus inverse needs strictly positive values")
    return y + np.log(-np.expm1(-y))


def default_params(method: str, order: int = 1) -> np.ndarray:
    """Effective per-layer values that reproduce the model-based defaults."""
    if method == "glad":
        return np.array([1.0, 0.01])
    if method == "l2g":
        return np.array([1.0, 1.0, 0.05])
    if method == "gdn":
        return np.concatenate([[1.0, 0.5], 0.5 ** np.arange(order + 1)])
    raise ParameterError(f"unknown unrolled method {method!r}")


@dataclass
class UnrollingModel:
    """Depth-``D`` unrolled network.

    ``raw`` holds unconstrained parameters, one row per layer (a single shared
    row when ``tied``); positive entries are mapped through softplus.
    """

    method: str
    depth: int
    raw: np.ndarray
    tied: bool = False
    order: int = 1
    layer: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown unrolled method {self.method!r}; choose from {METHODS}")
        if self.depth < 1:
            raise ParameterError(f"depth must be >= 1, got {self.depth}")
        self.layer = make_layer(self.method, self.order)
        self.raw = np.array(self.raw, dtype=float, copy=True)
        rows = 1 if self.tied else self.depth
        if self.raw.shape != (rows, len(self.layer.names)):
            raise ContractError(f"expected parameter array of shape {(rows, len(self.layer.names))}, "
                                f"got {self.raw.shape}")

    @property
    def arity(self) -> int:
        return len(self.layer.names)

    @property
    def positive(self) -> np.ndarray:
        return np.asarray(self.layer.positive, dtype=bool)

    def row(self, i: int) -> int:
        return 0 if self.tied else i

    def effective(self, i: int) -> np.ndarray:
        r = self.raw[self.row(i)]
        return np.where(self.positive, softplus(r), r)

    def effective_all(self) -> np.ndarray:
        return np.stack([self.effective(i) for i in range(self.depth)])

    def copy(self) -> "UnrollingModel":
        return UnrollingModel(self.method, self.depth, self.raw.copy(), self.tied, self.order)


def to_raw(model_positive: np.ndarray, effective: np.ndarray) -> np.ndarray:
    eff = np.asarray(effective, dtype=float)
    out = eff.copy()
    out[..., model_positive] = softplus_inv(eff[..., model_positive])
    return out


def init_model(method: str, depth: int, seed: int = 0, order: int = 1, tied: bool = False,
               jitter: float = 0.05, base=None) -> UnrollingModel:
    """Layers start at the model-based defaults times ``1 + U(-jitter, jitter)``."""
    layer = make_layer(method, order)
    base = default_params(method, order) if base is None else np.asarray(base, dtype=float)
    rows = 1 if tied else depth
    rng = make_rng(seed)
    eff = base * (1.0 + rng.uniform(-jitter, jitter, size=(rows, base.size)))
    raw = to_raw(np.asarray(layer.positive, dtype=bool), eff)
    return UnrollingModel(method, depth, raw, tied, order)


def tied_model(method: str, depth: int, params, order: int = 1) -> UnrollingModel:
    """Every layer set to the same effective ``params`` (e.g. the MB hyperparameters)."""
    layer = make_layer(method, order)
    raw = to_raw(np.asarray(layer.positive, dtype=bool), np.asarray(params, dtype=float))
    return UnrollingModel(method, depth, np.tile(raw, (depth, 1)), False, order)


@dataclass
class ForwardTrace:
    states: list
    caches: list
    batched: bool


def unroll_forward(model: UnrollingModel, s: np.ndarray, keep_caches: bool = True):
    """Run all layers from the method's initialization.

    Accepts one similarity ``(N, N)`` or a batch ``(B, N, N)``; returns the
    adjacency estimate(s) and the trace of per-layer states.
    """
    s = np.asarray(s, dtype=float)
    batched = s.ndim == 3
    sb = s if batched else s[None]
    layer = model.layer
    state = layer.init_state(sb)
    states, caches = [state], []
    for i in range(model.depth):
        try:
            state, cache = layer.forward(state, sb, model.effective(i))
        except GSLError as exc:
            raise LayerError(i, exc) from exc
        states.append(state)
        if keep_caches:
            caches.append(cache)
    est = layer.readout(state)
    return (est if batched else est[0]), ForwardTrace(states, caches, batched)


def unroll_backward(model: UnrollingModel, trace: ForwardTrace, g_est: np.ndarray):
    """Reverse sweep; returns gradients w.r.t. ``model.raw`` and the similarity input."""
    if len(trace.caches) != model.depth:
        raise ContractError("trace has no caches for a full backward pass")
    layer = model.layer
    g = np.asarray(g_est, dtype=float)
    if not trace.batched:
        g = g[None]
    g_state = layer.readout_vjp(trace.states[-1], g)
    g_raw = np.zeros_like(model.raw)
    g_s = 0.0
    for i in reversed(range(model.depth)):
        g_state, g_theta, g_si = layer.vjp(trace.caches[i], g_state)
        r = model.raw[model.row(i)]
        g_theta = np.where(model.positive, g_theta * softplus_grad(r), g_theta)
        g_raw[model.row(i)] += g_theta
        g_s = g_s + g_si
    g_s = np.asarray(g_s)
    return g_raw, (g_s if trace.batched else g_s[0])


def layer_views(model: UnrollingModel, trace: ForwardTrace) -> list:
    """Adjacency view of every state in a trace (initialization included)."""
    return [model.layer.readout(st) for st in trace.states]
