"""Central finite-difference validation of the layer VJPs.

Random instances are redrawn until they sit at least ``margin`` away from
every kink (soft-threshold and clamp boundaries) and, for GLAD, have all
eigenvalue gaps above ``gap``; the derivatives checked are then classical.
"""
from __future__ import annotations

import numpy as np

from ..core import degree_map, sym_eig, symmetrize, vec_upper
from ..synth import make_rng, similarity
from .layers import make_layer


def _sym(rng, n, hollow=False):
    m = symmetrize(rng.standard_normal((1, n, n)))
    if hollow:
        m[:, np.arange(n), np.arange(n)] = 0.0
    return m


def random_instance(method: str, n: int, rng, order: int = 2):
    """``(state, S, theta)`` for a batch of one."""
    if method == "glad":
        x = rng.standard_normal((n, 3 * n))
        s = similarity(x, "covariance")[None]
        z = 0.3 * _sym(rng, n)
        th0 = np.eye(n)[None] * 2.0
        theta = np.array([rng.uniform(0.5, 2.0), rng.uniform(0.01, 0.2)])
        return (th0, z), s, theta
    if method == "l2g":
        x = rng.standard_normal((n, 5))
        s = similarity(x, "distance")[None] / 5.0
        e = n * (n - 1) // 2
        w = rng.uniform(0.0, 1.0, (1, e))
        d = -rng.uniform(0.2, 2.0, (1, n))
        theta = np.array([rng.uniform(0.5, 2.0), rng.uniform(0.1, 1.0), rng.uniform(0.02, 0.1)])
        return (w, d), s, theta
    a = np.abs(_sym(rng, n, hollow=True)) * 0.5
    x = rng.standard_normal((n, 3 * n))
    s = similarity(x, "covariance")[None]
    coef = rng.standard_normal(order + 1) * 0.5
    theta = np.concatenate([[rng.uniform(0.01, 0.2), rng.uniform(0.05, 0.3)], coef])
    return (a,), s, theta


def _well_posed(method, layer, state, s, theta, margin, gap):
    if method == "glad":
        ev = sym_eig(s - state[1] / theta[0]).lam
        if np.min(np.diff(ev, axis=-1)) < gap:
            return False
    _, cache = layer.forward(state, s, theta)
    if method == "glad":
        dist = np.abs(np.abs(cache["theta"]) - theta[0] * theta[1])
    elif method == "l2g":
        a, b, g = theta
        w, d = state
        y = w - g * (2.0 * b * w + degree_map(d, "adjoint"))
        dist = np.abs(y - 2.0 * g * vec_upper(s))
    else:
        off = ~np.eye(s.shape[-1], dtype=bool)
        dist = np.abs(np.abs(cache["v"]) - cache["t"] * cache["beta"])[:, off]
    return bool(np.min(dist) > margin)


def _directions(method, state, s, rng):
    n = s.shape[-1]
    if method == "l2g":
        d_state = tuple(rng.standard_normal(x.shape) for x in state)
        d_s = _sym(rng, n, hollow=True)
    elif method == "glad":
        d_state = (_sym(rng, n), _sym(rng, n))
        d_s = _sym(rng, n)
    else:
        d_state = (_sym(rng, n, hollow=True),)
        d_s = _sym(rng, n)
    return d_state, d_s


def check_instance(method, state, s, theta, rng, h=1e-6, order=2):
    """Max relative error between VJP-based and central-difference derivatives."""
    layer = make_layer(method, order)
    out, cache = layer.forward(state, s, theta)
    g_out = tuple(rng.standard_normal(o.shape) for o in out)
    g_state, g_theta, g_s = layer.vjp(cache, g_out)

    def phi(st, ss, th):
        o, _ = layer.forward(st, ss, th)
        return sum(float(np.sum(go * oo)) for go, oo in zip(g_out, o))

    d_state, d_s = _directions(method, state, s, rng)
    fd, an = [], []
    for k, dk in enumerate(d_state):
        plus = tuple(x + h * dk if i == k else x for i, x in enumerate(state))
        minus = tuple(x - h * dk if i == k else x for i, x in enumerate(state))
        fd.append((phi(plus, s, theta) - phi(minus, s, theta)) / (2 * h))
        an.append(float(np.sum(g_state[k] * dk)))
    fd.append((phi(state, s + h * d_s, theta) - phi(state, s - h * d_s, theta)) / (2 * h))
    an.append(float(np.sum(g_s * d_s)))
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h * max(1.0, abs(theta[j]))
        fd.append((phi(state, s, theta + e) - phi(state, s, theta - e)) / (2 * e[j]))
        an.append(float(g_theta[j]))
    fd, an = np.asarray(fd), np.asarray(an)
    scale = max(np.max(np.abs(fd)), np.max(np.abs(an)), 1e-300)
    return float(np.max(np.abs(fd - an)) / scale)


def finite_diff_check(method: str, n: int = 4, seeds=range(20), h: float = 1e-6,
                      margin: float = 1e-4, gap: float = 1e-4, order: int = 2) -> float:
    """Worst relative VJP error over ``seeds`` random well-posed instances."""
    if n > 8:
        raise ValueError("finite_diff_check is limited to n <= 8")
    layer = make_layer(method, order)
    worst = 0.0
    for seed in seeds:
        rng = make_rng(int(seed))
        while True:
            state, s, theta = random_instance(method, n, rng, order)
            if _well_posed(method, layer, state, s, theta, margin, gap):
                break
        worst = max(worst, check_instance(method, state, s, theta, rng, h, order))
    return worst
