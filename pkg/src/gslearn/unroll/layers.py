"""Single unrolled layers with hand-derived vector-Jacobian products.

A layer maps ``(state, S, theta) -> state'`` and is batched over a leading
axis: matrices are ``(B, N, N)``, edge vectors ``(B, E)``. ``theta`` holds the
layer's effective (already positive where required) parameters and is shared
across the batch; parameter gradients are summed over the batch.

Gradients w.r.t. symmetric matrix inputs are valid for symmetric perturbations,
which are the only ones the forward maps admit.
"""
from __future__ import annotations

import numpy as np

from ..core import (
    degree_map, devec_upper, matrix_powers, project_constraints, soft_threshold, sym_eig,
    symmetrize, vec_upper,
)
from ..errors import ContractError, ParameterError
from ..solvers import INIT_EPS, glasso_theta_map

EIG_GAP_GUARD = 1e-12


def _offdiag(n: int) -> np.ndarray:
    return 1.0 - np.eye(n)


def _inner(a, b) -> float:
    return float(np.sum(a * b))


def project_vjp(pre: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Adjoint of ``project_constraints`` at input ``pre``."""
    active = (symmetrize(pre) > 0) * _offdiag(pre.shape[-1])
    return symmetrize(g * active)


def divided_differences(lam: np.ndarray, f: np.ndarray, fprime) -> np.ndarray:
    """``f[l_i, l_j] = (f_i - f_j) / (l_i - l_j)``, or ``f'`` at the midpoint when the
    eigenvalues (numerically) coincide."""
    dl = lam[..., :, None] - lam[..., None, :]
    df = f[..., :, None] - f[..., None, :]
    close = np.abs(dl) < EIG_GAP_GUARD
    mid = 0.5 * (lam[..., :, None] + lam[..., None, :])
    safe = np.where(close, 1.0, dl)
    return np.where(close, fprime(mid), df / safe)


class Cache(dict):
    """Forward intermediates of one layer call; consumed by exactly one VJP."""

    def __init__(self, method, **kw):
        super().__init__(**kw)
        self.method = method
        self.consumed = False

    def take(self, method):
        if self.method != method:
            raise ContractError(f"cache from a {self.method!r} layer passed to {method!r} backward")
        if self.consumed:
            raise ContractError("layer cache already consumed by a backward pass")
        self.consumed = True
        return self


class GladLayer:
    """Alternating-minimization step of the penalized graphical lasso.

    state: ``(Theta, Z)``; theta: ``(lam, rho)``.
    """

    method = "glad"
    names = ("lam", "rho")
    positive = (True, True)
    beta = 1.0

    @staticmethod
    def init_state(s):
        n = s.shape[-1]
        diag = np.diagonal(s, axis1=-2, axis2=-1)
        theta = np.zeros_like(s)
        idx = np.arange(n)
        theta[..., idx, idx] = 1.0 / (diag + INIT_EPS)
        return (theta, np.zeros_like(s))

    def forward(self, state, s, theta):
        lam, rho = float(theta[0]), float(theta[1])
        _, z = state
        eig = sym_eig(s - z / lam)
        f = glasso_theta_map(eig.lam, lam, self.beta)
        th = symmetrize((eig.u * f[..., None, :]) @ np.swapaxes(eig.u, -1, -2))
        tau = rho * lam
        z_new = soft_threshold(th, tau)
        cache = Cache(self.method, u=eig.u, gam=eig.lam, f=f, lam=lam, rho=rho, z=z,
                      theta=th, mask=(np.abs(th) > tau))
        return (th, z_new), cache

    def vjp(self, cache, g_state):
        c = cache.take(self.method)
        g_th, g_z = g_state
        lam, rho, beta = c["lam"], c["rho"], self.beta
        u, gam, f = c["u"], c["gam"], c["f"]
        mask = c["mask"]
        g_t = g_th + g_z * mask
        g_tau = -_inner(g_z * mask, np.sign(c["theta"]))
        gbar = np.swapaxes(u, -1, -2) @ symmetrize(g_t) @ u
        r = np.sqrt(gam * gam + 4.0 * beta / lam)

        def fprime(x):
            return 0.5 * lam * (-1.0 + x / np.sqrt(x * x + 4.0 * beta / lam))

        dd = divided_differences(gam, f, fprime)
        g_m = u @ (dd * gbar) @ np.swapaxes(u, -1, -2)
        df_dlam = 0.5 * (-gam + r) - beta / (lam * r)
        g_lam = (_inner(np.diagonal(gbar, axis1=-2, axis2=-1), df_dlam)
                 + _inner(g_m, c["z"]) / lam ** 2 + g_tau * rho)
        g_rho = g_tau * lam
        g_state_in = (np.zeros_like(g_th), -g_m / lam)
        return g_state_in, np.array([g_lam, g_rho]), g_m

    @staticmethod
    def readout(state):
        return project_constraints(np.abs(state[0]))

    @staticmethod
    def readout_vjp(state, g):
        th = state[0]
        return (np.sign(th) * project_vjp(np.abs(th), g), np.zeros_like(th))


class L2GLayer:
    """Forward-backward-forward primal-dual step of the log-degree smooth model.

    state: ``(w, d)`` edge weights and node duals; theta: ``(alpha, beta, gamma)``.
    """

    method = "l2g"
    names = ("alpha", "beta", "gamma")
    positive = (True, True, True)

    @staticmethod
    def init_state(s):
        n = s.shape[-1]
        e = n * (n - 1) // 2
        w = np.full(s.shape[:-2] + (e,), 1.0 / n)
        return (w, degree_map(w, "forward"))

    def forward(self, state, s, theta):
        a, b, g = (float(x) for x in theta)
        w, d = state
        z = vec_upper(s)
        kt_d = degree_map(d, "adjoint")
        k_w = degree_map(w, "forward")
        y = w - g * (2.0 * b * w + kt_d)
        yd = d + g * k_w
        u = y - 2.0 * g * z
        p = np.maximum(0.0, u)
        r = np.sqrt(yd * yd + 4.0 * a * g)
        pd = 0.5 * (yd - r)
        kt_pd = degree_map(pd, "adjoint")
        k_p = degree_map(p, "forward")
        q = p - g * (2.0 * b * p + kt_pd)
        qd = pd + g * k_p
        cache = Cache(self.method, a=a, b=b, g=g, w=w, z=z, kt_d=kt_d, k_w=k_w, yd=yd,
                      mask=(u > 0), r=r, p=p, kt_pd=kt_pd, k_p=k_p)
        return (w - y + q, d - yd + qd), cache

    def vjp(self, cache, g_state):
        c = cache.take(self.method)
        a, b, g = c["a"], c["b"], c["g"]
        gw_out, gd_out = g_state
        n = gd_out.shape[-1]
        gw, gd = gw_out.copy(), gd_out.copy()
        gy, gq = -gw_out, gw_out
        gyd, gqd = -gd_out, gd_out
        ga = gb = gg = 0.0
        # q = p - g (2 b p + K^T pd)
        gp = (1.0 - 2.0 * g * b) * gq
        gpd = -g * degree_map(gq, "forward", n)
        gg += _inner(gq, -2.0 * b * c["p"] - c["kt_pd"])
        gb += _inner(gq, -2.0 * g * c["p"])
        # qd = pd + g K p
        gpd = gpd + gqd
        gp = gp + g * degree_map(gqd, "adjoint")
        gg += _inner(gqd, c["k_p"])
        # pd = (yd - sqrt(yd^2 + 4 a g)) / 2
        r = c["r"]
        gyd = gyd + gpd * 0.5 * (1.0 - c["yd"] / r)
        g_c = _inner(gpd, -0.25 / r)
        ga += 4.0 * g * g_c
        gg += 4.0 * a * g_c
        # p = max(0, y - 2 g z)
        gu = gp * c["mask"]
        gy = gy + gu
        gz = -2.0 * g * gu
        gg += _inner(gu, -2.0 * c["z"])
        # y = w - g (2 b w + K^T d)
        gw = gw + (1.0 - 2.0 * g * b) * gy
        gd = gd - g * degree_map(gy, "forward", n)
        gg += _inner(gy, -2.0 * b * c["w"] - c["kt_d"])
        gb += _inner(gy, -2.0 * g * c["w"])
        # yd = d + g K w
        gd = gd + gyd
        gw = gw + g * degree_map(gyd, "adjoint")
        gg += _inner(gyd, c["k_w"])
        g_s = 0.5 * devec_upper(gz, n)
        return (gw, gd), np.array([ga, gb, gg]), g_s

    @staticmethod
    def readout(state):
        return devec_upper(np.maximum(state[0], 0.0))

    @staticmethod
    def readout_vjp(state, g):
        w = state[0]
        gw = (vec_upper(g) + vec_upper(np.swapaxes(g, -1, -2))) * (w > 0)
        return (gw, np.zeros(w.shape[:-1] + (g.shape[-1],)))


class GDNLayer:
    """Fixed-step proximal gradient step on the polynomial-fit model.

    state: ``(A,)``; theta: ``(beta, t, c_0, ..., c_K)`` with ``beta, t > 0``.
    """

    method = "gdn"

    def __init__(self, order: int = 1):
        if order < 0:
            raise ContractError(f"polynomial order must be >= 0, got {order}")
        self.order = order
        self.names = ("beta", "t") + tuple(f"c{i}" for i in range(order + 1))
        self.positive = (True, True) + (False,) * (order + 1)

    @staticmethod
    def init_state(s):
        return (np.zeros_like(s),)

    def forward(self, state, s, theta):
        beta, t = float(theta[0]), float(theta[1])
        coef = np.asarray(theta[2:], dtype=float)
        (a,) = state
        powers = matrix_powers(a, self.order)
        h = sum(ci * p for ci, p in zip(coef, powers))
        r = -2.0 * (s - h)
        grad = np.zeros_like(a)
        for i in range(1, coef.size):
            for j in range(i):
                grad = grad + coef[i] * (powers[j] @ r @ powers[i - 1 - j])
        v = a - t * grad
        tau = t * beta
        soft = soft_threshold(v, tau)
        cache = Cache(self.method, beta=beta, t=t, coef=coef, powers=powers, r=r, grad=grad,
                      v=v, soft=soft, mask=(np.abs(v) > tau))
        return (project_constraints(soft),), cache

    def vjp(self, cache, g_state):
        c = cache.take(self.method)
        beta, t, coef, powers, r = c["beta"], c["t"], c["coef"], c["powers"], c["r"]
        (g_out,) = g_state
        g_soft = project_vjp(c["soft"], g_out)
        g_v = g_soft * c["mask"]
        g_tau = -_inner(g_soft * c["mask"], np.sign(c["v"]))
        g_t = g_tau * beta - _inner(g_v, c["grad"])
        g_beta = g_tau * t
        g_a = g_v.copy()
        g_grad = -t * g_v
        g_coef = np.zeros_like(coef)
        g_r = np.zeros_like(r)
        g_pow = [np.zeros_like(r) for _ in powers]
        for i in range(1, coef.size):
            for j in range(i):
                m = i - 1 - j
                term = powers[j] @ r @ powers[m]
                g_coef[i] += _inner(g_grad, term)
                g_r += coef[i] * (powers[j] @ g_grad @ powers[m])
                g_pow[j] += coef[i] * (g_grad @ powers[m] @ r)
                g_pow[m] += coef[i] * (r @ powers[j] @ g_grad)
        # r = -2 S + 2 sum_k c_k A^k
        g_s = -2.0 * g_r
        for k in range(coef.size):
            g_coef[k] += 2.0 * _inner(g_r, powers[k])
            g_pow[k] += 2.0 * coef[k] * g_r
        for k in range(1, coef.size):
            for j in range(k):
                g_a += powers[j] @ g_pow[k] @ powers[k - 1 - j]
        return (g_a,), np.concatenate([[g_beta, g_t], g_coef]), g_s

    @staticmethod
    def readout(state):
        return state[0]

    @staticmethod
    def readout_vjp(state, g):
        return (g,)


def make_layer(method: str, order: int = 1):
    if method == "glad":
        return GladLayer()
    if method == "l2g":
        return L2GLayer()
    if method == "gdn":
        return GDNLayer(order)
    raise ParameterError(f"unknown unrolled method {method!r}")


def layer_forward(method: str, state, s, theta, order: int = 1):
    return make_layer(method, order).forward(state, s, np.asarray(theta, dtype=float))


def layer_vjp(method: str, cache, g_state, order: int = 1):
    return make_layer(method, order).vjp(cache, g_state)
