"""Model-based graph learning solvers.

Each method is a single-iteration map ``state -> state`` plus a shared
fixed-point loop.

gaussian (graphical lasso, alternating minimization)
    minimize  Tr(S T) + rho ||T||_1 - beta log det T   over T > 0.
    A quadratic penalty couples T to a sparse copy Z with weight 1/(2 lam)::

        M  = S - Z / lam                        (eigendecomposed, M = U diag(g) U^T)
        T' = U diag(lam/2 (-g + sqrt(g^2 + 4 beta / lam))) U^T
        Z' = soft_threshold(T', rho * lam)

smooth (log-degree barrier, forward-backward-forward primal-dual)
    minimize  2 z^T w - alpha 1^T log(K w) + beta ||w||^2   over w >= 0,
    with ``z = vec_upper(S)`` for a squared-distance matrix S and ``K`` the
    degree map. One iteration with step gamma::

        y  = w - gamma (2 beta w + K^T d)       yd = d + gamma K w
        p  = max(0, y - 2 gamma z)              pd = (yd - sqrt(yd^2 + 4 alpha gamma)) / 2
        q  = p - gamma (2 beta p + K^T pd)      qd = pd + gamma K p
        w' = w - y + q                          d' = d - yd + qd

    Stable for ``0 < gamma < 1 / (2 beta + ||K||)`` with ``||K|| = sqrt(2(N-1))``.

diffusion (polynomial fit, proximal gradient with backtracking)
    minimize  ||S - sum_i c_i A^i||_F^2 + beta ||A||_1   over A in C
    (C: symmetric, nonnegative, zero diagonal)::

        R    = -2 (S - sum_i c_i A^i)
        grad = sum_{i>=1} c_i sum_{j<i} A^j R A^(i-1-j)
        A'   = project_constraints(soft_threshold(A - t grad, t beta))

    ``t`` starts from the carried step, halves until the standard sufficient
    decrease test passes, and grows by 1.25 after each accepted step.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .core import (
    degree_map, degree_map_norm, devec_upper, matrix_powers, project_constraints,
    soft_threshold, sym_eig, vec_upper,
)
from .errors import ContractError, DomainError, GSLError, ParameterError, SolverError, StepFailure

METHODS = ("gaussian", "smooth", "diffusion")
DEFAULT_GAMMA = {"gaussian": 0.05, "smooth": 0.05, "diffusion": 1.0}
SIMILARITY_FOR = {"gaussian": ("covariance", "correlation"), "smooth": ("distance",),
                  "diffusion": ("covariance", "correlation")}

INIT_EPS = 1e-6
MAX_HALVINGS = 60
STEP_GROWTH = 1.25
MAX_STEP = 1e6
DIVERGENCE = 1e12


@dataclass
class MBHyperparams:
    method: str = "diffusion"
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float | None = None
    poly_alpha: tuple[float, ...] = (1.0, 0.5)
    lambda_pen: float = 1.0
    rho_l1: float = 0.01
    line_search: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.gamma is None:
            self.gamma = DEFAULT_GAMMA[self.method]
        self.poly_alpha = tuple(float(c) for c in np.atleast_1d(self.poly_alpha))
        if self.method == "gaussian":
            if self.lambda_pen <= 0 or self.beta <= 0 or self.rho_l1 < 0:
                raise ParameterError("gaussian needs lambda_pen > 0, beta > 0, rho_l1 >= 0")
        elif self.method == "smooth":
            if self.alpha <= 0 or self.beta < 0 or self.gamma <= 0:
                raise ParameterError("smooth needs alpha > 0, beta >= 0, gamma > 0")
        else:
            if self.beta < 0 or self.gamma <= 0 or len(self.poly_alpha) == 0:
                raise ParameterError("diffusion needs beta >= 0, gamma > 0 and poly_alpha")


@dataclass
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 5000
    record_trace: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter}")


class GaussianState(NamedTuple):
    theta: np.ndarray
    z: np.ndarray


class SmoothState(NamedTuple):
    w: np.ndarray
    dual: np.ndarray


class DiffusionState(NamedTuple):
    a: np.ndarray
    step: float


@dataclass
class SolveResult:
    estimate: np.ndarray
    state: tuple
    iterations: int
    terminated: str
    residual: float
    residual_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def theta(self):
        return self.state.theta if isinstance(self.state, GaussianState) else None


def initial_state(method: str, s: np.ndarray, hp: MBHyperparams | None = None):
    n = s.shape[-1]
    if method == "gaussian":
        return GaussianState(np.diag(1.0 / (np.diag(s) + INIT_EPS)), np.zeros((n, n)))
    if method == "smooth":
        w = np.full(n * (n - 1) // 2, 1.0 / n)
        return SmoothState(w, degree_map(w, "forward"))
    step = hp.gamma if hp is not None else DEFAULT_GAMMA["diffusion"]
    return DiffusionState(np.zeros((n, n)), float(step))


def state_estimate(state) -> np.ndarray:
    """Adjacency view of a solver state."""
    if isinstance(state, GaussianState):
        return project_constraints(np.abs(state.theta))
    if isinstance(state, SmoothState):
        return devec_upper(np.maximum(state.w, 0.0))
    return state.a


def _bundle(state) -> np.ndarray:
    # the line-search step is bookkeeping, not part of the iterate
    if isinstance(state, DiffusionState):
        return state.a.ravel()
    return np.concatenate([np.ravel(x) for x in state])


# -- objectives ---------------------------------------------------------------

def _logdet_pd(theta: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(theta)
    lam_min = np.linalg.eigvalsh(0.5 * (theta + theta.T))[0]
    if sign <= 0 or lam_min <= 0:
        raise DomainError(f"precision is not positive definite (min eigenvalue {lam_min:.3e})")
    return float(logdet)


def smooth_objective(w: np.ndarray, z: np.ndarray, alpha: float, beta: float) -> float:
    w = np.maximum(w, 0.0)
    d = degree_map(w, "forward")
    if np.any(d <= 0):
        return float("inf")
    return float(2.0 * z @ w - alpha * np.sum(np.log(d)) + beta * w @ w)


def diffusion_fit(a: np.ndarray, s: np.ndarray, poly_alpha) -> tuple[float, np.ndarray, list]:
    """Value and gradient of ``||S - sum_i c_i A^i||_F^2``; also returns the powers."""
    c = np.asarray(poly_alpha, dtype=float)
    powers = matrix_powers(a, c.size - 1)
    h = sum(ci * p for ci, p in zip(c, powers))
    resid = s - h
    r = -2.0 * resid
    grad = np.zeros_like(a)
    for i in range(1, c.size):
        if c[i] == 0.0:
            continue
        for j in range(i):
            grad = grad + c[i] * (powers[j] @ r @ powers[i - 1 - j])
    return float(np.sum(resid * resid)), grad, powers


def objective(method: str, state, s: np.ndarray, hp: MBHyperparams) -> float:
    """Value of the method's model-based objective at ``state``.

    The smooth objective is evaluated at the nonnegative part of ``w`` and is
    ``+inf`` when a node has zero degree.
    """
    s = np.asarray(s, dtype=float)
    if method == "gaussian":
        theta = state.theta
        return float(np.sum(s * theta) + hp.rho_l1 * np.abs(theta).sum()
                     - hp.beta * _logdet_pd(theta))
    if method == "smooth":
        return smooth_objective(state.w, vec_upper(s), hp.alpha, hp.beta)
    if method == "diffusion":
        fit, _, _ = diffusion_fit(state.a, s, hp.poly_alpha)
        return fit + hp.beta * float(np.abs(state.a).sum())
    raise ParameterError(f"unknown method {method!r}")


# -- single iterations --------------------------------------------------------

def glasso_theta_map(gam: np.ndarray, lam: float, beta: float = 1.0) -> np.ndarray:
    """Positive root of ``t^2 / lam + g t - beta = 0`` applied per eigenvalue."""
    return 0.5 * lam * (-gam + np.sqrt(gam * gam + 4.0 * beta / lam))


def glasso_am_step(state: GaussianState, s: np.ndarray, hp: MBHyperparams) -> GaussianState:
    lam = hp.lambda_pen
    eig = sym_eig(s - state.z / lam)
    theta = (eig.u * glasso_theta_map(eig.lam, lam, hp.beta)) @ eig.u.T
    theta = 0.5 * (theta + theta.T)
    return GaussianState(theta, soft_threshold(theta, hp.rho_l1 * lam))


def smooth_step_bound(n: int, beta: float) -> float:
    return 1.0 / (2.0 * beta + degree_map_norm(n))


def smooth_pds_step(state: SmoothState, s: np.ndarray, hp: MBHyperparams) -> SmoothState:
    z = vec_upper(s)
    n = s.shape[-1]
    g, a, b = hp.gamma, hp.alpha, hp.beta
    bound = smooth_step_bound(n, b)
    if not 0 < g < bound:
        raise ParameterError(f"smooth step gamma={g} outside stable range (0, {bound:.6g})")
    w, d = state
    y = w - g * (2.0 * b * w + degree_map(d, "adjoint"))
    yd = d + g * degree_map(w, "forward")
    p = np.maximum(0.0, y - 2.0 * g * z)
    pd = 0.5 * (yd - np.sqrt(yd * yd + 4.0 * a * g))
    q = p - g * (2.0 * b * p + degree_map(pd, "adjoint"))
    qd = pd + g * degree_map(p, "forward")
    return SmoothState(w - y + q, d - yd + qd)


def _prox_diffusion(v: np.ndarray, t: float, beta: float) -> np.ndarray:
    return project_constraints(soft_threshold(v, t * beta))


def diffusion_pgd_step(state: DiffusionState, s: np.ndarray, hp: MBHyperparams) -> DiffusionState:
    a, t = state
    fit, grad, _ = diffusion_fit(a, s, hp.poly_alpha)
    if not hp.line_search:
        return DiffusionState(_prox_diffusion(a - t * grad, t, hp.beta), t)
    for _ in range(MAX_HALVINGS + 1):
        a_new = _prox_diffusion(a - t * grad, t, hp.beta)
        diff = a_new - a
        fit_new, _, _ = diffusion_fit(a_new, s, hp.poly_alpha)
        bound = fit + np.sum(grad * diff) + np.sum(diff * diff) / (2.0 * t)
        if fit_new <= bound + 1e-12 * max(1.0, abs(fit)):
            break
        t *= 0.5
    else:
        raise StepFailure(f"backtracking exhausted {MAX_HALVINGS} halvings")
    f_old = fit + hp.beta * np.abs(a).sum()
    f_new = fit_new + hp.beta * np.abs(a_new).sum()
    if f_new > f_old + 1e-10 * max(1.0, abs(f_old)):
        raise StepFailure(f"objective increased from {f_old!r} to {f_new!r}")
    return DiffusionState(a_new, min(t * STEP_GROWTH, MAX_STEP))


STEPS = {"gaussian": glasso_am_step, "smooth": smooth_pds_step, "diffusion": diffusion_pgd_step}


def step(method: str, state, s: np.ndarray, hp: MBHyperparams):
    return STEPS[method](state, s, hp)


# -- driver -------------------------------------------------------------------

def _check_kind(method: str, kind: str | None) -> None:
    if kind is not None and kind not in SIMILARITY_FOR[method]:
        raise ContractError(f"method {method!r} expects similarity in {SIMILARITY_FOR[method]}, got {kind!r}")


def fixed_point_solve(s: np.ndarray, hp: MBHyperparams, cfg: SolverConfig | None = None,
                      kind: str | None = None, state=None) -> SolveResult:
    """Iterate the method's step until the relative change of the state is <= tol.

    The change is ``||x' - x||_F / max(||x||_F, 1)`` over the whole iterate
    (both blocks for gaussian and smooth, ``A`` alone for diffusion).
    """
    cfg = cfg or SolverConfig()
    method = hp.method
    _check_kind(method, kind)
    s = np.asarray(s, dtype=float)
    if state is None:
        state = initial_state(method, s, hp)
    fn = STEPS[method]
    residuals, objectives = [], []
    terminated, res = "max_iter", float("inf")
    it = 0
    for it in range(1, cfg.max_iter + 1):
        try:
            new = fn(state, s, hp)
        except GSLError as exc:
            raise SolverError(it, exc) from exc
        old_b, new_b = _bundle(state), _bundle(new)
        res = float(np.linalg.norm(new_b - old_b) / max(np.linalg.norm(old_b), 1.0))
        if not np.isfinite(res) or res > DIVERGENCE:
            raise SolverError(it, StepFailure(f"diverged (relative change {res:.3e})"))
        state = new
        if cfg.record_trace:
            residuals.append(res)
            objectives.append(objective(method, state, s, hp))
        if res <= cfg.tol:
            terminated = "converged"
            break
    return SolveResult(state_estimate(state), state, it, terminated, res,
                       np.asarray(residuals), np.asarray(objectives))


def solve_batch(similarities, hp: MBHyperparams, cfg: SolverConfig | None = None,
                kind: str | None = None, jobs: int = 1) -> list:
    """Solve independent instances; results are ordered by index regardless of ``jobs``.

    Failed instances are returned as the exception object instead of a result.
    """
    def one(s):
        try:
            return fixed_point_solve(s, hp, cfg, kind)
        except GSLError as exc:
            return exc

    if jobs <= 1:
        return [one(s) for s in similarities]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, similarities))


# -- optimality ---------------------------------------------------------------

def kkt_residual(method: str, state, s: np.ndarray, hp: MBHyperparams) -> float:
    """Distance from first-order optimality.

    gaussian: ``min_G ||S - beta T^-1 + rho G||_max`` over subgradients G of
    ``||.||_1`` at the sparse copy Z. smooth: natural residual
    ``||w - max(w - grad, 0)||_max`` at ``w = max(w, 0)``. diffusion: ``||A - prox(A - t grad)||_F / t``.
    """
    s = np.asarray(s, dtype=float)
    if method == "gaussian":
        _logdet_pd(state.theta)
        r0 = s - hp.beta * np.linalg.inv(state.theta)
        rho = hp.rho_l1
        r = np.where(state.z != 0, r0 + rho * np.sign(state.z),
                     np.sign(r0) * np.maximum(np.abs(r0) - rho, 0.0))
        return float(np.max(np.abs(r)))
    if method == "smooth":
        w = np.maximum(state.w, 0.0)
        d = degree_map(w, "forward")
        if np.any(d <= 0):
            return float("inf")
        g = 2.0 * vec_upper(s) - hp.alpha * degree_map(1.0 / d, "adjoint") + 2.0 * hp.beta * w
        return float(np.max(np.abs(w - np.maximum(w - g, 0.0))))
    if method == "diffusion":
        t = state.step if isinstance(state, DiffusionState) else 1.0
        _, grad, _ = diffusion_fit(state.a, s, hp.poly_alpha)
        return float(np.linalg.norm(state.a - _prox_diffusion(state.a - t * grad, t, hp.beta)) / t)
    raise ParameterError(f"unknown method {method!r}")


def with_params(hp: MBHyperparams, **changes) -> MBHyperparams:
    return replace(hp, **changes)
