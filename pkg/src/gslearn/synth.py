"""Random graph ensembles, generative signal models and similarity transforms.

Randomness comes from numpy's PCG64 bit generator (``numpy.random.Generator``),
seeded with a 64-bit unsigned integer. Per-sample seeds inside a dataset are
derived from the master seed with SplitMix64, so sample ``i`` is the same no
matter in which order, or on how many workers, samples are generated.

Graph ensembles (all unweighted, undirected, no self-loops):

``ER``    ``p``: each of the N(N-1)/2 pairs is an edge independently with
          probability ``p`` (pairs drawn in upper-triangle row-major order).
``BA``    ``m``: Barabasi-Albert growth. Nodes ``0..m-1`` are the seed targets;
          each new node ``v = m..N-1`` attaches to ``m`` distinct earlier nodes
          drawn without replacement with probability proportional to
          degree (isolated seed nodes count as degree 1).
``WS``    ``k`` (even), ``p``: Watts-Strogatz ring lattice with ``k/2``
          neighbours per side; each lattice edge ``(i, i+j)`` is rewired with
          probability ``p`` to ``(i, u)``, ``u`` uniform over non-neighbours.
``SBM``   ``sizes``, ``probs``: stochastic block model; pair ``(i, j)`` in
          blocks ``(b, c)`` is an edge with probability ``probs[b][c]``.
``grid``  ``rows``, ``cols``: 4-neighbour lattice, node ``r * cols + c``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .core import laplacian, matrix_polynomial, sym_eig, upper_indices
from .errors import ContractError, DimensionError, NumericError, ParameterError

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

ENSEMBLES = ("ER", "BA", "WS", "SBM", "grid")
SIGNAL_MODELS = ("smooth", "diffuse", "gaussian")
SIMILARITY_KINDS = ("covariance", "correlation", "distance")


def splitmix64(x: int) -> int:
    z = (x + GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(master: int, index: int, stream: int = 0) -> int:
    """Seed for sample ``index`` on a given ``stream`` (0: graph, 1: signals)."""
    x = splitmix64((master & MASK64) ^ splitmix64(index & MASK64))
    return splitmix64(x ^ ((stream * GOLDEN64) & MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


@dataclass
class GraphEnsembleSpec:
    ensemble: str = "ER"
    n: int = 20
    params: dict[str, Any] = field(default_factory=lambda: {"p": 0.3})
    seed: int = 0

    def validate(self) -> None:
        ens, prm = self.ensemble, self.params
        if ens not in ENSEMBLES:
            raise ParameterError(f"unknown ensemble {ens!r}; choose from {ENSEMBLES}")
        if ens == "grid":
            rows, cols = int(prm["rows"]), int(prm["cols"])
            if rows < 1 or cols < 1 or rows * cols != self.n:
                raise ParameterError(f"grid {rows}x{cols} does not have n={self.n} nodes")
            return
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if ens == "ER":
            if not 0.0 <= float(prm["p"]) <= 1.0:
                raise ParameterError(f"ER p must lie in [0, 1], got {prm['p']}")
        elif ens == "BA":
            m = int(prm["m"])
            if not 1 <= m < self.n:
                raise ParameterError(f"BA m must satisfy 1 <= m < n, got m={m}, n={self.n}")
        elif ens == "WS":
            k, p = int(prm["k"]), float(prm["p"])
            if k % 2 or not 2 <= k < self.n:
                raise ParameterError(f"WS k must be even with 2 <= k < n, got {k}")
            if not 0.0 <= p <= 1.0:
                raise ParameterError(f"WS p must lie in [0, 1], got {p}")
        elif ens == "SBM":
            sizes = [int(s) for s in prm["sizes"]]
            probs = np.asarray(prm["probs"], dtype=float)
            if sum(sizes) != self.n or min(sizes) < 1:
                raise ParameterError(f"SBM block sizes {sizes} must be positive and sum to n={self.n}")
            if probs.shape != (len(sizes), len(sizes)) or not np.allclose(probs, probs.T):
                raise ParameterError("SBM probs must be a symmetric blocks x blocks matrix")
            if np.any(probs < 0) or np.any(probs > 1):
                raise ParameterError("SBM probabilities must lie in [0, 1]")


@dataclass
class SignalModelSpec:
    model: str = "smooth"
    p_signals: int = 50
    eps: float = 0.01
    alpha: tuple[float, ...] = (1.0, 0.5)
    noise_sigma: float = 0.0
    eps_pd: float = 0.05
    # diffuse only: replace the white excitation by one with identity sample covariance
    whiten: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.model not in SIGNAL_MODELS:
            raise ParameterError(f"unknown signal model {self.model!r}; choose from {SIGNAL_MODELS}")
        if self.p_signals < 1:
            raise ParameterError(f"p_signals must be >= 1, got {self.p_signals}")
        if self.model == "smooth" and not self.eps > 0:
            raise ParameterError(f"smooth eps must be > 0, got {self.eps}")
        if self.model == "gaussian" and not self.eps_pd > 0:
            raise ParameterError(f"gaussian eps_pd must be > 0, got {self.eps_pd}")
        if self.model == "diffuse":
            if len(self.alpha) == 0:
                raise ParameterError("diffuse alpha needs at least one coefficient")
            if self.noise_sigma < 0:
                raise ParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass
class Dataset:
    """Ordered ``(A_L, X, S)`` samples; the first ``train`` are the training split, etc."""

    adjacency: np.ndarray  # (M, N, N)
    signals: np.ndarray  # (M, N, P)
    similarity: np.ndarray  # (M, N, N)
    kind: str
    sizes: dict[str, int]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.adjacency.shape[-1]

    @property
    def p(self) -> int:
        return self.signals.shape[-1]

    def __len__(self) -> int:
        return self.adjacency.shape[0]

    def split_slice(self, name: str) -> slice:
        tr, va = self.sizes["train"], self.sizes["val"]
        bounds = {"train": (0, tr), "val": (tr, tr + va), "test": (tr + va, len(self)),
                  "all": (0, len(self))}
        if name not in bounds:
            raise ParameterError(f"unknown split {name!r}")
        return slice(*bounds[name])

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """``(similarities, targets)`` for one split."""
        sl = self.split_slice(name)
        return self.similarity[sl], self.adjacency[sl]


def _er(n, p, rng):
    iu, ju = upper_indices(n)
    mask = rng.random(iu.size) < p
    a = np.zeros((n, n))
    a[iu[mask], ju[mask]] = 1.0
    return a + a.T


def _ba(n, m, rng):
    a = np.zeros((n, n))
    for v in range(m, n):
        deg = a[:v, :v].sum(axis=1)
        w = np.where(deg > 0, deg, 1.0)
        targets = rng.choice(v, size=m, replace=False, p=w / w.sum())
        a[v, targets] = 1.0
        a[targets, v] = 1.0
    return a


def _ws(n, k, p, rng):
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(1, k // 2 + 1):
            a[i, (i + j) % n] = a[(i + j) % n, i] = 1.0
    for j in range(1, k // 2 + 1):
        for i in range(n):
            u = (i + j) % n
            if rng.random() < p and a[i, u] == 1.0:
                free = np.flatnonzero((a[i] == 0) & (np.arange(n) != i))
                if free.size == 0:
                    continue
                new = free[rng.integers(free.size)]
                a[i, u] = a[u, i] = 0.0
                a[i, new] = a[new, i] = 1.0
    return a


def _sbm(sizes, probs, rng):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    iu, ju = upper_indices(n)
    pr = np.asarray(probs, dtype=float)[labels[iu], labels[ju]]
    mask = rng.random(iu.size) < pr
    a = np.zeros((n, n))
    a[iu[mask], ju[mask]] = 1.0
    return a + a.T


def _grid(rows, cols):
    n = rows * cols
    a = np.zeros((n, n))
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                a[v, v + 1] = a[v + 1, v] = 1.0
            if r + 1 < rows:
                a[v, v + cols] = a[v + cols, v] = 1.0
    return a


def sample_graph(spec: GraphEnsembleSpec) -> np.ndarray:
    """Draw one binary adjacency matrix; deterministic in ``spec.seed``."""
    spec.validate()
    rng = make_rng(spec.seed)
    prm = spec.params
    if spec.ensemble == "ER":
        return _er(spec.n, float(prm["p"]), rng)
    if spec.ensemble == "BA":
        return _ba(spec.n, int(prm["m"]), rng)
    if spec.ensemble == "WS":
        return _ws(spec.n, int(prm["k"]), float(prm["p"]), rng)
    if spec.ensemble == "SBM":
        return _sbm([int(s) for s in prm["sizes"]], prm["probs"], rng)
    return _grid(int(prm["rows"]), int(prm["cols"]))


def _sample_precision(theta: np.ndarray, p: int, rng: np.random.Generator) -> np.ndarray:
    # x = U diag(lam^-1/2) z has covariance theta^-1
    eig = sym_eig(theta)
    if eig.lam[0] <= 0:
        raise ContractError(f"precision is not positive definite (min eigenvalue {eig.lam[0]:.3e})")
    z = rng.standard_normal((theta.shape[0], p))
    return eig.u @ (z / np.sqrt(eig.lam)[:, None])


def gaussian_precision(a: np.ndarray, eps_pd: float = 0.05) -> np.ndarray:
    """Diagonally loaded precision ``A + (|lambda_min(A)| + eps_pd) I``."""
    lam_min = sym_eig(a).lam[0]
    return a + (abs(lam_min) + eps_pd) * np.eye(a.shape[0])


def _whiten(w: np.ndarray) -> np.ndarray:
    n, p = w.shape
    if p < n:
        raise ParameterError(f"whitening needs p_signals >= n ({p} < {n})")
    eig = sym_eig(w @ w.T / p)
    return eig.u @ ((eig.u.T @ w) / np.sqrt(eig.lam)[:, None])


def generate_signals(a: np.ndarray, spec: SignalModelSpec) -> np.ndarray:
    """Draw an ``(N, P)`` signal matrix on graph ``a``; deterministic in ``spec.seed``."""
    spec.validate()
    a = np.asarray(a, dtype=float)
    rng = make_rng(spec.seed)
    n, p = a.shape[0], spec.p_signals
    if spec.model == "smooth":
        return _sample_precision(laplacian(a) + spec.eps * np.eye(n), p, rng)
    if spec.model == "gaussian":
        return _sample_precision(gaussian_precision(a, spec.eps_pd), p, rng)
    w = rng.standard_normal((n, p))
    if spec.whiten:
        w = _whiten(w)
    x = matrix_polynomial(a, spec.alpha) @ w
    if spec.noise_sigma > 0:
        x = x + spec.noise_sigma * rng.standard_normal((n, p))
    return x


def similarity(x: np.ndarray, kind: str = "covariance", center: bool = False) -> np.ndarray:
    """Node-by-node similarity of an ``(N, P)`` signal matrix.

    ``covariance`` is ``X X^T / P`` (uncentered unless ``center``), ``correlation``
    normalizes it to unit diagonal, ``distance`` holds squared Euclidean
    distances between rows.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"signals must be (N, P), got shape {x.shape}")
    if kind not in SIMILARITY_KINDS:
        raise ParameterError(f"unknown similarity kind {kind!r}")
    if kind == "distance":
        sq = np.sum(x * x, axis=1)
        z = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        z = np.maximum(0.5 * (z + z.T), 0.0)
        np.fill_diagonal(z, 0.0)
        return z
    if center:
        x = x - x.mean(axis=1, keepdims=True)
    cov = x @ x.T / x.shape[1]
    cov = 0.5 * (cov + cov.T)
    if kind == "covariance":
        return cov
    if x.shape[1] < 2:
        raise NumericError("correlation needs at least 2 signals")
    d = np.diag(cov).copy()
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise NumericError(f"row {bad[0]} has zero variance; correlation undefined")
    s = np.sqrt(d)
    corr = cov / np.outer(s, s)
    np.fill_diagonal(corr, 1.0)
    return corr


def build_dataset(
    gspec: GraphEnsembleSpec,
    sspec: SignalModelSpec,
    kind: str = "covariance",
    sizes: dict[str, int] | None = None,
    seed: int | None = None,
    center: bool = False,
) -> Dataset:
    """Fresh graph and fresh signals for every sample, seeded per sample index."""
    sizes = dict(sizes or {"train": 500, "val": 100, "test": 100})
    if any(sizes.get(k, 0) < 0 for k in ("train", "val", "test")):
        raise ParameterError(f"split sizes must be >= 0, got {sizes}")
    sizes = {k: int(sizes.get(k, 0)) for k in ("train", "val", "test")}
    total = sum(sizes.values())
    if total == 0:
        raise ParameterError("at least one split size must be nonzero")
    if kind not in SIMILARITY_KINDS:
        raise ParameterError(f"unknown similarity kind {kind!r}")
    gspec.validate()
    sspec.validate()
    master = gspec.seed if seed is None else seed
    n, p = gspec.n, sspec.p_signals
    adj = np.empty((total, n, n))
    sig = np.empty((total, n, p))
    sim = np.empty((total, n, n))
    for i in range(total):
        g = GraphEnsembleSpec(gspec.ensemble, n, gspec.params, child_seed(master, i, 0))
        a = sample_graph(g)
        s = SignalModelSpec(**{**asdict(sspec), "seed": child_seed(master, i, 1)})
        x = generate_signals(a, s)
        adj[i], sig[i], sim[i] = a, x, similarity(x, kind, center)
    metadata = {
        "graph": {k: v for k, v in asdict(gspec).items() if k != "seed"},
        "signals": {**{k: v for k, v in asdict(sspec).items() if k != "seed"},
                    "alpha": list(sspec.alpha)},
        "similarity": kind,
        "center": center,
        "seed": master,
        "sizes": sizes,
    }
    return Dataset(adj, sig, sim, kind, sizes, metadata)
