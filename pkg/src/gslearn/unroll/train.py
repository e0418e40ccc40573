"""Losses, Adam and the mini-batch training loop for unrolled models."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..core import upper_indices
from ..errors import ParameterError, TrainingError
from ..metrics import EvalReport, evaluate_estimates
from ..synth import Dataset, make_rng
from .model import UnrollingModel, unroll_backward, unroll_forward

LOGISTIC_SHARPNESS = 10.0
LOGISTIC_OFFSET = 0.5


def loss(estimate, target, kind: str = "mse"):
    """Per-sample loss values and gradients w.r.t. ``estimate``.

    mse: ``||A_hat - A||_F^2 / max(||A||_F^2, 1)``.
    nll_logistic: mean binary cross-entropy over node pairs of
    ``sigmoid(10 (A_hat - 0.5))`` against ``target > 0``.

    Works on one matrix or a ``(B, N, N)`` stack; returns ``(values, grads)``
    with matching leading shape.
    """
    est = np.asarray(estimate, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if est.shape != tgt.shape:
        raise ParameterError(f"shape mismatch: {est.shape} vs {tgt.shape}")
    if kind == "mse":
        diff = est - tgt
        den = np.maximum(np.sum(tgt * tgt, axis=(-2, -1)), 1.0)
        val = np.sum(diff * diff, axis=(-2, -1)) / den
        return val, 2.0 * diff / den[..., None, None]
    if kind == "nll_logistic":
        iu, ju = upper_indices(est.shape[-1])
        u = LOGISTIC_SHARPNESS * (est[..., iu, ju] - LOGISTIC_OFFSET)
        y = (tgt[..., iu, ju] > 0).astype(float)
        e = max(iu.size, 1)
        val = np.sum(np.logaddexp(0.0, u) - y * u, axis=-1) / e
        sig = 0.5 * (1.0 + np.tanh(0.5 * u))
        grad = np.zeros_like(est)
        grad[..., iu, ju] = LOGISTIC_SHARPNESS * (sig - y) / e
        return val, grad
    raise ParameterError(f"unknown loss {kind!r}")


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        """In-place update of ``params``."""
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    loss: str = "mse"
    seed: int = 0
    patience: int | None = None
    tau: float = 0.5

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("epochs and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ParameterError("learning_rate must be >= 0")
        if self.loss not in ("mse", "nll_logistic"):
            raise ParameterError(f"unknown loss {self.loss!r}")


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    test: EvalReport | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"train_loss": self.train_loss, "val_loss": self.val_loss,
                "epoch_seconds": self.epoch_seconds, "best_epoch": self.best_epoch,
                "best_val_loss": self.best_val_loss,
                "test": None if self.test is None else self.test.to_dict(),
                "seconds": self.seconds}


def predict(model: UnrollingModel, similarities: np.ndarray, chunk: int = 64) -> np.ndarray:
    sims = np.asarray(similarities, dtype=float)
    out = [unroll_forward(model, sims[i:i + chunk], keep_caches=False)[0]
           for i in range(0, len(sims), chunk)]
    return np.concatenate(out) if out else np.empty_like(sims)


def mean_loss(model: UnrollingModel, similarities, targets, kind: str = "mse") -> float:
    est = predict(model, similarities)
    return float(np.mean(loss(est, targets, kind)[0]))


def batch_gradient(model: UnrollingModel, s_batch, a_batch, kind: str = "mse"):
    """Mean loss over the batch and its gradient w.r.t. ``model.raw``."""
    est, trace = unroll_forward(model, s_batch)
    vals, g = loss(est, a_batch, kind)
    g_raw, _ = unroll_backward(model, trace, g / len(s_batch))
    return float(np.mean(vals)), g_raw


def train(model: UnrollingModel, dataset: Dataset, cfg: TrainConfig | None = None):
    """Mini-batch Adam on the mean training loss; keeps the best-validation parameters.

    Returns a trained copy of ``model`` and the report; ``model`` itself is not
    modified.
    """
    cfg = cfg or TrainConfig()
    s_tr, a_tr = dataset.split("train")
    s_va, a_va = dataset.split("val")
    if len(s_tr) == 0 or len(s_va) == 0:
        raise ParameterError("training needs nonempty train and val splits")
    model = model.copy()
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    rng = make_rng(cfg.seed)
    report = TrainReport()
    best_raw = model.raw.copy()
    stale = 0
    t_start = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        perm = rng.permutation(len(s_tr))
        losses = []
        for b, start in enumerate(range(0, len(perm), cfg.batch_size)):
            idx = perm[start:start + cfg.batch_size]
            val, g_raw = batch_gradient(model, s_tr[idx], a_tr[idx], cfg.loss)
            if not (np.isfinite(val) and np.all(np.isfinite(g_raw))):
                raise TrainingError(f"non-finite loss or gradient at epoch {epoch}, batch {b}")
            opt.step(model.raw, g_raw)
            losses.append(val * len(idx))
        report.train_loss.append(float(np.sum(losses) / len(perm)))
        v = mean_loss(model, s_va, a_va, cfg.loss)
        if not np.isfinite(v):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        report.val_loss.append(v)
        report.epoch_seconds.append(time.perf_counter() - t0)
        if v < report.best_val_loss:
            report.best_val_loss, report.best_epoch = v, epoch
            best_raw = model.raw.copy()
            stale = 0
        else:
            stale += 1
            if cfg.patience is not None and stale >= cfg.patience:
                break
    model.raw = best_raw
    s_te, a_te = dataset.split("test")
    if len(s_te):
        report.test = evaluate(model, dataset, "test", cfg.tau)
    report.seconds = time.perf_counter() - t_start
    return model, report


def evaluate(model: UnrollingModel, dataset: Dataset, split: str = "test",
             tau: float = 0.5) -> EvalReport:
    """Mean metrics of the model's estimates on one split; does not touch the model."""
    s, a = dataset.split(split)
    if len(s) == 0:
        raise ParameterError(f"split {split!r} is empty")
    return evaluate_estimates(predict(model, s), a, tau)
