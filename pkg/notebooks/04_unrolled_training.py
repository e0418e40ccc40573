# %% [markdown]
# # Training an unrolled network
#
# A graph deconvolution network (gdn) learns per-layer step sizes, thresholds
# and filter taps from a training split, then is scored on held-out graphs.

# %%
import numpy as np

from gslearn.metrics import evaluate_estimates
from gslearn.solvers import MBHyperparams, SolverConfig, solve_batch
from gslearn.synth import GraphEnsembleSpec, SignalModelSpec, build_dataset
from gslearn.unroll import init_model
from gslearn.unroll.train import TrainConfig, evaluate, train

ds = build_dataset(GraphEnsembleSpec("ER", 12, {"p": 0.25}, seed=0),
                   SignalModelSpec(model="diffuse", p_signals=50, alpha=(1.0, 0.5),
                                   noise_sigma=0.05),
                   "covariance", {"train": 64, "val": 16, "test": 16})

# %%
model = init_model("gdn", 8, seed=0)
print("untrained:", evaluate(model, ds).f1)
trained, report = train(model, ds, TrainConfig(epochs=40, learning_rate=0.02, batch_size=16))
print(f"best epoch {report.best_epoch}, val loss {report.best_val_loss:.4f}")
print("val loss every 5 epochs:", np.round(report.val_loss[::5], 4))

# %% [markdown]
# Learned parameters, one row per layer (beta, t, c0, c1):

# %%
print(np.round(trained.effective_all(), 4))

# %% [markdown]
# ## Against the iterative solver at the same budget

# %%
s_test, a_test = ds.split("test")
# the covariance of diffused noise is the squared filter: taps (1, 1, 1/4)
hp = MBHyperparams(method="diffusion", beta=0.01, poly_alpha=(1.0, 1.0, 0.25))
budget = [r.estimate for r in solve_batch(s_test, hp, SolverConfig(max_iter=8))]
full = [r.estimate for r in solve_batch(s_test, hp, SolverConfig(max_iter=5000))]
print("unrolled, 8 layers   ", report.test.relative_frobenius_error)
print("solver, 8 iterations ", evaluate_estimates(budget, a_test, 0.5).relative_frobenius_error)
print("solver, converged    ", evaluate_estimates(full, a_test, 0.5).relative_frobenius_error)
