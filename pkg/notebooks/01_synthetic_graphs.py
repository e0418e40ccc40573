# %% [markdown]
# # Synthetic graphs and signals
#
# Every sample in a dataset is a random graph plus a block of signals observed on
# its nodes. Seeds are derived per sample, so sample `i` of a dataset never depends
# on how many samples come before or after it.

# %%
import numpy as np

from gslearn.synth import (
    GraphEnsembleSpec, SignalModelSpec, build_dataset, child_seed, generate_signals, sample_graph,
    similarity,
)

# %% [markdown]
# ## Ensembles
# Each ensemble returns a symmetric 0/1 adjacency with an empty diagonal.

# %%
specs = [
    GraphEnsembleSpec("ER", 30, {"p": 0.2}, seed=1),
    GraphEnsembleSpec("BA", 30, {"m": 2}, seed=1),
    GraphEnsembleSpec("WS", 30, {"k": 4, "p": 0.1}, seed=1),
    GraphEnsembleSpec("SBM", 30, {"sizes": [15, 15], "probs": [[0.4, 0.02], [0.02, 0.4]]}, seed=1),
    GraphEnsembleSpec("grid", 30, {"rows": 5, "cols": 6}),
]
for spec in specs:
    a = sample_graph(spec)
    deg = a.sum(1)
    print(f"{spec.ensemble:5s} edges={int(a.sum() // 2):4d} mean degree={deg.mean():.2f} max={deg.max():.0f}")

# %% [markdown]
# ## Signal models
# Smooth signals vary slowly over edges, so neighbours end up closer in
# Euclidean distance than non-neighbours.

# %%
a = sample_graph(GraphEnsembleSpec("ER", 20, {"p": 0.25}, seed=3))
x = generate_signals(a, SignalModelSpec(model="smooth", p_signals=500, seed=child_seed(3, 0, 1)))
d = similarity(x, "distance") / x.shape[1]
iu = np.triu_indices(20, 1)
edge = a[iu] > 0
print("mean distance on edges    ", d[iu][edge].mean())
print("mean distance off edges   ", d[iu][~edge].mean())

# %% [markdown]
# Diffused white noise has covariance equal to the squared filter. With
# whitening the sample covariance matches it exactly, which is handy for
# checking solvers on noiseless data.

# %%
spec = SignalModelSpec(model="diffuse", p_signals=60, alpha=(1.0, 0.5), whiten=True, seed=9)
x = generate_signals(a, spec)
h = np.eye(20) + 0.5 * a
print("max |cov - H^2| =", np.abs(similarity(x, "covariance") - h @ h).max())

# %% [markdown]
# ## A full dataset

# %%
ds = build_dataset(GraphEnsembleSpec("ER", 12, {"p": 0.3}, seed=0),
                   SignalModelSpec(model="gaussian", p_signals=200), "covariance",
                   {"train": 8, "val": 2, "test": 2})
s_test, a_test = ds.split("test")
print(len(ds), ds.n, ds.p, ds.kind, s_test.shape, ds.split_slice("test"))
