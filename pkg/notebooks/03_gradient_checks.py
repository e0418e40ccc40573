# %% [markdown]
# # Hand-written gradients
#
# Each unrolled layer carries its own vector-Jacobian product. Here we compare
# them with central finite differences, then check that a network with tied
# layers reproduces the iterative solver it was derived from.

# %%
import numpy as np

from gslearn.solvers import MBHyperparams, glasso_am_step, initial_state
from gslearn.unroll import finite_diff_check, init_model, tied_model, unroll_backward, unroll_forward

for method in ("glad", "l2g", "gdn"):
    print(method, "max relative FD error:", f"{finite_diff_check(method, n=5, seeds=range(10)):.2e}")

# %% [markdown]
# ## Whole-network backward pass

# %%
rng = np.random.default_rng(0)
x = rng.standard_normal((6, 30))
s = np.cov(x)
model = init_model("glad", 5, seed=1)
g = rng.standard_normal((6, 6))
g = g + g.T
_, trace = unroll_forward(model, s)
grad, _ = unroll_backward(model, trace, g)

def f(m):
    return float(np.sum(unroll_forward(m, s, keep_caches=False)[0] * g))

h = 1e-6
plus, minus = model.copy(), model.copy()
plus.raw[2, 1] += h
minus.raw[2, 1] -= h
print("analytic", grad[2, 1], "finite difference", (f(plus) - f(minus)) / (2 * h))

# %% [markdown]
# ## Tied layers equal solver iterations

# %%
hp = MBHyperparams(method="gaussian", lambda_pen=0.8, rho_l1=0.02)
_, trace = unroll_forward(tied_model("glad", 10, [0.8, 0.02]), s, keep_caches=False)
state = initial_state("gaussian", s, hp)
for _ in range(10):
    state = glasso_am_step(state, s, hp)
print("difference after 10 steps:", np.abs(trace.states[-1][0][0] - state.theta).max())
