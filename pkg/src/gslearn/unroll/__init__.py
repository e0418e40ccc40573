"""Unrolled (learned) counterparts of the model-based solvers."""
from .gradcheck import finite_diff_check
from .layers import GDNLayer, GladLayer, L2GLayer, layer_forward, layer_vjp, make_layer
from .model import (
    ForwardTrace, UnrollingModel, init_model, layer_views, softplus, tied_model, unroll_backward,
    unroll_forward,
)
