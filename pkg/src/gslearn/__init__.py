"""Graph structure learning from node signals.

Model-based solvers (graphical lasso, smooth-signal, diffusion), their
unrolled trainable counterparts, synthetic data generators, metrics and
file formats.
"""
from .core import degree_map, devec_upper, laplacian, matrix_polynomial, vec_upper
from .errors import GSLError
from .metrics import EvalReport, auprc, edge_metrics, evaluate_estimates
from .solvers import MBHyperparams, SolveResult, SolverConfig, fixed_point_solve, solve_batch
from .synth import Dataset, GraphEnsembleSpec, SignalModelSpec, build_dataset

__version__ = "0.1.0"
