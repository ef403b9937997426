"""Constrained PDE learning: meshless solvers trained with an augmented
Lagrangian objective and L-BFGS."""

from ._core import (
    Activation,
    EpochRow,
    NetworkConfig,
    ProblemSpec,
    RunRecord,
    condition_number,
    forward,
    huber,
    init_xavier,
    linf,
    load_checkpoint,
    mae,
    mse,
    perturb,
    problem,
    rel_l2,
    self_consistency,
    sobol,
    train,
)

__all__ = [
    "Activation",
    "EpochRow",
    "NetworkConfig",
    "ProblemSpec",
    "RunRecord",
    "condition_number",
    "forward",
    "huber",
    "init_xavier",
    "linf",
    "load_checkpoint",
    "mae",
    "mse",
    "perturb",
    "problem",
    "rel_l2",
    "self_consistency",
    "sobol",
    "train",
]
