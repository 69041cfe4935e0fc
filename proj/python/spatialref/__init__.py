"""Force-driven configuration manifolds for a planar humanoid."""

from ._spatialref import (
    Model,
    com_position,
    eval_config,
    eval_zmp,
    hand_position,
    load_model,
    plan,
    simulate,
    zmp_static_full,
    zmp_static_simplified,
)

__all__ = [
    "Model",
    "com_position",
    "eval_config",
    "eval_zmp",
    "hand_position",
    "load_model",
    "plan",
    "simulate",
    "zmp_static_full",
    "zmp_static_simplified",
]
