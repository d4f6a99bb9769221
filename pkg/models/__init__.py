from .distributions import (
    Exponential,
    Lomax,
    ModelKind,
    MomentClass,
    Normal,
    QuantileModel,
    Uniform,
    parse_dist_spec,
)

__all__ = [
    "Exponential",
    "Lomax",
    "ModelKind",
    "MomentClass",
    "Normal",
    "QuantileModel",
    "Uniform",
    "parse_dist_spec",
]
