"""Numerical lab for upper semicontinuity of gradients via an ACF-type functional."""

from .functionals import (
    acf_product,
    c0_closed_form,
    extrapolate_limit,
    gradient_estimate,
    monotonicity_sweep,
    weighted_dirichlet,
)
from .grid import BasePoint, ContractError, DomainMask, GridSpec, ScalarField, base_point, load_sfld, save_sfld
from .oracles import ac_profile_build

__all__ = [
    "BasePoint",
    "ContractError",
    "DomainMask",
    "GridSpec",
    "ScalarField",
    "acf_product",
    "ac_profile_build",
    "base_point",
    "c0_closed_form",
    "extrapolate_limit",
    "gradient_estimate",
    "load_sfld",
    "monotonicity_sweep",
    "save_sfld",
    "weighted_dirichlet",
]
