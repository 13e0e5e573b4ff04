"""Additive multi-type growth models."""

import importlib.metadata

from additive_growth_py.duality import dual_model, is_self_dual
from additive_growth_py.engine import estimate_survival, evolve_dual, evolve_forward, sample_event_map
from additive_growth_py.eventmodel import GrowthModel, validate_growth_model
from additive_growth_py.typelattice import TypeLattice
from additive_growth_py.zoo import zoo_model

__version__ = importlib.metadata.version("additive-growth-py")

__all__ = [
    "GrowthModel",
    "TypeLattice",
    "dual_model",
    "estimate_survival",
    "evolve_dual",
    "evolve_forward",
    "is_self_dual",
    "sample_event_map",
    "validate_growth_model",
    "zoo_model",
]
