"""Slip approximations for rolling constraints realized by strong viscous friction."""
from .constraints import ConstraintSet, FrictionSpec, ProjectionPair, projections, q_map_apply
from .dynamics import (
    SimPlan,
    State,
    Trajectory,
    dissipation_rate,
    first_rhs,
    full_rhs,
    integrate,
    kinetic_energy,
    simulate,
    zeroth_rhs,
)
from .geometry import BundleMap, MetricField, PotentialField, christoffel
from .kernels import BACKEND
from .slow_manifold import SlipSection, generating_residual, h1, h2, slip
from .systems import DiskParams, SystemDef, disk_system, load_system

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BundleMap",
    "ConstraintSet",
    "DiskParams",
    "FrictionSpec",
    "MetricField",
    "PotentialField",
    "ProjectionPair",
    "SimPlan",
    "SlipSection",
    "State",
    "SystemDef",
    "Trajectory",
    "christoffel",
    "disk_system",
    "dissipation_rate",
    "first_rhs",
    "full_rhs",
    "generating_residual",
    "h1",
    "h2",
    "integrate",
    "kinetic_energy",
    "load_system",
    "projections",
    "q_map_apply",
    "simulate",
    "slip",
    "zeroth_rhs",
]
