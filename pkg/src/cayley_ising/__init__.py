"""Ising model on Cayley trees: boundary fields, free energies and edge census."""

from .errors import CapacityError, CompatibilityError, ConvergenceError, DomainError
from .fields import SolverConfig, Thermo
from .tree import Ball, SubgroupSpec, TreeGeometry

__version__ = "0.1.0"
