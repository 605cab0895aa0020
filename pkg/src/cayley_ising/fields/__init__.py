"""Boundary fields: the cavity map, field families and their solvers."""

from .core import (SolveReport, SolverConfig, Thermo, critical_theta, f_theta,
                   f_theta_inverse, f_theta_prime)
from .families import (ARTField, BGField, BoundaryField, CompatibilityReport, ConstantField,
                       ExplicitField, LevelSequenceField, ParityPeriodicField,
                       WeaklyPeriodicField, art_field, bg_field, check_compatibility,
                       oscillating_field, periodic_field, ti_field, wp_field,
                       with_compatible_root, zachary_field)
from .solve import (CubicRoots, cubic_rrx_roots, find_alpha_cr, h_star, h_star_closed_k2,
                    reduced_wp_roots, solve_periodic, solve_ti, solve_weakly_periodic,
                    wp_residual, wp_state_count, xi_to_fields, zachary_sequence)
