"""Numerical model of a reducible representation of the canonical commutation relations.

Photon operators are built from N momentum-resolved oscillators on a discrete
light-cone grid; the modules cover the single-oscillator algebra, N-oscillator
ensembles, exact finite-N correlators and their limit, Poincare covariance,
field matrix elements, and radiation from classical currents.
"""
from .grid import (GridSpec, MomentumGrid, VacuumProfile, build_grid, delta_gamma, inner_product_Z,
                   make_profile, polarized)
from .oscillator import OscillatorState, coherent_state, vacuum_state
from .ensemble import DenseState, ProductState, ensemble_coherent, ensemble_vacuum
from .combinatorics import class_probability, finite_N_correlator, limit_correlator, permanent
from .fields import coherent_field_average, one_photon_vector, two_point_product
from .poincare import PoincareElement, standard_spinor, wigner_phase
from .radiation import CurrentSpec, RadiationReport, ir_sweep, radiation_expectations

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "MomentumGrid", "VacuumProfile", "build_grid", "delta_gamma", "inner_product_Z",
    "make_profile", "polarized",
    "OscillatorState", "coherent_state", "vacuum_state",
    "DenseState", "ProductState", "ensemble_coherent", "ensemble_vacuum",
    "class_probability", "finite_N_correlator", "limit_correlator", "permanent",
    "coherent_field_average", "one_photon_vector", "two_point_product",
    "PoincareElement", "standard_spinor", "wigner_phase",
    "CurrentSpec", "RadiationReport", "ir_sweep", "radiation_expectations",
]
