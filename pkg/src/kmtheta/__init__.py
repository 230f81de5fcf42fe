"""Majorants, Green functions, Kudla-Millson forms and their theta series."""

from ._backend import BACKEND
from .genseries import (BudgetExceeded, GeneratingSeriesSpec, QExpansion, coefficient_of_T, km_theta,
                        modularity_check_inversion, modularity_check_translation, q_expansion, theta_scalar)
from .lattice import OLattice, e8_lattice, enumerate_below, total_majorant
from .numberfield import FieldElement, TotallyRealField
from .perioddomain import PeriodPoint, make_period_point, majorant_R
from .quadspace import QuadraticSpace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetExceeded", "GeneratingSeriesSpec", "QExpansion", "coefficient_of_T", "km_theta",
    "modularity_check_inversion", "modularity_check_translation", "q_expansion", "theta_scalar",
    "OLattice", "e8_lattice", "enumerate_below", "total_majorant", "FieldElement", "TotallyRealField",
    "PeriodPoint", "make_period_point", "majorant_R", "QuadraticSpace",
]
