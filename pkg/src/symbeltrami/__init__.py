"""Symmetric Beltrami fields on model 3-manifolds.

Submodules:

``chartcalc``   Riemannian vector calculus in charts.
``spectral``    band-limited calculus on the flat torus and the discrete
                existence operator for symmetric curl eigenfields.
``catalog``     closed-form Killing fields and first integrals.
``scalar_eigen`` symmetric Beltrami fields from scalar Laplace eigenfunctions.
``fieldline``   field-line integration, Poincare sections, rotation numbers.
``structure``   first integral, critical set, level components, chambers.
``cli``         command-line front end.
"""

from .catalog import KillingEntry, catalog_get, catalog_names, first_integral_existence
from .chartcalc import ChartedField, FDConfig, FlatTorus3, PointField, RoundSphere3
from .directions import Direction
from .errors import HypothesisFailure, NoFirstIntegral, NoSymmetricFields, StalledAtZero
from .spectral import SpectralField, assemble_pi_curlinv, symmetric_mask, top_eigenpair

__version__ = "0.1.0"

__all__ = [
    "ChartedField",
    "Direction",
    "FDConfig",
    "FlatTorus3",
    "HypothesisFailure",
    "KillingEntry",
    "NoFirstIntegral",
    "NoSymmetricFields",
    "PointField",
    "RoundSphere3",
    "SpectralField",
    "StalledAtZero",
    "assemble_pi_curlinv",
    "catalog_get",
    "catalog_names",
    "first_integral_existence",
    "symmetric_mask",
    "top_eigenpair",
]
