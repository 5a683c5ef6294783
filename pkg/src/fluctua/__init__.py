"""Fluctuation theory of small-drift random walks.

Exact generating functions for lattice walks, closed-form limit laws, and a
seeded Monte Carlo engine that checks one against the other.
"""

from . import _backend
from .fluctuation import LatticeStepLaw, ResourceError, ladder_series, occupation_gf, sign_probs
from .limitlaw import DomainError, LastExitLaw, LawA, OccupationLaw, cdf_A, pdf_A
from .mc import SimulationConfig, StepFamily, UnsupportedFamilyError, simulate
from .series import SeriesError, TruncatedSeries
from .stats import DataError, EmpiricalSample, ks_against

backend = _backend.name

__version__ = "0.1.0"
