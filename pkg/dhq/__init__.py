from . import errors
from .config import DEFAULT_TOLERANCES, Tolerances
from .decoherence import DecoherenceReport, check_sum_rules, decoherence_functional, probabilities
from .histories import AlternativeSet, HistoryGrid, Partition, Reference
from .linalg import Hamiltonian, Projector, StateVector, complement, evolve_heisenberg, hermitian_eig, projector_from_span
from .realms import (
    Realm, check_compatibility, coarse_grain, conditional_probability, predict, refine_join, retrodict,
)
