"""Decoherent histories errors"""
from typing import Any


class DHQError(Exception):
    """Base exception of the decoherent histories engine"""


class LinalgError(DHQError):
    """Invalid operator or vector"""


class DimensionMismatch(LinalgError):

    def __init__(self, expected: Any, got: Any, what: str = 'dimension'):
        self.expected = expected
        self.got = got
        self.what = what

    def __str__(self) -> str:
        return f'{self.what} mismatch: expected {self.expected}, got {self.got}'


class DegenerateSpan(LinalgError):

    def __init__(self, count: int, rank: int):
        self.count = count
        self.rank = rank

    def __str__(self) -> str:
        return f'{self.count} spanning vectors have numerical rank {self.rank}'


class NotHermitian(LinalgError):

    def __init__(self, deviation: float):
        self.deviation = deviation

    def __str__(self) -> str:
        return f'matrix is not Hermitian: max |H - H^dagger| = {self.deviation:.3e}'


class NotAProjector(LinalgError):

    def __init__(self, name: str, reason: str):
        self.name = name
        self.reason = reason

    def __str__(self) -> str:
        return f'{self.name!r} is not a projector: {self.reason}'


class HistoryError(DHQError):
    """Invalid alternative set, grid or history"""


class InvalidGrid(HistoryError):
    pass


class InvalidAlternatives(HistoryError):
    """Alternative set violating exhaustiveness or exclusivity"""

    def __init__(self, label: str, invariant: str, deviation: float):
        self.label = label
        self.invariant = invariant
        self.deviation = deviation

    def __str__(self) -> str:
        return f'alternative set {self.label!r} violates {self.invariant} (deviation {self.deviation:.3e})'


class InvalidHistory(HistoryError):
    pass


class GridTooLarge(HistoryError):

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap

    def __str__(self) -> str:
        return f'grid has {self.count} histories, more than the cap of {self.cap}'


class NotDecoherent(DHQError):
    """Probabilities were requested for a set of histories that does not decohere.

    The failing report stays available so the caller can inspect the interference.
    """

    def __init__(self, report: Any):
        self.report = report

    def __str__(self) -> str:
        return (f'set of histories does not decohere: max normalized off-diagonal '
                f'{self.report.max_offdiag_normalized:.6g} > {self.report.tol_used:g}')


class ConditionOnNull(DHQError):

    def __init__(self, probability: float, floor: float):
        self.probability = probability
        self.floor = floor

    def __str__(self) -> str:
        return f'cannot condition on probability {self.probability:.3e} <= {self.floor:g}'


class RealmError(DHQError):
    """Invalid coarse-graining or realm operation"""


class InvalidPartition(RealmError):
    pass


class NonCommutingSets(RealmError):

    def __init__(self, commutator_norm: float, time: float):
        self.commutator_norm = commutator_norm
        self.time = time

    def __str__(self) -> str:
        return (f'alternative sets at t={self.time:g} do not commute: '
                f'max |[P, Q]| = {self.commutator_norm:.3e}')


class SpacetimeError(DHQError):
    pass


class SuperluminalBoost(SpacetimeError):

    def __init__(self, speed: float):
        self.speed = speed

    def __str__(self) -> str:
        return f'boost speed {self.speed:g} is not below the speed of light'


class ModelError(DHQError):
    pass


class EnvironmentTooLarge(ModelError):

    def __init__(self, n_env: int, limit: int):
        self.n_env = n_env
        self.limit = limit

    def __str__(self) -> str:
        return f'{self.n_env} environment spins requested, at most {self.limit} supported'


class UnknownModel(ModelError):

    def __init__(self, name: str):
        self.name = name

    def __str__(self) -> str:
        return f'Not supported model: {self.name}'


class ScenarioError(DHQError):
    """Scenario file could not be loaded"""


class ParseError(ScenarioError):

    def __init__(self, path: Any, location: str, message: str):
        self.path = path
        self.location = location
        self.message = message

    def __str__(self) -> str:
        return f'{self.path}: {self.location}: {self.message}'


class ValidationError(ScenarioError):

    def __init__(self, invariant: str, location: str, message: str = ''):
        self.invariant = invariant
        self.location = location
        self.message = message

    def __str__(self) -> str:
        detail = f': {self.message}' if self.message else ''
        return f'{self.location}: violates {self.invariant}{detail}'
