"""Alternative sets, history grids, class operators and branch state vectors"""
import itertools
import logging
import math
import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeAlias

import numpy as np

from dhq import errors
from dhq.config import DEFAULT_TOLERANCES, Tolerances
from dhq.linalg import Hamiltonian, Projector, StateVector, evolve_heisenberg, max_norm

logger = logging.getLogger(__name__)

HistoryIndex: TypeAlias = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AlternativeSet:
    """Exhaustive set of exclusive alternatives at one time.

    Projectors are given in the Schrodinger picture; the grid evolves them.
    """
    time: float
    projectors: tuple[Projector, ...]
    label: str
    tol: float = field(default=DEFAULT_TOLERANCES.tol_alg, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'projectors', tuple(self.projectors))
        object.__setattr__(self, 'time', float(self.time))
        if not self.projectors:
            raise errors.InvalidGrid(f'alternative set {self.label!r} is empty')
        names = self.names
        if len(set(names)) != len(names):
            raise errors.InvalidGrid(f'alternative set {self.label!r} repeats a projector name')
        dims = {p.dim for p in self.projectors}
        if len(dims) != 1:
            raise errors.DimensionMismatch(self.projectors[0].dim, dims)
        self._check_alternatives()

    def _check_alternatives(self):
        layouts = {p.layout for p in self.projectors}
        if len(layouts) == 1 and None not in layouts:
            matrices = [p.matrix for p in self.projectors]
        else:
            matrices = [p.dense for p in self.projectors]
        identity = np.eye(matrices[0].shape[0])
        deviation = max_norm(sum(matrices) - identity)
        if deviation > self.tol:
            raise errors.InvalidAlternatives(self.label, 'completeness', deviation)
        for (i, a), (j, b) in itertools.combinations(enumerate(matrices), 2):
            deviation = max_norm(a @ b)
            if deviation > self.tol:
                raise errors.InvalidAlternatives(self.label, 'exclusivity', deviation)

    def __len__(self) -> int:
        return len(self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.projectors)

    @property
    def is_fine_grained(self) -> bool:
        return all(p.rank == 1 for p in self.projectors)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise errors.InvalidHistory(f'no alternative {name!r} in set {self.label!r}') from None

    def at(self, time: float) -> 'AlternativeSet':
        return AlternativeSet(time, self.projectors, self.label, tol=self.tol)


@dataclass(frozen=True)
class Reference:
    """``NAME@T``: alternative NAME of the set at time T"""
    name: str
    time: float

    _pattern = re.compile(r'^(?P<name>.+)@(?P<time>[-+0-9.eE]+)$')

    @classmethod
    def parse(cls, text: str) -> 'Reference':
        match = cls._pattern.match(text.strip())
        if not match:
            raise errors.InvalidHistory(f'expected NAME@TIME, got {text!r}')
        try:
            time = float(match.group('time'))
        except ValueError:
            raise errors.InvalidHistory(f'bad time in {text!r}') from None
        return cls(match.group('name'), time)

    def __str__(self) -> str:
        return f'{self.name}@{self.time:.15g}'


class HistoryGrid:
    """Alternative sets at strictly increasing times, with H and |Psi>.

    Heisenberg-picture projectors are computed on first use and cached per set.
    """

    def __init__(
        self,
        sets: Sequence[AlternativeSet],
        *,
        hamiltonian: Hamiltonian,
        initial_state: StateVector,
        label: str = '',
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ):
        """
        :param sets: one alternative set per time, in time order
        :param hamiltonian: generator of the Heisenberg evolution
        :param initial_state: normalized |Psi>
        :param label: name used in reports
        :param tolerances: numeric policy for everything computed from this grid
        """
        self._sets = tuple(sets)
        self._hamiltonian = hamiltonian
        self._state = initial_state
        self._label = label
        self._tolerances = tolerances
        self._evolved: dict[int, tuple[Projector, ...]] = {}
        self._lock = threading.Lock()
        self._validate()
        logger.debug('grid %r: times %s, shape %s', label, self.times, self.shape)

    def _validate(self):
        if not self._sets:
            raise errors.InvalidGrid('a grid needs at least one alternative set')
        times = self.times
        for earlier, later in zip(times, times[1:]):
            if not later > earlier:
                raise errors.InvalidGrid(f'times must be strictly increasing, got {list(times)}')
        dim = self._hamiltonian.dim
        for alternatives in self._sets:
            if alternatives.dim != dim:
                raise errors.DimensionMismatch(dim, alternatives.dim)
        if self._state.dim != dim:
            raise errors.DimensionMismatch(dim, self._state.dim)
        if not self._state.normalized:
            raise errors.InvalidGrid('initial state must be normalized')

    @property
    def sets(self) -> tuple[AlternativeSet, ...]:
        return self._sets

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(s.time for s in self._sets)

    @property
    def hamiltonian(self) -> Hamiltonian:
        return self._hamiltonian

    @property
    def initial_state(self) -> StateVector:
        return self._state

    @property
    def label(self) -> str:
        return self._label

    @property
    def tolerances(self) -> Tolerances:
        return self._tolerances

    @property
    def dim(self) -> int:
        return self._hamiltonian.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self._sets)

    @property
    def history_count(self) -> int:
        return math.prod(self.shape)

    @property
    def is_fine_grained(self) -> bool:
        return all(s.is_fine_grained for s in self._sets)

    def replace(
        self,
        sets: Sequence[AlternativeSet] | None = None,
        *,
        label: str | None = None,
        tolerances: Tolerances | None = None,
    ) -> 'HistoryGrid':
        return HistoryGrid(
            self._sets if sets is None else sets,
            hamiltonian=self._hamiltonian,
            initial_state=self._state,
            label=self._label if label is None else label,
            tolerances=tolerances or self._tolerances,
        )

    def histories(self, cap: int | None = None) -> list[HistoryIndex]:
        """All histories, first time slowest-varying

        :param cap: overrides the history cap of the grid's tolerances
        :raise GridTooLarge: if there are more histories than the cap
        """
        cap = self._tolerances.history_cap if cap is None else cap
        count = self.history_count
        if count > cap:
            raise errors.GridTooLarge(count, cap)
        return list(itertools.product(*(range(n) for n in self.shape)))

    def check_history(self, history: HistoryIndex) -> HistoryIndex:
        history = tuple(history)
        if len(history) != len(self._sets):
            raise errors.InvalidHistory(f'history {history} has {len(history)} entries, '
                                        f'grid has {len(self._sets)} times')
        for alpha, size in zip(history, self.shape):
            if not 0 <= alpha < size:
                raise errors.InvalidHistory(f'history {history} out of range for shape {self.shape}')
        return history

    def names(self, history: HistoryIndex) -> tuple[str, ...]:
        """Projector names in time order"""
        history = self.check_history(history)
        return tuple(s.projectors[alpha].name for s, alpha in zip(self._sets, history))

    def label_of(self, history: HistoryIndex) -> str:
        """Comma-joined names, latest time first, as in the chain P_n ... P_1"""
        return ','.join(reversed(self.names(history)))

    def find(self, reference: Reference) -> tuple[int, int]:
        """Position of the set at ``reference.time`` and of the alternative in it"""
        for k, alternatives in enumerate(self._sets):
            if abs(alternatives.time - reference.time) <= 1e-12:
                return k, alternatives.index(reference.name)
        raise errors.InvalidHistory(f'no alternative set at t={reference.time:g}')

    def heisenberg(self, k: int) -> tuple[Projector, ...]:
        """Projectors of set ``k`` evolved to its time; computed at most once"""
        with self._lock:
            evolved = self._evolved.get(k)
            if evolved is None:
                alternatives = self._sets[k]
                evolved = tuple(
                    evolve_heisenberg(p, self._hamiltonian, alternatives.time)
                    for p in alternatives.projectors
                )
                self._evolved[k] = evolved
                logger.debug('grid %r: cached Heisenberg projectors of set %r', self._label, alternatives.label)
        return evolved

    def class_operator(self, history: HistoryIndex) -> np.ndarray:
        """C = P^n(t_n) ... P^1(t_1), latest time leftmost"""
        history = self.check_history(history)
        operator = np.eye(self.dim, dtype=complex)
        for k, alpha in enumerate(history):
            operator = self.heisenberg(k)[alpha].dense @ operator
        return operator

    def chain_vector(self, steps: Iterable[tuple[float, Projector]]) -> np.ndarray:
        """Apply a time-ordered chain of Heisenberg projectors to |Psi>.

        Runs in the Schrodinger picture, U(t_n)^dagger P_n U(t_n - t_n-1) ... P_1 U(t_1)|Psi>,
        so only vectors are ever evolved.
        """
        vector = self._state.amplitudes
        now = 0.0
        for i, (time, projector) in enumerate(steps):
            if i and time < now:
                raise errors.InvalidHistory('chain steps must be in time order')
            vector = self._hamiltonian.propagate(vector, time - now)
            vector = projector.apply(vector)
            now = time
        return self._hamiltonian.propagate(vector, -now)

    def branch_vector(self, history: HistoryIndex) -> StateVector:
        """|Psi_alpha> = C_alpha |Psi>, not normalized"""
        history = self.check_history(history)
        steps = [(s.time, s.projectors[alpha]) for s, alpha in zip(self._sets, history)]
        return StateVector(self.chain_vector(steps))


def enumerate_histories(grid: HistoryGrid) -> list[HistoryIndex]:
    return grid.histories()


def class_operator(grid: HistoryGrid, history: HistoryIndex) -> np.ndarray:
    return grid.class_operator(history)


def branch_vector(grid: HistoryGrid, history: HistoryIndex) -> StateVector:
    return grid.branch_vector(history)


@dataclass(frozen=True)
class Partition:
    """Exhaustive and exclusive classes of a grid's histories"""
    classes: tuple[frozenset[HistoryIndex], ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'classes', tuple(frozenset(tuple(h) for h in c) for c in self.classes))
        object.__setattr__(self, 'labels', tuple(self.labels))

    def __len__(self) -> int:
        return len(self.classes)

    def validate(self, grid: HistoryGrid, cap: int | None = None) -> None:
        """:raise InvalidPartition: unless the classes cover the grid's histories exactly once"""
        if len(self.labels) != len(self.classes):
            raise errors.InvalidPartition(f'{len(self.classes)} classes but {len(self.labels)} labels')
        if len(set(self.labels)) != len(self.labels):
            raise errors.InvalidPartition('class labels must be unique')
        histories = set(grid.histories(cap))
        seen: set[HistoryIndex] = set()
        for label, members in zip(self.labels, self.classes):
            if not members:
                raise errors.InvalidPartition(f'class {label!r} is empty')
            unknown = members - histories
            if unknown:
                raise errors.InvalidPartition(f'class {label!r} holds histories not in the grid: {sorted(unknown)}')
            overlap = members & seen
            if overlap:
                raise errors.InvalidPartition(f'class {label!r} repeats histories {sorted(overlap)}')
            seen |= members
        missing = histories - seen
        if missing:
            raise errors.InvalidPartition(f'histories not covered: {sorted(missing)}')

    @classmethod
    def by_key(cls, grid: HistoryGrid, key: Callable[[HistoryIndex], str]) -> 'Partition':
        """Group histories by ``key``, classes in order of first appearance"""
        groups: dict[str, list[HistoryIndex]] = {}
        for history in grid.histories():
            groups.setdefault(key(history), []).append(history)
        return cls(tuple(frozenset(v) for v in groups.values()), tuple(groups))

    @classmethod
    def singletons(cls, grid: HistoryGrid) -> 'Partition':
        return cls.by_key(grid, grid.label_of)

    @classmethod
    def whole(cls, grid: HistoryGrid, label: str = 'all') -> 'Partition':
        return cls((frozenset(grid.histories()),), (label,))

    def members(self, grid: HistoryGrid, cap: int | None = None) -> list[list[HistoryIndex]]:
        """Classes as lists in the grid's enumeration order"""
        order = {h: i for i, h in enumerate(grid.histories(cap))}
        return [sorted(c, key=order.__getitem__) for c in self.classes]
