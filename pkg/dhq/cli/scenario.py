"""Scenario files: JSON description of H, |Psi>, alternative sets, partitions and data.

Complex scalars are ``[re, im]`` pairs (plain numbers are read as real); matrices are
row-major nested arrays.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from dhq import errors
from dhq.config import DEFAULT_TOLERANCES, Tolerances
from dhq.histories import AlternativeSet, HistoryGrid, Partition, Reference
from dhq.linalg import Hamiltonian, Layout, Projector, StateVector, complement, projector_from_span
from dhq.spacetime import Event, Igus, IgusGroup

logger = logging.getLogger(__name__)

SCHEMA = 'dhq-scenario/1'

Complex = float | tuple[float, float]

_UNION_TAGS = {'float', 'int', 'str', 'HamiltonianEntry'}


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class ProjectorEntry(_Strict):
    name: str
    matrix: list[list[Complex]] | None = None
    span: list[list[Complex]] | None = None
    complement: str | None = None
    site: int | None = None

    @model_validator(mode='after')
    def _one_source(self) -> 'ProjectorEntry':
        given = [k for k in ('matrix', 'span', 'complement') if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError('exactly one of matrix, span or complement is required')
        return self


class AlternativeSetEntry(_Strict):
    time: float
    label: str
    projectors: list[ProjectorEntry] = Field(min_length=1)


class ProductBasisEntry(_Strict):
    bases: list[list[list[Complex]]]
    energies: list[float]


class HamiltonianEntry(_Strict):
    matrix: list[list[Complex]] | None = None
    product_basis: ProductBasisEntry | None = None

    @model_validator(mode='after')
    def _one_form(self) -> 'HamiltonianEntry':
        if (self.matrix is None) == (self.product_basis is None):
            raise ValueError('exactly one of matrix or product_basis is required')
        return self


class ScenarioDocument(_Strict):
    schema_tag: Literal['dhq-scenario/1'] = Field(alias='schema')
    label: str = ''
    dimension: int = Field(gt=0)
    layout: list[int] | None = None
    hamiltonian: Literal['zero'] | HamiltonianEntry = 'zero'
    initial_state: list[Complex]
    alternative_sets: list[AlternativeSetEntry] = Field(min_length=1)
    partitions: dict[str, dict[str, list[str]]] = Field(default_factory=dict)
    data: str | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    """A grid together with its named partitions and optional present data"""
    grid: HistoryGrid
    partitions: dict[str, Partition] = field(default_factory=dict)
    data: Reference | None = None


def _complex(value: Complex) -> complex:
    if isinstance(value, tuple):
        return complex(*value)
    return complex(value)


def _matrix(rows: list[list[Complex]]) -> np.ndarray:
    return np.array([[_complex(x) for x in row] for row in rows], dtype=complex)


def _vector(values: list[Complex]) -> np.ndarray:
    return np.array([_complex(x) for x in values], dtype=complex)


def _location(loc: tuple) -> str:
    """JSON path of a pydantic error location, without union member tags"""
    path = '$'
    for part in loc:
        if isinstance(part, int):
            path += f'[{part}]'
        elif part == 'schema_tag':
            path += '.schema'
        elif part not in _UNION_TAGS and '[' not in part and not part.startswith('function-'):
            path += f'.{part}'
    return path


class _Builder:
    """Turns a validated document into engine objects, naming the offending location on failure"""

    def __init__(self, doc: ScenarioDocument, tolerances: Tolerances):
        self._doc = doc
        self._tolerances = tolerances
        self._dims = tuple(doc.layout) if doc.layout else (doc.dimension,)
        if int(np.prod(self._dims)) != doc.dimension:
            raise errors.ValidationError('dimension', '$.layout', f'{self._dims} does not multiply to {doc.dimension}')

    def build(self) -> Scenario:
        hamiltonian = self._hamiltonian()
        state = self._state()
        sets = [self._alternatives(k, s) for k, s in enumerate(self._doc.alternative_sets)]
        try:
            grid = HistoryGrid(sets, hamiltonian=hamiltonian, initial_state=state,
                               label=self._doc.label, tolerances=self._tolerances)
        except errors.DimensionMismatch as err:
            raise errors.ValidationError('dimension', '$.alternative_sets', str(err)) from err
        except errors.InvalidGrid as err:
            raise errors.ValidationError('strictly increasing times', '$.alternative_sets', str(err)) from err
        partitions = {name: self._partition(grid, name, classes) for name, classes in self._doc.partitions.items()}
        data = self._data(grid)
        return Scenario(grid, partitions, data)

    def _hamiltonian(self) -> Hamiltonian:
        entry = self._doc.hamiltonian
        if entry == 'zero':
            return Hamiltonian.zero(self._doc.dimension)
        try:
            if entry.matrix is not None:
                return Hamiltonian(_matrix(entry.matrix), tol=self._tolerances.tol_alg)
            bases = [_matrix(b) for b in entry.product_basis.bases]
            energies = np.array(entry.product_basis.energies, dtype=float)
            if len(bases) != len(self._dims) or energies.size != self._doc.dimension:
                raise errors.DimensionMismatch(self._dims, (len(bases), energies.size), 'product basis')
            return Hamiltonian.from_product_basis(bases, energies.reshape(self._dims), tol=self._tolerances.tol_alg)
        except errors.NotHermitian as err:
            raise errors.ValidationError('hermiticity', '$.hamiltonian.matrix', str(err)) from err
        except errors.LinalgError as err:
            raise errors.ValidationError('hamiltonian', '$.hamiltonian', str(err)) from err

    def _state(self) -> StateVector:
        try:
            state = StateVector(_vector(self._doc.initial_state), normalized=True)
        except errors.LinalgError as err:
            raise errors.ValidationError('normalization', '$.initial_state', str(err)) from err
        if state.dim != self._doc.dimension:
            raise errors.ValidationError('dimension', '$.initial_state',
                                         f'{state.dim} amplitudes for dimension {self._doc.dimension}')
        return state

    def _alternatives(self, k: int, entry: AlternativeSetEntry) -> AlternativeSet:
        location = f'$.alternative_sets[{k}]'
        built: dict[str, Projector] = {}
        for i, p in enumerate(entry.projectors):
            built[p.name] = self._projector(p, built, f'{location}.projectors[{i}]')
        try:
            return AlternativeSet(entry.time, list(built.values()), entry.label, tol=self._tolerances.tol_alg)
        except errors.InvalidAlternatives as err:
            raise errors.ValidationError(err.invariant, location, str(err)) from err
        except errors.HistoryError as err:
            raise errors.ValidationError('alternative set', location, str(err)) from err
        except errors.DimensionMismatch as err:
            raise errors.ValidationError('dimension', location, str(err)) from err

    def _projector(self, entry: ProjectorEntry, built: dict[str, Projector], location: str) -> Projector:
        if entry.name in built:
            raise errors.ValidationError('unique names', f'{location}.name', f'{entry.name!r} repeated')
        tol = self._tolerances.tol_alg
        try:
            if entry.complement is not None:
                if entry.complement not in built:
                    raise errors.ValidationError('reference', f'{location}.complement',
                                                 f'{entry.complement!r} is not defined earlier in the set')
                return complement(built[entry.complement]).renamed(entry.name)
            layout = Layout(self._dims, entry.site) if entry.site is not None else None
            if entry.span is not None:
                local = projector_from_span([_vector(v) for v in entry.span], entry.name, tol=tol)
                return Projector(local.matrix, entry.name, layout, tol=tol)
            return Projector(_matrix(entry.matrix), entry.name, layout, tol=tol)
        except errors.NotAProjector as err:
            raise errors.ValidationError('projector', location, str(err)) from err
        except errors.DimensionMismatch as err:
            raise errors.ValidationError('dimension', location, str(err)) from err
        except errors.DegenerateSpan as err:
            raise errors.ValidationError('span', location, str(err)) from err
        except errors.LinalgError as err:
            raise errors.ValidationError('projector', location, str(err)) from err

    def _partition(self, grid: HistoryGrid, name: str, classes: dict[str, list[str]]) -> Partition:
        location = f'$.partitions.{name}'
        by_label = {grid.label_of(h): h for h in grid.histories()}
        members = []
        for label, histories in classes.items():
            unknown = [h for h in histories if h not in by_label]
            if unknown:
                raise errors.ValidationError('history labels', f'{location}.{label}', f'unknown histories {unknown}')
            members.append(frozenset(by_label[h] for h in histories))
        partition = Partition(tuple(members), tuple(classes))
        try:
            partition.validate(grid)
        except errors.InvalidPartition as err:
            raise errors.ValidationError('exhaustive and exclusive classes', location, str(err)) from err
        return partition

    def _data(self, grid: HistoryGrid) -> Reference | None:
        if self._doc.data is None:
            return None
        try:
            reference = Reference.parse(self._doc.data)
            grid.find(reference)
        except errors.HistoryError as err:
            raise errors.ValidationError('reference', '$.data', str(err)) from err
        return reference


def load_scenario(document: Any, *, tolerances: Tolerances = DEFAULT_TOLERANCES, source: Any = '<memory>') -> Scenario:
    """Build a scenario from an already decoded JSON document

    :raise ValidationError: with the JSON path of the first offending value
    """
    try:
        doc = ScenarioDocument.model_validate(document)
    except pydantic.ValidationError as err:
        first = err.errors()[0]
        raise errors.ValidationError('schema', _location(first['loc']), first['msg']) from None
    scenario = _Builder(doc, tolerances).build()
    logger.debug('loaded scenario %r from %s', scenario.grid.label, source)
    return scenario


def parse_scenario(path: Path | str, *, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Scenario:
    """
    :raise ParseError: if the file cannot be read or is not JSON
    :raise ValidationError: if the content does not describe a valid grid
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as err:
        raise errors.ParseError(path, '$', err.strerror or str(err)) from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise errors.ParseError(path, f'line {err.lineno} column {err.colno}', err.msg) from None
    return load_scenario(document, tolerances=tolerances, source=path)


def _pairs(array: np.ndarray) -> Any:
    array = np.asarray(array, dtype=complex)
    if array.ndim == 0:
        return [float(array.real), float(array.imag)]
    return [_pairs(row) for row in array]


def _projector_document(p: Projector) -> dict[str, Any]:
    document: dict[str, Any] = {'name': p.name, 'matrix': _pairs(p.matrix)}
    if p.layout is not None:
        document['site'] = p.layout.site
    return document


def _hamiltonian_document(h: Hamiltonian) -> str | dict[str, Any]:
    if h.is_product:
        return {'product_basis': {
            'bases': [_pairs(b) for b in h.bases],
            'energies': [float(e) for e in h.energies.reshape(-1)],
        }}
    if h.is_zero:
        return 'zero'
    return {'matrix': _pairs(h.matrix)}


def scenario_document(scenario: Scenario) -> dict[str, Any]:
    """JSON document that :func:`load_scenario` turns back into an identical scenario"""
    grid = scenario.grid
    layouts = [p.layout for s in grid.sets for p in s.projectors if p.layout is not None]
    dims = layouts[0].dims if layouts else None
    if dims is None and grid.hamiltonian.is_product:
        dims = grid.hamiltonian.energies.shape
    document: dict[str, Any] = {
        'schema': SCHEMA,
        'label': grid.label,
        'dimension': grid.dim,
    }
    if dims is not None and len(dims) > 1:
        document['layout'] = list(dims)
    document['hamiltonian'] = _hamiltonian_document(grid.hamiltonian)
    document['initial_state'] = _pairs(grid.initial_state.amplitudes)
    document['alternative_sets'] = [
        {'time': s.time, 'label': s.label, 'projectors': [_projector_document(p) for p in s.projectors]}
        for s in grid.sets
    ]
    if scenario.partitions:
        document['partitions'] = {
            name: {label: [grid.label_of(h) for h in members]
                   for label, members in zip(partition.labels, partition.members(grid))}
            for name, partition in scenario.partitions.items()
        }
    if scenario.data is not None:
        document['data'] = str(scenario.data)
    return document


def dump_scenario(scenario: Scenario, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scenario_document(scenario), indent=1, ensure_ascii=False) + '\n', encoding='utf-8')
    logger.debug('dumped scenario %r to %s', scenario.grid.label, path)
    return path


class EventsFile(_Strict):
    events: dict[str, list[float]]


class IgusEntry(_Strict):
    name: str
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)


class IgusGroupFile(_Strict):
    igus: list[IgusEntry] = Field(min_length=1)
    tau_star: float = Field(gt=0)
    env_timescale: float = Field(gt=0)


def _read_document(path: Path, model: type[BaseModel]) -> BaseModel:
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except OSError as err:
        raise errors.ParseError(path, '$', err.strerror or str(err)) from None
    except json.JSONDecodeError as err:
        raise errors.ParseError(path, f'line {err.lineno} column {err.colno}', err.msg) from None
    try:
        return model.model_validate(document)
    except pydantic.ValidationError as err:
        first = err.errors()[0]
        raise errors.ValidationError('schema', _location(first['loc']), first['msg']) from None


def load_events(path: Path | str) -> dict[str, Event]:
    """Named events, ``{"events": {"name": [t, x, y, z]}}``"""
    doc = _read_document(Path(path), EventsFile)
    events = {}
    for name, coordinates in doc.events.items():
        if not 1 <= len(coordinates) <= 4:
            raise errors.ValidationError('event coordinates', f'$.events.{name}', 'expected [t, x, y, z]')
        try:
            events[name] = Event(*coordinates)
        except errors.SpacetimeError as err:
            raise errors.ValidationError('event coordinates', f'$.events.{name}', str(err)) from err
    return events


def load_igus_group(path: Path | str) -> IgusGroup:
    doc = _read_document(Path(path), IgusGroupFile)
    members = []
    for i, igus in enumerate(doc.igus):
        try:
            members.append(Igus(igus.name, igus.position, igus.velocity))
        except errors.SpacetimeError as err:
            raise errors.ValidationError('subluminal velocity', f'$.igus[{i}]', str(err)) from err
    return IgusGroup(tuple(members), doc.tau_star, doc.env_timescale)
