"""Coarse-graining, refinement joins, realm compatibility and conditional probabilities"""
import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Collection

import numpy as np

from dhq import errors
from dhq.config import Tolerances
from dhq.decoherence import DecoherenceReport, clamp_probability, decoherence_functional, report_from_branches
from dhq.enums import Compatibility
from dhq.histories import AlternativeSet, HistoryGrid, HistoryIndex, Partition, Reference
from dhq.linalg import commutator_norm, max_norm, product, product_norm

logger = logging.getLogger(__name__)

__all__ = [
    'CoarseGraining', 'CompatibilityVerdict', 'ConditionalTable', 'HappenedVerdict', 'Partition', 'Realm',
    'check_compatibility', 'coarse_grain', 'coarse_partition', 'conditional_probability', 'happened',
    'partition_by_time', 'predict', 'refine_join', 'retrodict',
]


@dataclass(frozen=True, eq=False)
class CoarseGraining:
    grid: HistoryGrid
    partition: Partition
    report: DecoherenceReport

    @cached_property
    def class_operators(self) -> tuple[np.ndarray, ...]:
        """C_bar = sum of the members' class operators, one per class"""
        return tuple(
            sum(self.grid.class_operator(h) for h in members)
            for members in self.partition.members(self.grid)
        )


def coarse_grain(grid: HistoryGrid, partition: Partition, *, tolerances: Tolerances | None = None) -> CoarseGraining:
    """Sum class operators over each class and judge the coarse set.

    Coarse-graining an exactly decoherent grid always decoheres. Grids that decohere only
    within ``tol_dec`` can lose it, since off-diagonal terms below the threshold add up
    across a class; that case is logged as a warning and the coarse report is returned
    as computed.

    :raise InvalidPartition: if the partition does not cover the grid's histories exactly
    """
    tolerances = tolerances or grid.tolerances
    partition.validate(grid, tolerances.history_cap)
    branches = [
        np.sum([grid.branch_vector(h).amplitudes for h in members], axis=0)
        for members in partition.members(grid, tolerances.history_cap)
    ]
    report = report_from_branches(partition.labels, partition.labels, branches, tolerances)
    if not report.decoherent:
        fine = decoherence_functional(grid, tolerances=tolerances)
        if fine.decoherent:
            logger.warning('grid %r decoheres but its coarse-graining does not (%.3e)',
                           grid.label, report.max_offdiag_normalized)
    return CoarseGraining(grid=grid, partition=partition, report=report)


def partition_by_time(grid: HistoryGrid, time: float) -> Partition:
    """Coarse-graining that keeps only the alternative at ``time``"""
    k = next((k for k, t in enumerate(grid.times) if abs(t - time) <= 1e-12), None)
    if k is None:
        raise errors.InvalidPartition(f'no alternative set at t={time:g}')
    names = grid.sets[k].names
    return Partition.by_key(grid, lambda h: names[h[k]])


def _same_dynamics(a: HistoryGrid, b: HistoryGrid, tol: float) -> None:
    if a.dim != b.dim:
        raise errors.DimensionMismatch(a.dim, b.dim)
    if max_norm(a.initial_state.amplitudes - b.initial_state.amplitudes) > tol:
        raise errors.RealmError('grids have different initial states')
    ha, hb = a.hamiltonian, b.hamiltonian
    if ha is hb or (ha.is_zero and hb.is_zero):
        return
    if max_norm(ha.matrix - hb.matrix) > tol:
        raise errors.RealmError('grids have different Hamiltonians')


def _meet(sa: AlternativeSet, sb: AlternativeSet, tolerances: Tolerances) -> AlternativeSet:
    worst = max(commutator_norm(p, q) for p in sa.projectors for q in sb.projectors)
    if worst > tolerances.tol_alg:
        raise errors.NonCommutingSets(worst, sa.time)
    products = []
    for p, q in itertools.product(sa.projectors, sb.projectors):
        if product_norm(p, q) < tolerances.zero_product:
            continue
        name = p.name if p.name == q.name else f'{p.name}∧{q.name}'
        products.append(product(p, q, name))
    label = sa.label if sa.label == sb.label else f'{sa.label}∧{sb.label}'
    return AlternativeSet(sa.time, products, label, tol=tolerances.tol_alg)


def refine_join(a: HistoryGrid, b: HistoryGrid, *, tolerances: Tolerances | None = None) -> HistoryGrid:
    """Common fine-graining of two grids.

    Shared times get the products P*Q of the two sets (zero products dropped); other
    times keep their own set.

    :raise NonCommutingSets: if the sets at a shared time do not commute
    :raise DimensionMismatch: if the grids live in different spaces
    """
    tolerances = tolerances or a.tolerances
    _same_dynamics(a, b, tolerances.tol_alg)
    by_time: dict[float, list[AlternativeSet]] = {}
    for alternatives in (*a.sets, *b.sets):
        key = next((t for t in by_time if abs(t - alternatives.time) <= 1e-12), alternatives.time)
        by_time.setdefault(key, []).append(alternatives)
    sets = []
    for time in sorted(by_time):
        group = by_time[time]
        sets.append(group[0] if len(group) == 1 else _meet(group[0], group[1], tolerances))
    joint = a.replace(sets, label=f'join({a.label}, {b.label})', tolerances=tolerances)
    logger.debug('joined %r and %r into shape %s', a.label, b.label, joint.shape)
    return joint


def coarse_partition(fine: HistoryGrid, coarse: HistoryGrid, *, tolerances: Tolerances | None = None) -> Partition:
    """Partition of ``fine``'s histories onto the histories of a coarser grid.

    Every projector of ``fine`` at a time of ``coarse`` must lie under exactly one
    projector of the coarse set at that time.

    :raise InvalidPartition: if ``fine`` is not a fine-graining of ``coarse``
    """
    tolerances = tolerances or fine.tolerances
    tol = tolerances.tol_alg
    positions = []
    parents = []
    for coarse_set in coarse.sets:
        k = next((k for k, t in enumerate(fine.times) if abs(t - coarse_set.time) <= 1e-12), None)
        if k is None:
            raise errors.InvalidPartition(f'fine grid has no alternatives at t={coarse_set.time:g}')
        mapping = []
        for r in fine.sets[k].projectors:
            under = [i for i, p in enumerate(coarse_set.projectors)
                     if max_norm(p.dense @ r.dense - r.dense) <= tol]
            if len(under) != 1:
                raise errors.InvalidPartition(f'{r.name!r} at t={coarse_set.time:g} lies under {len(under)} '
                                              f'alternatives of {coarse_set.label!r}')
            mapping.append(under[0])
        positions.append(k)
        parents.append(mapping)
    groups: dict[HistoryIndex, list[HistoryIndex]] = {}
    for history in fine.histories(tolerances.history_cap):
        parent = tuple(mapping[history[k]] for k, mapping in zip(positions, parents))
        groups.setdefault(parent, []).append(history)
    keys = [h for h in coarse.histories(tolerances.history_cap) if h in groups]
    return Partition(tuple(frozenset(groups[h]) for h in keys), tuple(coarse.label_of(h) for h in keys))


@dataclass(frozen=True, eq=False)
class Realm:
    """Decoherent set of histories"""
    grid: HistoryGrid
    report: DecoherenceReport

    @classmethod
    def of(cls, grid: HistoryGrid, *, tolerances: Tolerances | None = None) -> 'Realm':
        """:raise NotDecoherent: if the grid does not decohere"""
        report = decoherence_functional(grid, tolerances=tolerances)
        if not report.decoherent:
            raise errors.NotDecoherent(report)
        return cls(grid, report)


@dataclass(frozen=True, eq=False)
class CompatibilityVerdict:
    status: Compatibility
    joint: HistoryGrid | None = None
    report: DecoherenceReport | None = None
    commutator_norm: float | None = None


def check_compatibility(a: Realm, b: Realm, *, tolerances: Tolerances | None = None) -> CompatibilityVerdict:
    """Decide compatibility through the commuting refinement join.

    ``incompatible`` is certified for the joined candidate only; sets that fail to
    commute give ``undetermined``.
    """
    tolerances = tolerances or a.grid.tolerances
    try:
        joint = refine_join(a.grid, b.grid, tolerances=tolerances)
    except errors.NonCommutingSets as err:
        logger.info('realms %r and %r: %s', a.grid.label, b.grid.label, err)
        return CompatibilityVerdict(Compatibility.UNDETERMINED, commutator_norm=err.commutator_norm)
    report = decoherence_functional(joint, tolerances=tolerances)
    status = Compatibility.COMPATIBLE if report.decoherent else Compatibility.INCOMPATIBLE
    return CompatibilityVerdict(status, joint=joint, report=report)


def _probabilities_of(grid: HistoryGrid, tolerances: Tolerances) -> dict[HistoryIndex, float]:
    report = decoherence_functional(grid, tolerances=tolerances)
    if not report.decoherent:
        raise errors.NotDecoherent(report)
    return dict(zip(report.keys, report.probabilities))


def conditional_probability(
    grid: HistoryGrid,
    target: Collection[HistoryIndex],
    given: Collection[HistoryIndex],
    *,
    tolerances: Tolerances | None = None,
) -> float:
    """p(target | given) = p(target and given) / p(given) over a decoherent grid

    :raise NotDecoherent: if the grid does not decohere
    :raise ConditionOnNull: if p(given) is below ``p_floor``
    """
    tolerances = tolerances or grid.tolerances
    target = {grid.check_history(h) for h in target}
    given = {grid.check_history(h) for h in given}
    p = _probabilities_of(grid, tolerances)
    p_given = sum(p[h] for h in given)
    if p_given <= tolerances.p_floor:
        raise errors.ConditionOnNull(p_given, tolerances.p_floor)
    p_joint = sum(p[h] for h in target & given)
    return clamp_probability(p_joint / p_given, tolerances)


@dataclass(frozen=True)
class ConditionalTable:
    """Conditional probabilities of a family of histories given present data"""
    data: Reference
    histories: tuple[HistoryIndex, ...]
    labels: tuple[str, ...]
    probabilities: tuple[float, ...]
    data_probability: float

    @property
    def total(self) -> float:
        return sum(self.probabilities)

    def probability(self, label: str) -> float:
        return self.probabilities[self.labels.index(label)]


def _conditional_family(grid: HistoryGrid, data: Reference, tolerances: Tolerances, future: bool) -> ConditionalTable:
    k0, alpha = grid.find(data)
    expected = 0 if future else len(grid.sets) - 1
    if k0 != expected:
        side = 'future' if future else 'past'
        raise errors.InvalidGrid(f'{side} alternatives must lie strictly to the {side} of {data}')
    report = decoherence_functional(grid, tolerances=tolerances)
    if not report.decoherent:
        raise errors.NotDecoherent(report)
    data_step = (grid.sets[k0].time, grid.sets[k0].projectors[alpha])
    reference = grid.chain_vector([data_step])
    p_data = float(np.vdot(reference, reference).real)
    if p_data <= tolerances.p_floor:
        raise errors.ConditionOnNull(p_data, tolerances.p_floor)
    others = grid.sets[1:] if future else grid.sets[:-1]
    histories, labels, values = [], [], []
    for history in itertools.product(*(range(len(s)) for s in others)):
        steps = [(s.time, s.projectors[beta]) for s, beta in zip(others, history)]
        chain = [data_step, *steps] if future else [*steps, data_step]
        branch = grid.chain_vector(chain)
        histories.append(history)
        labels.append(','.join(reversed([p.name for _, p in steps])))
        values.append(clamp_probability(float(np.vdot(branch, branch).real) / p_data, tolerances))
    table = ConditionalTable(data, tuple(histories), tuple(labels), tuple(values), p_data)
    if abs(table.total - 1) > tolerances.tol_alg:
        logger.warning('conditional probabilities given %s sum to %.12g', data, table.total)
    return table


def predict(grid: HistoryGrid, data: Reference, *, tolerances: Tolerances | None = None) -> ConditionalTable:
    """p(future | d) = |C_fut P_d(t0) Psi|^2 / |P_d(t0) Psi|^2

    The data set must be the earliest in the grid.

    :raise NotDecoherent: if the grid does not decohere
    :raise ConditionOnNull: if p(d) is below ``p_floor``
    """
    return _conditional_family(grid, data, tolerances or grid.tolerances, future=True)


def retrodict(grid: HistoryGrid, data: Reference, *, tolerances: Tolerances | None = None) -> ConditionalTable:
    """p(past | d) = |P_d(t0) C_pst Psi|^2 / |P_d(t0) Psi|^2

    The data set must be the latest in the grid.

    :raise NotDecoherent: if the grid does not decohere
    :raise ConditionOnNull: if p(d) is below ``p_floor``
    """
    return _conditional_family(grid, data, tolerances or grid.tolerances, future=False)


@dataclass(frozen=True)
class HappenedVerdict:
    realm: str
    event: Reference
    data: Reference
    probability: float
    threshold: float

    @property
    def happened(self) -> bool:
        return self.probability >= self.threshold


def happened(
    grid: HistoryGrid,
    data: Reference,
    event: Reference,
    *,
    tolerances: Tolerances | None = None,
) -> HappenedVerdict:
    """Whether a past alternative happened, in the realm ``grid``, given present data"""
    tolerances = tolerances or grid.tolerances
    table = retrodict(grid, data, tolerances=tolerances)
    k, alpha = grid.find(event)
    if k == len(grid.sets) - 1:
        raise errors.InvalidHistory(f'{event} is not to the past of {data}')
    probability = sum(p for h, p in zip(table.histories, table.probabilities) if h[k] == alpha)
    return HappenedVerdict(grid.label, event, data, probability, tolerances.happened_threshold)
