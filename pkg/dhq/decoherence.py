"""Decoherence functional, medium-decoherence verdicts and probability sum rules"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

from dhq import errors
from dhq.config import Tolerances
from dhq.histories import HistoryGrid, HistoryIndex, Partition

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DecoherenceReport:
    """Gram matrix of branch overlaps D(a, b) = <Psi_a|Psi_b> and the verdict on it"""
    keys: tuple[Hashable, ...]
    labels: tuple[str, ...]
    gram: np.ndarray
    max_offdiag_normalized: float
    worst_pair: tuple[int, int] | None
    decoherent: bool
    tol_used: float

    @property
    def probabilities(self) -> np.ndarray:
        return self.gram.diagonal().real

    @property
    def total(self) -> float:
        """Sum over every gram entry, <Psi|Psi> for an exhaustive set"""
        return float(self.gram.sum().real)

    @cached_property
    def min_eigenvalue(self) -> float:
        hermitian = (self.gram + self.gram.conj().T) / 2
        return float(np.linalg.eigvalsh(hermitian)[0])

    def probability(self, key: Hashable) -> float:
        return float(self.probabilities[self.keys.index(key)])


def _fill_gram(branches: np.ndarray, workers: int) -> np.ndarray:
    """Column j is computed from branch j alone, so the result does not depend on ``workers``"""
    count = branches.shape[0]
    gram = np.empty((count, count), dtype=complex)
    conjugated = branches.conj()

    def fill_column(j: int):
        gram[:, j] = conjugated @ branches[j]

    if workers > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_column, range(count)))
    else:
        for j in range(count):
            fill_column(j)
    return gram


def report_from_branches(
    keys: Sequence[Hashable],
    labels: Sequence[str],
    branches: Sequence[np.ndarray],
    tolerances: Tolerances,
) -> DecoherenceReport:
    """Medium-decoherence verdict on a family of branch vectors.

    Off-diagonals are normalized as |D(a,b)| / (sqrt(D(a,a) D(b,b)) + floor); pairs with a
    branch of squared norm below ``zero_branch`` count as non-interfering.
    """
    stacked = np.vstack([np.asarray(b) for b in branches])
    gram = _fill_gram(stacked, tolerances.workers)
    gram.setflags(write=False)
    diagonal = gram.diagonal().real
    live = diagonal >= tolerances.zero_branch
    denominator = np.sqrt(np.outer(np.clip(diagonal, 0, None), np.clip(diagonal, 0, None))) + tolerances.offdiag_floor
    normalized = np.abs(gram) / denominator
    normalized[~np.outer(live, live)] = 0.0
    np.fill_diagonal(normalized, 0.0)
    if normalized.size > 1:
        flat = int(np.argmax(normalized))
        worst = divmod(flat, normalized.shape[1])
        max_offdiag = float(normalized[worst])
    else:
        worst, max_offdiag = None, 0.0
    decoherent = max_offdiag <= tolerances.tol_dec
    logger.debug('%d branches, max normalized off-diagonal %.3e, decoherent=%s',
                 len(keys), max_offdiag, decoherent)
    return DecoherenceReport(
        keys=tuple(keys),
        labels=tuple(labels),
        gram=gram,
        max_offdiag_normalized=max_offdiag,
        worst_pair=worst if max_offdiag > 0 else None,
        decoherent=decoherent,
        tol_used=tolerances.tol_dec,
    )


def decoherence_functional(grid: HistoryGrid, *, tolerances: Tolerances | None = None) -> DecoherenceReport:
    """:raise GridTooLarge: if the grid has more histories than the cap"""
    tolerances = tolerances or grid.tolerances
    histories = grid.histories(tolerances.history_cap)
    branches = [grid.branch_vector(h).amplitudes for h in histories]
    return report_from_branches(histories, [grid.label_of(h) for h in histories], branches, tolerances)


def clamp_probability(p: float, tolerances: Tolerances) -> float:
    if p < tolerances.print_zero:
        return 0.0
    return min(p, 1.0)


def probabilities(
    grid: HistoryGrid,
    *,
    tolerances: Tolerances | None = None,
) -> list[tuple[HistoryIndex, float]]:
    """p(a) = |C_a Psi|^2 for a decoherent grid

    :raise NotDecoherent: with the failing report attached
    """
    tolerances = tolerances or grid.tolerances
    report = decoherence_functional(grid, tolerances=tolerances)
    if not report.decoherent:
        raise errors.NotDecoherent(report)
    return [(h, clamp_probability(float(p), tolerances)) for h, p in zip(report.keys, report.probabilities)]


def check_sum_rules(grid: HistoryGrid, partition: Partition) -> float:
    """Largest |p(coarse class) - sum of p(members)| over the partition's classes

    :raise InvalidPartition: if the partition does not cover the grid's histories exactly
    """
    partition.validate(grid)
    violation = 0.0
    for members in partition.members(grid):
        branches = [grid.branch_vector(h).amplitudes for h in members]
        coarse = np.sum(branches, axis=0)
        p_coarse = float(np.vdot(coarse, coarse).real)
        p_sum = float(sum(np.vdot(b, b).real for b in branches))
        violation = max(violation, abs(p_coarse - p_sum))
    logger.debug('grid %r: sum-rule violation %.3e over %d classes', grid.label, violation, len(partition))
    return violation
