import json
import math
from pathlib import Path

import numpy as np
import pytest

from dhq.cli.scenario import Scenario, dump_scenario
from dhq.histories import AlternativeSet, HistoryGrid, HistoryIndex, Partition
from dhq.linalg import Hamiltonian, Projector, StateVector
from dhq.models import three_box

SQRT3 = math.sqrt(3)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (z + z.conj().T) / 2


def random_state(rng: np.random.Generator, dim: int) -> StateVector:
    return StateVector.from_amplitudes(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_alternatives(rng: np.random.Generator, basis: np.ndarray, time: float, label: str) -> AlternativeSet:
    """Projectors grouping the columns of ``basis`` into 2 or 3 random nonempty classes"""
    dim = basis.shape[0]
    count = int(rng.integers(2, min(3, dim) + 1))
    owner = np.concatenate([np.arange(count), rng.integers(0, count, size=dim - count)])
    rng.shuffle(owner)
    projectors = []
    for c in range(count):
        columns = basis[:, owner == c]
        projectors.append(Projector(columns @ columns.conj().T, name=f'{label}{c}'))
    return AlternativeSet(time, projectors, label)


def random_decoherent_grid(rng: np.random.Generator) -> HistoryGrid:
    """Grid whose H and alternative sets are all diagonal in one random basis, so it decoheres exactly"""
    dim = int(rng.integers(2, 7))
    times = int(rng.integers(1, 4))
    basis = random_unitary(rng, dim)
    energies = rng.normal(size=dim)
    hamiltonian = Hamiltonian((basis * energies) @ basis.conj().T)
    sets = [random_alternatives(rng, basis, t + 1, chr(ord('a') + t)) for t in range(times)]
    return HistoryGrid(sets, hamiltonian=hamiltonian, initial_state=random_state(rng, dim), label='random')


def random_partition(rng: np.random.Generator, grid: HistoryGrid) -> tuple[Partition, HistoryIndex]:
    """Random partition with at least one singleton class; returns it with that history"""
    histories = grid.histories()
    order = rng.permutation(len(histories))
    single = histories[order[0]]
    rest = [histories[i] for i in order[1:]]
    groups = int(rng.integers(1, 4))
    classes: dict[str, list[HistoryIndex]] = {'single': [single]}
    for i, history in enumerate(rest):
        key = f'g{i % groups if i < groups else int(rng.integers(0, groups))}'
        classes.setdefault(key, []).append(history)
    return Partition(tuple(frozenset(v) for v in classes.values()), tuple(classes)), single


def assert_close(actual, expected, tol: float = 1e-12):
    assert np.max(np.abs(np.asarray(actual) - np.asarray(expected))) <= tol


@pytest.fixture
def past_a():
    return three_box('past_A')


@pytest.fixture
def past_b():
    return three_box('past_B')


@pytest.fixture
def scenario_file(tmp_path):
    def write(scenario: Scenario, name: str = 'scenario.json') -> Path:
        return dump_scenario(scenario, tmp_path / name)
    return write


@pytest.fixture
def json_file(tmp_path):
    def write(document: dict, name: str = 'document.json') -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document, ensure_ascii=False), encoding='utf-8')
        return path
    return write
