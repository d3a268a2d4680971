import threading

import numpy as np
import pytest

from tests.conftest import SQRT3, assert_close, random_decoherent_grid, random_hermitian, random_state
from dhq import errors
from dhq.config import Tolerances
from dhq.histories import (
    AlternativeSet, HistoryGrid, Partition, Reference, branch_vector, class_operator, enumerate_histories,
)
from dhq.linalg import Hamiltonian, Projector, StateVector, complement, projector_from_span
from dhq.models import three_box

PHI = np.array([1, 1, -1]) / SQRT3


def yes_no(matrix, name, time) -> AlternativeSet:
    p = Projector(np.asarray(matrix, dtype=complex), name)
    return AlternativeSet(time, [p, complement(p)], name)


def trivial_grid(dim: int = 2) -> HistoryGrid:
    return HistoryGrid(
        [AlternativeSet(0, [Projector(np.eye(dim), 'I')], 'trivial')],
        hamiltonian=Hamiltonian.zero(dim),
        initial_state=StateVector.from_amplitudes(np.arange(1, dim + 1)),
    )


class TestAlternativeSet:

    def test_valid(self):
        s = yes_no(np.diag([1, 0, 0]), 'A', 1)
        assert len(s) == 2
        assert s.names == ('A', '¬A')
        assert s.index('¬A') == 1
        assert not s.is_fine_grained
        assert s.dim == 3

    def test_fine_grained(self):
        s = AlternativeSet(0, [Projector(np.diag([1, 0]), '0'), Projector(np.diag([0, 1]), '1')], 'z')
        assert s.is_fine_grained

    def test_not_exhaustive(self):
        with pytest.raises(errors.InvalidAlternatives) as err:
            AlternativeSet(0, [Projector(np.diag([1, 0, 0]), 'A'), Projector(np.diag([0, 1, 0]), 'B')], 'AB')
        assert err.value.invariant == 'completeness'
        assert err.value.label == 'AB'

    def test_not_exclusive(self):
        p = Projector(np.diag([1, 0]), 'p')
        plus = projector_from_span([np.array([1, 1])], '+')
        minus = projector_from_span([np.array([1, -1])], '-')
        with pytest.raises(errors.InvalidAlternatives):
            AlternativeSet(0, [p, plus, minus, complement(p)], 'mixed')

    def test_repeated_name(self):
        with pytest.raises(errors.InvalidGrid):
            AlternativeSet(0, [Projector(np.diag([1, 0]), 'p'), Projector(np.diag([0, 1]), 'p')], 'x')

    def test_empty(self):
        with pytest.raises(errors.InvalidGrid):
            AlternativeSet(0, [], 'empty')

    def test_unknown_name(self):
        with pytest.raises(errors.InvalidHistory):
            yes_no(np.diag([1, 0]), 'A', 0).index('B')


class TestReference:

    @pytest.mark.parametrize(['text', 'name', 'time'], (
        ('Φ@2', 'Φ', 2.0),
        ('¬A@1.5', '¬A', 1.5),
        ('x3@-1e-3', 'x3', -1e-3),
    ))
    def test_parse(self, text, name, time):
        reference = Reference.parse(text)
        assert reference == Reference(name, time)
        assert Reference.parse(str(reference)) == reference

    @pytest.mark.parametrize('text', ('A', 'A@', '@2', 'A@two'))
    def test_bad(self, text):
        with pytest.raises(errors.InvalidHistory):
            Reference.parse(text)


class TestHistoryGrid:

    def test_enumeration_order(self):
        grid = HistoryGrid(
            [yes_no(np.diag([1, 0]), 'a', 1), yes_no(np.diag([0, 1]), 'b', 2)],
            hamiltonian=Hamiltonian.zero(2),
            initial_state=StateVector.from_amplitudes([1, 1]),
        )
        assert enumerate_histories(grid) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert grid.history_count == 4
        assert grid.label_of((0, 1)) == '¬b,a'
        assert grid.names((0, 1)) == ('a', '¬b')

    def test_single_set(self):
        grid = trivial_grid()
        assert enumerate_histories(grid) == [(0,)]

    def test_three_box_joint_count(self):
        sets = [yes_no(np.diag([1, 0, 0]), 'A', 1), yes_no(np.diag([0, 1, 0]), 'B', 2),
                AlternativeSet(3, [projector_from_span([PHI], 'Φ'), complement(projector_from_span([PHI], 'Φ'))], 'Φ')]
        grid = HistoryGrid(sets, hamiltonian=Hamiltonian.zero(3),
                           initial_state=StateVector.from_amplitudes([1, 1, 1]))
        assert len(enumerate_histories(grid)) == 8

    @pytest.mark.parametrize('times', ((1, 1), (2, 1)))
    def test_times_must_increase(self, times):
        with pytest.raises(errors.InvalidGrid):
            HistoryGrid(
                [yes_no(np.diag([1, 0]), 'a', times[0]), yes_no(np.diag([1, 0]), 'b', times[1])],
                hamiltonian=Hamiltonian.zero(2),
                initial_state=StateVector.from_amplitudes([1, 0]),
            )

    def test_dimension_mismatch(self):
        with pytest.raises(errors.DimensionMismatch):
            HistoryGrid([yes_no(np.diag([1, 0]), 'a', 0)], hamiltonian=Hamiltonian.zero(3),
                        initial_state=StateVector.from_amplitudes([1, 0, 0]))

    def test_state_must_be_normalized(self):
        with pytest.raises(errors.InvalidGrid):
            HistoryGrid([yes_no(np.diag([1, 0]), 'a', 0)], hamiltonian=Hamiltonian.zero(2),
                        initial_state=StateVector(np.array([1, 1])))

    def test_history_cap(self):
        grid = trivial_grid().replace(
            [yes_no(np.diag([1, 0]), f's{t}', t) for t in range(5)],
            tolerances=Tolerances(history_cap=16),
        )
        with pytest.raises(errors.GridTooLarge) as err:
            grid.histories()
        assert err.value.count == 32

    def test_history_cap_argument(self):
        grid = trivial_grid().replace([yes_no(np.diag([1, 0]), f's{t}', t) for t in range(5)])
        assert len(grid.histories(cap=32)) == 32
        with pytest.raises(errors.GridTooLarge) as err:
            grid.histories(cap=31)
        assert err.value.cap == 31

    @pytest.mark.parametrize('history', ((2,), (0, 0), (-1,)))
    def test_invalid_history(self, history):
        grid = HistoryGrid([yes_no(np.diag([1, 0]), 'a', 0)], hamiltonian=Hamiltonian.zero(2),
                           initial_state=StateVector.from_amplitudes([1, 0]))
        with pytest.raises(errors.InvalidHistory):
            grid.class_operator(history)

    def test_find(self, past_a):
        grid = past_a.grid
        assert grid.find(Reference('Φ', 2)) == (1, 0)
        assert grid.find(Reference('¬A', 1)) == (0, 1)
        with pytest.raises(errors.InvalidHistory):
            grid.find(Reference('Φ', 5))

    def test_heisenberg_computed_once(self):
        rng = np.random.default_rng(2)
        grid = HistoryGrid(
            [AlternativeSet(1.0, [projector_from_span([np.array([1, 0, 0])], 'p'),
                                  projector_from_span([np.array([0, 1, 0]), np.array([0, 0, 1])], 'q')], 's')],
            hamiltonian=Hamiltonian(random_hermitian(rng, 3)),
            initial_state=random_state(rng, 3),
        )
        results = []
        threads = [threading.Thread(target=lambda: results.append(grid.heisenberg(0))) for _ in range(8)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert all(r is results[0] for r in results)


class TestClassOperator:

    def test_single_time_is_projector(self):
        rng = np.random.default_rng(5)
        p = projector_from_span([np.array([1, 0])], 'p')
        grid = HistoryGrid([AlternativeSet(0, [p, complement(p)], 's')],
                           hamiltonian=Hamiltonian(random_hermitian(rng, 2)),
                           initial_state=random_state(rng, 2))
        assert_close(class_operator(grid, (0,)), p.matrix)

    def test_three_box_chain(self, past_a):
        p_a = np.diag([1, 0, 0])
        p_phi = np.outer(PHI, PHI)
        assert_close(past_a.grid.class_operator((0, 0)), p_phi @ p_a)

    @pytest.mark.parametrize('seed', range(5))
    def test_sum_is_identity(self, seed):
        rng = np.random.default_rng(seed)
        dim = 4
        h = Hamiltonian(random_hermitian(rng, dim))
        sets = []
        for t in (0.3, 1.1, 2.0):
            p = projector_from_span([rng.normal(size=dim) + 1j * rng.normal(size=dim)], f'p{t}')
            sets.append(AlternativeSet(t, [p, complement(p)], f's{t}'))
        grid = HistoryGrid(sets, hamiltonian=h, initial_state=random_state(rng, dim))
        total = sum(grid.class_operator(history) for history in grid.histories())
        assert_close(total, np.eye(dim), 1e-10)
        branches = sum(grid.branch_vector(history).amplitudes for history in grid.histories())
        assert_close(branches, grid.initial_state.amplitudes, 1e-10)

    def test_time_independent_for_zero_hamiltonian(self, past_a):
        grid = past_a.grid
        shifted = grid.replace([s.at(t) for s, t in zip(grid.sets, (5.0, 9.0))])
        for history in grid.histories():
            assert_close(grid.class_operator(history), shifted.class_operator(history))


class TestBranchVector:

    def test_three_box_zero_branch(self, past_a):
        # not A at t=1, then Phi at t=2
        assert past_a.grid.label_of((1, 0)) == 'Φ,¬A'
        assert_close(branch_vector(past_a.grid, (1, 0)).amplitudes, np.zeros(3))

    def test_three_box_nonzero_branch(self, past_a):
        assert past_a.grid.label_of((0, 1)) == '¬Φ,A'
        assert branch_vector(past_a.grid, (0, 1)).norm_squared == pytest.approx(2 / 9)

    def test_three_box_joint(self):
        grid = three_box('joint_AB').grid
        # A at t=1, ¬B at t=2, Φ at t=3
        history = (0, 1, 0)
        assert grid.label_of(history) == 'Φ,¬B,A'
        assert_close(grid.branch_vector(history).amplitudes, PHI / 3)

    def test_trivial_grid(self):
        grid = trivial_grid(3)
        assert_close(grid.branch_vector((0,)).amplitudes, grid.initial_state.amplitudes)

    @pytest.mark.parametrize('seed', range(5))
    def test_matches_class_operator(self, seed):
        grid = random_decoherent_grid(np.random.default_rng(seed))
        for history in grid.histories():
            expected = grid.class_operator(history) @ grid.initial_state.amplitudes
            assert_close(grid.branch_vector(history).amplitudes, expected, 1e-10)

    def test_chain_out_of_order(self, past_a):
        grid = past_a.grid
        steps = [(2.0, grid.sets[1].projectors[0]), (1.0, grid.sets[0].projectors[0])]
        with pytest.raises(errors.InvalidHistory):
            grid.chain_vector(steps)


class TestPartition:

    def test_singletons_and_whole(self, past_a):
        grid = past_a.grid
        Partition.singletons(grid).validate(grid)
        whole = Partition.whole(grid)
        whole.validate(grid)
        assert whole.members(grid) == [grid.histories()]

    @pytest.mark.parametrize(['classes', 'labels'], (
        (((0, 0), (0, 1)), ((1, 0), (1, 1))),
        (((0, 0), (0, 1), (1, 0)), ((1, 0), (1, 1))),
        (((0, 0),), ((1, 0), (1, 1))),
    ))
    def test_invalid(self, past_a, classes, labels):
        partition = Partition(tuple(frozenset(c) for c in (classes, labels)), ('x', 'x'))
        with pytest.raises(errors.InvalidPartition):
            partition.validate(past_a.grid)

    def test_by_key(self, past_a):
        grid = past_a.grid
        partition = Partition.by_key(grid, lambda h: grid.names(h)[1])
        assert partition.labels == ('Φ', '¬Φ')
        assert partition.members(grid) == [[(0, 0), (1, 0)], [(0, 1), (1, 1)]]
