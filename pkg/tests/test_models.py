import math

import numpy as np
import pytest

from tests.conftest import assert_close
from dhq import errors
from dhq.decoherence import check_sum_rules, decoherence_functional, probabilities
from dhq.enums import RealmKind
from dhq.models import (
    MAX_ENVIRONMENT, PHI, PSI, amplitude_table, relabel_ab, spin_environment, swap_unitary, three_box, two_slit,
)
from dhq.realms import coarse_grain, partition_by_time, retrodict


class TestThreeBox:

    @pytest.mark.parametrize(['kind', 'shape', 'now'], (
        ('past_A', (2, 2), 2),
        ('past_B', (2, 2), 2),
        ('past_Psi', (2, 2), 2),
        ('joint_AB', (2, 2, 2), 3),
    ))
    def test_shapes(self, kind, shape, now):
        scenario = three_box(kind)
        assert scenario.realm_kind is RealmKind(kind)
        assert scenario.grid.shape == shape
        assert scenario.data.time == now
        assert scenario.grid.label == f'three-box/{kind}'
        assert scenario.grid.hamiltonian.is_zero

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            three_box('past_C')

    def test_swap_fixes_states(self):
        swap = swap_unitary()
        assert_close(swap @ PSI, PSI)
        assert_close(swap @ PHI, PHI)
        assert_close(swap @ swap, np.eye(3))

    def test_swap_maps_a_onto_b(self, past_a, past_b):
        swap = swap_unitary()
        p_a = past_a.grid.sets[0].projectors[0].matrix
        p_b = past_b.grid.sets[0].projectors[0].matrix
        assert_close(swap @ p_a @ swap.T, p_b)

    @pytest.mark.parametrize(['kind', 'swapped'], (
        ('past_A', 'past_B'),
        ('past_B', 'past_A'),
        ('past_Psi', 'past_Psi'),
        ('joint_AB', 'joint_AB'),
    ))
    def test_relabel(self, kind, swapped):
        assert relabel_ab(kind) is RealmKind(swapped)

    def test_symmetric_retrodiction(self, past_a, past_b):
        a = retrodict(past_a.grid, past_a.data)
        b = retrodict(past_b.grid, past_b.data)
        assert a.probabilities == pytest.approx(b.probabilities, abs=1e-12)

    def test_joint_diagonal_breaks_sum_rule(self):
        # three nonzero branches along Phi, each with weight 1/9, while |P_Phi Psi|^2 = 1/9
        grid = three_box('joint_AB').grid
        report = decoherence_functional(grid)
        diagonal = sum(p for h, p in zip(report.keys, report.probabilities) if h[-1] == 0)
        assert diagonal == pytest.approx(1 / 3, abs=1e-12)
        assert abs(np.vdot(PHI, PSI)) ** 2 == pytest.approx(1 / 9)


class TestTwoSlit:

    @pytest.mark.parametrize('bins', (2, 3, 8, 16))
    def test_amplitudes_orthonormal(self, bins):
        upper, lower = amplitude_table(bins)
        assert np.vdot(upper, upper).real == pytest.approx(1)
        assert np.vdot(lower, lower).real == pytest.approx(1)
        assert abs(np.vdot(upper, lower)) <= 1e-12

    def test_too_few_bins(self):
        with pytest.raises(errors.ModelError):
            amplitude_table(1)

    def test_slits(self):
        grid = two_slit(8).grid
        assert grid.sets[0].names == ('u', 'l', 'barrier')
        assert grid.sets[1].names == tuple(f'x{b}' for b in range(8))
        assert two_slit(2).grid.sets[0].names == ('u', 'l')

    def test_slit_realm(self):
        grid = two_slit(8).grid
        slit = coarse_grain(grid, partition_by_time(grid, 1)).report
        assert slit.decoherent
        assert slit.probability('u') == pytest.approx(0.5, abs=1e-12)
        assert slit.probability('l') == pytest.approx(0.5, abs=1e-12)
        assert slit.probability('barrier') == pytest.approx(0, abs=1e-12)

    def test_interference_pattern(self):
        bins = 8
        grid = two_slit(bins).grid
        screen = coarse_grain(grid, partition_by_time(grid, 2)).report
        x = np.arange(bins) - (bins - 1) / 2
        expected = (1 + np.cos(2 * math.pi * x / bins)) / bins
        assert_close(screen.probabilities, expected, 1e-12)
        assert screen.probabilities.sum() == pytest.approx(1, abs=1e-12)

    def test_fine_grid_interferes(self):
        report = decoherence_functional(two_slit(8).grid)
        assert not report.decoherent
        assert abs(report.max_offdiag_normalized - 1) <= 1e-10

    def test_environment_restores_decoherence(self):
        scenario = two_slit(8, True)
        assert scenario.grid.dim == 16
        assert scenario.grid.label == 'two-slit/8/environment'
        table = dict(probabilities(scenario.grid))
        assert sum(table.values()) == pytest.approx(1, abs=1e-12)
        screen = coarse_grain(scenario.grid, partition_by_time(scenario.grid, 2)).report
        assert_close(screen.probabilities, np.full(8, 1 / 8), 1e-12)
        assert check_sum_rules(scenario.grid, partition_by_time(scenario.grid, 2)) <= 1e-12


class TestSpinEnvironment:

    @pytest.mark.parametrize('theta', (math.pi / 6, math.pi / 4, math.pi / 2))
    def test_offdiag_law(self, theta):
        for n in range(1, 13):
            scenario = spin_environment(n, theta)
            assert scenario.offdiag == pytest.approx(abs(math.cos(theta / 2)) ** n, abs=1e-10)
            assert scenario.closed_form == pytest.approx(scenario.offdiag, abs=1e-10)

    @pytest.mark.parametrize('theta', (math.pi / 6, math.pi / 4, math.pi / 2))
    def test_exponential_decay_rate(self, theta):
        n = np.arange(1, 11)
        values = [spin_environment(int(k), theta).offdiag for k in n]
        slope, _ = np.polyfit(n, np.log(values), 1)
        expected = math.log(abs(math.cos(theta / 2)))
        assert abs(slope - expected) <= 0.01 * abs(expected)

    def test_ten_spins_quarter_turn(self):
        scenario = spin_environment(10, math.pi / 2)
        assert scenario.offdiag == pytest.approx(2 ** -5, abs=1e-10)
        assert not scenario.report.decoherent

    def test_full_flip_decoheres(self):
        scenario = spin_environment(3, math.pi)
        assert scenario.report.decoherent
        assert scenario.offdiag <= 1e-12

    def test_no_rotation_keeps_coherence(self):
        assert spin_environment(4, 0.0).offdiag == pytest.approx(1, abs=1e-10)

    def test_system_probabilities(self):
        scenario = spin_environment(6, math.pi)
        table = {scenario.grid.label_of(h): p for h, p in probabilities(scenario.grid)}
        assert table == pytest.approx({'+,0': 0.25, '−,0': 0.25, '+,1': 0.25, '−,1': 0.25}, abs=1e-12)

    def test_too_large(self):
        with pytest.raises(errors.EnvironmentTooLarge) as err:
            spin_environment(MAX_ENVIRONMENT + 1, math.pi / 2)
        assert err.value.limit == MAX_ENVIRONMENT

    @pytest.mark.parametrize(['n_env', 'theta'], ((0, 1.0), (2, -0.1), (2, 4.0)))
    def test_invalid(self, n_env, theta):
        with pytest.raises(errors.ModelError):
            spin_environment(n_env, theta)
