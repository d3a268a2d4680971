"""Built-in scenarios: the three-box model, two slits and a dephasing spin environment"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from dhq import errors
from dhq.config import DEFAULT_TOLERANCES, Tolerances
from dhq.decoherence import DecoherenceReport, decoherence_functional
from dhq.enums import RealmKind
from dhq.histories import AlternativeSet, HistoryGrid, Reference
from dhq.linalg import Hamiltonian, Projector, StateVector, complement, embed, projector_from_span

logger = logging.getLogger(__name__)

BOXES = ('A', 'B', 'C')
MAX_ENVIRONMENT = 20

# box basis |A>, |B>, |C>
PSI = np.array([1, 1, 1]) / math.sqrt(3)
PHI = np.array([1, 1, -1]) / math.sqrt(3)


@dataclass(frozen=True, eq=False)
class ThreeBoxScenario:
    realm_kind: RealmKind
    grid: HistoryGrid
    data: Reference


def _box(name: str) -> Projector:
    return projector_from_span([np.eye(3)[BOXES.index(name)]], name)


def _yes_no(projector: Projector) -> tuple[Projector, Projector]:
    return projector, complement(projector)


def three_box(kind: RealmKind | str, *, tolerances: Tolerances = DEFAULT_TOLERANCES) -> ThreeBoxScenario:
    """Particle in three boxes, H = 0, prepared in |Psi> and found in |Phi> at the present time.

    ``past_A``, ``past_B`` and ``past_Psi`` follow one past alternative at t=1 and the
    data at t=2; ``joint_AB`` follows A at t=1, B at t=2 and the data at t=3.
    """
    kind = RealmKind(kind)
    data = _yes_no(projector_from_span([PHI], 'Φ'))
    past = {
        RealmKind.PAST_A: [('A', _yes_no(_box('A')))],
        RealmKind.PAST_B: [('B', _yes_no(_box('B')))],
        RealmKind.PAST_PSI: [('Ψ', _yes_no(projector_from_span([PSI], 'Ψ')))],
        RealmKind.JOINT_AB: [('A', _yes_no(_box('A'))), ('B', _yes_no(_box('B')))],
    }[kind]
    sets = [AlternativeSet(t, projectors, label) for t, (label, projectors) in enumerate(past, start=1)]
    now = len(sets) + 1
    sets.append(AlternativeSet(now, data, 'Φ'))
    grid = HistoryGrid(
        sets,
        hamiltonian=Hamiltonian.zero(3),
        initial_state=StateVector(PSI, normalized=True),
        label=f'three-box/{kind}',
        tolerances=tolerances,
    )
    return ThreeBoxScenario(kind, grid, Reference('Φ', now))


def swap_unitary() -> np.ndarray:
    """Exchange of boxes A and B; fixes |Psi> and |Phi>"""
    return np.eye(3)[[1, 0, 2]]


def relabel_ab(kind: RealmKind | str) -> RealmKind:
    kind = RealmKind(kind)
    return {RealmKind.PAST_A: RealmKind.PAST_B, RealmKind.PAST_B: RealmKind.PAST_A}.get(kind, kind)


@dataclass(frozen=True, eq=False)
class TwoSlitScenario:
    screen_bins: int
    with_environment: bool
    grid: HistoryGrid
    data: Reference


def amplitude_table(bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Far-field screen amplitudes of the upper and lower slit.

    u_b = exp(+i k x_b)/sqrt(m) and l_b = exp(-i k x_b)/sqrt(m) with k = pi/m and
    x_b = b - (m-1)/2; the two columns are orthonormal and interfere with
    2 Re(u_b* l_b) = 2 cos(2 k x_b)/m at bin b.
    """
    if bins < 2:
        raise errors.ModelError(f'two slits need at least 2 screen bins, got {bins}')
    x = np.arange(bins) - (bins - 1) / 2
    k = math.pi / bins
    upper = np.exp(1j * k * x) / math.sqrt(bins)
    lower = np.exp(-1j * k * x) / math.sqrt(bins)
    return upper, lower


def two_slit(bins: int = 8, with_environment: bool = False, *,
             tolerances: Tolerances = DEFAULT_TOLERANCES) -> TwoSlitScenario:
    """Slit alternative at t=1, screen bin at t=2, H = 0.

    The particle space is spanned by the screen bins; the slit projectors project onto
    the two slit wave functions. With ``with_environment`` an ancilla qubit records the
    slit: |Psi> = (|u>|0> + |l>|1>)/sqrt(2).
    """
    upper, lower = amplitude_table(bins)
    slits = [projector_from_span([upper], 'u'), projector_from_span([lower], 'l')]
    if bins > 2:
        barrier = Projector(np.eye(bins) - slits[0].matrix - slits[1].matrix, 'barrier')
        slits.append(barrier)
    screen = [projector_from_span([np.eye(bins)[b]], f'x{b}') for b in range(bins)]
    if with_environment:
        dims = (bins, 2)
        slits = [embed(p, dims, 0) for p in slits]
        screen = [embed(p, dims, 0) for p in screen]
        state = (np.kron(upper, [1, 0]) + np.kron(lower, [0, 1])) / math.sqrt(2)
    else:
        state = (upper + lower) / math.sqrt(2)
    dim = len(state)
    grid = HistoryGrid(
        [AlternativeSet(1, slits, 'slit'), AlternativeSet(2, screen, 'screen')],
        hamiltonian=Hamiltonian.zero(dim),
        initial_state=StateVector.from_amplitudes(state),
        label=f'two-slit/{bins}' + ('/environment' if with_environment else ''),
        tolerances=tolerances,
    )
    return TwoSlitScenario(bins, with_environment, grid, Reference('x0', 2))


@dataclass(frozen=True, eq=False)
class SpinEnvironmentScenario:
    """System qubit followed at t=0 in {|0>,|1>} and at t=1 in {|+>,|->}.

    Between the two times each of ``n_env`` environment spins is rotated by ``theta``
    about y when the system is in |1>, leaving a record the grid does not follow.
    """
    n_env: int
    theta: float
    grid: HistoryGrid
    data: Reference

    @property
    def record_overlap(self) -> float:
        """<0|R_y(theta)|0> for one scatterer"""
        return math.cos(self.theta / 2)

    @property
    def closed_form(self) -> float:
        return abs(self.record_overlap) ** self.n_env

    @cached_property
    def report(self) -> DecoherenceReport:
        return decoherence_functional(self.grid)

    @property
    def offdiag(self) -> float:
        """Numerically computed normalized off-diagonal of the system-only grid"""
        return self.report.max_offdiag_normalized


def _sigma_y_basis() -> np.ndarray:
    # columns: +1 and -1 eigenvectors of sigma_y
    return np.array([[1, 1], [1j, -1j]]) / math.sqrt(2)


def spin_environment(n_env: int, theta: float, *,
                     tolerances: Tolerances = DEFAULT_TOLERANCES) -> SpinEnvironmentScenario:
    """
    :param n_env: number of environment spins, 1 to 20
    :param theta: rotation angle per scatterer in [0, pi]
    :raise EnvironmentTooLarge: for more than 20 spins
    """
    if n_env < 1:
        raise errors.ModelError(f'at least one environment spin is needed, got {n_env}')
    if n_env > MAX_ENVIRONMENT:
        raise errors.EnvironmentTooLarge(n_env, MAX_ENVIRONMENT)
    if not 0 <= theta <= math.pi:
        raise errors.ModelError(f'theta must lie in [0, pi], got {theta:g}')
    dims = (2,) * (n_env + 1)

    # H = theta/2 |1><1| (x) sum_k sigma_y^k, so U(1) rotates every spin by R_y(theta) on |1>
    spins = np.array([1.0, -1.0])
    total = np.zeros((2,) * n_env)
    for site in range(n_env):
        total = total + spins.reshape((1,) * site + (2,) + (1,) * (n_env - site - 1))
    energies = np.multiply.outer(np.array([0.0, 1.0]), total) * theta / 2
    hamiltonian = Hamiltonian.from_product_basis([np.eye(2)] + [_sigma_y_basis()] * n_env, energies)

    z = [embed(np.diag([1.0, 0.0]), dims, 0, '0'), embed(np.diag([0.0, 1.0]), dims, 0, '1')]
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    x = [embed(np.outer(plus, plus), dims, 0, '+'), embed(np.outer(minus, minus), dims, 0, '−')]

    state = np.zeros(2 ** (n_env + 1))
    state[0] = state[2 ** n_env] = 1 / math.sqrt(2)
    grid = HistoryGrid(
        [AlternativeSet(0, z, 'z'), AlternativeSet(1, x, 'x')],
        hamiltonian=hamiltonian,
        initial_state=StateVector(state, normalized=True),
        label=f'spin-env/{n_env}/{theta:.6g}',
        tolerances=tolerances,
    )
    logger.debug('spin environment with %d spins, dimension %d', n_env, grid.dim)
    return SpinEnvironmentScenario(n_env, float(theta), grid, Reference('+', 1))
