"""Dense complex linear algebra for finite closed systems.

Operators are numpy arrays in double precision. Every array held by a value object is
made read-only, so projectors, states and Hamiltonians can be shared between threads.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, TypeAlias

import numpy as np

from dhq import errors
from dhq.config import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

ComplexMatrix: TypeAlias = np.ndarray

TOL_ALG = DEFAULT_TOLERANCES.tol_alg
NORM_TOL = 1e-12
NEGATION = '¬'


def _frozen(values, ndim: int | None = None) -> np.ndarray:
    array = np.array(values, dtype=complex)
    if ndim is not None and array.ndim != ndim:
        raise errors.DimensionMismatch(f'{ndim}-dimensional array', f'shape {array.shape}', 'shape')
    if not np.all(np.isfinite(array)):
        raise errors.LinalgError('entries must be finite')
    array.setflags(write=False)
    return array


def max_norm(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def negate_name(name: str) -> str:
    return name[len(NEGATION):] if name.startswith(NEGATION) else f'{NEGATION}{name}'


@dataclass(frozen=True)
class Layout:
    """Placement of a local operator on one factor of a tensor-product space."""
    dims: tuple[int, ...]
    site: int

    def __post_init__(self):
        if not self.dims or any(d < 1 for d in self.dims):
            raise errors.LinalgError(f'invalid tensor dimensions {self.dims}')
        if not 0 <= self.site < len(self.dims):
            raise errors.LinalgError(f'site {self.site} outside {len(self.dims)} factors')

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def local_dim(self) -> int:
        return self.dims[self.site]

    def apply(self, local: np.ndarray, vector: np.ndarray) -> np.ndarray:
        psi = vector.reshape(self.dims)
        psi = np.tensordot(local, psi, axes=([1], [self.site]))
        return np.moveaxis(psi, 0, self.site).reshape(-1)

    def dense(self, local: np.ndarray) -> np.ndarray:
        left = math.prod(self.dims[:self.site])
        right = math.prod(self.dims[self.site + 1:])
        return np.kron(np.kron(np.eye(left), local), np.eye(right))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitude vector; |Psi> when ``normalized``, a branch vector otherwise."""
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'amplitudes', _frozen(self.amplitudes, ndim=1))
        if self.amplitudes.size == 0:
            raise errors.LinalgError('state vector is empty')
        if self.normalized and abs(self.norm - 1.0) > NORM_TOL:
            raise errors.LinalgError(f'state is not normalized: |v| = {self.norm:.15g}')

    @classmethod
    def from_amplitudes(cls, values: Iterable[complex]) -> 'StateVector':
        """Normalize ``values`` into a state"""
        array = np.array(list(values), dtype=complex)
        norm = np.linalg.norm(array)
        if norm == 0:
            raise errors.LinalgError('cannot normalize the zero vector')
        return cls(array / norm, normalized=True)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent operator.

    With a ``layout`` the matrix is the local factor and the projector acts as
    ``I (x) matrix (x) I`` on the full space.
    """
    matrix: np.ndarray
    name: str = 'P'
    layout: Layout | None = None
    tol: float = field(default=TOL_ALG, repr=False)

    def __post_init__(self):
        matrix = _frozen(self.matrix, ndim=2)
        object.__setattr__(self, 'matrix', matrix)
        rows, cols = matrix.shape
        if rows != cols:
            raise errors.NotAProjector(self.name, f'matrix is {rows}x{cols}')
        if self.layout is not None and self.layout.local_dim != rows:
            raise errors.DimensionMismatch(self.layout.local_dim, rows)
        if max_norm(matrix - matrix.conj().T) > self.tol:
            raise errors.NotAProjector(self.name, 'not Hermitian')
        if max_norm(matrix @ matrix - matrix) > self.tol:
            raise errors.NotAProjector(self.name, 'not idempotent')
        trace = np.trace(matrix).real
        if abs(trace - round(trace)) > self.tol:
            raise errors.NotAProjector(self.name, f'trace {trace:.15g} is not an integer')

    @property
    def dim(self) -> int:
        return self.layout.dim if self.layout else self.matrix.shape[0]

    @property
    def rank(self) -> int:
        rank = round(np.trace(self.matrix).real)
        return rank * (self.dim // self.matrix.shape[0])

    @cached_property
    def dense(self) -> np.ndarray:
        if self.layout is None:
            return self.matrix
        dense = self.layout.dense(self.matrix)
        dense.setflags(write=False)
        return dense

    def apply(self, vector: np.ndarray) -> np.ndarray:
        if vector.shape[0] != self.dim:
            raise errors.DimensionMismatch(self.dim, vector.shape[0])
        if self.layout is None:
            return self.matrix @ vector
        return self.layout.apply(self.matrix, vector)

    def renamed(self, name: str) -> 'Projector':
        return Projector(self.matrix, name=name, layout=self.layout, tol=self.tol)


class Hamiltonian:
    """Hermitian generator of time evolution, hbar = 1.

    Built from a dense matrix, as zero, or from its eigendecomposition in a product
    basis (one local unitary per tensor factor and an array of energies shaped like
    the factors).
    """

    def __init__(self, matrix: ComplexMatrix, *, tol: float = TOL_ALG):
        matrix = _frozen(matrix, ndim=2)
        if matrix.shape[0] != matrix.shape[1]:
            raise errors.DimensionMismatch('square matrix', matrix.shape, 'shape')
        deviation = max_norm(matrix - matrix.conj().T)
        if deviation > tol:
            raise errors.NotHermitian(deviation)
        self._matrix: np.ndarray | None = matrix
        self._dim = matrix.shape[0]
        self._zero = not np.any(matrix)
        self._bases: tuple[np.ndarray, ...] | None = None
        self._energies: np.ndarray | None = None
        self._tol = tol

    @classmethod
    def zero(cls, dim: int) -> 'Hamiltonian':
        ham = cls.__new__(cls)
        ham._matrix = None
        ham._dim = dim
        ham._zero = True
        ham._bases = None
        ham._energies = None
        ham._tol = TOL_ALG
        return ham

    @classmethod
    def from_product_basis(
        cls,
        bases: Sequence[ComplexMatrix],
        energies: np.ndarray,
        *,
        tol: float = TOL_ALG,
    ) -> 'Hamiltonian':
        """
        :param bases: local unitaries whose columns are the eigenvectors on each factor
        :param energies: real eigenvalues indexed by the product basis, shape = factor dims
        """
        bases = tuple(_frozen(basis, ndim=2) for basis in bases)
        dims = tuple(basis.shape[0] for basis in bases)
        for basis in bases:
            if max_norm(basis.conj().T @ basis - np.eye(basis.shape[0])) > tol:
                raise errors.LinalgError('product basis factor is not unitary')
        energies = np.array(energies, dtype=float)
        if energies.shape != dims:
            raise errors.DimensionMismatch(dims, energies.shape, 'energy array shape')
        energies.setflags(write=False)
        ham = cls.__new__(cls)
        ham._matrix = None
        ham._dim = math.prod(dims)
        ham._zero = not np.any(energies)
        ham._bases = bases
        ham._energies = energies
        ham._tol = tol
        return ham

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def is_zero(self) -> bool:
        return self._zero

    @property
    def is_product(self) -> bool:
        return self._bases is not None

    @property
    def bases(self) -> tuple[np.ndarray, ...] | None:
        return self._bases

    @property
    def energies(self) -> np.ndarray | None:
        return self._energies

    @cached_property
    def matrix(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        if self._zero and self._bases is None:
            matrix = np.zeros((self._dim, self._dim), dtype=complex)
        else:
            eigenvalues, eigenvectors = self.spectrum
            matrix = (eigenvectors * eigenvalues) @ eigenvectors.conj().T
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvector columns"""
        if self._bases is not None:
            eigenvectors = self._bases[0]
            for basis in self._bases[1:]:
                eigenvectors = np.kron(eigenvectors, basis)
            return self._energies.reshape(-1), eigenvectors
        return hermitian_eig(self, tol=self._tol)

    def propagate(self, vector: np.ndarray, t: float) -> np.ndarray:
        """Apply exp(-iHt)"""
        if vector.shape[0] != self._dim:
            raise errors.DimensionMismatch(self._dim, vector.shape[0])
        if self._zero or t == 0:
            return vector
        if self._bases is not None:
            dims = self._energies.shape
            psi = vector.reshape(dims)
            for site, basis in enumerate(self._bases):
                psi = np.moveaxis(np.tensordot(basis.conj().T, psi, axes=([1], [site])), 0, site)
            psi = psi * np.exp(-1j * self._energies * t)
            for site, basis in enumerate(self._bases):
                psi = np.moveaxis(np.tensordot(basis, psi, axes=([1], [site])), 0, site)
            return psi.reshape(-1)
        eigenvalues, eigenvectors = self.spectrum
        return eigenvectors @ (np.exp(-1j * eigenvalues * t) * (eigenvectors.conj().T @ vector))


def projector_from_span(
    vectors: Sequence[StateVector | np.ndarray],
    name: str = 'P',
    *,
    tol: float = TOL_ALG,
) -> Projector:
    """Projector onto the span of linearly independent vectors.

    :raise DimensionMismatch: if vectors differ in dimension
    :raise DegenerateSpan: if the vectors are linearly dependent within ``tol``
    """
    if not vectors:
        raise errors.LinalgError('at least one spanning vector is required')
    columns = [v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=complex)
               for v in vectors]
    dim = columns[0].shape[0]
    for column in columns:
        if column.shape != (dim,):
            raise errors.DimensionMismatch(dim, column.shape[0])
    stacked = np.column_stack(columns)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    if rank < len(columns):
        raise errors.DegenerateSpan(len(columns), rank)
    basis = u[:, :rank]
    return Projector(basis @ basis.conj().T, name=name, tol=tol)


def complement(p: Projector) -> Projector:
    """I - P"""
    identity = np.eye(p.matrix.shape[0])
    return Projector(identity - p.matrix, name=negate_name(p.name), layout=p.layout, tol=p.tol)


def embed(local: Projector | ComplexMatrix, dims: Sequence[int], site: int, name: str | None = None) -> Projector:
    """Place a projector on factor ``site`` of a product space"""
    if isinstance(local, Projector):
        name = name or local.name
        local = local.matrix
    return Projector(local, name=name or 'P', layout=Layout(tuple(dims), site))


def commutator_norm(p: Projector, q: Projector) -> float:
    if p.dim != q.dim:
        raise errors.DimensionMismatch(p.dim, q.dim)
    if p.layout is not None and p.layout == q.layout:
        a, b = p.matrix, q.matrix
    else:
        a, b = p.dense, q.dense
    return max_norm(a @ b - b @ a)


def product(p: Projector, q: Projector, name: str) -> Projector:
    """P*Q for commuting projectors, kept local when both share a layout"""
    if p.layout is not None and p.layout == q.layout:
        return Projector(p.matrix @ q.matrix, name=name, layout=p.layout, tol=p.tol)
    return Projector(p.dense @ q.dense, name=name, tol=p.tol)


def product_norm(p: Projector, q: Projector) -> float:
    if p.layout is not None and p.layout == q.layout:
        return max_norm(p.matrix @ q.matrix)
    return max_norm(p.dense @ q.dense)


def hermitian_eig(h: Hamiltonian | ComplexMatrix, *, tol: float = TOL_ALG) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition H = U diag(eigenvalues) U^dagger.

    Eigenvalues ascend. Each eigenvector is rotated so its largest-magnitude component
    (the first one on ties) is real and positive; degenerate eigenvalues are ordered by
    that component's index.

    :raise NotHermitian: if H deviates from H^dagger by more than ``tol``
    """
    matrix = h.matrix if isinstance(h, Hamiltonian) else np.asarray(h, dtype=complex)
    deviation = max_norm(matrix - matrix.conj().T)
    if deviation > tol:
        raise errors.NotHermitian(deviation)
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    eigenvectors = np.array(eigenvectors)
    pivots = np.empty(len(eigenvalues), dtype=int)
    for column in range(eigenvectors.shape[1]):
        vector = eigenvectors[:, column]
        magnitudes = np.round(np.abs(vector), 12)
        pivot = int(np.argmax(magnitudes))
        pivots[column] = pivot
        eigenvectors[:, column] = vector * (abs(vector[pivot]) / vector[pivot])
    rounded = np.round(eigenvalues, 10)
    order = np.lexsort((pivots, rounded))
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    eigenvalues.setflags(write=False)
    eigenvectors.setflags(write=False)
    return eigenvalues, eigenvectors


def evolve_heisenberg(p: Projector, h: Hamiltonian, t: float) -> Projector:
    """P(t) = exp(+iHt) P exp(-iHt)"""
    if p.dim != h.dim:
        raise errors.DimensionMismatch(h.dim, p.dim)
    if h.is_zero or t == 0:
        return p
    eigenvalues, eigenvectors = h.spectrum
    phases = np.exp(1j * eigenvalues * t)
    in_eigenbasis = eigenvectors.conj().T @ p.dense @ eigenvectors
    in_eigenbasis = phases[:, None] * in_eigenbasis * phases.conj()[None, :]
    evolved = eigenvectors @ in_eigenbasis @ eigenvectors.conj().T
    logger.debug('evolved projector %s to t=%g', p.name, t)
    return Projector(evolved, name=p.name, tol=p.tol)
