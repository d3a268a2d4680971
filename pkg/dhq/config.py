"""Numeric policy of the engine.

Every operation that compares numbers against zero takes a ``tolerances`` keyword
defaulting to :data:`DEFAULT_TOLERANCES`.
"""
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """
    :param tol_alg: max-norm tolerance for algebraic identities (P = P^dagger, P^2 = P, sum P = I)
    :param tol_dec: threshold on the normalized off-diagonal of the decoherence functional
    :param offdiag_floor: added to the normalizing denominator of off-diagonal entries
    :param zero_branch: branches with squared norm below this never interfere
    :param p_floor: smallest probability one may condition on
    :param zero_product: products P*Q with smaller max-norm are dropped from joins
    :param history_cap: most histories a grid may enumerate
    :param gram_limit: reports include the full gram matrix up to this many histories
    :param print_zero: probabilities below this are reported as 0
    :param happened_threshold: probability from which a past alternative "happened"
    :param workers: threads used to fill the gram matrix
    """
    tol_alg: float = 1e-10
    tol_dec: float = 1e-8
    offdiag_floor: float = 1e-14
    zero_branch: float = 1e-14
    p_floor: float = 1e-12
    zero_product: float = 1e-12
    history_cap: int = 10 ** 6
    gram_limit: int = 64
    print_zero: float = 1e-14
    happened_threshold: float = 0.99
    workers: int = 1

    def replace(self, **changes) -> 'Tolerances':
        return dataclasses.replace(self, **changes)


DEFAULT_TOLERANCES = Tolerances()
