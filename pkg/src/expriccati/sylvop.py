"""The Sylvester operator X -> AX + XD and its exponential-type actions.

The exponential of the operator factorizes into two ordinary matrix
exponentials, exp(tS)(X) = exp(tA) X exp(tD), which is what makes
exponential integrators for matrix-valued stiff problems practical: no
vectorized MN x MN exponential is ever needed.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .densecore import as_matrix, expm, require_square
from .errors import DimensionError, DomainError

__all__ = [
    "SylvesterOperator",
    "Linearization",
    "linearize",
    "phi1_action_augmented",
    "phi_action_augmented",
]


@dataclass(frozen=True)
class SylvesterOperator:
    """Pair of square coefficients acting on M x N matrices as AX + XD."""

    A: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", require_square(as_matrix(self.A, "A"), "A"))
        object.__setattr__(self, "D", require_square(as_matrix(self.D, "D"), "D"))

    @property
    def rows(self):
        return self.A.shape[0]

    @property
    def cols(self):
        return self.D.shape[0]

    def _check_operand(self, x, name="operand"):
        x = as_matrix(x, name)
        if x.shape != (self.rows, self.cols):
            raise DimensionError(
                f"{name} shape {x.shape} does not match operator ({self.rows}, {self.cols})"
            )
        return x

    def apply(self, x):
        """AX + XD."""
        x = self._check_operand(x)
        return self.A @ x + x @ self.D

    def exp_action(self, t, x):
        """exp(tA) X exp(tD), the exact operator exponential applied to X."""
        x = self._check_operand(x)
        if t == 0.0:
            return x.copy()
        return expm(t * self.A) @ x @ expm(t * self.D)


@dataclass(frozen=True)
class Linearization:
    """Frechet linearization of the Riccati right-hand side at a state.

    ``A`` and ``D`` are the shifted coefficients A - XG and D - GX;
    ``remainder`` is the value of the nonlinear remainder at the
    linearization point, Q + XGX.
    """

    A: np.ndarray
    D: np.ndarray
    remainder: np.ndarray

    @property
    def operator(self):
        return SylvesterOperator(self.A, self.D)


def linearize(problem, state):
    """Linearize X' = AX + XD + Q - XGX at ``state``."""
    x = as_matrix(state, "state")
    if x.shape != (problem.A.shape[0], problem.D.shape[0]):
        raise DimensionError(
            f"state shape {x.shape} does not match problem "
            f"({problem.A.shape[0]}, {problem.D.shape[0]})"
        )
    xg = x @ problem.G
    return Linearization(
        A=problem.A - xg,
        D=problem.D - problem.G @ x,
        remainder=problem.Q + xg @ x,
    )


# Above this value of |h| (||A||_1 + ||D||_1) the base block exponential
# runs at a halved step and the result is doubled back through the
# semigroup identity; the embedded -hD block would otherwise grow like
# exp(h ||D||) and erode the small phi terms during squaring.
_AUGMENTED_NORM_LIMIT = 4.0


def _phi_integrals_base(operator, t, k, mat):
    """[t^j phi_j(tS)(N) for j = 1..k] from one augmented exponential.

    The block matrix chains k copies of -tD coupled by identities above
    the operand; block (1, j+1) of its exponential, times exp(tD), is
    phi_j(tS)(N).  The operand is balanced to unit norm first (exact,
    undone on extraction) so the exponential sees O(1) blocks.
    """
    m, n = operator.rows, operator.cols
    scale = max(float(np.linalg.norm(mat, 1)), 1e-300)
    size = m + k * n
    block = np.zeros((size, size))
    block[:m, :m] = t * operator.A
    block[:m, m:m + n] = mat / scale
    for i in range(k):
        r0 = m + i * n
        block[r0:r0 + n, r0:r0 + n] = -t * operator.D
        if i + 1 < k:
            block[r0:r0 + n, r0 + n:r0 + 2 * n] = np.eye(n)
    e = expm(block)
    e_right = expm(t * operator.D)
    return [
        (scale * t ** j) * (e[:m, m + (j - 1) * n:m + j * n] @ e_right)
        for j in range(1, k + 1)
    ]


def _phi_integrals(operator, h, k, mat):
    """[h^j phi_j(hS)(N) for j = 1..k], stable at stiff scales.

    For |h| (||A||_1 + ||D||_1) beyond a small limit the base values are
    computed at h / 2^s and doubled s times through

        I_j(2t) = exp(tS)(I_j(t)) + sum_i t^(j-1-i)/(j-1-i)! I_{i+1}(t),

    which only combines quantities at the scale of the result (no growing
    intermediates, unlike the one-shot augmented exponential).
    """
    z = abs(h) * (
        float(np.linalg.norm(operator.A, 1)) + float(np.linalg.norm(operator.D, 1))
    )
    doublings = (
        0 if z <= _AUGMENTED_NORM_LIMIT
        else int(np.ceil(np.log2(z / _AUGMENTED_NORM_LIMIT)))
    )
    t = h / (1 << doublings)
    integrals = _phi_integrals_base(operator, t, k, mat)
    left = expm(t * operator.A)
    right = expm(t * operator.D)
    for _ in range(doublings):
        doubled = []
        for j in range(1, k + 1):
            value = left @ integrals[j - 1] @ right
            for i in range(j):
                value = value + (t ** (j - 1 - i) / factorial(j - 1 - i)) * integrals[i]
            doubled.append(value)
        integrals = doubled
        left = left @ left
        right = right @ right
        t *= 2.0
    return integrals, left, right


def phi1_action_augmented(operator, h, inhom, state):
    """exp(hS)(X) + h phi_1(hS)(V) through the augmented block exponential.

    Embeds the inhomogeneity in the block matrix [[A, V], [0, -D]]: the
    top M rows of its scaled exponential applied to [X; I], multiplied on
    the right by exp(hD), give the whole affine update.  The coupling
    block is balanced, and at stiff scales the exponential is taken at a
    halved step and doubled back through the semigroup identity so the
    update stays accurate at the scale of the result.
    """
    v = operator._check_operand(inhom, "inhomogeneity")
    x = operator._check_operand(state, "state")
    integrals, left, right = _phi_integrals(operator, h, 1, v)
    return left @ x @ right + integrals[0]


def phi_action_augmented(operator, h, k, mat):
    """phi_k(hS)(N) through augmented block exponentials of size M + kN.

    Chains k diagonal copies of -hD coupled by identity blocks above the
    operand block; the top-right M x N block of the exponential, times
    exp(hD), is the phi_k action.  k = 0 falls back to the plain operator
    exponential.  Exact up to matrix-exponential accuracy (with the same
    balancing and step-doubling stabilization as the affine update), so
    it serves as the default route wherever a single higher-order phi
    action of a moderately sized operator is needed.
    """
    if k < 0:
        raise DomainError("phi index must be >= 0")
    if k == 0:
        return operator.exp_action(h, mat)
    x = operator._check_operand(mat, "operand")
    if h == 0.0:
        return x / factorial(k)
    integrals, _, _ = _phi_integrals(operator, h, k, x)
    return integrals[k - 1] / h ** k
