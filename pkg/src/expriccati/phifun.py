"""phi functions of scalars and of Sylvester operators.

The family is phi_0(z) = exp(z) and, for j >= 1,

    phi_j(z) = int_0^1 exp((1-t) z) t^(j-1) / (j-1)! dt,

with the recurrence phi_{j+1}(z) = (phi_j(z) - 1/j!) / z and the values
phi_j(0) = 1/j!.  Operator-level linear combinations
sum_j phi_j(hS)(N_j) are evaluated by forward or backward recursions that
reduce everything to a single phi action plus cheap corrections.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .densecore import as_matrix, solve_sylvester
from .errors import DimensionError, DomainError
from .sylvop import SylvesterOperator, phi_action_augmented

__all__ = [
    "QuadratureRule",
    "PhiCombination",
    "phi_scalar",
    "phi_action_quadrature",
    "eval_forward",
    "eval_backward",
]

# Below this magnitude the upward recurrence from exp(z) cancels badly,
# so a truncated power series is used instead.
SERIES_CUTOFF = 0.1
SERIES_TERMS = 25


def phi_scalar(j, z):
    """phi_j at a scalar (real or complex) argument."""
    if j < 0:
        raise DomainError("phi index must be >= 0")
    if j == 0:
        return np.exp(z)
    if abs(z) < SERIES_CUTOFF:
        # Horner on sum_m z^m / (m+j)!
        acc = 1.0 / factorial(SERIES_TERMS - 1 + j)
        for m in range(SERIES_TERMS - 2, -1, -1):
            acc = acc * z + 1.0 / factorial(m + j)
        return acc
    val = np.exp(z)
    for i in range(j):
        val = (val - 1.0 / factorial(i)) / z
    return val


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature nodes and weights on [0, 1].

    Weights must sum to one (exactness for constants); nodes must lie in
    the unit interval.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.atleast_1d(np.asarray(self.nodes, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise DimensionError("nodes and weights must be 1-D of equal length")
        if nodes.size == 0:
            raise DomainError("rule needs at least one node")
        if nodes.min() < 0.0 or nodes.max() > 1.0:
            raise DomainError("nodes must lie in [0, 1]")
        if abs(weights.sum() - 1.0) > 1e-14:
            raise DomainError(f"weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    @classmethod
    def gauss_legendre(cls, count=7):
        """Gauss-Legendre rule mapped from [-1, 1] to [0, 1]."""
        if count < 1:
            raise DomainError("node count must be positive")
        x, w = np.polynomial.legendre.leggauss(count)
        return cls(0.5 * (x + 1.0), 0.5 * w)


@dataclass(frozen=True)
class PhiCombination:
    """Operands of the linear combination sum_{j=0..k} phi_j(hS)(N_j)."""

    operands: tuple
    operator: SylvesterOperator
    h: float

    def __post_init__(self):
        if len(self.operands) == 0:
            raise DomainError("combination needs at least the phi_0 operand")
        shape = (self.operator.rows, self.operator.cols)
        coerced = []
        for idx, op in enumerate(self.operands):
            mat = as_matrix(op, f"operand {idx}")
            if mat.shape != shape:
                raise DimensionError(
                    f"operand {idx} has shape {mat.shape}, expected {shape}"
                )
            coerced.append(mat)
        object.__setattr__(self, "operands", tuple(coerced))

    @property
    def order(self):
        return len(self.operands) - 1


def phi_action_quadrature(k, operator, h, mat, rule):
    """Quadrature approximation of phi_k(hS)(N) for k >= 1.

    Evaluates (1/(k-1)!) sum_j w_j s_j^(k-1) exp((1-s_j) hS)(N) with the
    node exponentials applied exactly as two-sided products.  Nodes are
    summed in ascending index order so results are reproducible.  k = 0 is
    refused; plain operator exponentials are always computed exactly.
    """
    if k < 1:
        raise DomainError("quadrature path needs k >= 1; use exp_action for k = 0")
    mat = operator._check_operand(mat, "operand")
    acc = np.zeros_like(mat)
    for s, w in zip(rule.nodes, rule.weights):
        acc = acc + (w * s ** (k - 1)) * operator.exp_action((1.0 - s) * h, mat)
    return acc / factorial(k - 1)


def _phi_head(k, operator, h, mat, method, rule):
    if method == "augmented":
        return phi_action_augmented(operator, h, k, mat)
    if method == "quadrature":
        if rule is None:
            raise DomainError("quadrature method needs a rule")
        return phi_action_quadrature(k, operator, h, mat, rule)
    raise DomainError(f"unknown phi evaluation method {method!r}")


def eval_forward(comb, method="augmented", rule=None):
    """Evaluate sum_j phi_j(hS)(N_j) by the forward recursion.

    Builds W_0 = N_0, W_j = hS(W_{j-1}) + N_j and returns
    phi_k(hS)(W_k) + sum_{j<k} W_j / j!, so only the single trailing
    phi_k action remains.  That action is exact through the augmented
    block exponential by default, or approximated by quadrature when
    ``method="quadrature"`` and a rule is supplied.
    """
    op = comb.operator
    k = comb.order
    w = comb.operands[0]
    if k == 0:
        return op.exp_action(comb.h, w)
    low = np.zeros_like(w)
    for j in range(1, k + 1):
        low = low + w / factorial(j - 1)
        w = comb.h * op.apply(w) + comb.operands[j]
    return _phi_head(k, op, comb.h, w, method, rule) + low


def eval_backward(comb):
    """Evaluate sum_j phi_j(hS)(N_j) by the backward recursion.

    Costs k Sylvester solves with the scaled coefficients (hA, hD) plus a
    single operator exponential: W_k = (hS)^{-1} N_k,
    W_j = (hS)^{-1}(N_j + W_{j+1}), and the value is
    phi_0(hS)(N_0 + W_1) - sum_{j>=1} W_j / (j-1)!.  Requires hS to be
    invertible (disjoint spectra of hA and -hD).
    """
    op = comb.operator
    k = comb.order
    if k == 0:
        return op.exp_action(comb.h, comb.operands[0])
    ha = comb.h * op.A
    hd = comb.h * op.D
    w = solve_sylvester(ha, hd, comb.operands[k])
    corr = w / factorial(k - 1)
    for j in range(k - 1, 0, -1):
        w = solve_sylvester(ha, hd, comb.operands[j] + w)
        corr = corr + w / factorial(j - 1)
    return op.exp_action(comb.h, comb.operands[0] + w) - corr
