"""Reference solutions and vectorized dense oracles.

The Riccati flow linearizes exactly: with

    [U; V]' = [[-D, G], [Q, A]] [U; V],   U(0) = I,  V(0) = X0,

the solution is X(t) = V(t) U(t)^{-1} as long as U stays invertible.
Propagating the block system with a cached matrix exponential over equal
substeps, and renormalizing U to the identity after every substep,
yields a reference of near machine accuracy that is independent of the
integrators under test.
"""

import warnings

import numpy as np
import scipy.linalg

from .densecore import as_matrix, expm, sylvester_kron_matrix
from .errors import DomainError, FiniteEscapeError

__all__ = ["radon_solve", "radon_trajectory", "kronecker_phi", "KRON_PHI_LIMIT"]

KRON_PHI_LIMIT = 4096

# Keep ||dt H||_1 at most this large before even attempting a propagator;
# avoids pointless exponentials that would overflow anyway.
_NORM_GUARD = 24.0


def _flow_matrix(problem):
    return np.block([[-problem.D, problem.G], [problem.Q, problem.A]])


def _condition_estimate(lu, piv, anorm):
    gecon = scipy.linalg.get_lapack_funcs(("gecon",), (lu,))[0]
    rcond, _ = gecon(lu, anorm, norm="1")
    return np.inf if rcond == 0.0 else 1.0 / rcond


def _propagate(block, x, cond_max):
    """One substep: apply the propagator block and extract the new state.

    Returns None when the extraction is too ill-conditioned (or produced
    non-finite values), signalling the caller to refine the substep.
    """
    n = x.shape[1]
    u = block[:n, :n] + block[:n, n:] @ x
    v = block[n:, :n] + block[n:, n:] @ x
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # exactly-singular U is a refine signal
        try:
            lu, piv = scipy.linalg.lu_factor(u, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            return None
    if not np.all(np.isfinite(lu)):
        return None
    if _condition_estimate(lu, piv, np.linalg.norm(u, 1)) > cond_max:
        return None
    # X_next = V U^{-1}, via U^T applied from the left to V^T.
    return scipy.linalg.lu_solve((lu, piv), v.T, trans=1, check_finite=False).T


class _FlowPropagator:
    """Adaptive equal-substep propagation of the linearized flow.

    The substep count per requested interval is a power of two; it only
    grows, and the propagator exponential is cached per substep size, so
    repeated intervals of the same length cost matrix products only.
    """

    def __init__(self, problem, cond_max, max_halvings):
        self.h_matrix = _flow_matrix(problem)
        self.h_norm = np.linalg.norm(self.h_matrix, 1)
        self.cond_max = cond_max
        self.max_halvings = max_halvings
        self.depth = 0
        self._cache = {}

    def _propagator(self, dt):
        if dt not in self._cache:
            self._cache.clear()  # only the current substep size is ever reused
            self._cache[dt] = expm(dt * self.h_matrix)
        return self._cache[dt]

    def advance(self, x, span):
        if span == 0.0:
            return x
        while self.depth < self.max_halvings and (
            abs(span) * self.h_norm / (1 << self.depth) > _NORM_GUARD
        ):
            self.depth += 1
        steps_left = 1 << self.depth
        dt = span / steps_left
        while steps_left > 0:
            nxt = _propagate(self._propagator(dt), x, self.cond_max)
            if nxt is None:
                if self.depth >= self.max_halvings:
                    raise FiniteEscapeError(
                        f"flow extraction stayed ill-conditioned after "
                        f"{self.max_halvings} halvings (finite escape time?)"
                    )
                self.depth += 1
                steps_left *= 2
                dt /= 2.0
                continue
            x = nxt
            steps_left -= 1
        return x


def radon_solve(problem, t, cond_max=1e4, max_halvings=40):
    """Reference solution of the Riccati flow at time ``t``.

    Propagates the linear block system from [I; X0] and extracts
    X = V U^{-1}; the interval is split into 2^d equal substeps with d
    raised until the extraction stays well-conditioned (1-norm condition
    of U below ``cond_max``) and finite, restarting from the propagated
    state after every substep.  Raises FiniteEscapeError when
    ``max_halvings`` refinements are not enough, the numerical signature
    of a Riccati blow-up.

    ``cond_max`` trades substep count for accuracy: the extraction loses
    roughly eps * cond(U) per substep.  The default keeps the reference
    around 1e-11 relative accuracy on stable problems.
    """
    x = as_matrix(problem.X0, "X0").copy()
    if t == 0.0:
        return x
    flow = _FlowPropagator(problem, cond_max, max_halvings)
    return flow.advance(x, t)


def radon_trajectory(problem, times, cond_max=1e4, max_halvings=40):
    """Reference states at an increasing sequence of times (starting anywhere).

    One flow propagator is shared across the whole sweep so equal spacing
    reuses a single cached exponential.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size and np.any(np.diff(times) < 0):
        raise DomainError("times must be nondecreasing")
    flow = _FlowPropagator(problem, cond_max, max_halvings)
    out = []
    x = as_matrix(problem.X0, "X0").copy()
    current = 0.0
    for t in times:
        x = flow.advance(x, t - current)
        current = t
        out.append(x)
    return out


def kronecker_phi(k, operator, h):
    """Dense phi_k of the vectorized operator matrix h (I x A + D^T x I).

    Test oracle for the operator-level evaluations: applying the returned
    MN x MN matrix to vec(X) and reshaping reproduces phi_k(hS)(X).  The
    matrix is formed explicitly and refused above M*N = 4096.  For k >= 1
    the value is the top-right block of the exponential of the standard
    nilpotent augmentation of size MN (k + 1).
    """
    if k < 0:
        raise DomainError("phi index must be >= 0")
    mn = operator.rows * operator.cols
    if mn > KRON_PHI_LIMIT:
        raise DomainError(f"vectorized phi limited to M*N <= {KRON_PHI_LIMIT}, got {mn}")
    kmat = sylvester_kron_matrix(operator.A, operator.D)
    if k == 0:
        return expm(h * kmat)
    size = mn * (k + 1)
    block = np.zeros((size, size))
    block[:mn, :mn] = h * kmat
    for i in range(k):
        r0 = i * mn
        block[r0:r0 + mn, r0 + mn:r0 + 2 * mn] = np.eye(mn)
    return expm(block)[:mn, k * mn:]
