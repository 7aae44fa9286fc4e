"""Dense linear-algebra kernels shared by the rest of the package.

Everything operates on plain 2-D float64 ``numpy`` arrays.  Validation
happens once at these entry points so the higher-level modules stay lean.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError, SolvabilityError

__all__ = [
    "as_matrix",
    "require_square",
    "fro",
    "rel_error",
    "vec",
    "unvec",
    "expm",
    "expm_actions",
    "sylvester_kron_matrix",
    "operator_separation",
    "solve_sylvester",
    "compress",
    "KRON_SOLVE_LIMIT",
]

# Largest M*N for which the vectorized MN x MN Sylvester system may be
# formed explicitly.
KRON_SOLVE_LIMIT = 4096


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a 2-D float array, rejecting non-finite entries."""
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def require_square(a, name="matrix"):
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def fro(a):
    """Frobenius norm."""
    return float(np.linalg.norm(a, "fro"))


def rel_error(approx, exact):
    """Frobenius-norm error of ``approx`` relative to ``exact``."""
    exact = np.asarray(exact, dtype=float)
    scale = fro(exact)
    diff = fro(np.asarray(approx, dtype=float) - exact)
    return diff if scale == 0.0 else diff / scale


def vec(x):
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((rows, cols), order="F")


def expm(a):
    """Matrix exponential of a square real matrix.

    Thin validation wrapper around SciPy's scaling-and-squaring
    implementation with degree-13 diagonal Pade approximants.  Kept as the
    single entry point so every exponential in the package goes through
    the same input checks.
    """
    arr = require_square(as_matrix(a, "expm operand"), "expm operand")
    if arr.size == 0:
        return arr.copy()
    return scipy.linalg.expm(arr)


# Scaled-Taylor application of exp(M) to a thin block: 22 terms leave a
# remainder below 4e-23 once ||M/2^s||_1 <= 1.  Above the norm limit a
# full exponential is cheaper than the repeated applications.
_TAYLOR_TERMS = 22
_TAYLOR_NORM_LIMIT = 16.0


def _taylor_apply(m, b):
    norm = np.linalg.norm(m, 1)
    if norm == 0.0:
        return b.copy()
    s = max(0, int(np.ceil(np.log2(norm))))
    sub = m / (1 << s) if s else m
    out = b
    for _ in range(1 << s):
        term = out
        acc = out.copy()
        for k in range(1, _TAYLOR_TERMS + 1):
            term = sub @ term / k
            acc += term
        out = acc
    return out


def expm_actions(m, taus, b):
    """[exp(tau M) B for tau in taus], sharing work across the tau values.

    When every tau has the same sign and max|tau| ||M||_1 stays modest,
    the products are evaluated along the chain exp(tau' M) B =
    exp((tau' - tau) M) (exp(tau M) B) so each increment only costs a
    short scaled-Taylor application to the thin block.  Outside that
    regime (mixed signs, or norms where intermediate growth would erode
    accuracy) every tau gets its own full exponential.  Results come back
    in the order of ``taus``.
    """
    m = require_square(as_matrix(m, "matrix"), "matrix")
    b = as_matrix(b, "block")
    if b.shape[0] != m.shape[0]:
        raise DimensionError(
            f"block has {b.shape[0]} rows, matrix is {m.shape[0]} square"
        )
    taus = [float(t) for t in taus]
    if any(not np.isfinite(t) for t in taus):
        raise DomainError("tau values must be finite")
    m_norm = np.linalg.norm(m, 1)
    same_sign = all(t >= 0.0 for t in taus) or all(t <= 0.0 for t in taus)
    span = max((abs(t) for t in taus), default=0.0) * m_norm
    if not same_sign or span > _TAYLOR_NORM_LIMIT:
        return [scipy.linalg.expm(t * m) @ b for t in taus]
    results = [None] * len(taus)
    current = b
    prev = 0.0
    for idx in np.argsort(np.abs(taus)):
        current = _taylor_apply((taus[idx] - prev) * m, current)
        prev = taus[idx]
        results[idx] = current
    return results


def sylvester_kron_matrix(a, d):
    """Matrix of X -> AX + XD acting on the column-stacked vec(X)."""
    a = require_square(as_matrix(a, "A"), "A")
    d = require_square(as_matrix(d, "D"), "D")
    return np.kron(np.eye(d.shape[0]), a) + np.kron(d.T, np.eye(a.shape[0]))


def operator_separation(a, d):
    """Smallest |lambda_i(A) + mu_j(D)| over the two spectra.

    Zero separation means X -> AX + XD is singular.
    """
    la = np.linalg.eigvals(a)
    mu = np.linalg.eigvals(d)
    return float(np.abs(la[:, None] + mu[None, :]).min())


def solve_sylvester(a, d, rhs, method="auto"):
    """Solve the Sylvester equation ``A W + W D = RHS``.

    Parameters
    ----------
    a, d : array_like
        Square coefficients of sizes M and N.  The spectra of A and -D
        must be disjoint for unique solvability.
    rhs : array_like
        M x N right-hand side.
    method : {"auto", "schur", "kron"}
        "schur" reduces both coefficients to real Schur form and
        back-substitutes (Bartels-Stewart, via LAPACK).  "kron" assembles
        and solves the vectorized MN x MN system directly; it is refused
        above M*N = 4096 and doubles as an independent cross-check of the
        Schur route.  "auto" selects "schur".

    Raises
    ------
    SolvabilityError
        When the spectra of A and -D (nearly) intersect; the exception
        carries the measured separation and a condition estimate.
    """
    a = require_square(as_matrix(a, "A"), "A")
    d = require_square(as_matrix(d, "D"), "D")
    rhs = as_matrix(rhs, "RHS")
    if rhs.shape != (a.shape[0], d.shape[0]):
        raise DimensionError(
            f"RHS shape {rhs.shape} does not match ({a.shape[0]}, {d.shape[0]})"
        )

    sep = operator_separation(a, d)
    scale = max(fro(a) + fro(d), 1.0)
    if sep <= 1e-12 * scale:
        raise SolvabilityError(
            f"Sylvester operator is numerically singular: spectral separation "
            f"{sep:.3e} against coefficient scale {scale:.3e}",
            separation=sep,
            condition=scale / sep if sep > 0 else float("inf"),
        )

    if method == "auto":
        method = "schur"
    if method == "schur":
        return scipy.linalg.solve_sylvester(a, d, rhs)
    if method == "kron":
        size = a.shape[0] * d.shape[0]
        if size > KRON_SOLVE_LIMIT:
            raise DomainError(
                f"vectorized solve limited to M*N <= {KRON_SOLVE_LIMIT}, got {size}"
            )
        k = sylvester_kron_matrix(a, d)
        return unvec(np.linalg.solve(k, vec(rhs)), a.shape[0], d.shape[0])
    raise DomainError(f"unknown Sylvester method {method!r}")


def compress(l, core, tol):
    """Truncate a product ``L C L^T`` to a relative tolerance.

    Parameters
    ----------
    l : array_like
        n x r factor.
    core : array_like
        r x r symmetric core; indefinite cores are fine.
    tol : float
        Nonnegative relative tolerance.  The returned pair (L', C')
        satisfies ``||L C L^T - L' C' L'^T||_F <= tol * ||L C L^T||_F``.

    Returns
    -------
    (ndarray, ndarray)
        L' with orthonormal columns (r' <= r of them) and a diagonal C'.

    Notes
    -----
    Thin QR of L followed by a symmetric eigendecomposition of the
    projected core.  Eigenvalues are dropped from the small end while
    both ``|lambda| <= tol * max|lambda|`` and the accumulated dropped
    mass stays within the reconstruction budget; exact zero modes are
    always dropped.
    """
    l = as_matrix(l, "L")
    core = require_square(as_matrix(core, "core"), "core")
    if l.shape[1] != core.shape[0]:
        raise DimensionError(
            f"factor has {l.shape[1]} columns but core is {core.shape[0]} x {core.shape[1]}"
        )
    if tol < 0:
        raise DomainError("compression tolerance must be nonnegative")
    if core.size:
        asym = float(np.abs(core - core.T).max())
        if asym > 1e-12 * max(float(np.abs(core).max()), 1e-300):
            raise DomainError(f"core is not symmetric (max asymmetry {asym:.3e})")
    if l.shape[1] == 0:
        return l.copy(), core.copy()

    q, r = np.linalg.qr(l)
    mid = r @ ((core + core.T) / 2.0) @ r.T
    mid = (mid + mid.T) / 2.0
    lam, u = np.linalg.eigh(mid)
    order = np.argsort(-np.abs(lam))
    lam = lam[order]
    u = u[:, order]

    amax = float(np.abs(lam[0])) if lam.size else 0.0
    if amax == 0.0:
        keep = 0
    else:
        total = float(np.linalg.norm(lam))
        keep = lam.size
        dropped_sq = 0.0
        for i in range(lam.size - 1, -1, -1):
            if abs(lam[i]) > tol * amax:
                break
            if np.sqrt(dropped_sq + lam[i] ** 2) > tol * total:
                break
            dropped_sq += lam[i] ** 2
            keep = i
    return q @ u[:, :keep], np.diag(lam[:keep])
