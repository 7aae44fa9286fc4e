"""Shared fixtures-in-spirit: random instances and vectorization oracles."""

import numpy as np
from scipy.linalg import expm as dense_expm


def random_stable(rng, n, margin=1.0, scale=1.0):
    """Random matrix with every eigenvalue in the open left half-plane."""
    a = scale * rng.standard_normal((n, n))
    radius = float(np.abs(np.linalg.eigvals(a)).max())
    return a - (radius + margin) * np.eye(n)


def kron_matrix(a, d):
    """Vectorized form of X -> AX + XD (column-stacked convention)."""
    return np.kron(np.eye(d.shape[0]), a) + np.kron(d.T, np.eye(a.shape[0]))


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, m, n):
    return np.asarray(v).reshape((m, n), order="F")


def dense_phi(k, mat):
    """phi_k of a square matrix via the nilpotent block augmentation."""
    n = mat.shape[0]
    if k == 0:
        return dense_expm(mat)
    size = n * (k + 1)
    block = np.zeros((size, size))
    block[:n, :n] = mat
    for i in range(k):
        block[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
    return dense_expm(block)[:n, k * n:]


def phi_series(k, z, terms=30):
    """Reference phi_k by the plain power series sum_m z^m / (m+k)!."""
    import math

    return sum(z ** m / math.factorial(m + k) for m in range(terms))


def rk4_matrix_ode(rhs, x0, t_end, steps):
    """Classical fixed-step RK4 on a matrix ODE X' = rhs(t, X)."""
    x = np.array(x0, dtype=float)
    h = t_end / steps
    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, x)
        k2 = rhs(t + h / 2, x + h / 2 * k1)
        k3 = rhs(t + h / 2, x + h / 2 * k2)
        k4 = rhs(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return x


def rel_err(approx, exact):
    exact = np.asarray(exact, dtype=float)
    scale = np.linalg.norm(exact)
    diff = np.linalg.norm(np.asarray(approx, dtype=float) - exact)
    return diff if scale == 0 else diff / scale
