"""Fixed-step exponential time steppers for matrix Riccati flows.

Five realizations of two schemes are provided.  The second-order
exponential Rosenbrock-Euler step

    X_{n+1} = exp(h S_n)(X_n) + h phi_1(h S_n)(Q + X_n G X_n)
            = X_n + h phi_1(h S_n)(F(X_n))

comes as ``GExpEuler`` (augmented block exponential), ``BrExpEuler``
(one Sylvester solve plus one operator exponential) and ``LrExpEuler``
(LDL^T factors with quadrature).  The third-order two-stage scheme
``Erow3`` perturbs the Euler stage by 2h phi_3(h S_n) applied to the
nonlinear-remainder difference and exists densely and in low-rank form.
"""

import time
from dataclasses import dataclass
from math import ulp

import numpy as np

from .densecore import KRON_SOLVE_LIMIT, as_matrix, expm_actions, fro, solve_sylvester
from .errors import (
    ConfigurationError,
    DimensionError,
    FiniteEscapeError,
    IntegrationError,
    SolvabilityError,
)
from .krylov import build_basis, exp_actions_krylov
from .lowrank import (
    LdlFactor,
    assemble_phi_sum,
    assemble_remainder_diff,
    assemble_rhs,
    concat_update,
)
from .phifun import PhiCombination, QuadratureRule, eval_backward, eval_forward, phi_action_quadrature
from .sylvop import linearize, phi1_action_augmented, phi_action_augmented

__all__ = [
    "SCHEMES",
    "RiccatiProblem",
    "IntegratorConfig",
    "StepDiagnostics",
    "Trajectory",
    "step_expeuler_general",
    "step_expeuler_backward",
    "step_expeuler_lowrank",
    "step_erow3",
    "step_msde_polynomial",
    "integrate",
]

SCHEMES = ("GExpEuler", "BrExpEuler", "LrExpEuler", "Erow3Dense", "Erow3LowRank")
_LOWRANK_SCHEMES = ("LrExpEuler", "Erow3LowRank")


def _consistent(actual, expected):
    scale = max(fro(expected), fro(actual), 1.0)
    return fro(actual - expected) <= 1e-10 * scale


@dataclass
class RiccatiProblem:
    """Coefficients of X' = A X + X D + Q - X G X, X(0) = X0.

    For symmetric problems (D = A^T, with Q, G, X0 symmetric) the
    generators C (Q = C^T C), B (G = B B^T) and L0, D0 (X0 = L0 D0 L0^T)
    may be attached; the low-rank integrators require them.  All shapes
    are validated on construction, as is the consistency of generators
    with the dense coefficients when both are given.
    """

    A: np.ndarray
    D: np.ndarray
    Q: np.ndarray
    G: np.ndarray
    X0: np.ndarray
    C: np.ndarray = None
    B: np.ndarray = None
    L0: np.ndarray = None
    D0: np.ndarray = None
    symmetric: bool = False

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.D = as_matrix(self.D, "D")
        self.Q = as_matrix(self.Q, "Q")
        self.G = as_matrix(self.G, "G")
        self.X0 = as_matrix(self.X0, "X0")
        m = self.A.shape[0]
        n = self.D.shape[0]
        if self.A.shape != (m, m) or self.D.shape != (n, n):
            raise DimensionError("A and D must be square")
        if self.Q.shape != (m, n):
            raise DimensionError(f"Q must be {m} x {n}, got {self.Q.shape}")
        if self.G.shape != (n, m):
            raise DimensionError(f"G must be {n} x {m}, got {self.G.shape}")
        if self.X0.shape != (m, n):
            raise DimensionError(f"X0 must be {m} x {n}, got {self.X0.shape}")
        for name in ("C", "B", "L0", "D0"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, as_matrix(val, name))
        if self.symmetric:
            if m != n or not _consistent(self.D, self.A.T):
                raise ConfigurationError("symmetric problems need D = A^T")
            if not _consistent(self.Q, self.Q.T) or not _consistent(self.G, self.G.T):
                raise ConfigurationError("symmetric problems need symmetric Q and G")
            if not _consistent(self.X0, self.X0.T):
                raise ConfigurationError("symmetric problems need symmetric X0")
        if self.C is not None and not _consistent(self.Q, self.C.T @ self.C):
            raise ConfigurationError("Q does not match C^T C")
        if self.B is not None and not _consistent(self.G, self.B @ self.B.T):
            raise ConfigurationError("G does not match B B^T")
        if self.L0 is not None:
            core = self.D0 if self.D0 is not None else np.eye(self.L0.shape[1])
            if not _consistent(self.X0, self.L0 @ core @ self.L0.T):
                raise ConfigurationError("X0 does not match L0 D0 L0^T")

    @property
    def M(self):
        return self.A.shape[0]

    @property
    def N(self):
        return self.D.shape[0]

    def rhs(self, x):
        """F(X) = A X + X D + Q - X G X."""
        x = as_matrix(x, "state")
        return self.A @ x + x @ self.D + self.Q - x @ (self.G @ x)

    @property
    def has_lowrank_generators(self):
        return self.symmetric and self.C is not None and self.B is not None

    def initial_factor(self):
        """X0 as an LDL^T factor (needs L0; D0 defaults to the identity)."""
        if not self.has_lowrank_generators or self.L0 is None:
            raise ConfigurationError(
                "low-rank integration needs a symmetric problem with C, B and L0"
            )
        core = self.D0 if self.D0 is not None else np.eye(self.L0.shape[1])
        return LdlFactor(self.L0, core)


@dataclass
class IntegratorConfig:
    """Scheme selection and step parameters for :func:`integrate`.

    ``compression_tol`` of None resolves to dim * machine epsilon at use
    time; ``exp_action`` switches the low-rank quadrature images between
    dense exponentials and block Krylov projections of dimension
    ``krylov_m``.  The step grid must hit ``t_end`` exactly: t_end / h has
    to be an integer to within half an ulp.
    """

    scheme: str
    h: float
    t_end: float
    rule: QuadratureRule = None
    compression_tol: float = None
    krylov_m: int = 30
    exp_action: str = "dense"
    store_every: int = 1
    monitor: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(
                f"unknown scheme {self.scheme!r}; valid: {', '.join(SCHEMES)}"
            )
        if not self.h > 0:
            raise ConfigurationError("step size must be positive")
        if self.t_end < 0:
            raise ConfigurationError("final time must be nonnegative")
        if self.exp_action not in ("dense", "krylov"):
            raise ConfigurationError("exp_action must be 'dense' or 'krylov'")
        if self.store_every < 1:
            raise ConfigurationError("store_every must be >= 1")
        if self.rule is None:
            self.rule = QuadratureRule.gauss_legendre(7)
        quotient = self.t_end / self.h
        if abs(quotient - round(quotient)) > 0.5 * ulp(max(quotient, 1.0)):
            raise ConfigurationError(
                f"t_end/h = {quotient!r} is not an integer step count"
            )

    @property
    def step_count(self):
        return int(round(self.t_end / self.h))

    def resolve_tol(self, dim):
        if self.compression_tol is not None:
            return self.compression_tol
        return dim * np.finfo(float).eps


@dataclass
class StepDiagnostics:
    """Per-step bookkeeping: cost, factor rank and symmetry/PSD monitors."""

    step: int
    t: float
    wall_time: float
    rank: int = None
    dropped: int = None
    fnorm: float = None
    min_eigenvalue: float = None
    symmetry_error: float = None
    krylov_residual: float = None


@dataclass
class Trajectory:
    """Snapshots (dense arrays or LDL^T factors) along the step grid."""

    times: np.ndarray
    states: list
    diagnostics: list
    scheme: str

    @property
    def final(self):
        return self.states[-1]

    def final_dense(self):
        return self.dense_state(-1)

    def dense_state(self, index):
        state = self.states[index]
        return state.reconstruct() if isinstance(state, LdlFactor) else state


def step_expeuler_general(problem, x, h):
    """Rosenbrock-Euler step through the augmented block exponential."""
    lin = linearize(problem, x)
    return phi1_action_augmented(lin.operator, h, lin.remainder, x)


def step_expeuler_backward(problem, x, h):
    """Rosenbrock-Euler step via one Sylvester solve.

    Solves S_n(W) = F(X_n) and returns exp(h S_n)(W) + X_n - W.  Raises
    SolvabilityError when the linearized operator is near singular; the
    caller may fall back to the general realization.
    """
    lin = linearize(problem, x)
    w = solve_sylvester(lin.A, lin.D, problem.rhs(x))
    return lin.operator.exp_action(h, w) + x - w


def _linearized_coefficient(problem, state):
    """A - X G for a factored symmetric state, using the thin generator of G."""
    xb = state.L @ (state.core @ (state.L.T @ problem.B))
    return problem.A - xb @ problem.B.T


def _make_exp_actions(a_lin, cfg, details):
    """Provider mapping (taus, block) -> exponential images of the block."""
    if cfg.exp_action == "krylov":

        def actions(taus, block):
            basis = build_basis(a_lin, block, cfg.krylov_m)
            pairs = exp_actions_krylov(basis, taus, block)
            worst = max((est for _, est in pairs), default=0.0)
            if details is not None:
                details["krylov_residual"] = max(
                    details.get("krylov_residual", 0.0), worst
                )
            return [value for value, _ in pairs]

        return actions

    def actions(taus, block):
        return expm_actions(a_lin, taus, block)

    return actions


def step_expeuler_lowrank(problem, state, h, cfg, details=None):
    """Low-rank Rosenbrock-Euler step on LDL^T factors.

    Assembles the factored right-hand side, compresses it, applies the
    phi_1 quadrature images and concatenates them onto the state factor
    with a final compression.
    """
    if not problem.has_lowrank_generators:
        raise ConfigurationError("LrExpEuler needs a symmetric problem with C and B")
    tol = cfg.resolve_tol(state.dim)
    rhs = assemble_rhs(problem, state).compressed(tol)
    a_lin = _linearized_coefficient(problem, state)
    update = assemble_phi_sum(
        _make_exp_actions(a_lin, cfg, details), h, 1, rhs, cfg.rule, coeff=h
    )
    out = concat_update(state, update, tol)
    if details is not None:
        details["dropped"] = state.rank + update.rank - out.rank
    return out


def step_erow3(problem, x, h, cfg, details=None):
    """Third-order step: Euler stage plus the phi_3 remainder correction.

    Dispatches on the state kind.  Densely the correction is exact through
    the augmented block exponential up to M*N = 4096 and a quadrature
    beyond; in low-rank form it reuses the factored remainder difference
    and the k = 3 quadrature stack.
    """
    if isinstance(x, LdlFactor):
        stage = step_expeuler_lowrank(problem, x, h, cfg, details)
        tol = cfg.resolve_tol(x.dim)
        diff = assemble_remainder_diff(problem, x, stage).compressed(tol)
        a_lin = _linearized_coefficient(problem, x)
        correction = assemble_phi_sum(
            _make_exp_actions(a_lin, cfg, details), h, 3, diff, cfg.rule, coeff=2.0 * h
        )
        out = concat_update(stage, correction, tol)
        if details is not None:
            details["dropped"] = details.get("dropped", 0) + (
                stage.rank + correction.rank - out.rank
            )
        return out

    lin = linearize(problem, x)
    stage = phi1_action_augmented(lin.operator, h, lin.remainder, x)
    xg = x @ problem.G
    sg = stage @ problem.G
    diff = xg @ stage + sg @ x - sg @ stage - xg @ x
    if problem.M * problem.N <= KRON_SOLVE_LIMIT:
        correction = phi_action_augmented(lin.operator, h, 3, diff)
    else:
        correction = phi_action_quadrature(3, lin.operator, h, diff, cfg.rule)
    return stage + 2.0 * h * correction


def step_msde_polynomial(operator, coeffs, t, recursion="forward"):
    """Exact flow of X' = S(X) + Q(t) for a polynomial inhomogeneity.

    ``coeffs`` is (X_initial, N_1, ..., N_m) where
    Q(t) = sum_{j>=1} t^(j-1)/(j-1)! N_j, i.e. N_{j+1} is the j-th
    derivative of Q at zero.  The value at ``t`` is
    exp(tS)(X_initial) + sum_j t^j phi_j(tS)(N_j), assembled through the
    forward (default) or backward phi recursion.
    """
    coeffs = list(coeffs)
    scaled = [coeffs[0]] + [t ** j * np.asarray(nj, dtype=float) for j, nj in enumerate(coeffs[1:], start=1)]
    comb = PhiCombination(tuple(scaled), operator, t)
    if recursion == "forward":
        return eval_forward(comb)
    if recursion == "backward":
        return eval_backward(comb)
    raise ConfigurationError(f"unknown recursion {recursion!r}")


_DENSE_STEPS = {
    "GExpEuler": lambda p, x, h, cfg, det: step_expeuler_general(p, x, h),
    "BrExpEuler": lambda p, x, h, cfg, det: step_expeuler_backward(p, x, h),
    "Erow3Dense": lambda p, x, h, cfg, det: step_erow3(p, x, h, cfg, det),
}
_LOWRANK_STEPS = {
    "LrExpEuler": step_expeuler_lowrank,
    "Erow3LowRank": step_erow3,
}


def _monitor(state, diag):
    if isinstance(state, LdlFactor):
        diag.rank = state.rank
        diag.fnorm = state.fnorm()
        diag.symmetry_error = 0.0
        diag.min_eigenvalue = state.min_eigenvalue()
    else:
        diag.fnorm = fro(state)
        diag.symmetry_error = fro(state - state.T) / max(diag.fnorm, 1e-300)
        sym = (state + state.T) / 2.0
        diag.min_eigenvalue = float(np.linalg.eigvalsh(sym).min())


def integrate(problem, cfg):
    """Fixed-step trajectory of the configured scheme.

    Snapshots are stored every ``cfg.store_every`` steps (the initial and
    final states always included); diagnostics are recorded for every
    step.  A failing step raises IntegrationError carrying the partial
    trajectory and the zero-based index of the step that failed.
    """
    low_rank = cfg.scheme in _LOWRANK_SCHEMES
    if low_rank:
        state = problem.initial_factor()
        stepper = _LOWRANK_STEPS[cfg.scheme]
    else:
        state = problem.X0.copy()
        stepper = _DENSE_STEPS[cfg.scheme]
    monitorable = problem.symmetric and cfg.monitor

    steps = cfg.step_count
    times = [0.0]
    states = [state]
    diagnostics = []

    for i in range(steps):
        t_next = (i + 1) * cfg.h if i + 1 < steps else cfg.t_end
        details = {}
        started = time.perf_counter()
        try:
            state = stepper(problem, state, cfg.h, cfg, details)
            bad = (
                not np.all(np.isfinite(state.L)) or not np.all(np.isfinite(state.core))
                if isinstance(state, LdlFactor)
                else not np.all(np.isfinite(state))
            )
            if bad:
                raise FiniteEscapeError("state became non-finite")
        except (SolvabilityError, FiniteEscapeError, np.linalg.LinAlgError) as exc:
            partial = Trajectory(
                times=np.array(times), states=states, diagnostics=diagnostics,
                scheme=cfg.scheme,
            )
            raise IntegrationError(
                f"step {i} (t = {t_next - cfg.h:g} -> {t_next:g}) failed: {exc}",
                step_index=i,
                trajectory=partial,
            ) from exc
        elapsed = time.perf_counter() - started

        diag = StepDiagnostics(
            step=i,
            t=t_next,
            wall_time=elapsed,
            rank=state.rank if isinstance(state, LdlFactor) else None,
            dropped=details.get("dropped"),
            krylov_residual=details.get("krylov_residual"),
        )
        if monitorable:
            _monitor(state, diag)
        diagnostics.append(diag)

        if (i + 1) % cfg.store_every == 0 or i + 1 == steps:
            times.append(t_next)
            states.append(state)

    return Trajectory(
        times=np.array(times), states=states, diagnostics=diagnostics, scheme=cfg.scheme
    )
