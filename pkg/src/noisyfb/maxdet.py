"""Determinant maximization by a log-barrier path-following method.

Solves::

    maximize    log det G(x)
    subject to  F(x) >= 0  (LMI),   a @ x <= c

where ``G`` and ``F`` are affine maps from a real vector to symmetric
matrices.  The barrier composite minimised at weight ``t`` is::

    phi_t(x) = -t * log det G(x) - log det F(x) - log(c - a @ x)

and each centering step is a damped Newton method with backtracking.
"""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .exceptions import BoundaryPoint, Infeasible, NotPositiveDefinite

# regularisation escalations tried before the Newton system is declared broken
_MAX_REGULARISE = 40
# iterates beyond this magnitude are taken as a sign of an unbounded objective
_DIVERGED_NORM = 1e100
# the (m + lam sqrt(m)) / t gap estimate is only used for Newton decrements below this
_GAP_LAM = 0.5
from .linalg import cholesky

log = logging.getLogger(__name__)


class AffineSymMap:
    """``M(x) = constant + sum_k x[k] * coeff_k`` with sparse symmetric coefficients.

    Coefficients are held as triplets ``(row, col, value, coord)`` covering
    both symmetric halves; use :meth:`from_entries` or :meth:`from_dense` to
    build one.
    """

    def __init__(self, constant, rows, cols, vals, coords, x_dim):
        self.constant = np.array(constant, dtype=float)
        self.dim_out = self.constant.shape[0]
        self.x_dim = int(x_dim)
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=float)
        self.coords = np.asarray(coords, dtype=np.int64)
        N = self.dim_out
        self._S = sp.csr_matrix(
            (self.vals, (self.rows * N + self.cols, self.coords)), shape=(N * N, self.x_dim)
        )

    @classmethod
    def from_entries(cls, constant, x_dim, entries):
        """Build from ``(coord, i, j, value)`` tuples.

        Each tuple sets ``coeff_coord[i, j]`` and, for ``i != j``, the mirrored
        ``coeff_coord[j, i]``.  Repeated positions add up.
        """
        rows, cols, vals, coords = [], [], [], []
        for k, i, j, v in entries:
            rows.append(i)
            cols.append(j)
            vals.append(v)
            coords.append(k)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(v)
                coords.append(k)
        return cls(constant, rows, cols, vals, coords, x_dim)

    @classmethod
    def from_dense(cls, constant, coeffs):
        rows, cols, vals, coords = [], [], [], []
        for k, A in enumerate(coeffs):
            A = np.asarray(A, dtype=float)
            if not np.allclose(A, A.T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max())):
                raise ValueError(f"coefficient {k} is not symmetric")
            i, j = np.nonzero(A)
            rows.extend(i)
            cols.extend(j)
            vals.extend(A[i, j])
            coords.extend([k] * i.size)
        return cls(constant, rows, cols, vals, coords, len(coeffs))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.constant + (self._S @ x).reshape(self.dim_out, self.dim_out)

    def coefficient(self, k):
        col = self._S[:, k].toarray().ravel()
        return col.reshape(self.dim_out, self.dim_out)

    def trace_products(self, W):
        """Vector of ``tr(W @ coeff_k)`` for symmetric ``W``."""
        return self._S.T @ W.ravel()

    def trace_hessian(self, W):
        """Matrix of ``tr(W coeff_k W coeff_l)``."""
        return _kernels.logdet_hessian(W, self.rows, self.cols, self.vals, self.coords, self.x_dim)


@dataclass
class MaxdetProblem:
    objective: AffineSymMap
    lmi: AffineSymMap
    a: np.ndarray
    c: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.c = float(self.c)
        if self.objective.x_dim != self.lmi.x_dim or self.a.size != self.objective.x_dim:
            raise ValueError("objective, lmi and linear constraint disagree on x_dim")

    @property
    def x_dim(self):
        return self.objective.x_dim

    @property
    def barrier_degree(self):
        return self.lmi.dim_out + 1


@dataclass
class SolverConfig:
    t0: float = 1.0
    mu: float = 10.0
    gap_tol: float = 1e-8
    newton_tol: float = 1e-9
    max_iter: int = 2000
    ls_alpha: float = 0.01
    ls_beta: float = 0.5
    # Newton decrement below which a feasible full step is taken without the
    # sufficient-decrease test (quadratic convergence region)
    pure_newton: float = 0.25


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"
    # the iterates diverged: log det G is unbounded above on the feasible set
    UNBOUNDED = "unbounded"


@dataclass
class MaxdetSolution:
    x: np.ndarray
    value: float
    gap_estimate: float
    iterations: int
    status: Status
    history: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def _factor(M):
    try:
        return cholesky(M)
    except NotPositiveDefinite as exc:
        raise BoundaryPoint(str(exc)) from exc


def barrier_value(prob, x, t):
    """Barrier composite only; raises :class:`BoundaryPoint` outside the domain."""
    slack = prob.c - prob.a @ x
    if not slack > 0:
        raise BoundaryPoint("linear constraint not strictly satisfied")
    ld_g = _factor(prob.objective(x)).log_det()
    ld_f = _factor(prob.lmi(x)).log_det()
    return -t * ld_g - ld_f - np.log(slack)


def barrier_value_grad_hess(prob, x, t):
    """Value, gradient and Hessian of the barrier composite at ``x``.

    Uses ``d/dx_k log det M = tr(M^-1 coeff_k)`` and
    ``d2/dx_k dx_l log det M = -tr(M^-1 coeff_k M^-1 coeff_l)``.
    """
    x = np.asarray(x, dtype=float)
    slack = prob.c - prob.a @ x
    if not slack > 0:
        raise BoundaryPoint("linear constraint not strictly satisfied")
    fg = _factor(prob.objective(x))
    ff = _factor(prob.lmi(x))
    Wg = fg.inverse()
    Wf = ff.inverse()
    value = -t * fg.log_det() - ff.log_det() - np.log(slack)
    grad = -t * prob.objective.trace_products(Wg) - prob.lmi.trace_products(Wf) + prob.a / slack
    hess = t * prob.objective.trace_hessian(Wg) + prob.lmi.trace_hessian(Wf)
    hess += np.outer(prob.a, prob.a) / slack**2
    return value, grad, hess


def objective_value(prob, x):
    """``log det G(x)`` (natural log)."""
    return cholesky(prob.objective(x)).log_det()


def is_strictly_feasible(prob, x):
    try:
        barrier_value(prob, x, 1.0)
    except BoundaryPoint:
        return False
    return True


class _Diverged(Exception):
    def __init__(self, x=None, steps=0):
        super().__init__()
        self.x, self.steps = x, steps


def _newton_direction(hess, grad):
    if not (np.all(np.isfinite(hess)) and np.all(np.isfinite(grad))):
        raise _Diverged
    try:
        return -cholesky(hess).solve(grad)
    except NotPositiveDefinite:
        dim = hess.shape[0]
        reg = max(1e-12 * np.trace(hess) / dim, np.finfo(float).tiny)
        for _ in range(_MAX_REGULARISE):
            try:
                return -cholesky(hess + reg * np.eye(dim)).solve(grad)
            except NotPositiveDefinite:
                reg *= 10.0
        raise _Diverged


def _center(prob, x, t, cfg, budget):
    """Newton-minimise the barrier at weight ``t``.

    Returns ``(x, steps, done, lam)`` with ``lam`` the Newton decrement at the
    returned point.  Centering stops when ``lam**2 / 2 <= cfg.newton_tol``,
    or earlier once ``lam * sqrt(m) / t`` (its share of the gap estimate, see
    :func:`solve`) is below half of ``cfg.gap_tol``.  Raises ``_Diverged``
    when the Newton system stops being finite.
    """
    root_m = np.sqrt(prob.barrier_degree)
    steps = 0
    lam = np.inf
    while steps < budget:
        if not np.max(np.abs(x), initial=0.0) < _DIVERGED_NORM:
            raise _Diverged(x, steps)
        f, g, H = barrier_value_grad_hess(prob, x, t)
        try:
            if not np.isfinite(f):
                raise _Diverged
            dx = _newton_direction(H, g)
        except _Diverged as exc:
            raise _Diverged(x, steps) from exc
        slope = float(g @ dx)
        dec2 = max(-slope, 0.0)
        lam = np.sqrt(dec2)
        if dec2 / 2.0 <= cfg.newton_tol:
            return x, steps, True, lam
        if lam <= _GAP_LAM and lam * root_m / t <= 0.5 * cfg.gap_tol:
            # close enough to the central point that the value is settled
            return x, steps, True, lam
        if np.max(np.abs(dx)) <= 4.0 * np.finfo(float).eps * max(1.0, np.max(np.abs(x))):
            # the step is below the resolution of x: centered as far as representable
            return x, steps, True, lam
        steps += 1
        s = 1.0
        pure = lam <= cfg.pure_newton
        while True:
            trial = x + s * dx
            try:
                f_new = barrier_value(prob, trial, t)
            except BoundaryPoint:
                f_new = None
            if f_new is not None:
                if pure and s == 1.0 and dec2 <= 1e-6 and f_new >= f:
                    # remaining decrease is below the rounding level of f
                    return x, steps, True, lam
                if (pure and s == 1.0) or f_new <= f + cfg.ls_alpha * s * slope:
                    break
            s *= cfg.ls_beta
            if s < 1e-20:
                # no representable decrease left along the Newton direction
                return x, steps, True, lam
        x = trial
    return x, steps, False, lam


def solve(prob, x0, cfg=None):
    """Maximise ``log det G`` from a strictly feasible start ``x0``.

    The barrier weight starts at ``cfg.t0`` and grows by ``cfg.mu`` after each
    centering.  With ``m = dim F + 1`` and ``lam`` the Newton decrement left
    after centering, ``(m + lam * sqrt(m)) / t`` bounds the distance of the
    returned value from the optimum; the method stops once it is at most
    ``cfg.gap_tol``.
    """
    cfg = cfg or SolverConfig()
    x = np.array(x0, dtype=float)
    if x.shape != (prob.x_dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({prob.x_dim},)")
    if not is_strictly_feasible(prob, x):
        raise Infeasible("starting point is not strictly feasible")

    m = prob.barrier_degree
    t = cfg.t0
    total = 0
    history = []
    while True:
        try:
            x, steps, done, lam = _center(prob, x, t, cfg, cfg.max_iter - total)
        except _Diverged as exc:
            x, total = exc.x, total + exc.steps
            value = objective_value(prob, x)
            log.warning("barrier iterates diverged at t=%.3e; objective looks unbounded", t)
            return MaxdetSolution(x, value, np.inf, total, Status.UNBOUNDED, history)
        total += steps
        value = objective_value(prob, x)
        history.append(value)
        gap = (m + lam * np.sqrt(m)) / t
        log.debug("t=%.3e steps=%d logdetG=%.12g gap<=%.2e", t, steps, value, gap)
        if not done:
            return MaxdetSolution(x, value, gap, total, Status.MAX_ITERATIONS, history)
        if gap <= cfg.gap_tol:
            return MaxdetSolution(x, value, gap, total, Status.CONVERGED, history)
        t *= cfg.mu
