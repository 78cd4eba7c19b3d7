"""Independent checkers for the n-block programs.

None of these touch the barrier solver's internals: random search evaluates
the original ``(K_s, B)`` objective directly, and the identity checks rebuild
the convex form from a ``(K_s, B)`` point with dense algebra.
"""

from dataclasses import dataclass

import numpy as np

from . import maxdet
from .exceptions import IdentityViolation
from .nblock import (
    LN2,
    lmi_objective,
    h_from_point,
    ks_from_h,
    lmi_matrix,
    point_objective,
)

ORACLE_N_MAX = 4


@dataclass
class FeasiblePoint:
    K_s: np.ndarray
    B: np.ndarray


def _point_bits_batch(K_w, K_s, B):
    n = K_w.shape[0]
    IB = np.eye(n) + B
    M = IB @ K_w @ np.swapaxes(IB, 1, 2) + K_s
    sign, ld = np.linalg.slogdet(M)
    ld = np.where(sign > 0, ld, -np.inf)
    return (ld - np.linalg.slogdet(K_w)[1]) / (2 * n * LN2)


def random_search(prob, samples=100_000, seed=0, batch=20_000):
    """Best covariance-form objective (bits) over random feasible points.

    ``B`` entries are uniform on [-2, 2]; ``K_s = L L^T`` with ``L`` lower
    triangular, entries uniform on [-1, 1], then scaled so the power
    constraint is met with equality.  Draws where ``B`` alone exceeds the
    budget are discarded; ``samples`` counts accepted points.
    """
    n = prob.n
    if n > ORACLE_N_MAX:
        raise ValueError(f"random search is limited to n <= {ORACLE_N_MAX}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    K_w, K_v, P = prob.K_w, prob.K_v, prob.P
    rng = np.random.default_rng(seed)
    strict = np.tril(np.ones((n, n)), -1)
    lower = np.tril(np.ones((n, n)))
    best_val, best_pt = -np.inf, None
    accepted = 0
    while accepted < samples:
        m = min(batch, 4 * (samples - accepted) + 16)
        B = rng.uniform(-2.0, 2.0, size=(m, n, n)) * strict
        L = rng.uniform(-1.0, 1.0, size=(m, n, n)) * lower
        K_s = L @ np.swapaxes(L, 1, 2)
        cost_b = np.einsum("kij,jl,kil->k", B, K_v + K_w, B)
        budget = n * P - cost_b
        tr_s = np.trace(K_s, axis1=1, axis2=2)
        ok = (budget > 0) & (tr_s > 0)
        idx = np.flatnonzero(ok)[: samples - accepted]
        if idx.size == 0:
            continue
        accepted += idx.size
        K_s = K_s[idx] * (budget[idx] / tr_s[idx])[:, None, None]
        vals = _point_bits_batch(K_w, K_s, B[idx])
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_pt = FeasiblePoint(K_s[j], B[idx][j])
    return best_pt, best_val


@dataclass
class IdentityReport:
    """Outcome of :func:`schur_identity_check`.

    ``det_rel_err`` and ``objective_err`` are ``None`` when ``K_s`` is not
    positive semidefinite, where the objectives are undefined.
    """

    det_rel_err: float | None
    objective_err: float | None
    lmi_min_eig: float
    ks_min_eig: float
    lmi_consistent: bool

    def ok(self, tol=1e-9):
        errs = [e for e in (self.det_rel_err, self.objective_err) if e is not None]
        return all(e <= tol for e in errs) and self.lmi_consistent


def lmi_consistent(lmi_min, ks_min, tol=1e-9):
    """Whether the LMI and ``K_s`` agree on being PSD, allowing a ``tol`` band."""
    if ks_min > tol:
        return lmi_min > -tol
    if ks_min < -tol:
        return lmi_min < 0
    return True


def schur_identity_check(K_w, K_v, point, tol=1e-9, raise_on_failure=True):
    """Check the determinant, objective and LMI identities at ``point``.

    The determinant and objective identities are only checked when ``K_s`` is
    positive semidefinite; the LMI equivalence is checked everywhere.
    """
    K_s, B = point.K_s, point.B
    H = h_from_point(K_w, K_v, K_s, B)
    lmi_min = float(np.linalg.eigvalsh(lmi_matrix(K_w, K_v, H, B))[0])
    ks_min = float(np.linalg.eigvalsh(ks_from_h(K_w, K_v, H, B))[0])
    det_err = obj_err = None
    if ks_min >= -tol:
        Kv_inv = np.linalg.inv(K_v)
        G = np.block([[Kv_inv, B.T], [B, H]])
        ld_g = np.linalg.slogdet(G)[1]
        ld_schur = np.linalg.slogdet(H - B @ K_v @ B.T)[1] + np.linalg.slogdet(Kv_inv)[1]
        det_err = float(abs(np.expm1(ld_g - ld_schur)))
        obj_err = abs(point_objective(K_w, K_s, B) - lmi_objective(K_w, K_v, H, B))
    report = IdentityReport(det_err, obj_err, lmi_min, ks_min, lmi_consistent(lmi_min, ks_min, tol))
    if raise_on_failure:
        if det_err is not None and det_err > tol:
            raise IdentityViolation("determinant identity", det_err)
        if obj_err is not None and obj_err > tol:
            raise IdentityViolation("objective equivalence", obj_err)
        if not report.lmi_consistent:
            raise IdentityViolation("LMI equivalence", lmi_min)
    return report


def random_feasible_point(prob, rng):
    """One point of the kind :func:`random_search` samples (power-tight)."""
    n = prob.n
    while True:
        B = np.tril(rng.uniform(-2.0, 2.0, size=(n, n)), -1)
        L = np.tril(rng.uniform(-1.0, 1.0, size=(n, n)))
        K_s = L @ L.T
        budget = n * prob.P - np.trace(B @ (prob.K_v + prob.K_w) @ B.T)
        if budget > 0 and np.trace(K_s) > 0:
            return FeasiblePoint(K_s * budget / np.trace(K_s), B)


def finite_diff_check(prob, x, t=1.0, h=1e-5):
    """Worst relative error of the analytic barrier gradient and Hessian.

    Central differences of the barrier value (gradient) and of the analytic
    gradient (Hessian).  Returns ``(grad_err, hess_err)`` in max-norm relative
    to the analytic quantity.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-7, 1e-4]")
    x = np.asarray(x, dtype=float)
    _, g, H = maxdet.barrier_value_grad_hess(prob, x, t)
    d = x.size
    g_fd = np.empty(d)
    H_fd = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        g_fd[k] = (maxdet.barrier_value(prob, x + e, t) - maxdet.barrier_value(prob, x - e, t)) / (2 * h)
        gp = maxdet.barrier_value_grad_hess(prob, x + e, t)[1]
        gm = maxdet.barrier_value_grad_hess(prob, x - e, t)[1]
        H_fd[:, k] = (gp - gm) / (2 * h)
    grad_err = np.max(np.abs(g_fd - g)) / max(np.max(np.abs(g)), np.finfo(float).tiny)
    hess_err = np.max(np.abs(H_fd - H)) / max(np.max(np.abs(H)), np.finfo(float).tiny)
    return float(grad_err), float(hess_err)


def random_interior_points(prob, x0, count, rng, scale=0.3):
    """Random strictly feasible points around ``x0``.

    A perturbation is halved until twice its length is still feasible, which
    keeps the points away from the boundary.
    """
    pts = []
    while len(pts) < count:
        step = rng.standard_normal(x0.size) * scale
        for _ in range(60):
            if maxdet.is_strictly_feasible(prob, x0 + 2.0 * step):
                pts.append(x0 + step)
                break
            step *= 0.5
    return pts
