"""Finite-horizon (n-block) capacity quantities.

* :func:`nonfeedback_nblock` - water-filling over the eigenvalues of ``K_w``.
* :func:`perfect_feedback_nblock` - Cover-Pombra program with noiseless feedback.
* :func:`noisy_feedback_bound` - upper bound with Gaussian feedback noise ``K_v``.

Both feedback programs are solved in the convex ``(H, B)`` form with
``H = (I+B) K_w (I+B)^T + K_s + B K_v B^T`` and ``B`` strictly lower
triangular.  Internally everything is in nats; results are reported in bits
per transmission.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import MaxIterations, NotPositiveDefinite, SingularFeedbackNoise
from .linalg import as_sym, cholesky, log_det, sym_eigenvalues
from .maxdet import AffineSymMap, MaxdetProblem, MaxdetSolution, SolverConfig, solve

N_MAX = 64
LN2 = math.log(2.0)


@dataclass
class NBlockProblem:
    K_w: np.ndarray
    K_v: np.ndarray
    P: float

    def __post_init__(self):
        self.K_w = as_sym(self.K_w)
        self.K_v = as_sym(self.K_v)
        self.P = float(self.P)
        _validate(self.K_w, self.P)
        if self.K_v.shape != self.K_w.shape:
            raise ValueError("K_w and K_v must have the same shape")
        if sym_eigenvalues(self.K_v)[0] < -1e-12 * max(1.0, np.abs(self.K_v).max()):
            raise ValueError("K_v must be positive semidefinite")

    @property
    def n(self):
        return self.K_w.shape[0]


@dataclass
class NBlockSolution:
    value_bits: float
    B: np.ndarray
    K_s: np.ndarray
    H: np.ndarray
    power_used: float
    P: float
    diagnostics: MaxdetSolution

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def power_active(self):
        """Whether the optimum uses (essentially) the whole power budget."""
        return self.power_used >= 0.999 * self.P


def _validate(K_w, P):
    n = K_w.shape[0]
    if n > N_MAX:
        raise ValueError(f"block length {n} exceeds the supported maximum {N_MAX}")
    if not (np.isfinite(P) and P > 0):
        raise ValueError(f"power must be positive, got {P}")
    try:
        cholesky(K_w)
    except NotPositiveDefinite as exc:
        raise ValueError("K_w must be positive definite") from exc


def nonfeedback_nblock(K_w, P):
    """n-block capacity without feedback, in bits per transmission."""
    K_w = as_sym(K_w)
    _validate(K_w, float(P))
    lam = sym_eigenvalues(K_w)
    n = lam.size
    level = _kernels.waterfill_level(lam, np.ones(n), n * float(P))
    return float(np.sum(np.log2(np.maximum(level, lam) / lam)) / (2 * n))


def point_objective(K_w, K_s, B):
    """``(1/2n) log2 det((I+B) K_w (I+B)^T + K_s) / det K_w``."""
    n = K_w.shape[0]
    IB = np.eye(n) + B
    return (log_det(IB @ K_w @ IB.T + K_s) - log_det(K_w)) / (2 * n * LN2)


def lmi_objective(K_w, K_v, H, B):
    """Bits-per-transmission objective of the convex ``(H, B)`` program."""
    n = K_w.shape[0]
    Kv_inv = np.linalg.inv(K_v)
    G = np.block([[Kv_inv, B.T], [B, H]])
    return (log_det(G) - log_det(Kv_inv @ K_w)) / (2 * n * LN2)


def h_from_point(K_w, K_v, K_s, B):
    n = K_w.shape[0]
    IB = np.eye(n) + B
    return IB @ K_w @ IB.T + K_s + B @ K_v @ B.T


def ks_from_h(K_w, K_v, H, B):
    n = K_w.shape[0]
    IB = np.eye(n) + B
    return H - IB @ K_w @ IB.T - B @ K_v @ B.T


def lmi_matrix(K_w, K_v, H, B):
    """The ``3n x 3n`` matrix that is PSD exactly when ``K_s`` is.

    Its Schur complement with respect to ``diag(K_w^-1, K_v^-1)`` is
    ``H - (I+B) K_w (I+B)^T - B K_v B^T = K_s``, so ``I + B`` and ``B`` sit in
    the first block row.
    """
    n = K_w.shape[0]
    I, Z = np.eye(n), np.zeros((n, n))
    return np.block(
        [
            [H, I + B, B],
            [I + B.T, np.linalg.inv(K_w), Z],
            [B.T, Z, np.linalg.inv(K_v)],
        ]
    )


def power_of(K_w, K_v, K_s, B):
    """Average input power ``tr(K_s + B (K_v + K_w) B^T) / n``."""
    n = K_w.shape[0]
    return float(np.trace(K_s + B @ (K_v + K_w) @ B.T)) / n


# ---------------------------------------------------------------------------
# decision vector layout: x = (vech(H), strict-lower(B))
# ---------------------------------------------------------------------------


class _Layout:
    def __init__(self, n):
        self.n = n
        iu, ju = np.triu_indices(n)
        il, jl = np.tril_indices(n, -1)
        self.h_ij = list(zip(iu.tolist(), ju.tolist()))
        self.b_ij = list(zip(il.tolist(), jl.tolist()))
        self.n_h = len(self.h_ij)
        self.x_dim = self.n_h + len(self.b_ij)

    def pack(self, H, B):
        x = np.empty(self.x_dim)
        x[: self.n_h] = [H[i, j] for i, j in self.h_ij]
        x[self.n_h :] = [B[i, j] for i, j in self.b_ij]
        return x

    def unpack(self, x):
        n = self.n
        H = np.zeros((n, n))
        B = np.zeros((n, n))
        for k, (i, j) in enumerate(self.h_ij):
            H[i, j] = H[j, i] = x[k]
        for k, (i, j) in enumerate(self.b_ij, start=self.n_h):
            B[i, j] = x[k]
        return H, B

    def h_entries(self, offset):
        return [(k, offset + i, offset + j, 1.0) for k, (i, j) in enumerate(self.h_ij)]

    def b_entries(self, row_offset, col_offset, right=None):
        """Entries of ``B`` (or of ``B @ right`` for lower-triangular ``right``)."""
        if right is None:
            return [
                (k, row_offset + i, col_offset + j, 1.0)
                for k, (i, j) in enumerate(self.b_ij, start=self.n_h)
            ]
        # (B R)[i, l] = sum_j B[i, j] R[j, l], R[j, l] = 0 for l > j
        return [
            (k, row_offset + i, col_offset + l, right[j, l])
            for k, (i, j) in enumerate(self.b_ij, start=self.n_h)
            for l in range(j + 1)
            if right[j, l] != 0.0
        ]

    def power_constraint(self, K_w, P):
        """``tr(H - K_w B^T - B K_w - K_w) <= nP`` as ``a @ x <= c``."""
        a = np.zeros(self.x_dim)
        for k, (i, j) in enumerate(self.h_ij):
            if i == j:
                a[k] = 1.0
        for k, (i, j) in enumerate(self.b_ij, start=self.n_h):
            a[k] = -2.0 * K_w[i, j]
        return a, self.n * P + float(np.trace(K_w))


def _w_block(K_w, scaled):
    """``(off, mid, right)`` for the ``K_w^-1`` rows and columns of the LMI.

    Unscaled: ``I + B`` against ``K_w^-1``.  Scaled by ``L_w`` (``K_w = L_w
    L_w^T``): ``(I + B) L_w`` against the identity.
    """
    n = K_w.shape[0]
    if scaled:
        Lw = cholesky(K_w).L
        return Lw, np.eye(n), Lw
    Kw_inv = np.linalg.inv(K_w)
    return np.eye(n), 0.5 * (Kw_inv + Kw_inv.T), None


def build_noisy_problem(K_w, K_v, P, scaled=True):
    """Maxdet instance for the noisy-feedback bound; returns ``(problem, layout)``.

    With ``scaled=False`` the objective and LMI are literally
    ``[[K_v^-1, B^T], [B, H]]`` and :func:`lmi_matrix`.  The default applies
    congruences by ``L_v`` and ``L_w`` (Cholesky factors of ``K_v`` and
    ``K_w``) to the ``K_v^-1`` and ``K_w^-1`` rows and columns.  Those blocks
    become the identity, ``B`` turns into ``B L_v`` and ``I + B`` into
    ``(I + B) L_w``.  The barrier only shifts by a constant and ``log det G``
    by ``log det K_v``; the point is to keep Newton systems accurate when the
    covariances are badly scaled.
    """
    n = K_w.shape[0]
    lay = _Layout(n)
    w_off, w_mid, Lw = _w_block(K_w, scaled)
    if scaled:
        Lv = cholesky(K_v).L
        v_block = np.eye(n)
    else:
        Lv = None
        v_block = np.linalg.inv(K_v)
        v_block = 0.5 * (v_block + v_block.T)

    g0 = np.zeros((2 * n, 2 * n))
    g0[:n, :n] = v_block
    G = AffineSymMap.from_entries(
        g0, lay.x_dim, lay.h_entries(n) + lay.b_entries(n, 0, right=Lv)
    )

    f0 = np.zeros((3 * n, 3 * n))
    f0[:n, n : 2 * n] = w_off
    f0[n : 2 * n, :n] = w_off.T
    f0[n : 2 * n, n : 2 * n] = w_mid
    f0[2 * n :, 2 * n :] = v_block
    F = AffineSymMap.from_entries(
        f0,
        lay.x_dim,
        lay.h_entries(0) + lay.b_entries(0, n, right=Lw) + lay.b_entries(0, 2 * n, right=Lv),
    )
    a, c = lay.power_constraint(K_w, P)
    return MaxdetProblem(G, F, a, c), lay


def build_perfect_problem(K_w, P, scaled=True):
    """Maxdet instance for noiseless feedback: ``G = H`` and the LMI
    ``[[H, I + B], [I + B^T, K_w^-1]]`` (scaled by ``L_w`` as in
    :func:`build_noisy_problem` unless ``scaled=False``)."""
    n = K_w.shape[0]
    lay = _Layout(n)
    w_off, w_mid, Lw = _w_block(K_w, scaled)
    G = AffineSymMap.from_entries(np.zeros((n, n)), lay.x_dim, lay.h_entries(0))
    f0 = np.zeros((2 * n, 2 * n))
    f0[:n, n:] = w_off
    f0[n:, :n] = w_off.T
    f0[n:, n:] = w_mid
    F = AffineSymMap.from_entries(f0, lay.x_dim, lay.h_entries(0) + lay.b_entries(0, n, right=Lw))
    a, c = lay.power_constraint(K_w, P)
    return MaxdetProblem(G, F, a, c), lay


def _start(K_w, P, lay):
    n = K_w.shape[0]
    return lay.pack(K_w + 0.5 * P * np.eye(n), np.zeros((n, n)))


def _finish(sol, lay, K_w, K_v, P, value_nats):
    H, B = lay.unpack(sol.x)
    K_s = ks_from_h(K_w, K_v, H, B)
    n = K_w.shape[0]
    return NBlockSolution(
        value_bits=value_nats / (2 * n * LN2),
        B=B,
        K_s=K_s,
        H=H,
        power_used=power_of(K_w, K_v, K_s, B),
        P=P,
        diagnostics=sol,
    )


def _check_status(sol):
    if not sol.converged:
        raise MaxIterations(
            f"barrier method stopped ({sol.status.value}) after {sol.iterations} Newton steps"
        )


def noisy_feedback_bound(prob, cfg=None):
    """Upper bound on the n-block capacity with noisy feedback (``K_v`` > 0)."""
    K_w, K_v, P = prob.K_w, prob.K_v, prob.P
    try:
        cholesky(K_v)
    except NotPositiveDefinite as exc:
        raise SingularFeedbackNoise(
            "feedback noise covariance must be positive definite; "
            "use perfect_feedback_nblock for noiseless feedback"
        ) from exc
    mp, lay = build_noisy_problem(K_w, K_v, P)
    sol = solve(mp, _start(K_w, P, lay), cfg or SolverConfig())
    _check_status(sol)
    # scaled log det G already includes log det K_v
    value = sol.value - log_det(K_w)
    return _finish(sol, lay, K_w, K_v, P, value)


def perfect_feedback_nblock(K_w, P, cfg=None):
    """n-block capacity with noiseless feedback (Cover-Pombra)."""
    K_w = as_sym(K_w)
    P = float(P)
    _validate(K_w, P)
    mp, lay = build_perfect_problem(K_w, P)
    sol = solve(mp, _start(K_w, P, lay), cfg or SolverConfig())
    _check_status(sol)
    K_v = np.zeros_like(K_w)
    return _finish(sol, lay, K_w, K_v, P, sol.value - log_det(K_w))


def feedback_bound(K_w, K_v, P, cfg=None):
    """Noisy bound, falling back to the perfect-feedback program when ``K_v == 0``."""
    K_v = np.asarray(K_v, dtype=float)
    if not np.any(K_v):
        return perfect_feedback_nblock(K_w, P, cfg)
    return noisy_feedback_bound(NBlockProblem(K_w, K_v, P), cfg)
