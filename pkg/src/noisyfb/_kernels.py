"""Hot numeric kernels with numba and pure-numpy implementations.

The numba versions are used when numba imports cleanly and the environment
variable ``NOISYFB_DISABLE_NUMBA`` is unset (or ``0``).  The ``*_numpy``
functions always exist; the ``*_numba`` ones exist whenever numba is in use,
so the benchmark and the tests can compare the two directly.
"""

import os

import numpy as np

_flag = os.environ.get("NOISYFB_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("disabled by NOISYFB_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA


# ---------------------------------------------------------------------------
# Hessian of log det M(x) for a sparse affine map
# ---------------------------------------------------------------------------
#
# Coefficient matrices are stored as triplets (p, q, c, k): entry (p, q) of
# coefficient matrix k equals c, with both symmetric halves listed.  For
# W = M(x)^-1 the Hessian of -log det M is
#
#     H[k, l] = tr(W A_k W A_l) = sum_{t in k, u in l} c_t c_u W[q_t, p_u] W[p_t, q_u].

_HESS_CHUNK = 512


def logdet_hessian_numpy(W, p, q, c, k, x_dim):
    import scipy.sparse as sp

    T = c.size
    E = sp.csr_matrix((np.ones(T), (k, np.arange(T))), shape=(x_dim, T))
    H = np.zeros((x_dim, x_dim))
    Wqp = W[np.ix_(q, p)]
    for start in range(0, T, _HESS_CHUNK):
        stop = min(start + _HESS_CHUNK, T)
        rows = slice(start, stop)
        Z = (c[rows, None] * c[None, :]) * Wqp[rows, :] * Wqp[:, rows].T
        H += E[:, rows] @ (E @ Z.T).T
    return 0.5 * (H + H.T)


def waterfill_level_numpy(floor, weights, budget):
    """Water level for ``sum(weights * max(0, level - floor)) == budget``."""
    # common case: every bin ends up under water, so no sort is needed
    level = (budget + float(np.dot(weights, floor))) / float(np.sum(weights))
    if level >= np.max(floor):
        return level
    order = np.argsort(floor, kind="stable")
    f = floor[order]
    w = weights[order]
    cw = np.cumsum(w)
    cq = np.cumsum(w * f)
    levels = (budget + cq) / cw
    ok = np.empty(f.size, dtype=bool)
    ok[:-1] = levels[:-1] <= f[1:]
    ok[-1] = True
    return float(levels[np.argmax(ok)])


def spectral_score_numpy(b, cos_tab, sin_tab, s_w, s_v, weights, power):
    """Score one filter candidate.

    Returns ``(value_nats, filter_cost, level)``; ``value_nats`` is ``-inf``
    when the filter alone uses the whole power budget.
    """
    re = cos_tab @ b
    im = sin_tab @ b
    gain_b = re * re + im * im
    cost = float(np.dot(weights, gain_b * (s_w + s_v)))
    if not cost < power:
        return -np.inf, cost, np.nan
    floor = ((1.0 + re) ** 2 + im * im) * s_w
    level = waterfill_level_numpy(floor, weights, power - cost)
    value = 0.5 * float(np.dot(weights, np.log(np.maximum(level, floor)) - np.log(s_w)))
    return value, cost, level


if HAS_NUMBA:

    @njit(cache=True)
    def logdet_hessian_numba(W, p, q, c, k, x_dim):
        H = np.zeros((x_dim, x_dim))
        T = c.size
        for t in range(T):
            pt = p[t]
            qt = q[t]
            ct = c[t]
            kt = k[t]
            H[kt, kt] += ct * ct * W[qt, pt] * W[pt, qt]
            for u in range(t + 1, T):
                z = ct * c[u] * W[qt, p[u]] * W[pt, q[u]]
                ku = k[u]
                H[kt, ku] += z
                H[ku, kt] += z
        return H

    @njit(cache=True)
    def waterfill_level_numba(floor, weights, budget):
        sw = 0.0
        sq = 0.0
        top = floor[0]
        for i in range(floor.size):
            sw += weights[i]
            sq += weights[i] * floor[i]
            top = max(top, floor[i])
        if (budget + sq) / sw >= top:
            return (budget + sq) / sw
        order = np.argsort(floor)
        cw = 0.0
        cq = 0.0
        m = floor.size
        level = 0.0
        for i in range(m):
            j = order[i]
            cw += weights[j]
            cq += weights[j] * floor[j]
            level = (budget + cq) / cw
            if i + 1 < m and level <= floor[order[i + 1]]:
                return level
        return level

    @njit(cache=True)
    def spectral_score_numba(b, cos_tab, sin_tab, s_w, s_v, weights, power):
        m, taps = cos_tab.shape
        floor = np.empty(m)
        cost = 0.0
        for i in range(m):
            re = 0.0
            im = 0.0
            for j in range(taps):
                re += cos_tab[i, j] * b[j]
                im += sin_tab[i, j] * b[j]
            cost += weights[i] * (re * re + im * im) * (s_w[i] + s_v[i])
            floor[i] = ((1.0 + re) * (1.0 + re) + im * im) * s_w[i]
        if not cost < power:
            return -np.inf, cost, np.nan
        level = waterfill_level_numba(floor, weights, power - cost)
        value = 0.0
        for i in range(m):
            value += weights[i] * (np.log(max(level, floor[i])) - np.log(s_w[i]))
        return 0.5 * value, cost, level

    logdet_hessian = logdet_hessian_numba
    waterfill_level = waterfill_level_numba
    spectral_score = spectral_score_numba
else:
    logdet_hessian = logdet_hessian_numpy
    waterfill_level = waterfill_level_numpy
    spectral_score = spectral_score_numpy
