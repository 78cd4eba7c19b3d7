"""Infinite-horizon (spectral) capacity quantities.

Frequency integrals ``(1/2pi) int_{-pi}^{pi} f`` of even functions are
evaluated by the trapezoid rule on ``M + 1`` equispaced nodes of ``[0, pi]``;
the weights sum to one.

The feedback bounds optimise a strictly causal filter with ``K`` taps,
``B(theta) = sum_k b_k exp(i k theta)``.  For fixed taps the message spectrum
is found by water-filling over the floor ``|1 + B|^2 S_w`` with whatever power
the filter leaves over; the taps themselves are searched by multi-start
Nelder-Mead.  The result is the best value found, i.e. a lower estimate of the
supremum over all causal filters.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .noise import White

LN2 = math.log(2.0)
DEFAULT_TAPS = 16
DEFAULT_GRID = 2048
SEED = 0x5EED
NM_MAXITER = 2000
NM_TOL = 1e-10
NM_STEP = 0.1


def frequency_grid(M):
    """Nodes ``theta_m = pi m / M`` and trapezoid weights normalised to sum 1."""
    if M < 1:
        raise ValueError("grid size must be >= 1")
    theta = np.pi * np.arange(M + 1) / M
    w = np.full(M + 1, 1.0 / M)
    w[0] = w[-1] = 0.5 / M
    return theta, w


def quadrature(values, weights):
    return float(np.dot(weights, values))


def waterfill_frequency(floor, reference, budget, weights=None):
    """Water-fill ``budget`` over a sampled noise floor.

    Returns ``(level, fill, value_nats)`` where ``fill = max(0, level - floor)``
    and ``value_nats = 0.5 * quad(log(max(level, floor)) - log(reference))``.
    ``weights`` default to the trapezoid weights for ``len(floor) - 1``
    intervals.
    """
    floor = np.asarray(floor, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if weights is None:
        weights = frequency_grid(floor.size - 1)[1]
    level = float(_kernels.waterfill_level(floor, np.asarray(weights, dtype=float), float(budget)))
    fill = np.maximum(0.0, level - floor)
    value = 0.5 * quadrature(np.log(np.maximum(level, floor)) - np.log(reference), weights)
    return level, fill, value


def nonfeedback_shannon(S_w, P, M=DEFAULT_GRID):
    """Water-filling capacity without feedback, bits per transmission."""
    theta, w = frequency_grid(M)
    s = S_w(theta)
    if np.min(s) <= 0:
        raise ValueError("forward noise spectrum must be positive on the grid")
    return waterfill_frequency(s, s, P, w)[2] / LN2


@dataclass
class SpectralProblem:
    S_w: object
    S_v: object
    P: float
    taps: int = DEFAULT_TAPS
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        self.P = float(self.P)
        if not (np.isfinite(self.P) and self.P > 0):
            raise ValueError(f"power must be positive, got {self.P}")
        if self.taps < 0:
            raise ValueError("taps must be >= 0")
        if self.grid < 64:
            raise ValueError("grid must have at least 64 intervals")
        self.theta, self.weights = frequency_grid(self.grid)
        self.s_w = self.S_w(self.theta)
        self.s_v = self.S_v(self.theta)
        if np.min(self.s_w) <= 0:
            raise ValueError("forward noise spectrum must be positive on the grid")
        if np.min(self.s_v) < 0:
            raise ValueError("feedback noise spectrum must be nonnegative")
        k = np.arange(1, self.taps + 1)
        arg = np.multiply.outer(self.theta, k)
        self.cos_tab = np.ascontiguousarray(np.cos(arg))
        self.sin_tab = np.ascontiguousarray(np.sin(arg))

    def score(self, b):
        """``(value_nats, filter_power, level)`` for taps ``b``."""
        return _kernels.spectral_score(
            np.ascontiguousarray(b, dtype=float),
            self.cos_tab,
            self.sin_tab,
            self.s_w,
            self.s_v,
            self.weights,
            self.P,
        )


@dataclass
class SpectralSolution:
    b: np.ndarray
    lam: float
    S_s_samples: np.ndarray
    value_bits: float
    power_used: float
    filter_power: float
    theta: np.ndarray = field(repr=False)
    seed_values: list = field(default_factory=list, repr=False)

    @property
    def filter_power_fraction(self):
        return self.filter_power / self.power_used if self.power_used > 0 else 0.0


def start_points(taps, seed=SEED):
    """The deterministic multi-start seeds for a ``taps``-long filter."""
    if taps == 0:
        return [np.zeros(0)]
    alt = 0.2 * (-1.0) ** np.arange(taps)
    first = np.zeros(taps)
    first[0] = -0.5
    rng = np.random.default_rng(seed)
    pts = [np.zeros(taps), first, alt, -alt]
    pts.extend(rng.uniform(-0.25, 0.25, size=(4, taps)))
    return pts


# objective for filters that exceed the budget: large, finite, growing with the overspend
INFEASIBLE_PENALTY = 1e6


def _nelder_mead(prob, x0):
    def fun(b):
        value, cost, _ = prob.score(b)
        if np.isfinite(value):
            return -value
        return INFEASIBLE_PENALTY * (1.0 + cost / prob.P)

    simplex = np.vstack([x0, x0 + NM_STEP * np.eye(x0.size)])
    res = minimize(
        fun,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": NM_MAXITER,
            "xatol": NM_TOL,
            "fatol": NM_TOL,
            "initial_simplex": simplex,
            "adaptive": True,
        },
    )
    return res.x, prob.score(res.x)[0]


def _solution(prob, b, seed_values=()):
    value, cost, _ = prob.score(b)
    level, fill, value = waterfill_frequency(
        ((1.0 + prob.cos_tab @ b) ** 2 + (prob.sin_tab @ b) ** 2) * prob.s_w,
        prob.s_w,
        prob.P - cost,
        prob.weights,
    )
    return SpectralSolution(
        b=np.asarray(b, dtype=float),
        lam=level,
        S_s_samples=fill,
        value_bits=value / LN2,
        power_used=quadrature(fill, prob.weights) + cost,
        filter_power=cost,
        theta=prob.theta,
        seed_values=list(seed_values),
    )


def noisy_spectral_bound(prob, seeds=None):
    """Spectral upper bound with feedback noise spectrum ``prob.S_v``.

    ``seeds`` overrides the default start points (all of length ``prob.taps``).
    Ties between starts go to the earliest one.
    """
    starts = start_points(prob.taps) if seeds is None else [np.asarray(s, float) for s in seeds]
    if prob.taps == 0:
        return _solution(prob, np.zeros(0), [prob.score(np.zeros(0))[0] / LN2])
    best_b, best_val = None, -np.inf
    seed_values = []
    for x0 in starts:
        b, val = _nelder_mead(prob, x0)
        seed_values.append(val / LN2)
        if best_b is None or val > best_val:
            best_b, best_val = b, val
    return _solution(prob, best_b, seed_values)


def perfect_feedback_shannon(S_w, P, taps=DEFAULT_TAPS, M=DEFAULT_GRID):
    """Spectral feedback capacity with noiseless feedback (``S_v = 0``)."""
    return noisy_spectral_bound(SpectralProblem(S_w, White(0.0).psd(), P, taps, M))
