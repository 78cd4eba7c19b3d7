"""Stationary Gaussian noise models.

Each model yields a Toeplitz covariance for any block length and a matching
power spectral density on ``[-pi, pi]``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidModel
from .linalg import sym_eigenvalues, toeplitz

PSD_CHECK_POINTS = 4096
# custom autocovariances are checked for PSD Toeplitz blocks up to this size
N_MAX = 64


class Psd:
    """Power spectral density ``S(theta)``, vectorised over ``theta``."""

    def __init__(self, fn, label=""):
        self._fn = fn
        self.label = label

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.broadcast_to(self._fn(theta), theta.shape).astype(float)

    def scaled(self, c):
        return Psd(lambda th: c * self._fn(th), f"{c}*{self.label}")

    def __repr__(self):
        return f"Psd({self.label})"


@dataclass(frozen=True)
class White:
    variance: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.variance) or self.variance < 0:
            raise InvalidModel(f"white noise variance must be >= 0, got {self.variance}")

    def autocov(self, n):
        r = np.zeros(n)
        r[0] = self.variance
        return r

    def psd(self):
        v = float(self.variance)
        return Psd(lambda th: np.full_like(th, v), f"white({v})")


@dataclass(frozen=True)
class MA1:
    """``W_i = U_i + alpha * U_{i-1}`` with unit-variance white ``U``."""

    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise InvalidModel("MA(1) coefficient must be finite")

    def autocov(self, n):
        r = np.zeros(max(n, 2))
        r[0] = 1.0 + self.alpha**2
        r[1] = self.alpha
        return r[:n]

    def psd(self):
        a = float(self.alpha)
        return Psd(lambda th: 1.0 + a * a + 2.0 * a * np.cos(th), f"ma1({a})")


@dataclass(frozen=True)
class AR1:
    """``W_i = rho * W_{i-1} + E_i`` with innovation variance ``innovation``."""

    rho: float
    innovation: float = 1.0

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise InvalidModel(f"AR(1) needs |rho| < 1, got {self.rho}")
        if not self.innovation > 0:
            raise InvalidModel(f"AR(1) innovation variance must be > 0, got {self.innovation}")

    def autocov(self, n):
        k = np.arange(n)
        return self.innovation * self.rho**k / (1.0 - self.rho**2)

    def psd(self):
        rho, s = float(self.rho), float(self.innovation)
        return Psd(lambda th: s / (1.0 + rho * rho - 2.0 * rho * np.cos(th)), f"ar1({rho},{s})")


@dataclass(frozen=True)
class CustomAutocov:
    """Finite autocovariance sequence ``r_0, ..., r_m`` (zero beyond ``m``)."""

    r: tuple = field()

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).ravel()
        object.__setattr__(self, "r", tuple(float(v) for v in r))
        if r.size == 0 or not r[0] > 0 or not np.all(np.isfinite(r)):
            raise InvalidModel("custom autocovariance needs finite values and r_0 > 0")
        theta = np.linspace(0.0, np.pi, PSD_CHECK_POINTS)
        s = self._spectrum(theta)
        if np.min(s) < -1e-12 * r[0]:
            raise InvalidModel(f"custom autocovariance has negative spectrum (min {np.min(s):.3e})")
        lam = sym_eigenvalues(toeplitz(r, N_MAX))
        if lam[0] < -1e-10 * r[0]:
            raise InvalidModel(f"custom autocovariance is not PSD at n={N_MAX}")

    def _spectrum(self, theta):
        r = np.asarray(self.r)
        k = np.arange(1, r.size)
        return r[0] + 2.0 * np.cos(np.multiply.outer(theta, k)) @ r[1:]

    def autocov(self, n):
        out = np.zeros(n)
        m = min(n, len(self.r))
        out[:m] = self.r[:m]
        return out

    def psd(self):
        return Psd(self._spectrum, f"custom({len(self.r)})")


def covariance(model, n):
    """Toeplitz covariance of ``n`` consecutive samples."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cov = toeplitz(model.autocov(n), n)
    if isinstance(model, CustomAutocov) and n > N_MAX:
        if sym_eigenvalues(cov)[0] < -1e-10 * cov[0, 0]:
            raise InvalidModel(f"custom autocovariance is not PSD at n={n}")
    return cov


def psd(model):
    return model.psd()
