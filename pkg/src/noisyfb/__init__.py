"""Upper bounds on the capacity of Gaussian channels with noisy feedback."""

from .exceptions import (
    BoundaryPoint,
    ConfigError,
    IdentityViolation,
    Infeasible,
    InvalidModel,
    MaxIterations,
    NotPositiveDefinite,
    SingularFeedbackNoise,
)
from .nblock import (
    NBlockProblem,
    NBlockSolution,
    feedback_bound,
    noisy_feedback_bound,
    nonfeedback_nblock,
    perfect_feedback_nblock,
)
from .noise import AR1, MA1, CustomAutocov, White, covariance, psd
from .spectral import (
    SpectralProblem,
    SpectralSolution,
    noisy_spectral_bound,
    nonfeedback_shannon,
    perfect_feedback_shannon,
)

__version__ = "0.1.0"

__all__ = [
    "AR1",
    "MA1",
    "BoundaryPoint",
    "ConfigError",
    "CustomAutocov",
    "IdentityViolation",
    "Infeasible",
    "InvalidModel",
    "MaxIterations",
    "NBlockProblem",
    "NBlockSolution",
    "NotPositiveDefinite",
    "SingularFeedbackNoise",
    "SpectralProblem",
    "SpectralSolution",
    "White",
    "covariance",
    "feedback_bound",
    "noisy_feedback_bound",
    "noisy_spectral_bound",
    "nonfeedback_nblock",
    "nonfeedback_shannon",
    "perfect_feedback_nblock",
    "perfect_feedback_shannon",
    "psd",
]
