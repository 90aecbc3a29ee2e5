"""Confidence intervals for Monte Carlo frame-error-rate estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special, stats

METHODS = ("normal", "exact")


def inverse_q(alpha: float) -> float:
    """Inverse of the standard normal CCDF, ``Q(inverse_q(a)) = a``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    # ndtri is accurate in both tails; 1 - alpha is exact for alpha >= 0.5
    if alpha <= 0.5:
        return float(-special.ndtri(alpha))
    return float(special.ndtri(1.0 - alpha))


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {gamma}")


def confidence_delta(p_hat: float, n_t: int, gamma: float) -> float:
    """Half-width of the normal-approximation interval around ``p_hat``."""
    _check_gamma(gamma)
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError("p_hat must be in [0, 1]")
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    return math.sqrt(p_hat * (1.0 - p_hat) / n_t) * inverse_q((1.0 - gamma) / 2.0)


def exact_interval(n_fe: int, n_t: int, gamma: float) -> tuple[float, float]:
    """Clopper-Pearson interval from beta quantiles."""
    _check_gamma(gamma)
    if n_t < 1 or not 0 <= n_fe <= n_t:
        raise ValueError(f"invalid counts n_fe={n_fe}, n_t={n_t}")
    alpha = (1.0 - gamma) / 2.0
    lb = 0.0 if n_fe == 0 else float(stats.beta.ppf(alpha, n_fe, n_t - n_fe + 1))
    ub = 1.0 if n_fe == n_t else float(stats.beta.ppf(1.0 - alpha, n_fe + 1, n_t - n_fe))
    return lb, ub


def comparison_confidence(gamma: float) -> float:
    """Probability bound that disjoint intervals order the true error rates correctly."""
    return 1.0 - (1.0 - gamma) ** 2 / 4.0


@dataclass(frozen=True)
class FerEstimate:
    n_fe: int
    n_t: int
    p_hat: float
    lb: float
    ub: float
    gamma: float
    method: str = "normal"

    @property
    def simulated(self) -> bool:
        return self.n_t > 0

    def floored_p_hat(self) -> float:
        """``p_hat`` with the half pseudo-count floor ``1/(2 n_t)`` when no errors were seen."""
        if self.n_t == 0:
            raise ValueError("no trials simulated")
        if self.n_fe == 0:
            return 1.0 / (2.0 * self.n_t)
        return self.p_hat


def estimate(n_fe: int, n_t: int, gamma: float, method: str = "normal") -> FerEstimate:
    """Point estimate and interval; degenerate ``p_hat`` in {0, 1} always uses the exact interval."""
    if method not in METHODS:
        raise ValueError(f"unknown interval method {method!r}")
    _check_gamma(gamma)
    if n_t == 0:
        return FerEstimate(0, 0, 0.0, 0.0, 1.0, gamma, method)
    p_hat = n_fe / n_t
    if method == "exact" or n_fe == 0 or n_fe == n_t:
        lb, ub = exact_interval(n_fe, n_t, gamma)
    else:
        delta = confidence_delta(p_hat, n_t, gamma)
        lb, ub = max(0.0, p_hat - delta), min(1.0, p_hat + delta)
    return FerEstimate(n_fe, n_t, p_hat, lb, ub, gamma, method)
