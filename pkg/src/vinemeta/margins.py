"""Random-effect margins (normal and mean-dispersion beta) and the
multinomial logit link pair.

The beta margin uses the mean-dispersion parametrization Beta(pi, gamma)
with mean pi and variance pi (1 - pi) gamma, i.e. shape parameters

    alpha = pi (1 - gamma) / gamma,   beta = (1 - pi) (1 - gamma) / gamma,

so gamma = 1/3 with pi = 1/2 recovers the uniform distribution.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class NormalMargin:
    """Normal random effect on the latent (multinomial-logit) scale."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise ValueError("quantile argument must lie strictly inside (0, 1)")
        return self.mu + self.sigma * special.ndtri(u)


@dataclass(frozen=True)
class BetaMargin:
    """Beta random effect with mean ``pi`` and dispersion ``gamma``."""

    pi: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"pi must lie in (0, 1), got {self.pi}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")

    @property
    def alpha(self):
        return self.pi * (1.0 - self.gamma) / self.gamma

    @property
    def beta(self):
        return (1.0 - self.pi) * (1.0 - self.gamma) / self.gamma

    def cdf(self, x):
        return special.betainc(self.alpha, self.beta, np.clip(x, 0.0, 1.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise ValueError("quantile argument must lie strictly inside (0, 1)")
        return special.betaincinv(self.alpha, self.beta, u)


def mlogit(pi_j, pi_k):
    """Multinomial logit link log(pi_j / (1 - pi_j - pi_k)).

    Requires pi_j, pi_k > 0 with pi_j + pi_k < 1.
    """
    pi_j = float(pi_j)
    pi_k = float(pi_k)
    if pi_j <= 0.0 or pi_k <= 0.0 or pi_j + pi_k >= 1.0:
        raise ValueError(
            f"(pi_j, pi_k) = ({pi_j}, {pi_k}) violates the simplex "
            "constraint pi_j, pi_k > 0, pi_j + pi_k < 1"
        )
    return np.log(pi_j / (1.0 - pi_j - pi_k))


def mlogit_inv(x_j, x_k):
    """Inverse multinomial logit exp(x_j) / (1 + exp(x_j) + exp(x_k)).

    Numerically stabilized; saturates to 0/1 in the infinite limits.
    """
    x_j = np.asarray(x_j, dtype=float)
    x_k = np.asarray(x_k, dtype=float)
    m = np.maximum(0.0, np.maximum(x_j, x_k))
    num = np.exp(x_j - m)
    den = np.exp(-m) + num + np.exp(x_k - m)
    return num / den
