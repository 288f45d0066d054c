"""Synthetic benchmark designs with equi-correlated features.

Both generators draw from ``numpy.random.default_rng`` (PCG64, a seedable
64-bit generator; standard normals via its ziggurat sampler), so a fixed
seed reproduces the exact same data on any platform.  Noise is scaled so
the signal-to-noise ratio ``var(X beta) / sigma^2`` matches the request.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def _equicorrelated(rng, n: int, k: int, rho: float) -> np.ndarray:
    """n samples of k unit-variance features with common correlation rho."""
    shared = rng.standard_normal(n)
    unique = rng.standard_normal((n, k))
    return np.sqrt(rho) * shared[:, None] + np.sqrt(1.0 - rho) * unique


def _noise_scale(signal: np.ndarray, snr: float) -> float:
    var = float(np.var(signal))
    return np.sqrt(var / snr) if var > 0 else 0.0


def simulate_group(
    n: int, n_groups: int, rho: float, snr: float = 3.0, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Grouped design: a cubic polynomial expansion of each latent feature.

    Each of ``n_groups`` latent equi-correlated columns expands into three
    columns (itself, its square, its cube), giving natural groups of three.
    Six standard-normal signal coefficients sit at the front; the rest are
    zero.  Returns the design, the Gaussian response, a Bernoulli response
    drawn with logit link, and the ground truth.
    """
    if n < 1 or n_groups < 1 or not 0.0 <= rho <= 1.0:
        raise ValueError("need n, n_groups >= 1 and rho in [0, 1]")
    rng = np.random.default_rng(seed)
    latent = _equicorrelated(rng, n, n_groups, rho)
    x = np.empty((n, 3 * n_groups))
    x[:, 0::3] = latent
    x[:, 1::3] = latent**2
    x[:, 2::3] = latent**3

    beta = np.zeros(3 * n_groups)
    k = min(6, beta.size)
    beta[:k] = rng.standard_normal(k)
    signal = x @ beta
    sigma = _noise_scale(signal, snr)
    eta = signal + sigma * rng.standard_normal(n)
    y_binomial = (rng.random(n) < expit(eta)).astype(float)
    truth = {"beta": beta, "sigma": sigma, "eta": eta, "group_size": 3}
    return x, eta.copy(), y_binomial, truth


def simulate_lasso(
    n: int, p: int, rho: float, snr: float = 3.0, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Singleton-group design with alternating, exponentially decaying signal.

    Coefficients follow ``beta_j = (-1)^j exp(-2 (j - 1) / 20)`` for
    ``j = 1..p``, so magnitudes decay smoothly and signs alternate.
    """
    if n < 1 or p < 1 or not 0.0 <= rho <= 1.0:
        raise ValueError("need n, p >= 1 and rho in [0, 1]")
    rng = np.random.default_rng(seed)
    x = _equicorrelated(rng, n, p, rho)
    j = np.arange(1, p + 1)
    beta = (-1.0) ** j * np.exp(-2.0 * (j - 1) / 20.0)
    signal = x @ beta
    sigma = _noise_scale(signal, snr)
    eta = signal + sigma * rng.standard_normal(n)
    y_binomial = (rng.random(n) < expit(eta)).astype(float)
    truth = {"beta": beta, "sigma": sigma, "eta": eta}
    return x, eta.copy(), y_binomial, truth
