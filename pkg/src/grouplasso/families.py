"""Loss families for the proximal quasi-Newton solver.

Each family captures the response and observation weights at construction
and evaluates, at a given linear prediction, the loss, its gradient, and a
positive diagonal majorizer of its hessian.  For the single-response
families and the multi-response Gaussian the majorizer is the exact hessian
diagonal; the multinomial hessian is only block diagonal, and twice its
diagonal is used instead, which dominates it in the positive semi-definite
order.

Multi-response families operate on class-interleaved flat vectors: entry
``i * c + j`` is observation ``i``, class ``j``.
"""

from __future__ import annotations

import abc

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch

HESSIAN_FLOOR = 1e-12
POISSON_ETA_CAP = 30.0


def apply_hessian_floor(h: np.ndarray, floor: float = HESSIAN_FLOOR) -> np.ndarray:
    """Elementwise ``max(h, floor)``; keeps working weights strictly positive."""
    return np.maximum(h, floor)


class GlmFamily(abc.ABC):
    """Loss, gradient, and diagonal hessian majorizer for one response."""

    name: str = ""
    is_multi: bool = False

    def __init__(self, y: np.ndarray, weights: np.ndarray):
        y = np.asarray(y, dtype=float)
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != y.shape[0]:
            raise DimensionMismatch("weights must have one entry per observation")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(w))
        if total <= 0:
            raise ValueError("weights must have positive sum")
        self.y = y
        self.weights = w / total

    @property
    def n_obs(self) -> int:
        return self.y.shape[0]

    @property
    def n_classes(self) -> int:
        return self.y.shape[1] if self.is_multi else 1

    @property
    def flat_size(self) -> int:
        return self.n_obs * self.n_classes

    @abc.abstractmethod
    def loss(self, eta: np.ndarray) -> float: ...

    @abc.abstractmethod
    def gradient(self, eta: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def hessian_majorizer(self, eta: np.ndarray) -> np.ndarray: ...


class GaussianFamily(GlmFamily):
    """Squared-error loss ``(1/2)(||y - eta||_W^2 - ||y||_W^2)``."""

    name = "gaussian"

    def loss(self, eta):
        r = self.y - eta
        return 0.5 * float(self.weights @ (r * r) - self.weights @ (self.y * self.y))

    def gradient(self, eta):
        return self.weights * (eta - self.y)

    def hessian_majorizer(self, eta):
        return self.weights.copy()


class BinomialLogitFamily(GlmFamily):
    """Bernoulli deviance with the logit link; responses in [0, 1]."""

    name = "binomial"

    def __init__(self, y, weights):
        super().__init__(y, weights)
        if np.any((self.y < 0) | (self.y > 1)):
            raise ValueError("binomial responses must lie in [0, 1]")

    def loss(self, eta):
        return float(self.weights @ (-self.y * eta + np.logaddexp(0.0, eta)))

    def gradient(self, eta):
        return -self.weights * (self.y - expit(eta))

    def hessian_majorizer(self, eta):
        p = expit(eta)
        return self.weights * p * (1.0 - p)


class PoissonLogFamily(GlmFamily):
    """Poisson deviance with the log link.

    The linear prediction is clipped at ``eta_cap`` before exponentiation;
    ``n_clipped`` counts how many entries were affected across all calls.
    """

    name = "poisson"

    def __init__(self, y, weights, eta_cap: float = POISSON_ETA_CAP):
        super().__init__(y, weights)
        if np.any(self.y < 0):
            raise ValueError("poisson responses must be nonnegative")
        self.eta_cap = float(eta_cap)
        self.n_clipped = 0

    def _exp_eta(self, eta):
        self.n_clipped += int(np.count_nonzero(eta > self.eta_cap))
        return np.exp(np.minimum(eta, self.eta_cap))

    def loss(self, eta):
        return float(self.weights @ (-self.y * eta + self._exp_eta(eta)))

    def gradient(self, eta):
        return self.weights * (self._exp_eta(eta) - self.y)

    def hessian_majorizer(self, eta):
        return self.weights * self._exp_eta(eta)


class MultiFamily(GlmFamily):
    """Base for multi-response families; flat vectors are class-interleaved."""

    is_multi = True

    def __init__(self, y, weights):
        y = np.asarray(y, dtype=float)
        if y.ndim != 2:
            raise DimensionMismatch("multi-response y must be 2-D")
        super().__init__(y, weights)

    def _grid(self, eta: np.ndarray) -> np.ndarray:
        if eta.shape != (self.flat_size,):
            raise DimensionMismatch(f"eta must have length {self.flat_size}")
        return eta.reshape(self.n_obs, self.n_classes)


class MultigaussianFamily(MultiFamily):
    """Per-cell squared error with the observation weight shared across a row."""

    name = "multigaussian"

    def loss(self, eta):
        e = self._grid(eta)
        return float(
            self.weights @ (-np.sum(self.y * e, axis=1) + 0.5 * np.sum(e * e, axis=1))
        )

    def gradient(self, eta):
        e = self._grid(eta)
        return (self.weights[:, None] * (e - self.y)).reshape(-1)

    def hessian_majorizer(self, eta):
        self._grid(eta)
        return np.repeat(self.weights, self.n_classes)


class MultinomialFamily(MultiFamily):
    """Softmax deviance; rows of ``y`` are nonnegative and sum to one.

    The majorizer is twice the hessian diagonal, ``2 w_i p_ij (1 - p_ij)``,
    which dominates the full (block-diagonal, non-invertible) hessian and
    implicitly resolves the softmax shift non-identifiability.
    """

    name = "multinomial"

    def __init__(self, y, weights):
        super().__init__(y, weights)
        if np.any(self.y < 0) or np.any(np.abs(self.y.sum(axis=1) - 1.0) > 1e-8):
            raise ValueError("multinomial responses must be row-stochastic")

    def _probs(self, e: np.ndarray) -> np.ndarray:
        shifted = e - e.max(axis=1, keepdims=True)
        z = np.exp(shifted)
        return z / z.sum(axis=1, keepdims=True)

    def loss(self, eta):
        e = self._grid(eta)
        m = e.max(axis=1)
        lse = m + np.log(np.sum(np.exp(e - m[:, None]), axis=1))
        return float(self.weights @ (-np.sum(self.y * e, axis=1) + lse))

    def gradient(self, eta):
        p = self._probs(self._grid(eta))
        return (self.weights[:, None] * (p - self.y)).reshape(-1)

    def hessian_majorizer(self, eta):
        p = self._probs(self._grid(eta))
        return (2.0 * self.weights[:, None] * p * (1.0 - p)).reshape(-1)


_FAMILIES = {
    cls.name: cls
    for cls in (
        GaussianFamily,
        BinomialLogitFamily,
        PoissonLogFamily,
        MultigaussianFamily,
        MultinomialFamily,
    )
}


def make_family(name: str, y: np.ndarray, weights: np.ndarray) -> GlmFamily:
    """Construct a family by name."""
    try:
        cls = _FAMILIES[name]
    except KeyError:
        raise ValueError(
            f"unknown family {name!r}; choose from {sorted(_FAMILIES)}"
        ) from None
    return cls(y, weights)
