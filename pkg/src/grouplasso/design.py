"""Problem containers shared by the Gaussian and GLM path solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .matrix import DenseMatrix, FeatureMatrix


def _as_groups(group_starts, group_sizes, p: int) -> tuple[np.ndarray, np.ndarray]:
    starts = np.asarray(group_starts, dtype=int)
    sizes = np.asarray(group_sizes, dtype=int)
    if starts.shape != sizes.shape or starts.ndim != 1 or starts.size == 0:
        raise DimensionMismatch("group starts and sizes must be equal-length 1-D")
    if np.any(sizes < 1):
        raise DimensionMismatch("group sizes must be positive")
    expected = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    if not np.array_equal(starts, expected) or int(np.sum(sizes)) != p:
        raise DimensionMismatch("groups must partition the columns in order")
    return starts, sizes


@dataclass
class GroupedDesign:
    """Feature matrix handle, group boundaries, observation weights, response.

    Weights are normalized to sum to one at construction.
    """

    matrix: FeatureMatrix
    group_starts: np.ndarray
    group_sizes: np.ndarray
    weights: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        if isinstance(self.matrix, np.ndarray):
            self.matrix = DenseMatrix(self.matrix)
        self.group_starts, self.group_sizes = _as_groups(
            self.group_starts, self.group_sizes, self.matrix.cols
        )
        w = np.asarray(self.weights, dtype=float)
        y = np.asarray(self.response, dtype=float)
        n = self.matrix.rows
        if w.shape != (n,) or y.shape != (n,):
            raise DimensionMismatch("weights and response must have one entry per row")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(w))
        if total <= 0:
            raise ValueError("weights must have positive sum")
        self.weights = w / total
        self.response = y

    @property
    def n(self) -> int:
        return self.matrix.rows

    @property
    def p(self) -> int:
        return self.matrix.cols

    @property
    def n_groups(self) -> int:
        return len(self.group_starts)

    def group_slice(self, g: int) -> slice:
        s = int(self.group_starts[g])
        return slice(s, s + int(self.group_sizes[g]))


def uniform_groups(p: int, size: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Contiguous groups of a common size covering ``p`` columns."""
    if p % size != 0:
        raise DimensionMismatch(f"{p} columns do not split into groups of {size}")
    starts = np.arange(0, p, size)
    return starts, np.full(p // size, size)


@dataclass
class PenaltyConfig:
    """Elastic-net mixing, per-group penalty factors, and the lambda policy.

    Either an explicit strictly decreasing ``lambdas`` sequence is given, or
    a path of ``n_lambdas`` values is generated geometrically from the
    computed entry value down to ``lambda_min_ratio`` times it.  When the
    ratio is left unset it defaults to 0.01 if the design has fewer rows
    than columns and 0.0001 otherwise.
    """

    alpha: float
    penalty_factors: np.ndarray
    lambdas: np.ndarray | None = None
    n_lambdas: int = 100
    lambda_min_ratio: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        om = np.asarray(self.penalty_factors, dtype=float)
        if om.ndim != 1 or np.any(om < 0):
            raise ValueError("penalty factors must be a nonnegative vector")
        self.penalty_factors = om
        if self.lambdas is not None:
            lams = np.asarray(self.lambdas, dtype=float)
            if lams.ndim != 1 or lams.size == 0 or np.any(lams <= 0):
                raise ValueError("lambdas must be a positive vector")
            if lams.size > 1 and np.any(np.diff(lams) >= 0):
                raise ValueError("explicit lambdas must be strictly decreasing")
            self.lambdas = lams
        if self.n_lambdas < 1:
            raise ValueError("n_lambdas must be at least 1")
        if self.lambda_min_ratio is not None and not 0.0 < self.lambda_min_ratio <= 1.0:
            raise ValueError("lambda_min_ratio must lie in (0, 1]")

    def resolve_ratio(self, n: int, p: int) -> float:
        if self.lambda_min_ratio is not None:
            return self.lambda_min_ratio
        return 0.01 if n < p else 0.0001

    def unpenalized_groups(self) -> np.ndarray:
        """Groups whose group-lasso weight vanishes."""
        return np.flatnonzero(self.penalty_factors * self.alpha == 0.0)


@dataclass(frozen=True)
class SparseCoefficients:
    """Nonzero entries of one coefficient vector."""

    indices: np.ndarray
    values: np.ndarray
    size: int

    @classmethod
    def from_dense(cls, beta: np.ndarray) -> "SparseCoefficients":
        idx = np.flatnonzero(beta)
        return cls(idx.copy(), beta[idx].copy(), beta.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out


@dataclass
class PathResult:
    """Per-lambda solutions plus solver diagnostics.

    ``coefficients`` are stored sparsely in feature space; ``shape`` records
    the dense layout, ``(p,)`` for single-response fits and ``(p, c)`` for
    multi-response fits (dense views reshape accordingly).  Diagnostics hold
    at least ``cycles``, ``kkt_max_residual``, ``screen_size`` and
    ``active_size`` per lambda.
    """

    lambdas: list[float] = field(default_factory=list)
    coefficients: list[SparseCoefficients] = field(default_factory=list)
    intercepts: list = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    shape: tuple = ()

    def append(self, lam: float, beta: np.ndarray, intercept, diag: dict) -> None:
        if self.lambdas and lam >= self.lambdas[-1]:
            raise ValueError("path lambdas must be strictly decreasing")
        self.lambdas.append(float(lam))
        self.coefficients.append(SparseCoefficients.from_dense(np.ravel(beta)))
        self.intercepts.append(intercept)
        self.diagnostics.append(diag)

    def __len__(self) -> int:
        return len(self.lambdas)

    def dense(self, k: int) -> np.ndarray:
        beta = self.coefficients[k].to_dense()
        return beta.reshape(self.shape) if self.shape else beta
