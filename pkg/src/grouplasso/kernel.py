"""Exact solver for the diagonal quadratic block update.

This module solves

    minimize_x  (1/2) x' diag(sigma) x - v' x + lam * ||x||_2

for a nonnegative diagonal ``sigma`` and ``lam > 0``.  The minimizer is zero
when ``||v||_2 <= lam``; otherwise its norm ``h = ||x||_2`` is the unique
positive root of a strictly decreasing, strictly convex scalar function
``phi`` and the minimizer itself is recovered elementwise as
``x_i = v_i / (sigma_i + lam / h)``.

The root is found by Newton's method started from a point selected by an
adaptive bisection between closed-form lower and upper bounds, which keeps
the iterate count small even when ``sigma`` is near singular and ``lam`` is
tiny.  Newton iterates started where ``phi`` is nonnegative are guaranteed
to increase monotonically toward the root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IterationLimit

# Relative cutoff below which a diagonal entry of sigma counts as zero; the
# matching entries of v are analytically zero in the solver and are forced to
# zero here so that a finite minimizer always exists.
SIGMA_TOL = 1e-10

DEFAULT_EPS = 1e-12
DEFAULT_MAX_ITER = 100

# Skip the bisection entirely when the bracket is narrower than this.
BISECT_SKIP_GAP = 0.1
# Floor on the mixing weight so each bisection step makes real progress
# toward the lower bound.
MIN_MIX_WEIGHT = 0.05


@dataclass(frozen=True)
class DiagQuadProblem:
    """One block update: diagonal curvature, linear term, and penalty weight.

    Entries of ``v`` whose matching ``sigma`` entry is (numerically) zero are
    zeroed at construction, which is the condition under which a finite
    minimizer exists.
    """

    sigma: np.ndarray
    v: np.ndarray
    lam: float

    def __post_init__(self):
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float)).copy()
        if sigma.ndim != 1 or v.ndim != 1 or sigma.shape != v.shape:
            raise ValueError("sigma and v must be 1-D arrays of equal length")
        if sigma.size < 1:
            raise ValueError("problem dimension must be at least 1")
        if np.any(sigma < 0):
            raise ValueError("sigma must be nonnegative")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        v[sigma <= SIGMA_TOL * sigma.max(initial=0.0)] = 0.0
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self) -> int:
        return self.sigma.size


@dataclass(frozen=True)
class KernelSolution:
    """Minimizer ``x``, its norm ``h``, and the iteration counts used."""

    x: np.ndarray
    h: float
    bisect_iters: int
    newton_iters: int


def phi(p: DiagQuadProblem, h: float) -> float:
    """Scalar root function; its positive root is the solution norm.

    ``phi(h) = sum_i v_i^2 / (sigma_i h + lam)^2 - 1``
    """
    t = p.v / (p.sigma * h + p.lam)
    return float(t @ t) - 1.0


def phi_prime(p: DiagQuadProblem, h: float) -> float:
    """Derivative of :func:`phi`; strictly negative off the trivial case."""
    d = p.sigma * h + p.lam
    return -2.0 * float(np.sum(p.v * p.v * p.sigma / (d * d * d)))


def lower_bound(p: DiagQuadProblem) -> float:
    """Largest ``h`` with ``sum_i (sigma_i h + lam)^2 <= ||v||_1^2``.

    By Cauchy-Schwarz, ``phi`` is nonnegative at this point, so it lower
    bounds the root.  Requires ``||v||_2 > lam``.  Clamped at zero; a
    negative discriminant also yields zero.
    """
    a = float(p.sigma @ p.sigma)
    if a <= 0.0:
        return 0.0
    b = 2.0 * p.lam * float(np.sum(p.sigma))
    l1 = float(np.sum(np.abs(p.v)))
    c = p.lam * p.lam * p.dim - l1 * l1
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return 0.0
    return max((-b + np.sqrt(disc)) / (2.0 * a), 0.0)


def upper_bound(p: DiagQuadProblem) -> float:
    """``sqrt(sum over positive sigma_i of v_i^2 / sigma_i^2)``.

    ``phi`` is nonpositive here, so it upper bounds the root.  Requires
    ``||v||_2 > lam`` and at least one positive ``sigma_i``.
    """
    pos = p.sigma > 0
    t = p.v[pos] / p.sigma[pos]
    return float(np.sqrt(t @ t))


def newton_root(
    p: DiagQuadProblem,
    h0: float,
    eps: float,
    max_iter: int = DEFAULT_MAX_ITER,
    trace: list | None = None,
) -> tuple[float, int]:
    """Newton iteration on :func:`phi` from a start with ``phi(h0) >= -eps``.

    Returns ``(h, iterations)`` with ``|phi(h)| <= eps``.  The iterates are
    nondecreasing.  ``trace``, when given, collects every iterate including
    the start.

    Raises
    ------
    IterationLimit
        If the tolerance is not met within ``max_iter`` steps.
    """
    h = float(h0)
    f = phi(p, h)
    if f < -eps:
        raise ValueError("newton_root requires phi(h0) >= -eps")
    if trace is not None:
        trace.append(h)
    iters = 0
    while abs(f) > eps:
        if iters >= max_iter:
            raise IterationLimit(
                f"Newton did not reach |phi| <= {eps:g} in {max_iter} iterations"
            )
        df = phi_prime(p, h)
        if df == 0.0:
            raise IterationLimit("phi has vanishing derivative; degenerate problem")
        h -= f / df
        f = phi(p, h)
        iters += 1
        if trace is not None:
            trace.append(h)
    return h, iters


def adaptive_bisection(
    p: DiagQuadProblem,
    eps: float,
    max_iter: int = DEFAULT_MAX_ITER,
    trace: list | None = None,
) -> tuple[float, int]:
    """Shrink from the upper bound toward the lower until ``phi >= -eps``.

    Each step bisects at ``w * h_lo + (1 - w) * h_hi`` where the weight
    ``w = lam / (sigma_min_pos * h_hi + lam)`` estimates how close the root
    is to the lower bound; ``w`` is floored at 0.05 so every step makes
    progress.  When the initial bracket is narrower than 0.1 the bisection
    is skipped and the lower bound is returned directly.

    Requires ``||v||_2 > lam``.
    """
    h_lo = lower_bound(p)
    h_hi = upper_bound(p)
    if h_hi - h_lo < BISECT_SKIP_GAP:
        return h_lo, 0
    sigma_star = float(p.sigma[p.sigma > 0].min())
    h = h_hi
    if trace is not None:
        trace.append(h)
    iters = 0
    while phi(p, h) < -eps:
        if iters >= max_iter:
            raise IterationLimit(
                f"adaptive bisection did not find phi >= {-eps:g} "
                f"in {max_iter} iterations"
            )
        h_hi = h
        w = max(p.lam / (sigma_star * h_hi + p.lam), MIN_MIX_WEIGHT)
        h = w * h_lo + (1.0 - w) * h_hi
        iters += 1
        if trace is not None:
            trace.append(h)
    return h, iters


def solve_bcd(p: DiagQuadProblem, eps: float = DEFAULT_EPS) -> KernelSolution:
    """Solve the block update exactly.

    Returns the zero solution when ``||v||_2 <= lam``; otherwise locates the
    root of :func:`phi` with the adaptive bisection followed by Newton
    refinement and substitutes it back elementwise.
    """
    vnorm = float(np.linalg.norm(p.v))
    if vnorm <= p.lam:
        return KernelSolution(np.zeros(p.dim), 0.0, 0, 0)
    h, bisect_iters = adaptive_bisection(p, eps)
    newton_iters = 0
    if abs(phi(p, h)) > eps:
        h, newton_iters = newton_root(p, h, eps)
    if h <= 0.0:
        # Root indistinguishable from zero at this tolerance.
        return KernelSolution(np.zeros(p.dim), 0.0, bisect_iters, newton_iters)
    x = p.v / (p.sigma + p.lam / h)
    return KernelSolution(x, h, bisect_iters, newton_iters)


def soft_threshold(sigma: float, v: float, lam: float) -> float:
    """Closed-form one-dimensional update (the lasso coordinate step)."""
    av = abs(v)
    if av <= lam:
        return 0.0
    return float(np.sign(v)) * (av - lam) / sigma
