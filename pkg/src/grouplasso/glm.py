"""Proximal quasi-Newton path solver for smooth convex losses.

At each outer iteration the loss is replaced by a diagonal-weighted quadratic
expansion around the current linear prediction; the resulting weighted
Gaussian group-elastic-net subproblem is solved by the block-coordinate
machinery, the prediction is refreshed, and the loop repeats until the
change in prediction, weighted by the change in gradient, is small.  This is
iteratively reweighted least squares with the curvature replaced by a
positive diagonal majorizer; no line search is performed.

The intercept, when requested, is carried as an explicit unpenalized
coordinate (a ones column prepended to the feature matrix) and receives an
exact update in every inner pass.  Offsets shift the linear prediction and
flow through the working response.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .design import GroupedDesign, PathResult, PenaltyConfig
from .errors import IterationLimit, KktLoopLimit, NonFiniteLoss
from .families import GlmFamily, apply_hessian_floor
from .gaussian import (
    GaussianState,
    GramEigenCache,
    SolverOptions,
    fit_single_lambda,
    lambda_path,
)
from .matrix import ConcatenatedMatrix, DenseMatrix, KroneckerIdentityMatrix

logger = logging.getLogger(__name__)


@dataclass
class GlmFitConfig:
    """Configuration for one GLM path fit."""

    family: GlmFamily
    offset: np.ndarray | None = None
    irls_max_iter: int = 100
    irls_eps: float = 1e-8
    intercept: bool = True
    inner: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.offset is not None:
            off = np.asarray(self.offset, dtype=float)
            if off.shape != (self.family.flat_size,):
                raise ValueError(
                    f"offset must have length {self.family.flat_size}"
                )
            self.offset = off
        if self.irls_max_iter < 1 or self.irls_eps <= 0:
            raise ValueError("IRLS iteration cap and tolerance must be positive")
        # The inner solver handles the intercept as an explicit column and
        # tracks the working residual directly.
        self.inner.intercept = False
        self.inner.mode = "naive"


@dataclass
class GlmState:
    """Solver state over the (possibly intercept-extended) coefficient space."""

    design: GroupedDesign
    penalty: PenaltyConfig
    prefix_cols: int
    inner: GaussianState
    eta: np.ndarray
    offset: np.ndarray

    @property
    def beta(self) -> np.ndarray:
        return self.inner.beta

    def predict_linear(self) -> np.ndarray:
        """Recompute ``X beta + offset`` from scratch."""
        pred = np.empty(self.design.n)
        self.design.matrix.mul(self.inner.beta, pred)
        return pred + self.offset


def irls_converged(
    eta_prev: np.ndarray,
    eta_next: np.ndarray,
    grad_prev: np.ndarray,
    grad_next: np.ndarray,
    n_active_coeffs: int,
    eps: float,
) -> bool:
    """Stop when ``|(d eta)' (d grad)| <= eps * n_active_coeffs``."""
    gap = abs(float((eta_next - eta_prev) @ (grad_next - grad_prev)))
    return gap <= eps * max(1, n_active_coeffs)


def glm_state(
    design: GroupedDesign, penalty: PenaltyConfig, config: GlmFitConfig
) -> GlmState:
    """Assemble the solver state, prepending an intercept block if requested."""
    fam = config.family
    if fam.flat_size != design.n:
        raise ValueError(
            f"design has {design.n} rows but the family expects {fam.flat_size}"
        )
    if penalty.penalty_factors.shape != (design.n_groups,):
        raise ValueError("penalty factors must have one entry per group")
    offset = (
        config.offset if config.offset is not None else np.zeros(design.n)
    )

    if config.intercept:
        ic = fam.n_classes if fam.is_multi else 1
        ones = DenseMatrix(np.ones((fam.n_obs, 1)))
        icol = KroneckerIdentityMatrix(ones, ic) if fam.is_multi else ones
        matrix = ConcatenatedMatrix([icol, design.matrix])
        starts = np.concatenate(([0], design.group_starts + ic))
        sizes = np.concatenate(([ic], design.group_sizes))
        penalty = PenaltyConfig(
            alpha=penalty.alpha,
            penalty_factors=np.concatenate(([0.0], penalty.penalty_factors)),
            lambdas=penalty.lambdas,
            n_lambdas=penalty.n_lambdas,
            lambda_min_ratio=penalty.lambda_min_ratio,
        )
        wdesign = GroupedDesign(matrix, starts, sizes, design.weights, design.response)
        prefix = ic
    else:
        wdesign = design
        prefix = 0

    inner = GaussianState.initial(wdesign, "naive")
    inner.screen = sorted(int(g) for g in penalty.unpenalized_groups())
    return GlmState(wdesign, penalty, prefix, inner, offset.copy(), offset)


def _penalized_loss(state: GlmState, config: GlmFitConfig, lam: float) -> float:
    value = config.family.loss(state.eta)
    pen = state.penalty
    for g in range(state.design.n_groups):
        bg = state.inner.beta[state.design.group_slice(g)]
        norm = float(np.linalg.norm(bg))
        value += (
            lam
            * float(pen.penalty_factors[g])
            * (pen.alpha * norm + 0.5 * (1.0 - pen.alpha) * norm * norm)
        )
    return value


def irls_step(
    state: GlmState, config: GlmFitConfig, lam: float
) -> tuple[bool, int]:
    """One reweighted least-squares step at fixed ``lam``.

    Computes the floored working weights and working response, solves the
    weighted Gaussian subproblem over the current screen set (weights
    renormalized to sum one, ``lam`` rescaled to compensate), and refreshes
    the linear prediction.  Returns ``(converged, inner_cycles)``.
    """
    fam = config.family
    loss_now = fam.loss(state.eta)
    if not np.isfinite(loss_now):
        raise NonFiniteLoss(f"loss is {loss_now} at the current prediction")
    grad = fam.gradient(state.eta)
    wk = apply_hessian_floor(fam.hessian_majorizer(state.eta))
    z = state.eta - state.offset - grad / wk

    total = float(np.sum(wk))
    inner_design = GroupedDesign(
        state.design.matrix,
        state.design.group_starts,
        state.design.group_sizes,
        wk / total,
        z,
    )
    lam_inner = lam / total
    # The working residual is z - X beta = -grad / wk at the current beta.
    state.inner.resid = -grad / wk
    cache = GramEigenCache(inner_design)
    cycles = fit_single_lambda(
        state.inner, inner_design, state.penalty, cache, lam_inner, config.inner
    )

    eta_next = state.predict_linear()
    grad_next = fam.gradient(eta_next)
    n_active = int(
        sum(int(state.design.group_sizes[g]) for g in state.inner.active)
    )
    done = irls_converged(
        state.eta, eta_next, grad, grad_next, n_active, config.irls_eps
    )
    state.eta = eta_next
    return done, cycles


def _irls_solve(
    state: GlmState, config: GlmFitConfig, lam: float
) -> tuple[int, int, int]:
    """IRLS to convergence at one ``lam``: (steps, inner cycles, loss increases)."""
    cycles = 0
    increases = 0
    loss_prev = _penalized_loss(state, config, lam)
    for k in range(config.irls_max_iter):
        done, c = irls_step(state, config, lam)
        cycles += c
        loss_now = _penalized_loss(state, config, lam)
        if loss_now > loss_prev * (1.0 + 1e-12) + 1e-15:
            increases += 1
            logger.warning(
                "penalized loss increased at lambda=%g (step %d): %.17g -> %.17g",
                lam, k + 1, loss_prev, loss_now,
            )
        loss_prev = loss_now
        if done:
            return k + 1, cycles, increases
    raise IterationLimit(
        f"IRLS did not converge in {config.irls_max_iter} steps at lambda={lam:g}"
    )


def _glm_scores(state: GlmState, config: GlmFitConfig, outside: list[int]) -> np.ndarray:
    """Unscaled scores ``||X_g' grad_loss||_2`` for the given groups."""
    grad = config.family.gradient(state.eta)
    ones = np.ones(state.design.n)
    d = state.design
    return np.array(
        [
            float(
                np.linalg.norm(
                    d.matrix.bmul(int(d.group_starts[g]), int(d.group_sizes[g]), ones, grad)
                )
            )
            for g in outside
        ]
    )


def _glm_kkt_check(
    state: GlmState, config: GlmFitConfig, lam: float, slack: float
) -> tuple[list[int], float]:
    in_screen = set(state.inner.screen)
    outside = [g for g in range(state.design.n_groups) if g not in in_screen]
    if not outside:
        return [], 0.0
    pen = state.penalty
    scores = _glm_scores(state, config, outside)
    scaled = scores / (pen.alpha * pen.penalty_factors[outside])
    violators = [g for g, sc in zip(outside, scaled) if sc > lam * (1.0 + slack)]
    return violators, float(scaled.max())


def _glm_strong_rule(
    state: GlmState, config: GlmFitConfig, lam_prev: float, lam: float
) -> None:
    in_screen = set(state.inner.screen)
    outside = [g for g in range(state.design.n_groups) if g not in in_screen]
    if not outside:
        return
    pen = state.penalty
    scores = _glm_scores(state, config, outside)
    denom = pen.alpha * pen.penalty_factors[outside]
    threshold = 2.0 * lam - lam_prev
    admit = [g for g, sc, d in zip(outside, scores, denom) if sc / d >= threshold]
    if admit:
        state.inner.add_to_screen(admit)


def _glm_lambda_max_state(
    state: GlmState, config: GlmFitConfig
) -> float:
    """Fit the unpenalized groups (plus intercept) and score the rest."""
    pen = state.penalty
    unpen = set(int(g) for g in pen.unpenalized_groups())
    if len(unpen) == state.design.n_groups:
        return 1.0
    if unpen:
        # Penalty factors vanish on every fitted group, so lam is arbitrary.
        _irls_solve(state, config, 1.0)
    outside = [g for g in range(state.design.n_groups) if g not in unpen]
    scores = _glm_scores(state, config, outside)
    scaled = scores / (pen.alpha * pen.penalty_factors[outside])
    lmax = float(scaled.max())
    return lmax if lmax > 0 else 1.0


def glm_lambda_max(
    design: GroupedDesign, penalty: PenaltyConfig, config: GlmFitConfig
) -> float:
    """Path entry value: smallest ``lam`` zeroing all penalized groups."""
    return _glm_lambda_max_state(glm_state(design, penalty, config), config)


def fit_glm_path(
    design: GroupedDesign, penalty: PenaltyConfig, config: GlmFitConfig
) -> PathResult:
    """Fit the regularization path for an arbitrary smooth convex loss.

    Mirrors the Gaussian path loop with scores computed from the loss
    gradient: strong-rule screening, IRLS to convergence, then a KKT check
    whose violators are admitted before refitting.  Solutions are
    warm-started across lambdas.  Reported coefficients are in feature
    space; the intercept (one value per response) is reported separately.
    """
    state = glm_state(design, penalty, config)
    lmax = _glm_lambda_max_state(state, config)
    pen = state.penalty
    if pen.lambdas is not None:
        lam_seq = pen.lambdas
    else:
        lam_seq = lambda_path(
            lmax, pen.n_lambdas, pen.resolve_ratio(design.n, design.p)
        )

    result = PathResult(shape=(design.p,))
    lam_prev = lmax
    for i, lam in enumerate(lam_seq):
        lam = float(lam)
        if not (i == 0 and lam >= lmax):
            _glm_strong_rule(state, config, lam_prev, lam)
        irls_total = 0
        cycles_total = 0
        increases_total = 0
        for _ in range(config.inner.kkt_refit_limit):
            steps, cycles, increases = _irls_solve(state, config, lam)
            irls_total += steps
            cycles_total += cycles
            increases_total += increases
            violators, kkt_max = _glm_kkt_check(state, config, lam, config.inner.kkt_slack)
            if not violators:
                break
            state.inner.add_to_screen(violators)
        else:
            raise KktLoopLimit(
                f"screen-refit loop exceeded {config.inner.kkt_refit_limit} rounds "
                f"at lambda={lam:g}"
            )
        if state.prefix_cols:
            intercept = (
                float(state.inner.beta[0])
                if state.prefix_cols == 1
                else state.inner.beta[: state.prefix_cols].copy()
            )
            coefs = state.inner.beta[state.prefix_cols :]
        else:
            intercept = 0.0
            coefs = state.inner.beta
        result.append(
            lam,
            coefs,
            intercept,
            {
                "cycles": cycles_total,
                "irls_iters": irls_total,
                "irls_loss_increases": increases_total,
                "kkt_max_residual": kkt_max,
                "screen_size": len(state.inner.screen),
                "active_size": len(state.inner.active),
            },
        )
        lam_prev = lam
    return result
