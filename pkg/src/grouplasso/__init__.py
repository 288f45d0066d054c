"""Group elastic-net solvers: pathwise block-coordinate descent with an
exact Newton-based block update, a proximal quasi-Newton extension to
arbitrary smooth convex losses, and a Kronecker-identity reduction for
multi-response problems."""

from .design import (
    GroupedDesign,
    PathResult,
    PenaltyConfig,
    SparseCoefficients,
    uniform_groups,
)
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    IterationLimit,
    KktLoopLimit,
    MemoryBudgetExceeded,
    NonFiniteLoss,
    ParseError,
    RaggedRows,
    SolverError,
)
from .families import (
    BinomialLogitFamily,
    GaussianFamily,
    GlmFamily,
    MultigaussianFamily,
    MultinomialFamily,
    PoissonLogFamily,
    apply_hessian_floor,
    make_family,
)
from .gaussian import (
    GaussianState,
    GramEigenCache,
    SolverOptions,
    bcd_group_update,
    cycle,
    fit_path,
    fit_single_lambda,
    kkt_check,
    lambda_max,
    lambda_path,
    penalized_objective,
    strong_rule_screen,
)
from .glm import GlmFitConfig, GlmState, fit_glm_path, glm_lambda_max, glm_state, irls_converged, irls_step
from .io import StandardizeRecord, load_csv, standardize
from .kernel import (
    DiagQuadProblem,
    KernelSolution,
    adaptive_bisection,
    lower_bound,
    newton_root,
    phi,
    phi_prime,
    soft_threshold,
    solve_bcd,
    upper_bound,
)
from .linalg import gram_eigen
from .matrix import (
    ColumnCenteredMatrix,
    ConcatenatedMatrix,
    DenseMatrix,
    FeatureMatrix,
    KroneckerIdentityMatrix,
    SparseColumnMatrix,
)
from .multi import (
    MultiPenaltySpec,
    build_multi_design,
    fit_multi_path,
    flatten_coeffs,
    unflatten_coeffs,
)
from .simulate import simulate_group, simulate_lasso

__version__ = "0.1.0"
