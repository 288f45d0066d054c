"""Symmetric eigendecomposition of small PSD blocks via cyclic Jacobi."""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure

SWEEP_CAP = 30
OFF_DIAG_TOL = 1e-13
SYMMETRY_TOL = 1e-10


def gram_eigen(a: np.ndarray, sweep_cap: int = SWEEP_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition ``a = Q diag(evals) Q'`` of a symmetric PSD block.

    Uses cyclic Jacobi rotations, sweeping until the off-diagonal Frobenius
    mass falls below ``1e-13 * ||a||_F``.  Eigenvalues are returned sorted in
    descending order with negative roundoff clamped to zero.

    Parameters
    ----------
    a : ndarray of shape (d, d)
        Symmetric (within 1e-10) positive semi-definite matrix.

    Returns
    -------
    q : ndarray of shape (d, d)
        Orthogonal eigenvector matrix, columns matching ``evals``.
    evals : ndarray of shape (d,)
        Nonnegative eigenvalues, descending.

    Raises
    ------
    ConvergenceFailure
        If the sweep cap is exceeded.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    d = a.shape[0]
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.T).max(initial=0.0)) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    if d == 1:
        return np.ones((1, 1)), np.array([max(float(a[0, 0]), 0.0)])

    work = 0.5 * (a + a.T)
    q = np.eye(d)
    fro = float(np.linalg.norm(work))
    threshold = OFF_DIAG_TOL * fro
    converged = fro == 0.0
    for _ in range(sweep_cap):
        if converged:
            break
        off = float(np.sqrt(max(np.sum(work * work) - np.sum(np.diag(work) ** 2), 0.0)))
        if off <= threshold:
            converged = True
            break
        for i in range(d - 1):
            for j in range(i + 1, d):
                aij = work[i, j]
                if aij == 0.0:
                    continue
                tau = (work[j, j] - work[i, i]) / (2.0 * aij)
                t = np.copysign(1.0, tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                row_i = work[i].copy()
                row_j = work[j].copy()
                work[i] = c * row_i - s * row_j
                work[j] = s * row_i + c * row_j
                col_i = work[:, i].copy()
                col_j = work[:, j].copy()
                work[:, i] = c * col_i - s * col_j
                work[:, j] = s * col_i + c * col_j
                qcol_i = q[:, i].copy()
                q[:, i] = c * qcol_i - s * q[:, j]
                q[:, j] = s * qcol_i + c * q[:, j]
    else:
        off = float(np.sqrt(max(np.sum(work * work) - np.sum(np.diag(work) ** 2), 0.0)))
        if off > threshold:
            raise ConvergenceFailure(
                f"Jacobi sweeps exceeded {sweep_cap} with off-diagonal mass {off:g}"
            )

    evals = np.maximum(np.diag(work).copy(), 0.0)
    order = np.argsort(-evals, kind="stable")
    return q[:, order], evals[order]
