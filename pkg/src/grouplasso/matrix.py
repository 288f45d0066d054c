"""Feature-matrix abstraction used by the solvers.

The block-coordinate solver only ever touches the feature matrix through a
handful of inner-product style queries on column blocks.  Anything
implementing :class:`FeatureMatrix` can therefore be fed to the solvers:
plain dense storage, a column-wise concatenation of other matrices, the
Kronecker product of a matrix with an identity (used for multi-response
fits), a compressed-sparse-column matrix, or an implicitly column-centered
view of another matrix.

All implementations are immutable after construction and support concurrent
read-only queries.
"""

from __future__ import annotations

import abc
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DimensionMismatch

THREADS_ENV_VAR = "GROUPLASSO_THREADS"


def screening_threads() -> int:
    """Thread cap for fan-out over groups, from ``GROUPLASSO_THREADS``."""
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class FeatureMatrix(abc.ABC):
    """A fixed real n-by-p matrix exposed through column-block queries.

    Every operation must agree with dense reference arithmetic on the same
    underlying matrix.
    """

    @property
    @abc.abstractmethod
    def rows(self) -> int: ...

    @property
    @abc.abstractmethod
    def cols(self) -> int: ...

    @abc.abstractmethod
    def bmul(self, start: int, size: int, weights: np.ndarray, vec: np.ndarray) -> np.ndarray:
        """Return ``X_block' diag(weights) vec`` for columns [start, start+size)."""

    @abc.abstractmethod
    def btmul(self, start: int, size: int, coefs: np.ndarray, out: np.ndarray) -> None:
        """Accumulate ``out += X_block coefs``."""

    @abc.abstractmethod
    def gram_block(self, start: int, size: int, weights: np.ndarray) -> np.ndarray:
        """Return the symmetric PSD block ``X_block' diag(weights) X_block``."""

    def mul(self, beta: np.ndarray, out: np.ndarray) -> None:
        """Compute ``out = X beta`` by accumulating over nonzero runs of beta."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.cols,):
            raise DimensionMismatch(f"beta must have length {self.cols}")
        if out.shape != (self.rows,):
            raise DimensionMismatch(f"out must have length {self.rows}")
        out[:] = 0.0
        for start, stop in _nonzero_runs(beta):
            self.btmul(start, stop - start, beta[start:stop], out)

    def score_all_groups(
        self,
        group_starts: np.ndarray,
        group_sizes: np.ndarray,
        weights: np.ndarray,
        vec: np.ndarray,
        n_threads: int | None = None,
    ) -> np.ndarray:
        """Per-group norms ``||X_g' diag(weights) vec||_2`` for every group."""
        n_groups = len(group_starts)
        scores = np.zeros(n_groups)

        def one(g: int) -> None:
            scores[g] = np.linalg.norm(
                self.bmul(int(group_starts[g]), int(group_sizes[g]), weights, vec)
            )

        threads = screening_threads() if n_threads is None else max(1, n_threads)
        if threads > 1 and n_groups > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(one, range(n_groups)))
        else:
            for g in range(n_groups):
                one(g)
        return scores

    def _check_block(self, start: int, size: int) -> None:
        if size < 0 or start < 0 or start + size > self.cols:
            raise DimensionMismatch(
                f"column block [{start}, {start + size}) outside [0, {self.cols})"
            )

    def _check_rows(self, *vecs: np.ndarray) -> None:
        for v in vecs:
            if v.shape != (self.rows,):
                raise DimensionMismatch(f"expected row-space vector of length {self.rows}")


def _nonzero_runs(beta: np.ndarray):
    """Yield (start, stop) covering the maximal runs of nonzero entries."""
    nz = np.flatnonzero(beta)
    if nz.size == 0:
        return
    breaks = np.flatnonzero(np.diff(nz) > 1)
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks, [nz.size - 1]))
    for a, b in zip(starts, stops):
        yield int(nz[a]), int(nz[b]) + 1


class DenseMatrix(FeatureMatrix):
    """Dense row-major storage."""

    def __init__(self, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch("expected a 2-D array")
        self._x = values

    @property
    def rows(self) -> int:
        return self._x.shape[0]

    @property
    def cols(self) -> int:
        return self._x.shape[1]

    @property
    def values(self) -> np.ndarray:
        return self._x

    def bmul(self, start, size, weights, vec):
        self._check_block(start, size)
        self._check_rows(weights, vec)
        return self._x[:, start : start + size].T @ (weights * vec)

    def btmul(self, start, size, coefs, out):
        self._check_block(start, size)
        self._check_rows(out)
        if coefs.shape != (size,):
            raise DimensionMismatch(f"coefs must have length {size}")
        out += self._x[:, start : start + size] @ coefs

    def gram_block(self, start, size, weights):
        self._check_block(start, size)
        self._check_rows(weights)
        block = self._x[:, start : start + size]
        g = block.T @ (weights[:, None] * block)
        return 0.5 * (g + g.T)

    def mul(self, beta, out):
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.cols,):
            raise DimensionMismatch(f"beta must have length {self.cols}")
        if out.shape != (self.rows,):
            raise DimensionMismatch(f"out must have length {self.rows}")
        out[:] = self._x @ beta


class SparseColumnMatrix(FeatureMatrix):
    """Compressed-sparse-column storage backed by scipy."""

    def __init__(self, values):
        from scipy import sparse

        self._x = sparse.csc_matrix(values, dtype=float)

    @property
    def rows(self) -> int:
        return self._x.shape[0]

    @property
    def cols(self) -> int:
        return self._x.shape[1]

    def bmul(self, start, size, weights, vec):
        self._check_block(start, size)
        self._check_rows(weights, vec)
        return self._x[:, start : start + size].T @ (weights * vec)

    def btmul(self, start, size, coefs, out):
        self._check_block(start, size)
        self._check_rows(out)
        if coefs.shape != (size,):
            raise DimensionMismatch(f"coefs must have length {size}")
        out += self._x[:, start : start + size] @ coefs

    def gram_block(self, start, size, weights):
        self._check_block(start, size)
        self._check_rows(weights)
        block = self._x[:, start : start + size]
        g = (block.multiply(weights[:, None]).T @ block).toarray()
        return 0.5 * (g + g.T)


class ConcatenatedMatrix(FeatureMatrix):
    """Column-wise concatenation of other feature matrices.

    Queries are delegated to the parts; a query spanning part boundaries is
    split at those boundaries.
    """

    def __init__(self, parts: list[FeatureMatrix]):
        if not parts:
            raise DimensionMismatch("need at least one part")
        n = parts[0].rows
        if any(p.rows != n for p in parts):
            raise DimensionMismatch("all parts must have the same number of rows")
        self._parts = list(parts)
        self._offsets = np.concatenate(([0], np.cumsum([p.cols for p in parts])))

    @property
    def rows(self) -> int:
        return self._parts[0].rows

    @property
    def cols(self) -> int:
        return int(self._offsets[-1])

    def _segments(self, start: int, size: int):
        """Split a column range into (part, local_start, seg_size, out_offset)."""
        end = start + size
        k = int(np.searchsorted(self._offsets, start, side="right")) - 1
        pos = start
        while pos < end:
            part_end = int(self._offsets[k + 1])
            seg = min(end, part_end) - pos
            yield self._parts[k], pos - int(self._offsets[k]), seg, pos - start
            pos += seg
            k += 1

    def bmul(self, start, size, weights, vec):
        self._check_block(start, size)
        out = np.empty(size)
        for part, lstart, seg, off in self._segments(start, size):
            out[off : off + seg] = part.bmul(lstart, seg, weights, vec)
        return out

    def btmul(self, start, size, coefs, out):
        self._check_block(start, size)
        if coefs.shape != (size,):
            raise DimensionMismatch(f"coefs must have length {size}")
        for part, lstart, seg, off in self._segments(start, size):
            part.btmul(lstart, seg, coefs[off : off + seg], out)

    def gram_block(self, start, size, weights):
        self._check_block(start, size)
        segments = list(self._segments(start, size))
        if len(segments) == 1:
            part, lstart, seg, _ = segments[0]
            return part.gram_block(lstart, seg, weights)
        # Cross-part block: materialize the columns once and form the Gram
        # product densely (cross terms cannot be delegated).
        cols = np.zeros((self.rows, size))
        unit = np.ones(1)
        for j in range(size):
            self.btmul(start + j, 1, unit, cols[:, j])
        g = cols.T @ (weights[:, None] * cols)
        return 0.5 * (g + g.T)


class KroneckerIdentityMatrix(FeatureMatrix):
    """The matrix ``base kron I_c`` with class-interleaved rows and columns.

    Row ``i*c + j`` corresponds to observation ``i`` and class ``j``; column
    ``g*c + j`` to base column ``g`` and class ``j``.  With this layout the
    ``c`` coefficients of one base column form one contiguous block.
    """

    def __init__(self, base: FeatureMatrix, classes: int):
        if classes < 1:
            raise DimensionMismatch("classes must be at least 1")
        self._base = base
        self._c = int(classes)
        self._ones = np.ones(base.rows)

    @property
    def rows(self) -> int:
        return self._base.rows * self._c

    @property
    def cols(self) -> int:
        return self._base.cols * self._c

    @property
    def classes(self) -> int:
        return self._c

    @property
    def base(self) -> FeatureMatrix:
        return self._base

    def _cover(self, start: int, size: int):
        """Smallest base-column range whose expansion covers the block."""
        f0 = start // self._c
        f1 = (start + size - 1) // self._c
        return f0, f1 - f0 + 1, start - f0 * self._c

    def bmul(self, start, size, weights, vec):
        self._check_block(start, size)
        self._check_rows(weights, vec)
        c = self._c
        f0, fsize, offset = self._cover(start, size)
        m = (weights * vec).reshape(self._base.rows, c)
        full = np.empty((fsize, c))
        for j in range(c):
            full[:, j] = self._base.bmul(f0, fsize, self._ones, np.ascontiguousarray(m[:, j]))
        return full.reshape(-1)[offset : offset + size]

    def btmul(self, start, size, coefs, out):
        self._check_block(start, size)
        self._check_rows(out)
        if coefs.shape != (size,):
            raise DimensionMismatch(f"coefs must have length {size}")
        c = self._c
        f0, fsize, offset = self._cover(start, size)
        u_full = np.zeros(fsize * c)
        u_full[offset : offset + size] = coefs
        u = u_full.reshape(fsize, c)
        tmp = np.empty(self._base.rows)
        for j in range(c):
            if not np.any(u[:, j]):
                continue
            tmp[:] = 0.0
            self._base.btmul(f0, fsize, np.ascontiguousarray(u[:, j]), tmp)
            out[j::c] += tmp

    def gram_block(self, start, size, weights):
        self._check_block(start, size)
        self._check_rows(weights)
        c = self._c
        f0, fsize, offset = self._cover(start, size)
        w = weights.reshape(self._base.rows, c)
        full = np.zeros((fsize * c, fsize * c))
        for j in range(c):
            gj = self._base.gram_block(f0, fsize, np.ascontiguousarray(w[:, j]))
            full[j::c, j::c] = gj
        return full[offset : offset + size, offset : offset + size]


class ColumnCenteredMatrix(FeatureMatrix):
    """Implicitly column-centered view ``X - 1 centers'`` of another matrix."""

    def __init__(self, base: FeatureMatrix, centers: np.ndarray):
        centers = np.asarray(centers, dtype=float)
        if centers.shape != (base.cols,):
            raise DimensionMismatch(f"centers must have length {base.cols}")
        self._base = base
        self._centers = centers
        self._ones = np.ones(base.rows)

    @property
    def rows(self) -> int:
        return self._base.rows

    @property
    def cols(self) -> int:
        return self._base.cols

    def bmul(self, start, size, weights, vec):
        self._check_block(start, size)
        raw = self._base.bmul(start, size, weights, vec)
        total = float(weights @ vec)
        return raw - self._centers[start : start + size] * total

    def btmul(self, start, size, coefs, out):
        self._check_block(start, size)
        self._base.btmul(start, size, coefs, out)
        out -= float(self._centers[start : start + size] @ coefs)

    def gram_block(self, start, size, weights):
        self._check_block(start, size)
        g = self._base.gram_block(start, size, weights)
        m = self._base.bmul(start, size, weights, self._ones)
        cb = self._centers[start : start + size]
        sw = float(np.sum(weights))
        g = g - np.outer(m, cb) - np.outer(cb, m) + sw * np.outer(cb, cb)
        return 0.5 * (g + g.T)
