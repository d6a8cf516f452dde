"""Dense linear algebra core: eigendecomposition, stable least squares,
SPD solves, and a mergeable scatter (Gram) accumulator.

The scatter accumulator stores the upper triangle of ``X.T @ X`` in packed
form, so the unpacked Gram matrix is symmetric by construction. Summaries
built independently (one per data block, possibly on separate workers) merge
by plain field addition and reproduce the whole-data summary.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .validation import as_matrix, as_vector, check_symmetric, rank_tolerance

__all__ = [
    "EigenDecomposition",
    "ScatterSummary",
    "SingularMatrixError",
    "frobenius_sq",
    "qr_solve",
    "scatter_from_matrix",
    "spd_solve",
    "sym_eigen",
]


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix is singular (or numerically so) for the
    requested factorization."""


class EigenDecomposition(NamedTuple):
    """Symmetric eigendecomposition with eigenvalues sorted descending.

    ``vectors`` holds one eigenvector per column, ordered to match
    ``values``; each column is sign-fixed so its largest-magnitude
    component is positive.
    """

    values: np.ndarray
    vectors: np.ndarray


def sym_eigen(m, rel_tol=1e-12):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : (d, d) array_like
        Symmetric within ``rel_tol`` relative asymmetry.

    Returns
    -------
    EigenDecomposition
        Eigenvalues descending; orthonormal eigenvectors in matching
        column order with a deterministic sign convention.

    Raises
    ------
    ValueError
        Non-square or non-symmetric input.
    numpy.linalg.LinAlgError
        The iterative eigensolver failed to converge (pathological input).
    """
    sym = check_symmetric(m, rel_tol=rel_tol, name="m")
    values, vectors = np.linalg.eigh(sym)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]
    # Sign convention: largest-magnitude component of each column positive.
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return EigenDecomposition(values=values, vectors=vectors * signs)


def qr_solve(x, y):
    """Least squares via Householder QR, without forming ``x.T @ x``.

    Solves ``argmin_b ||x b - y||_2`` for a tall, numerically
    full-column-rank ``x``.

    Raises
    ------
    SingularMatrixError
        Some diagonal entry of R falls below ``max(n, d) * eps *
        max|R_jj|``, i.e. ``x`` is rank deficient at working precision.
    """
    x = as_matrix(x, name="x")
    n, d = x.shape
    if d < 1:
        raise ValueError("x must have at least one column")
    if n < d:
        raise ValueError(f"x must have at least as many rows as columns, got {x.shape}")
    y = as_vector(y, length=n)
    q, r = sla.qr(x, mode="economic")
    diag = np.abs(np.diag(r))
    # max(n, d) factor: the R-diagonal rounding noise of an exactly
    # rank-deficient tall matrix grows with the row count, so a d-only
    # tolerance misses duplicate columns at modest n.
    tol = rank_tolerance(max(n, d), diag.max())
    if diag.min() <= tol:
        raise SingularMatrixError(
            f"rank-deficient design: min |R_jj| = {diag.min():.3e} <= tolerance {tol:.3e}"
        )
    return sla.solve_triangular(r, q.T @ y)


def spd_solve(gram, rhs):
    """Solve ``gram @ z = rhs`` for symmetric positive definite ``gram``
    via Cholesky.

    ``rhs`` may be a vector or a matrix of stacked right-hand sides.

    Raises
    ------
    SingularMatrixError
        A Cholesky pivot is non-positive or falls below the rank
        tolerance ``d * eps * max(diag(gram))``, i.e. the matrix is
        singular at working precision.
    """
    gram = check_symmetric(gram, name="gram")
    d = gram.shape[0]
    if d < 1:
        raise ValueError("gram must be at least 1 x 1")
    rhs_arr = np.asarray(rhs, dtype=np.float64)
    vector_rhs = rhs_arr.ndim == 1
    if rhs_arr.shape[0] != d:
        raise ValueError(f"rhs has leading dimension {rhs_arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(rhs_arr)):
        raise ValueError("rhs contains NaN or Inf entries")
    try:
        lower = sla.cholesky(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"gram matrix is not positive definite: {exc}") from exc
    pivots = np.diag(lower) ** 2
    tol = rank_tolerance(d, gram.diagonal().max())
    if pivots.min() <= tol:
        raise SingularMatrixError(
            f"gram matrix is singular at working precision: "
            f"min pivot {pivots.min():.3e} <= tolerance {tol:.3e}"
        )
    z = sla.cho_solve((lower, True), rhs_arr)
    return z if not vector_rhs else z.reshape(-1)


def frobenius_sq(m):
    """Sum of squared entries (squared Frobenius norm)."""
    m = np.asarray(m, dtype=np.float64)
    return float(np.sum(m * m))


def _packed_size(d):
    return d * (d + 1) // 2


class ScatterSummary:
    """Mergeable sufficient statistics of a data block.

    Tracks the row count, the Gram matrix ``X.T @ X`` (packed upper
    triangle), per-column sums, and optionally ``X.T @ y`` and ``y.T @ y``
    when a response is accumulated. All update operations are pure: they
    return new summaries and never mutate their inputs, so summaries can be
    built concurrently per block and merged afterwards.
    """

    __slots__ = ("d", "n", "_packed", "_col_sums", "_xty", "_yty", "_track_response")

    def __init__(self, d, track_response=False):
        if d < 1:
            raise ValueError(f"d must be positive, got {d}")
        self.d = int(d)
        self.n = 0
        self._packed = np.zeros(_packed_size(self.d))
        self._col_sums = np.zeros(self.d)
        self._track_response = bool(track_response)
        self._xty = np.zeros(self.d) if track_response else None
        self._yty = 0.0 if track_response else None

    @property
    def track_response(self):
        return self._track_response

    @property
    def gram(self):
        """Unpacked Gram matrix; exactly symmetric by construction."""
        g = np.zeros((self.d, self.d))
        iu = np.triu_indices(self.d)
        g[iu] = self._packed
        g.T[iu] = self._packed
        return g

    @property
    def col_sums(self):
        return self._col_sums.copy()

    @property
    def xty(self):
        return None if self._xty is None else self._xty.copy()

    @property
    def yty(self):
        return self._yty

    def _clone(self):
        out = ScatterSummary.__new__(ScatterSummary)
        out.d = self.d
        out.n = self.n
        out._packed = self._packed.copy()
        out._col_sums = self._col_sums.copy()
        out._track_response = self._track_response
        out._xty = None if self._xty is None else self._xty.copy()
        out._yty = self._yty
        return out

    def accumulate(self, chunk, response=None):
        """Return a new summary with ``chunk`` (and optional response) added.

        ``chunk`` is a (rows, d) block; ``response`` must be supplied iff the
        summary tracks a response.
        """
        chunk = as_matrix(chunk, name="chunk")
        if chunk.shape[1] != self.d:
            raise ValueError(f"chunk has {chunk.shape[1]} columns, expected {self.d}")
        if self._track_response:
            if response is None:
                raise ValueError("summary tracks a response but none was given")
            response = as_vector(response, length=chunk.shape[0], name="response")
        elif response is not None:
            raise ValueError("summary does not track a response; got one")

        out = self._clone()
        out.n = self.n + chunk.shape[0]
        g = chunk.T @ chunk
        out._packed = self._packed + g[np.triu_indices(self.d)]
        out._col_sums = self._col_sums + chunk.sum(axis=0)
        if self._track_response:
            out._xty = self._xty + chunk.T @ response
            out._yty = self._yty + float(response @ response)
        return out

    def _check_compatible(self, other):
        if not isinstance(other, ScatterSummary):
            raise TypeError(f"expected ScatterSummary, got {type(other).__name__}")
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        if other._track_response != self._track_response:
            raise ValueError("cannot combine summaries with and without a response")

    def merge(self, other):
        """Return the elementwise sum of two summaries (commutative)."""
        self._check_compatible(other)
        out = self._clone()
        out.n = self.n + other.n
        out._packed = self._packed + other._packed
        out._col_sums = self._col_sums + other._col_sums
        if self._track_response:
            out._xty = self._xty + other._xty
            out._yty = self._yty + other._yty
        return out

    def subtract(self, other):
        """Return the summary of the complement rows by field subtraction.

        ``other`` must have been accumulated from a subset of this
        summary's rows; no data is re-read.
        """
        self._check_compatible(other)
        if other.n > self.n:
            raise ValueError(f"cannot subtract {other.n} rows from {self.n}")
        out = self._clone()
        out.n = self.n - other.n
        out._packed = self._packed - other._packed
        out._col_sums = self._col_sums - other._col_sums
        if self._track_response:
            out._xty = self._xty - other._xty
            out._yty = self._yty - other._yty
        return out

    def centered_gram(self):
        """Gram matrix of column-centered data: ``G - n * mean @ mean.T``.

        Off by default everywhere; exposed for callers that want covariance
        rather than raw second-moment structure.
        """
        if self.n == 0:
            return self.gram
        mean = self._col_sums / self.n
        return self.gram - self.n * np.outer(mean, mean)

    def __repr__(self):
        resp = ", response" if self._track_response else ""
        return f"ScatterSummary(d={self.d}, n={self.n}{resp})"


def scatter_from_matrix(x, response=None):
    """Build a summary of a whole matrix (and optional response) in one step."""
    x = as_matrix(x, name="x")
    return ScatterSummary(x.shape[1], track_response=response is not None).accumulate(
        x, response
    )
