"""Scatter-matrix concordance between a subset of rows and a reference set.

The statistic compares the variance-covariance structure of two matrices
with a common column space. Two computation routes are provided:

* ``concordance_direct`` forms the pseudo-inverse product ``A @ pinv(B)``
  explicitly and takes its squared Frobenius norm.
* ``concordance_trace`` works purely from mergeable scatter summaries,
  projecting both Gram matrices onto the eigenbasis of the reference and
  averaging the d per-coordinate variance ratios.

Both routes agree to floating-point accuracy on full-rank inputs; the trace
route additionally exposes the d per-term ratio samples.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from .linalg import SingularMatrixError, frobenius_sq, sym_eigen
from .validation import as_matrix, rank_tolerance

__all__ = [
    "ConcordanceResult",
    "concordance_direct",
    "concordance_subset",
    "concordance_trace",
]

OVERLAPPING = "overlapping"
NONOVERLAPPING = "nonoverlapping"
_MODES = (OVERLAPPING, NONOVERLAPPING)


@dataclass(frozen=True)
class ConcordanceResult:
    """Concordance value with its provenance.

    ``terms`` holds the d per-coordinate ratio samples (trace method only;
    the direct Frobenius route mixes coordinates and has no per-term
    decomposition). ``warnings`` collects data-quality notes such as
    undersized subsets.
    """

    value: float
    method: str
    d: int
    n_subset: int
    n_reference: int
    terms: Optional[np.ndarray] = None
    mode: Optional[str] = None
    warnings: Tuple[str, ...] = ()

    def with_mode(self, mode, extra_warnings=()):
        return ConcordanceResult(
            value=self.value,
            method=self.method,
            d=self.d,
            n_subset=self.n_subset,
            n_reference=self.n_reference,
            terms=self.terms,
            mode=mode,
            warnings=self.warnings + tuple(extra_warnings),
        )


def concordance_direct(a, b, normalization="unit-self"):
    """Concordance of ``a`` against reference ``b`` via the pseudo-inverse.

    Computes ``c * ||a @ pinv(b)||_F^2`` with ``pinv(b) =
    inv(b.T @ b) @ b.T``. The default normalization ``c = rows(b) /
    (d * rows(a))`` makes the self-concordance of any full-rank matrix
    exactly one; ``normalization="swapped"`` uses the transposed row ratio
    ``rows(a) / (d * rows(b))``, retained for comparison with the other
    convention in circulation.

    Raises
    ------
    SingularMatrixError
        ``b.T @ b`` is singular at working precision.
    """
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column mismatch: a has {a.shape[1]}, b has {b.shape[1]}")
    d = a.shape[1]
    if b.shape[0] < d:
        raise ValueError(f"reference must have at least d={d} rows, got {b.shape[0]}")
    if a.shape[0] == 0:
        raise ValueError("subset matrix has no rows")
    if normalization not in ("unit-self", "swapped"):
        raise ValueError(f"unknown normalization {normalization!r}")

    gram_b = b.T @ b
    try:
        lower = sla.cholesky(gram_b, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"reference scatter is singular: {exc}") from exc
    pivots = np.diag(lower) ** 2
    if pivots.min() <= rank_tolerance(d, gram_b.diagonal().max()):
        raise SingularMatrixError("reference scatter is singular at working precision")
    pinv_b = sla.cho_solve((lower, True), b.T)

    # Accumulate ||a @ pinv_b||_F^2 in row blocks to bound peak memory.
    m = pinv_b.shape[1]
    block = max(1, min(a.shape[0], (1 << 24) // max(m, 1)))
    frob = 0.0
    for start in range(0, a.shape[0], block):
        frob += frobenius_sq(a[start : start + block] @ pinv_b)

    if normalization == "unit-self":
        value = b.shape[0] / (d * a.shape[0]) * frob
    else:
        value = a.shape[0] / (d * b.shape[0]) * frob
    return ConcordanceResult(
        value=value,
        method="direct",
        d=d,
        n_subset=a.shape[0],
        n_reference=b.shape[0],
    )


def concordance_trace(scatter_a, scatter_b, center=False):
    """Concordance from scatter summaries via the eigenvalue-ratio form.

    Both Gram matrices are projected onto the eigenbasis of the reference
    scatter normalized by its row count; the statistic is the mean of the d
    per-coordinate ratios ``(diag_a[j] / n_a) / (diag_b[j] / n_b)``. Because
    the basis diagonalizes the reference exactly, this equals
    ``(n_b / (d * n_a)) * trace(gram_a @ inv(gram_b))``.

    Parameters
    ----------
    scatter_a, scatter_b : ScatterSummary
        Subset and reference summaries with matching width.
    center : bool
        Use column-centered Gram matrices (covariance structure) instead
        of raw second moments. Off by default.

    Raises
    ------
    SingularMatrixError
        The reference scatter is singular at working precision.
    ValueError
        Width mismatch or empty subset.
    """
    if scatter_a.d != scatter_b.d:
        raise ValueError(f"dimension mismatch: {scatter_a.d} vs {scatter_b.d}")
    if scatter_a.n == 0:
        raise ValueError("subset summary is empty (n = 0)")
    if scatter_b.n == 0:
        raise ValueError("reference summary is empty (n = 0)")
    d = scatter_a.d
    gram_a = scatter_a.centered_gram() if center else scatter_a.gram
    gram_b = scatter_b.centered_gram() if center else scatter_b.gram

    eig = sym_eigen(gram_b / scatter_b.n)
    if eig.values.min() <= rank_tolerance(d, abs(eig.values.max())):
        raise SingularMatrixError(
            "reference scatter is singular at working precision "
            f"(min eigenvalue {eig.values.min():.3e})"
        )
    v = eig.vectors
    diag_a = np.einsum("ji,jk,ki->i", v, gram_a, v)
    terms = (diag_a / scatter_a.n) / eig.values
    return ConcordanceResult(
        value=float(terms.mean()),
        method="trace",
        d=d,
        n_subset=scatter_a.n,
        n_reference=scatter_b.n,
        terms=terms,
    )


def concordance_subset(total, subset, mode, center=False):
    """Concordance of a subset against the data set it was drawn from.

    ``mode="overlapping"`` compares the subset against the full summary
    (subset rows included); ``mode="nonoverlapping"`` compares it against
    the complement, obtained by field subtraction of the summaries without
    re-reading any data.

    Undersized subsets are flagged in the result's ``warnings``: below
    ``2 * d`` rows the per-term ratios are noisy, and below ``d`` rows the
    subset scatter itself is singular (the value stays computable because
    only the reference is inverted). An empty subset is an error.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if subset.d != total.d:
        raise ValueError(f"dimension mismatch: {subset.d} vs {total.d}")
    if subset.n > total.n:
        raise ValueError(f"subset has {subset.n} rows but total only {total.n}")
    if subset.n == 0:
        raise ValueError("subset summary is empty (n = 0)")

    notes = []
    if subset.n < subset.d:
        notes.append(
            f"subset has fewer rows ({subset.n}) than columns ({subset.d}); "
            "its own scatter is singular"
        )
    elif subset.n < 2 * subset.d:
        notes.append(
            f"subset has fewer than 2*d rows ({subset.n} < {2 * subset.d}); "
            "per-term ratios are noisy"
        )

    if mode == OVERLAPPING:
        reference = total
    else:
        reference = total.subtract(subset)
        if reference.n == 0:
            raise ValueError("nonoverlapping mode requires subset.n < total.n")
    result = concordance_trace(subset, reference, center=center)
    return result.with_mode(mode, extra_warnings=notes)
