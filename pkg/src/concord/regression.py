"""Row-partitioned regression: block-averaged least squares, pooled
normal-equation solves from merged scatter summaries, a stable QR
reference fit, and IRLS logistic regression.

The block-averaged path solves each block with QR (numerically stable,
never forms a Gram matrix) and averages the block coefficients; the pooled
path merges per-block Gram summaries and solves the normal equations once.
The two trade accuracy against communication volume: per block, averaging
ships d numbers while pooling ships d^2 + d.
"""

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Optional, Tuple

import numpy as np

from .linalg import ScatterSummary, SingularMatrixError, qr_solve, spd_solve
from .validation import as_matrix, as_vector

__all__ = [
    "ConvergenceError",
    "FitResult",
    "PartitionPlan",
    "PerfectSeparationError",
    "coefficient_log_mse",
    "communication_cost",
    "fit_dnr",
    "fit_irls_logistic",
    "fit_pooled_normal",
    "fit_reference",
    "make_partition",
]


class ConvergenceError(RuntimeError):
    """Iterative fit failed to converge within its iteration budget."""


class PerfectSeparationError(ConvergenceError):
    """Logistic fit diverged: the classes appear perfectly separable."""


@dataclass(frozen=True)
class PartitionPlan:
    """Balanced partition of ``n`` row indices into ``r`` disjoint blocks.

    Block sizes differ by at most one (remainder rows go to the leading
    blocks). ``kind="random"`` shuffles the indices before slicing, so the
    blocks form a uniformly random balanced partition for a given seed;
    ``kind="contiguous"`` slices the natural order.
    """

    n: int
    r: int
    kind: str
    seed: Optional[int]
    block_indices: Tuple[np.ndarray, ...]

    @property
    def sizes(self):
        return tuple(len(b) for b in self.block_indices)

    @property
    def assignment(self):
        """Array mapping each row index to its block index."""
        out = np.empty(self.n, dtype=np.int64)
        for k, idx in enumerate(self.block_indices):
            out[idx] = k
        return out

    def blocks(self, x, y=None):
        """Yield ``(x_block,)`` or ``(x_block, y_block)`` per block."""
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise ValueError(f"x has {x.shape[0]} rows, plan covers {self.n}")
        if y is None:
            for idx in self.block_indices:
                yield (x[idx],)
        else:
            y = np.asarray(y)
            for idx in self.block_indices:
                yield x[idx], y[idx]


def make_partition(n, r, kind="random", seed=None):
    """Partition ``n`` rows into ``r`` balanced blocks.

    Random partitions are produced by a seeded shuffle of the index vector
    followed by contiguous slicing, so the same seed always yields the
    same assignment.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if r < 1 or r > n:
        raise ValueError(f"block count r must satisfy 1 <= r <= n, got r={r}, n={n}")
    if kind not in ("random", "contiguous"):
        raise ValueError(f"kind must be random or contiguous, got {kind!r}")
    indices = np.arange(n)
    if kind == "random":
        indices = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, r)
    blocks = []
    start = 0
    for k in range(r):
        size = base + (1 if k < extra else 0)
        blocks.append(indices[start : start + size])
        start += size
    return PartitionPlan(n=n, r=r, kind=kind, seed=seed, block_indices=tuple(blocks))


@dataclass(frozen=True)
class FitResult:
    """Coefficient estimate with its fitting provenance.

    ``per_block`` holds the individual block estimates for the
    block-averaged method; ``diagnostics`` carries iteration counts and
    convergence flags for iterative fits.
    """

    coefficients: np.ndarray
    method: str
    r: int
    per_block: Optional[Tuple[np.ndarray, ...]] = None
    diagnostics: Dict[str, object] = field(default_factory=dict)


def fit_dnr(blocks, weight_by_rows=False):
    """Fit each block by QR least squares and average the coefficients.

    Parameters
    ----------
    blocks : sequence of (X, y)
        Each block needs at least d rows and full column rank.
    weight_by_rows : bool
        Weight the average by block row counts instead of the plain mean.
        With balanced blocks the two coincide; the plain mean is the
        default because the method is defined for equal-size blocks.

    Raises
    ------
    SingularMatrixError
        A block is rank deficient; the message names the block index.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("at least one block is required")
    per_block = []
    rows = []
    for k, (x, y) in enumerate(blocks):
        try:
            per_block.append(qr_solve(x, y))
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"block {k}: {exc}") from exc
        rows.append(np.asarray(x).shape[0])
    stacked = np.vstack(per_block)
    if weight_by_rows:
        weights = np.asarray(rows, dtype=np.float64)
        coef = weights @ stacked / weights.sum()
    else:
        coef = stacked.mean(axis=0)
    return FitResult(
        coefficients=coef,
        method="dnr",
        r=len(blocks),
        per_block=tuple(per_block),
        diagnostics={"block_rows": tuple(rows), "weight_by_rows": weight_by_rows},
    )


def fit_pooled_normal(summaries):
    """Solve the merged normal equations from per-block scatter summaries.

    Every summary must track a response. Numerically fragile for
    ill-conditioned designs: the merged Gram matrix squares the condition
    number, and the solve fails with ``SingularMatrixError`` when it is
    singular at working precision.
    """
    summaries = list(summaries)
    if not summaries:
        raise ValueError("at least one summary is required")
    for k, s in enumerate(summaries):
        if not isinstance(s, ScatterSummary):
            raise TypeError(f"summary {k} is {type(s).__name__}, expected ScatterSummary")
        if not s.track_response:
            raise ValueError(f"summary {k} does not track a response")
    merged = reduce(lambda a, b: a.merge(b), summaries)
    coef = spd_solve(merged.gram, merged.xty)
    return FitResult(
        coefficients=coef,
        method="pooled-normal",
        r=len(summaries),
        diagnostics={"n": merged.n},
    )


def fit_reference(x, y):
    """Single stable QR fit on all rows: the target the block-averaged
    estimate approximates."""
    coef = qr_solve(x, y)
    return FitResult(coefficients=coef, method="reference-qr", r=1)


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _deviance(y, mu):
    eps = 1e-12
    mu = np.clip(mu, eps, 1.0 - eps)
    return -2.0 * float(y @ np.log(mu) + (1.0 - y) @ np.log(1.0 - mu))


def fit_irls_logistic(
    x,
    y,
    max_iter=25,
    tol=1e-8,
    deviance_tol=1e-10,
    divergence_cap=1e6,
):
    """Logistic regression by iteratively reweighted least squares.

    Each iteration solves the weighted working-response system with the
    stable QR path (on ``sqrt(w) * x``), halving the step whenever the
    deviance would increase, so the deviance is non-increasing across
    iterations. Converges when the max-abs coefficient change falls below
    ``tol`` or the relative deviance change below ``deviance_tol``.

    Raises
    ------
    PerfectSeparationError
        Coefficients diverged past ``divergence_cap`` in sup-norm,
        the signature of separable classes.
    ConvergenceError
        No convergence within ``max_iter`` iterations.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be positive, got {max_iter}")
    x = as_matrix(x, name="x")
    n, d = x.shape
    y = as_vector(y, length=n)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("y must be binary with entries in {0, 1}")

    beta = np.zeros(d)
    eta = x @ beta
    mu = _sigmoid(eta)
    dev = _deviance(y, mu)
    halvings = 0

    for iteration in range(1, max_iter + 1):
        w = np.clip(mu * (1.0 - mu), 1e-10, None)
        z = eta + (y - mu) / w
        sw = np.sqrt(w)
        proposal = qr_solve(x * sw[:, None], sw * z)

        # Step-halving keeps the deviance monotone when a full IRLS step
        # overshoots.
        step = proposal
        new_dev = _deviance(y, _sigmoid(x @ step))
        tries = 0
        while new_dev > dev * (1.0 + 1e-12) and tries < 10:
            step = (step + beta) / 2.0
            new_dev = _deviance(y, _sigmoid(x @ step))
            tries += 1
            halvings += 1

        delta = float(np.max(np.abs(step - beta)))
        rel_dev = abs(dev - new_dev) / max(abs(dev), 1e-300)
        beta, dev = step, new_dev
        eta = x @ beta
        mu = _sigmoid(eta)

        if float(np.max(np.abs(beta))) > divergence_cap:
            raise PerfectSeparationError(
                f"coefficients diverged past {divergence_cap:g} after "
                f"{iteration} iterations; classes look separable"
            )
        if delta <= tol or rel_dev <= deviance_tol:
            return FitResult(
                coefficients=beta,
                method="irls-logistic",
                r=1,
                diagnostics={
                    "iterations": iteration,
                    "converged": True,
                    "deviance": dev,
                    "step_halvings": halvings,
                },
            )

    raise ConvergenceError(
        f"IRLS did not converge in {max_iter} iterations "
        f"(last max-abs step {delta:.3e}, deviance {dev:.6g})"
    )


def coefficient_log_mse(estimate, reference):
    """Natural log of the mean squared coefficient difference.

    Identical vectors give an exact ``-inf`` sentinel rather than an
    error, so callers can record "no disagreement" in results.
    """
    estimate = as_vector(estimate, name="estimate")
    reference = as_vector(reference, length=estimate.shape[0], name="reference")
    if estimate.shape[0] == 0:
        raise ValueError("coefficient vectors must be non-empty")
    mse = float(np.mean((estimate - reference) ** 2))
    if mse == 0.0:
        return float("-inf")
    return math.log(mse)


def communication_cost(r, d, bytes_per_value=8):
    """Bytes shipped to combine ``r`` blocks of a d-column model.

    Averaging block coefficients moves ``r * d`` values; pooling Gram
    summaries moves ``r * d^2 + r * d``. Returns
    ``(averaged_bytes, pooled_bytes)``.
    """
    if r < 1 or d < 1 or bytes_per_value < 1:
        raise ValueError("r, d and bytes_per_value must be positive")
    dnr = r * d * bytes_per_value
    pooled = (r * d * d + r * d) * bytes_per_value
    return dnr, pooled
