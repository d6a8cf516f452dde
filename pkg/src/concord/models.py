"""Closed-form distribution models for subset concordance, and a
partition-size selection heuristic built on them.

For rows drawn i.i.d. from a zero-mean multivariate normal with a common
eigenbasis, each of the d per-coordinate concordance terms follows a known
ratio law:

* overlapping (subset of size i vs. the full n rows, subset included):
  ``(n / i) * Beta(i / 2, (n - i) / 2)`` with mean 1,
* non-overlapping (subset vs. its disjoint complement):
  ``F(i, n - i)``,
* non-overlapping with only a jointly-convergent heavy-fluctuation limit:
  ``Cauchy(1, sqrt((n - i) / i))``.

Averaging d independent terms gives the normal approximations carried in
``ConcordanceModel.approx`` (the Cauchy family is stable under averaging,
so its "approximation" is itself Cauchy).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import scipy.stats

__all__ = [
    "CauchyApprox",
    "ConcordanceModel",
    "NormalApprox",
    "model_nonoverlapping_cauchy",
    "model_nonoverlapping_f",
    "model_overlapping",
    "partition_size_heuristic",
]


@dataclass(frozen=True)
class NormalApprox:
    mean: float
    variance: float

    def quantile(self, p):
        if self.variance == 0.0:
            return self.mean
        return scipy.stats.norm.ppf(p, loc=self.mean, scale=math.sqrt(self.variance))


@dataclass(frozen=True)
class CauchyApprox:
    location: float
    scale: float

    def quantile(self, p):
        return scipy.stats.cauchy.ppf(p, loc=self.location, scale=self.scale)


@dataclass(frozen=True)
class ConcordanceModel:
    """Distribution model for the concordance of an i-row subset of n rows.

    ``location`` and ``term_variance``/``scale`` describe a single
    per-coordinate term; ``approx`` describes the d-term average.
    ``alt_approx_variance`` carries an alternative large-n variance form
    for the scaled-beta family (denominator ``n`` instead of ``n + 2``);
    the primary form is the one in ``approx``.
    """

    family: str
    i: int
    n: int
    d: Optional[int]
    location: float
    approx: Union[NormalApprox, CauchyApprox]
    term_variance: Optional[float] = None
    scale: Optional[float] = None
    alt_approx_variance: Optional[float] = None
    notes: Tuple[str, ...] = ()

    @property
    def variance_defined(self):
        return self.family != "cauchy"

    def approx_quantile(self, p):
        """Quantile of the d-term average under the model approximation."""
        return float(self.approx.quantile(p))

    def term_quantile(self, p):
        """Exact quantile of a single per-coordinate term."""
        if self.family == "scaled-beta":
            q = scipy.stats.beta.ppf(p, self.i / 2.0, (self.n - self.i) / 2.0)
            return float(self.n / self.i * q)
        if self.family == "f":
            return float(scipy.stats.f.ppf(p, self.i, self.n - self.i))
        return float(scipy.stats.cauchy.ppf(p, loc=self.location, scale=self.scale))


def _check_counts(i, n, d=None):
    if i < 1:
        raise ValueError(f"subset size i must be positive, got {i}")
    if n < i:
        raise ValueError(f"total rows n={n} must be at least i={i}")
    if d is not None and d < 1:
        raise ValueError(f"column count d must be positive, got {d}")


def model_overlapping(i, n, d):
    """Scaled-beta model for overlapping concordance.

    A single term is ``(n / i) * Beta(i / 2, (n - i) / 2)``: location 1,
    variance ``2 (n - i) / (i (n + 2))``. The d-term average is
    approximately ``N(1, 2 (n - i) / (d i (n + 2)))``; degenerate at 1 when
    ``i = n``.
    """
    _check_counts(i, n, d)
    term_variance = 2.0 * (n - i) / (i * (n + 2))
    return ConcordanceModel(
        family="scaled-beta",
        i=i,
        n=n,
        d=d,
        location=1.0,
        term_variance=term_variance,
        approx=NormalApprox(mean=1.0, variance=term_variance / d),
        alt_approx_variance=2.0 * (n - i) / (d * i * n) if n > 0 else 0.0,
    )


def model_nonoverlapping_f(i, n, d):
    """F model for non-overlapping concordance (disjoint reference).

    A single term is ``F(i, n - i)``: location ``(n - i) / (n - i - 2)``,
    variance ``2 (n - i)^2 (n - 2) / (i (n - i - 2)^2 (n - i - 4))``. The
    d-term average is approximately ``N(1, 2 n / (d i (n - i)))``, valid
    when ``n >> i >> 2``. Requires ``n - i > 4`` for the variance to exist.
    """
    _check_counts(i, n, d)
    m = n - i
    if m <= 4:
        raise ValueError(f"variance undefined: need n - i > 4, got n - i = {m}")
    term_variance = 2.0 * m * m * (n - 2) / (i * (m - 2) ** 2 * (m - 4))
    return ConcordanceModel(
        family="f",
        i=i,
        n=n,
        d=d,
        location=m / (m - 2),
        term_variance=term_variance,
        approx=NormalApprox(mean=1.0, variance=2.0 * n / (d * i * m)),
        notes=(
            "approximation assumes n >> i >> 2, where the location "
            f"{m / (m - 2):.6g} is indistinguishable from 1",
        ),
    )


def model_nonoverlapping_cauchy(i, n):
    """Cauchy model for non-overlapping concordance in the
    heavy-fluctuation limit: location 1, scale ``sqrt((n - i) / i)``.

    The mean and variance are undefined; the d-term average is Cauchy with
    the same parameters (stability under averaging), so no dimension is
    needed.
    """
    _check_counts(i, n)
    if i >= n:
        raise ValueError(f"need i < n for a nonempty complement, got i={i}, n={n}")
    scale = math.sqrt((n - i) / i)
    return ConcordanceModel(
        family="cauchy",
        i=i,
        n=n,
        d=None,
        location=1.0,
        scale=scale,
        approx=CauchyApprox(location=1.0, scale=scale),
    )


def _approx_variance(i, n, d, mode):
    if mode == "overlapping":
        return 2.0 * (n - i) / (d * i * (n + 2))
    return 2.0 * n / (d * i * (n - i))


def partition_size_heuristic(n, d, tolerance, confidence, mode="overlapping"):
    """Smallest block size whose concordance stays within ``tolerance`` of 1
    at the given confidence level.

    Scans for the smallest ``i >= d + 1`` such that
    ``z * sqrt(approx_variance(i, n, d)) <= tolerance``, where ``z`` is the
    standard-normal quantile at ``(1 + confidence) / 2``. Returns ``n``
    when no block size satisfies the bound. The result is non-increasing
    in ``tolerance`` and non-decreasing in ``confidence``.
    """
    if mode not in ("overlapping", "nonoverlapping"):
        raise ValueError(f"mode must be overlapping or nonoverlapping, got {mode!r}")
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    if n <= d:
        raise ValueError(f"need n > d, got n={n}, d={d}")

    z = float(scipy.stats.norm.ppf((1.0 + confidence) / 2.0))
    zz = z * z
    tt = tolerance * tolerance

    def satisfies(i):
        if mode == "nonoverlapping" and i >= n:
            return False
        return zz * _approx_variance(i, n, d, mode) <= tt

    # Closed-form candidate, then step to the exact boundary; the bound is
    # monotone in i on the scanned side so a local adjustment suffices.
    if mode == "overlapping":
        # z^2 * 2 (n - i) <= t^2 d i (n + 2)  <=>  i >= 2 z^2 n / (t^2 d (n + 2) + 2 z^2)
        cand = math.ceil(2.0 * zz * n / (tt * d * (n + 2) + 2.0 * zz))
        upper = n
    else:
        # z^2 * 2 n <= t^2 d i (n - i)  <=>  i (n - i) >= 2 z^2 n / (t^2 d)
        c = 2.0 * zz * n / (tt * d)
        disc = n * n - 4.0 * c
        if disc < 0:
            return n
        cand = math.ceil((n - math.sqrt(disc)) / 2.0)
        # Feasible block sizes form one interval; if d + 1 already lies
        # beyond its upper end (plus rounding slack) nothing can satisfy.
        if d + 1 > math.floor((n + math.sqrt(disc)) / 2.0) + 2:
            return n
        upper = n - 1

    i = max(d + 1, cand)
    while i > d + 1 and satisfies(i - 1):
        i -= 1
    while i <= upper and not satisfies(i):
        i += 1
    if i > upper:
        # Overlapping always terminates at i = n (variance 0); only the
        # nonoverlapping branch can fall through.
        return n
    return i
