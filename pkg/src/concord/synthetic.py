"""Seedable synthetic data: multivariate normal designs with a chosen
covariance, linear or logistic responses with known coefficients, and an
optional row-order drift that breaks exchangeability on purpose.

Design, noise and response draws come from disjoint RNG streams spawned
from the one seed, so changing the noise level never changes the design
matrix. Generated data writes to the same delimited format the ingestion
module reads, so it round-trips through the real pipeline.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .linalg import SingularMatrixError
from .schema import ColumnSpec, ResponseRule, SchemaSpec
from .validation import as_matrix

__all__ = [
    "SyntheticSpec",
    "build_sigma",
    "generate",
    "generate_categorical_demo",
    "schema_for_synthetic",
    "write_csv",
]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset.

    ``sigma`` overrides the equicorrelated shorthand
    ``(1 - rho) * I + rho * J`` (identity at ``rho = 0``). ``beta``
    defaults to all ones. A drift adds ``magnitude * row / n`` to one
    column in row order, so early rows and late rows have systematically
    different means.
    """

    n: int
    d: int
    rho: float = 0.0
    sigma: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    noise_sd: float = 1.0
    response: str = "linear"
    drift_column: Optional[int] = None
    drift_magnitude: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if self.sigma is None and not 0.0 <= self.rho < 1.0:
            raise ValueError(f"equicorrelation rho must be in [0, 1), got {self.rho}")
        if self.response not in ("linear", "logistic", "none"):
            raise ValueError(f"unknown response kind {self.response!r}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be non-negative, got {self.noise_sd}")
        if self.drift_column is not None and not 0 <= self.drift_column < self.d:
            raise ValueError(
                f"drift_column must be in [0, {self.d}), got {self.drift_column}"
            )
        if not np.isfinite(self.drift_magnitude):
            raise ValueError("drift_magnitude must be finite")


def build_sigma(spec):
    """Materialize the covariance matrix of a spec and check it is PD."""
    if spec.sigma is not None:
        sigma = as_matrix(spec.sigma, name="sigma")
        if sigma.shape != (spec.d, spec.d):
            raise ValueError(f"sigma must be ({spec.d}, {spec.d}), got {sigma.shape}")
        return sigma
    sigma = np.full((spec.d, spec.d), spec.rho)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def _cholesky_factor(sigma):
    try:
        return sla.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"sigma is not positive definite: {exc}") from exc


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def generate(spec, seed=None):
    """Draw one dataset from a spec.

    Returns ``(x, y, metadata)`` where ``y`` is ``None`` for
    ``response="none"``. Rows are i.i.d. ``N(0, sigma)`` plus the optional
    drift term; a linear response is ``x @ beta`` plus Gaussian noise, a
    logistic response is Bernoulli with success probability
    ``sigmoid(x @ beta)``.
    """
    sigma = build_sigma(spec)
    chol = _cholesky_factor(sigma)
    design_stream, noise_stream, response_stream = np.random.SeedSequence(seed).spawn(3)

    rng = np.random.default_rng(design_stream)
    x = rng.standard_normal((spec.n, spec.d)) @ chol.T
    if spec.drift_column is not None and spec.drift_magnitude != 0.0:
        x[:, spec.drift_column] += spec.drift_magnitude * (
            np.arange(spec.n) / spec.n
        )

    beta = (
        np.ones(spec.d)
        if spec.beta is None
        else np.asarray(spec.beta, dtype=np.float64).reshape(-1)
    )
    if beta.shape[0] != spec.d:
        raise ValueError(f"beta must have length {spec.d}, got {beta.shape[0]}")

    y = None
    if spec.response == "linear":
        noise = np.random.default_rng(noise_stream).standard_normal(spec.n)
        y = x @ beta + spec.noise_sd * noise
    elif spec.response == "logistic":
        p = _sigmoid(x @ beta)
        u = np.random.default_rng(response_stream).random(spec.n)
        y = (u < p).astype(np.float64)

    metadata = {
        "n": spec.n,
        "d": spec.d,
        "response": spec.response,
        "noise_sd": spec.noise_sd,
        "seed": seed,
        "beta": beta.tolist(),
        "drift_column": spec.drift_column,
        "drift_magnitude": spec.drift_magnitude,
    }
    return x, y, metadata


def write_csv(path, x, y=None, response_name="y"):
    """Write a design matrix (and optional response) as a delimited file.

    Column headers are ``x0 .. x{d-1}`` plus the response name. Values are
    written with shortest round-trip formatting, so reading the file back
    reproduces the arrays bit for bit.
    """
    x = as_matrix(x, name="x")
    n, d = x.shape
    if y is not None:
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.shape[0] != n:
            raise ValueError(f"y must have length {n}, got {y.shape[0]}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        header = [f"x{j}" for j in range(d)]
        if y is not None:
            header.append(response_name)
        fh.write(",".join(header) + "\n")
        for k in range(n):
            parts = [repr(float(v)) for v in x[k]]
            if y is not None:
                parts.append(repr(float(y[k])))
            fh.write(",".join(parts) + "\n")


def schema_for_synthetic(d, response=None, binary_threshold=None):
    """Schema matching :func:`write_csv` output.

    ``response`` names the response column to read back (``None`` for a
    design-only schema). ``binary_threshold`` switches the response rule
    from raw passthrough to a >= threshold indicator.
    """
    columns = tuple(ColumnSpec(f"x{j}", "numeric") for j in range(d))
    rule = None
    if response is not None:
        rule = ResponseRule(source=response, threshold=binary_threshold)
    return SchemaSpec(columns=columns, encoding="one-hot", intercept=False, response=rule)


def generate_categorical_demo(path, n=60, seed=0, levels=("a", "b", "c")):
    """Write a small file with one 3-level categorical (thresholded
    Gaussian tertiles) and one numeric column, for contrast-encoding tests.

    Returns the matching schema with declared levels.
    """
    if len(levels) != 3:
        raise ValueError("demo generator emits exactly 3 levels")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    v = rng.standard_normal(n)
    cuts = np.quantile(z, [1 / 3, 2 / 3])
    labels = np.where(z < cuts[0], levels[0], np.where(z < cuts[1], levels[1], levels[2]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("group,value\n")
        for lbl, val in zip(labels, v):
            fh.write(f"{lbl},{repr(float(val))}\n")
    return SchemaSpec(
        columns=(
            ColumnSpec("group", "categorical", tuple(levels)),
            ColumnSpec("value", "numeric"),
        ),
        encoding="treatment-contrast",
        intercept=True,
    )
