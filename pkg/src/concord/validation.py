"""Input validation helpers shared by every module.

All numeric inputs are normalized to float64 ndarrays and checked for
finiteness up front, so downstream linear algebra never sees NaN or Inf.
"""

import numpy as np

__all__ = [
    "as_matrix",
    "as_vector",
    "check_symmetric",
    "rank_tolerance",
]


def as_matrix(x, name="x"):
    """Coerce ``x`` to a 2-D float64 array with finite entries."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def as_vector(x, length=None, name="y"):
    """Coerce ``x`` to a 1-D float64 array, optionally of fixed length."""
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return v


def check_symmetric(m, rel_tol=1e-12, name="matrix"):
    """Validate that ``m`` is square and symmetric within a relative bound.

    Returns the exactly symmetrized matrix ``(m + m.T) / 2`` so callers can
    rely on bitwise symmetry afterwards.
    """
    m = as_matrix(m, name=name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > rel_tol * max(scale, np.finfo(np.float64).tiny):
        raise ValueError(
            f"{name} is not symmetric: max asymmetry {asym:.3e} "
            f"exceeds {rel_tol:.1e} * {scale:.3e}"
        )
    return (m + m.T) / 2.0


def rank_tolerance(d, scale):
    """Numerical-rank threshold: d * machine epsilon * dominant magnitude."""
    return d * np.finfo(np.float64).eps * abs(scale)
