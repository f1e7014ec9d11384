"""Dense matrix/vector primitives, objectives, and the incremental residual tracker.

Conventions: matrices are float64 and column-major (Fortran order); columns
are data points, so X is m x n for n points in dimension m.
"""

import numpy as np

from .errors import DataError, DimensionError, ParameterError

# Absolute fallback tolerance for zero-norm inputs.
ABS_TOL = 1e-12

# Residual refresh policy: full recompute every this many outer iterations,
# or earlier once the staleness counter exceeds 10*p rank-one updates.
RESIDUAL_REFRESH_PERIOD = 25


def as_dense(a, name="matrix"):
    """Validate and convert to a float64 Fortran-ordered 2-D array.

    Rejects non-finite entries and empty dimensions at ingestion; the
    downstream QP logic is undefined under NaN/Inf.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return np.asfortranarray(arr)


def as_vector(v, name="vector"):
    """Validate and convert to a finite float64 1-D array."""
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size < 1:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def check_simplex(v, tol=ABS_TOL, name="vector"):
    """Check that v lies on the probability simplex (v >= 0, sum(v) = 1)."""
    arr = as_vector(v, name)
    if np.any(arr < -tol):
        raise DataError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > max(tol, ABS_TOL):
        raise DataError(f"{name} does not sum to 1 (sum={arr.sum()!r})")
    return arr


def _check_factor_shapes(X, B, A):
    m, n = X.shape
    if B.shape != (n, A.shape[0]) or A.shape[1] != n:
        raise DimensionError(
            f"incompatible factor shapes X{X.shape}, B{B.shape}, A{A.shape}")


def frobenius_objective(X, B, A):
    """Squared Frobenius norm of the factorization residual X - X B A."""
    X = as_dense(X, "X")
    B = as_dense(B, "B")
    A = as_dense(A, "A")
    _check_factor_shapes(X, B, A)
    R = X - (X @ B) @ A
    return float(np.sum(R * R))


def huber(u, eps):
    """Huber loss: quadratic below the threshold eps, linear above.

    Continuous at |u| = eps where both branches equal eps.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    u = np.abs(u)
    return np.where(u <= eps, u * u / (2.0 * eps) + eps / 2.0, u)[()]


def huber_weight(residual_norm, eps):
    """Optimal per-point weight max(residual_norm, eps).

    This is the minimizer of 0.5 * (u**2 / w + w) over w >= eps for
    u = residual_norm, i.e. the closed-form weight update of the
    reweighted least-squares scheme.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if residual_norm < 0:
        raise ParameterError("residual_norm must be nonnegative")
    return max(residual_norm, eps)


def robust_objective(X, B, A, eps):
    """Sum of Huber losses of the per-column residual norms of X - X B A."""
    if eps <= 0:
        raise ParameterError("eps must be positive")
    X = as_dense(X, "X")
    B = as_dense(B, "B")
    A = as_dense(A, "A")
    _check_factor_shapes(X, B, A)
    R = X - (X @ B) @ A
    norms = np.sqrt(np.sum(R * R, axis=0))
    return float(np.sum(huber(norms, eps)))


def weighted_objective(residual_col_sqnorms, w):
    """Value of the variational (weighted) objective 0.5 * sum(r_i^2/w_i + w_i)."""
    return 0.5 * float(np.sum(residual_col_sqnorms / w + w))


class ResidualTracker:
    """Tracks R = X - X B A across rank-one archetype updates.

    One tracker is confined to a single fitting session. The rank-one
    updates accumulate floating-point drift, so callers refresh from
    scratch periodically (see RESIDUAL_REFRESH_PERIOD).
    """

    def __init__(self, X, B, A):
        X = as_dense(X, "X")
        B = as_dense(B, "B")
        A = as_dense(A, "A")
        _check_factor_shapes(X, B, A)
        self.R = X - (X @ B) @ A
        self.staleness = 0

    def apply_beta_update(self, z_old, z_new, alpha_row):
        """Apply R += (z_old - z_new) alpha_row after an archetype moved."""
        z_old = as_vector(z_old, "z_old")
        z_new = as_vector(z_new, "z_new")
        alpha_row = as_vector(alpha_row, "alpha_row")
        if z_old.shape != z_new.shape or z_old.size != self.R.shape[0]:
            raise DimensionError("archetype length does not match residual rows")
        if alpha_row.size != self.R.shape[1]:
            raise DimensionError("alpha_row length does not match residual cols")
        self.R += np.outer(z_old - z_new, alpha_row)
        self.staleness += 1
        return self

    def refresh(self, X, Z, A):
        """Recompute R = X - Z A from scratch and reset staleness."""
        self.R = X - Z @ A
        self.staleness = 0
        return self

    def needs_refresh(self, p):
        return self.staleness > 10 * p
