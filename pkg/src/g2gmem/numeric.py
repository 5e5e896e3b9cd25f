"""Dense float64 matrix helpers and activations.

A "matrix" throughout this package is a 2-D C-contiguous ``numpy.ndarray`` of
float64; column vectors are ``(n, 1)`` matrices.  Public operations reject
non-finite inputs and never emit NaN/Inf on finite ones.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError

# Conventional defaults; neither slope nor alpha is tuned anywhere.
LEAKY_SLOPE = 0.2
ELU_ALPHA = 1.0

EPS = 1e-12


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, raising on bad input."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeError(f"{name}: expected 2-D array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name}: contains non-finite entries")
    return np.ascontiguousarray(a)


def as_col(x, name: str = "vector") -> np.ndarray:
    """Coerce to an (n, 1) column matrix."""
    a = as_matrix(x, name)
    if a.shape[1] != 1:
        if a.shape[0] == 1:
            a = a.T.copy()
        else:
            raise ShapeError(f"{name}: expected a vector, got shape {a.shape}")
    return a


def pairwise_euclidean(X) -> np.ndarray:
    """All-pairs Euclidean distances between the rows of X.

    Output is exactly symmetric with a zero diagonal.
    """
    A = as_matrix(X, "pairwise_euclidean input")
    g = A @ A.T
    sq = np.diag(g)[:, None] + np.diag(g)[None, :] - 2.0 * g
    np.maximum(sq, 0.0, out=sq)
    d = np.sqrt(sq)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def softmax_rows(X) -> np.ndarray:
    """Row-wise softmax, stabilized by per-row max subtraction."""
    A = as_matrix(X, "softmax_rows input")
    z = A - A.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0.0, x, slope * x)


def elu(x: np.ndarray, alpha: float = ELU_ALPHA) -> np.ndarray:
    return np.where(x > 0.0, x, alpha * np.expm1(np.minimum(x, 0.0)))
