"""Dense float64 matrix primitives shared by the model, pretraining and evaluation."""

from __future__ import annotations

from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from .errors import ShapeError

__all__ = (
    "Matrix",
    "as_matrix",
    "frobenius_sq",
    "hadamard",
    "matmul",
    "sigmoid",
)

Matrix = npt.NDArray[np.float64]


def as_matrix(data: Any) -> Matrix:
    """Coerce ``data`` into a two-dimensional float64 array.

    One-dimensional input becomes a single row.
    """
    array = np.asarray(data, dtype=np.float64)
    if array.ndim == 1:
        return array.reshape(1, -1)
    if array.ndim != 2:
        raise ShapeError("as_matrix", array.shape)
    return array


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Return the matrix product ``a @ b``.

    Raises
    ------
    ShapeError
        If ``a.cols != b.rows``.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    return a @ b


def sigmoid(x: Matrix) -> Matrix:
    """Element-wise logistic function ``1 / (1 + exp(-x))``.

    Saturates to exactly 0 or 1 for huge magnitudes and never produces NaN.
    """
    return expit(np.asarray(x, dtype=np.float64))


def hadamard(a: Matrix, b: Matrix) -> Matrix:
    """Element-wise product of two equally shaped matrices."""
    if a.shape != b.shape:
        raise ShapeError("hadamard", a.shape, b.shape)
    return a * b


def frobenius_sq(a: Matrix) -> float:
    """Squared Frobenius norm, the sum of squared entries."""
    return float(np.sum(a * a))
