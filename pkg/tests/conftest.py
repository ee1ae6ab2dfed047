"""Shared numerical oracles for the test suite."""

import numpy as np
import pytest


def central_difference_jacobian(f, z, h=1e-6):
    """Dense Jacobian of a vector function by central differences."""
    z = np.asarray(z, dtype=np.float64)
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        cols.append((f(z + e) - f(z - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def log_abs_det(matrix):
    """log |det| via slogdet for square, or 0.5 log det(J^T J) otherwise."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] == matrix.shape[1]:
        return np.linalg.slogdet(matrix)[1]
    return 0.5 * np.linalg.slogdet(matrix.T @ matrix)[1]


def rel_err(analytic, reference, floor=1.0):
    """|a - b| / max(|b|, floor): relative error with a floor so values
    near zero (e.g. log-dets at identity points) stay comparable."""
    return abs(analytic - reference) / max(abs(reference), floor)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
