"""Bijections from unconstrained R^d onto the unit p-norm spheres.

Two maps are provided, each with the exact log density-change term needed
to pull a distribution on the target manifold back to R^d:

* stick-breaking onto the simplex (p = 1), with an O(d) running-sum
  log-determinant, and
* inverse stereographic projection onto the hypersphere (p = 2), whose
  area-change term is ``d * log(2 / (1 + ||z||^2))``.

Both maps are parameterless and pure.  Points on the manifolds are plain
(d+1)-vectors; `check_simplex_point` / `check_sphere_point` validate the
invariants where an operation requires them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError, SimplexUnderflowWarning, SupportError
from .special import log_sigmoid, logit

__all__ = [
    "MapResult",
    "simplex_forward",
    "simplex_inverse",
    "sphere_forward",
    "sphere_inverse",
    "check_simplex_point",
    "check_sphere_point",
]

# Clamp for log v and log(1-v): keeps the log-determinant finite when the
# sigmoid saturates at large |z| (v pinned to [1e-30, 1 - 1e-30]).
_LOG_EPS = -69.07755278982137  # ln(1e-30)

# Remainder mass below e^-700 is about to underflow double precision.
_UNDERFLOW_LOG = -700.0

# North-pole exclusion for the inverse stereographic projection.
_POLE_TOL = 1e-12


@dataclass(frozen=True)
class MapResult:
    """A mapped point together with its log density-change term."""

    point: np.ndarray
    log_det: float | np.ndarray


def _as_batch(x, name: str):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise DomainError(f"{name} must be a vector or a batch of vectors")


def check_simplex_point(s, tol: float = 1e-8) -> np.ndarray:
    """Validate (and exactly renormalize) points of the open simplex."""
    s, single = _as_batch(s, "simplex point")
    if not np.all(np.isfinite(s)):
        raise SupportError("simplex point has non-finite coordinates")
    if np.any(s <= 0.0) or np.any(s >= 1.0):
        raise SupportError("simplex coordinates must lie strictly in (0, 1)")
    sums = s.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise SupportError("simplex coordinates must sum to 1")
    s = s / sums[:, None]
    return s[0] if single else s


def check_sphere_point(s, tol: float = 1e-8) -> np.ndarray:
    """Validate (and exactly renormalize) points of the unit hypersphere."""
    s, single = _as_batch(s, "sphere point")
    if not np.all(np.isfinite(s)):
        raise SupportError("sphere point has non-finite coordinates")
    norms = np.linalg.norm(s, axis=1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise SupportError("sphere point must have unit 2-norm")
    s = s / norms[:, None]
    return s[0] if single else s


def _stick_offsets(d: int) -> np.ndarray:
    # log(d + 1 - k) for k = 1..d
    return np.log(np.arange(d, 0, -1, dtype=np.float64))


def simplex_forward(z) -> MapResult:
    """Stick-breaking map R^d -> interior of the simplex in R^{d+1}.

    Each coordinate converts a sigmoid fraction of the remaining mass:
    ``v_k = sigmoid(z_k - log(d+1-k))``, ``s_k = remainder_{k-1} * v_k``.
    The offsets make z = 0 land on the barycenter.  The remaining mass is
    tracked as a running sum of ``log(1 - v_k)`` terms, never by
    subtracting partial sums, which is what keeps the map usable at
    dimensions where ``1 - sum(s)`` would cancel catastrophically.

    Returns the (d+1)-coordinate point and the O(d) log-determinant
    ``sum_k log(v_k (1 - v_k)) + log(remainder_{k-1})``.
    """
    z, single = _as_batch(z, "z")
    if not np.all(np.isfinite(z)):
        raise DomainError("simplex_forward requires finite input")
    d = z.shape[1]
    a = z - _stick_offsets(d)[None, :]
    log_v = np.maximum(log_sigmoid(a), _LOG_EPS)
    log_1mv = np.maximum(log_sigmoid(-a), _LOG_EPS)
    # log remainder after k sticks; prepend the full mass (log 1 = 0)
    log_rem = np.cumsum(log_1mv, axis=1)
    log_rem_prev = np.concatenate([np.zeros((z.shape[0], 1)), log_rem[:, :-1]], axis=1)
    log_s = log_rem_prev + log_v
    s = np.concatenate([np.exp(log_s), np.exp(log_rem[:, -1:])], axis=1)
    if np.any(log_rem[:, -1] < _UNDERFLOW_LOG):
        warnings.warn(
            "stick-breaking remainder underflowed double precision; "
            "densities involving the trailing coordinates are unreliable",
            SimplexUnderflowWarning,
            stacklevel=2,
        )
    log_det = (log_v + log_1mv + log_rem_prev).sum(axis=1)
    if single:
        return MapResult(point=s[0], log_det=float(log_det[0]))
    return MapResult(point=s, log_det=log_det)


def simplex_inverse(s) -> np.ndarray:
    """Inverse stick-breaking: simplex interior point -> R^d.

    ``z_k = logit(s_k / remainder_{k-1}) + log(d+1-k)``.  The remainder is
    recovered as the tail sum ``s_k + ... + s_{d+1}``, which is exact for
    points that sum to one and avoids cancellation.
    """
    s, single = _as_batch(s, "s")
    try:
        s = check_simplex_point(s)
    except SupportError as exc:
        raise DomainError(str(exc)) from None
    d = s.shape[1] - 1
    if d < 1:
        raise DomainError("simplex point needs at least 2 coordinates")
    tail = np.cumsum(s[:, ::-1], axis=1)[:, ::-1]  # tail[k] = s_k + ... + s_{d+1}
    v = s[:, :d] / tail[:, :d]
    v = np.clip(v, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    z = logit(v) + _stick_offsets(d)[None, :]
    return z[0] if single else z


def simplex_forward_vjp(z, grad_point, grad_log_det):
    """Vector-Jacobian product of `simplex_forward`.

    Given cotangents for the mapped point (shape (n, d+1)) and the
    log-determinant (shape (n,)), returns the cotangent for z.  Used by
    the reverse-mode gradient of flow log-likelihoods.
    """
    z = np.asarray(z, dtype=np.float64)
    gp = np.asarray(grad_point, dtype=np.float64)
    gl = np.asarray(grad_log_det, dtype=np.float64)
    d = z.shape[1]
    res = simplex_forward(z)
    s = res.point
    a = z - _stick_offsets(d)[None, :]
    v = np.exp(np.maximum(log_sigmoid(a), _LOG_EPS))
    c = gp * s
    # tail_after[l] = sum_{k > l} gp_k s_k, for stick index l = 1..d
    tail = np.cumsum(c[:, ::-1], axis=1)[:, ::-1]
    tail_after = tail[:, 1:]
    grad_a = c[:, :d] * (1.0 - v) - v * tail_after
    # d log_det / d a_l = 1 - 2 v_l - (d - l) v_l
    coeff = 1.0 - 2.0 * v - np.arange(d - 1, -1, -1, dtype=np.float64)[None, :] * v
    grad_a += gl[:, None] * coeff
    return grad_a


def sphere_forward(z) -> MapResult:
    """Inverse stereographic projection R^d -> unit sphere in R^{d+1}.

    ``s = (z * rho, 1 - rho)`` with ``rho = 2 / (1 + ||z||^2)``; the origin
    is sent to the south pole and the north pole is the unreachable limit
    ``||z|| -> inf``.  The density-change term is ``d * log(rho)``.
    """
    z, single = _as_batch(z, "z")
    if not np.all(np.isfinite(z)):
        raise DomainError("sphere_forward requires finite input")
    d = z.shape[1]
    r2 = np.einsum("ij,ij->i", z, z)
    rho = 2.0 / (1.0 + r2)
    s = np.concatenate([z * rho[:, None], (1.0 - rho)[:, None]], axis=1)
    log_det = d * (np.log(2.0) - np.log1p(r2))
    if single:
        return MapResult(point=s[0], log_det=float(log_det[0]))
    return MapResult(point=s, log_det=log_det)


def sphere_inverse(s) -> np.ndarray:
    """Stereographic projection from the north pole: sphere point -> R^d."""
    s, single = _as_batch(s, "s")
    s = check_sphere_point(s)
    last = s[:, -1]
    if np.any(1.0 - last < _POLE_TOL):
        raise SingularityError("point lies in the excluded north-pole neighborhood")
    z = s[:, :-1] / (1.0 - last)[:, None]
    return z[0] if single else z


def sphere_forward_vjp(z, grad_point, grad_log_det):
    """Vector-Jacobian product of `sphere_forward` (same contract as the
    simplex variant)."""
    z = np.asarray(z, dtype=np.float64)
    gp = np.asarray(grad_point, dtype=np.float64)
    gl = np.asarray(grad_log_det, dtype=np.float64)
    d = z.shape[1]
    r2 = np.einsum("ij,ij->i", z, z)
    rho = 2.0 / (1.0 + r2)
    # s_head = z rho, s_last = 1 - rho, log_det = d log rho
    grad_rho = np.einsum("ij,ij->i", gp[:, :-1], z) - gp[:, -1] + gl * d / rho
    grad_z = gp[:, :-1] * rho[:, None] - (grad_rho * rho * rho)[:, None] * z
    return grad_z
