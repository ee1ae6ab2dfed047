"""Interpolation rules and path diagnostics.

Four rules cover the three latent geometries:

* ``lerp``         - straight line, the Euclidean default;
* ``nclerp``       - lerp rescaled so the norm itself interpolates
                     linearly between the endpoint norms;
* ``slerp``        - constant-speed great-circle path on the unit sphere;
* ``simplex_lerp`` - coordinatewise lerp, closed on the simplex.

Equal lambda spacing is the contract for every rule.  nclerp trades that
for norm control: its points bunch toward the endpoints in space, which
`path_diagnostics` quantifies as the coefficient of variation of the
consecutive step lengths (exactly 0 for lerp).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bases import DirichletBase, GaussianBase, VmfBase
from .errors import DegeneratePathError, DomainError
from .flows import FlowModel
from .maps import check_simplex_point, check_sphere_point

__all__ = [
    "InterpolationPath",
    "PathDiagnostics",
    "DecodedPath",
    "lerp",
    "nclerp",
    "slerp",
    "simplex_lerp",
    "interpolation_path",
    "data_interpolate",
    "path_diagnostics",
    "default_rule",
]

_RULES = ("lerp", "nclerp", "slerp", "simplex_lerp")


@dataclass(frozen=True)
class InterpolationPath:
    """Endpoints, an ascending lambda grid in [0, 1], and the interpolants."""

    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    lambdas: np.ndarray
    points: np.ndarray
    rule: str

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64)
        if lam.ndim != 1 or np.any(np.diff(lam) < 0) or np.any(lam < 0) or np.any(lam > 1):
            raise DomainError("lambdas must be an ascending grid inside [0, 1]")
        if self.points.shape[0] != lam.size:
            raise DomainError("one interpolant per lambda required")
        if self.rule not in _RULES:
            raise DomainError(f"unknown rule {self.rule!r}")


@dataclass(frozen=True)
class PathDiagnostics:
    """Per-interpolant norms, consecutive step lengths, and their spread."""

    norms: np.ndarray
    step_lengths: np.ndarray
    spacing_cv: float


@dataclass(frozen=True)
class DecodedPath:
    """A latent/manifold path together with its data-space decoding.

    ``decoded`` includes the decoded endpoints (first and last row);
    ``interior`` is the decoded path without them.
    """

    latent: InterpolationPath
    decoded: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        return self.decoded[1:-1]


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("endpoints must be vectors of equal dimension")
    return a, b


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0):
        raise DomainError("lambda must lie in [0, 1]")
    return lam


def lerp(z_a, z_b, lam: float) -> np.ndarray:
    """(1 - lambda) z_a + lambda z_b."""
    z_a, z_b = _pair(z_a, z_b)
    lam = _check_lambda(lam)
    return (1.0 - lam) * z_a + lam * z_b


def nclerp(z_a, z_b, lam: float) -> np.ndarray:
    """Norm-corrected lerp: the linear interpolant rescaled to norm
    (1 - lambda) ||z_a|| + lambda ||z_b||.

    Fails when the linear interpolant (nearly) vanishes, where no
    rescaling direction exists.
    """
    z_a, z_b = _pair(z_a, z_b)
    lam = _check_lambda(lam)
    lin = (1.0 - lam) * z_a + lam * z_b
    norm = float(np.linalg.norm(lin))
    if norm < 1e-12:
        raise DegeneratePathError("linear interpolant vanishes; norm correction undefined")
    target = (1.0 - lam) * float(np.linalg.norm(z_a)) + lam * float(np.linalg.norm(z_b))
    return lin * (target / norm)


def slerp(s_a, s_b, lam: float) -> np.ndarray:
    """Great-circle interpolation between unit vectors.

    The angle from s_a grows linearly: acos(s_a . gamma(lambda)) =
    lambda * omega.  Antipodal endpoints have no unique great circle and
    raise; (nearly) identical endpoints return s_a, the constant-path
    limit.
    """
    s_a, s_b = _pair(s_a, s_b)
    lam = _check_lambda(lam)
    s_a = check_sphere_point(s_a)
    s_b = check_sphere_point(s_b)
    omega = math.acos(float(np.clip(s_a @ s_b, -1.0, 1.0)))
    if omega > math.pi - 1e-6:
        raise DegeneratePathError("antipodal endpoints: the geodesic is not unique")
    if omega < 1e-9:
        return s_a.copy()
    sin_omega = math.sin(omega)
    return (math.sin((1.0 - lam) * omega) / sin_omega) * s_a \
        + (math.sin(lam * omega) / sin_omega) * s_b


def simplex_lerp(a, b, lam: float) -> np.ndarray:
    """Coordinatewise lerp; convexity keeps the result on the simplex."""
    a, b = _pair(a, b)
    lam = _check_lambda(lam)
    a = check_simplex_point(a)
    b = check_simplex_point(b)
    return (1.0 - lam) * a + lam * b


_RULE_FN = {"lerp": lerp, "nclerp": nclerp, "slerp": slerp, "simplex_lerp": simplex_lerp}


def interpolation_path(rule: str, a, b, lambdas) -> InterpolationPath:
    """Evaluate one rule on a lambda grid and package the result."""
    if rule not in _RULE_FN:
        raise DomainError(f"unknown rule {rule!r}")
    lambdas = np.asarray(lambdas, dtype=np.float64)
    fn = _RULE_FN[rule]
    points = np.stack([fn(a, b, lam) for lam in lambdas])
    return InterpolationPath(endpoint_a=np.asarray(a, dtype=np.float64),
                             endpoint_b=np.asarray(b, dtype=np.float64),
                             lambdas=lambdas, points=points, rule=rule)


def default_rule(base) -> str:
    """The rule each base geometry calls for: lerp on Gaussian latents,
    slerp on the sphere, coordinatewise lerp on the simplex."""
    if isinstance(base, GaussianBase):
        return "lerp"
    if isinstance(base, VmfBase):
        return "slerp"
    if isinstance(base, DirichletBase):
        return "simplex_lerp"
    raise DomainError(f"unknown base distribution {type(base).__name__}")


def compatible_rules(base) -> tuple[str, ...]:
    if isinstance(base, GaussianBase):
        return ("lerp", "nclerp")
    if isinstance(base, VmfBase):
        return ("slerp",)
    if isinstance(base, DirichletBase):
        return ("simplex_lerp",)
    raise DomainError(f"unknown base distribution {type(base).__name__}")


def data_interpolate(model: FlowModel, x_a, x_b, k: int,
                     rule: str | None = None) -> DecodedPath:
    """Encode two data points, interpolate in the model's base geometry,
    and decode ``k`` equally lambda-spaced interior points.

    Gaussian models interpolate the latent directly (lerp, or nclerp when
    requested); vMF models slerp the sphere points; Dirichlet models
    interpolate on the simplex.  The decoded endpoints (rows 0 and -1)
    reproduce the inputs up to the chain round-trip tolerance.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if rule is None:
        rule = default_rule(model.base)
    if rule not in compatible_rules(model.base):
        raise DomainError(
            f"rule {rule!r} is incompatible with base {type(model.base).__name__}")
    x = np.stack([np.asarray(x_a, dtype=np.float64), np.asarray(x_b, dtype=np.float64)])
    z, _ = model.forward(x)
    pts = model.to_manifold(z).point if model.manifold != "none" else z
    lambdas = np.linspace(0.0, 1.0, k + 2)
    path = interpolation_path(rule, pts[0], pts[1], lambdas)
    latent = model.from_manifold(path.points) if model.manifold != "none" else path.points
    decoded = model.inverse(latent)
    return DecodedPath(latent=path, decoded=decoded)


def path_diagnostics(path: InterpolationPath) -> PathDiagnostics:
    """Norms, consecutive Euclidean step lengths, and the step-length
    coefficient of variation (0 means perfectly even spatial spacing)."""
    pts = np.asarray(path.points, dtype=np.float64)
    if pts.shape[0] < 3:
        raise DomainError("diagnostics need at least 3 points including endpoints")
    norms = np.linalg.norm(pts, axis=1)
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    mean = float(steps.mean())
    cv = float(steps.std() / mean) if mean > 0 else 0.0
    return PathDiagnostics(norms=norms, step_lengths=steps, spacing_cv=cv)
