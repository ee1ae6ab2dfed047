"""Base distributions: standard Gaussian, von Mises-Fisher, and Dirichlet.

Each distribution owns its exact log-density (full normalizer included),
an exact sampler driven by an explicit ``numpy.random.Generator``, and the
temperature transformation: drawing from ``p(z)^(1/T^2)`` is a Gaussian
with standard deviation T, or a vMF with concentration ``kappa / T^2``.
No temperature rule exists for the Dirichlet, so that combination raises.

Distribution objects are immutable; concurrent `log_density` calls are
safe, concurrent sampling needs independent generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SupportError, UnsupportedTemperatureError
from .special import log_bessel_i, log_gamma

__all__ = [
    "GaussianBase",
    "VmfBase",
    "DirichletBase",
    "Temperature",
    "BaseDistribution",
    "log_density",
    "sample",
    "with_temperature",
    "vmf_mean_resultant_length",
]

_SUPPORT_TOL = 1e-8


@dataclass(frozen=True)
class Temperature:
    """Sampling temperature; t = 1 is the identity."""

    t: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t > 0):
            raise DomainError("temperature must be a finite positive real")


@dataclass(frozen=True)
class GaussianBase:
    """Standard Gaussian on R^d.

    ``scale`` exists solely so `with_temperature` can return a first-class
    distribution (sigma' = T); direct construction is the standard
    Gaussian, and configs never set it.
    """

    dim: int
    scale: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DomainError("scale must be a finite positive real")

    @property
    def ambient_dim(self) -> int:
        return self.dim


@dataclass(frozen=True, eq=False)
class VmfBase:
    """von Mises-Fisher on the unit sphere in R^{d+1}.

    kappa = 0 (the uniform distribution) is excluded: the stereographic
    pullback needs mass bounded away from the north pole.
    """

    dim: int
    mu: np.ndarray = field(repr=False)
    kappa: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.shape != (self.dim + 1,):
            raise DomainError(f"mu must have {self.dim + 1} coordinates")
        norm = float(np.linalg.norm(mu))
        if abs(norm - 1.0) > 1e-10:
            raise DomainError("mu must have unit 2-norm")
        object.__setattr__(self, "mu", mu / norm)
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise DomainError("kappa must be a finite positive real")

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def log_normalizer(self) -> float:
        """log C_m(kappa) with m = d+1 ambient coordinates."""
        m = self.ambient_dim
        return (0.5 * m - 1.0) * math.log(self.kappa) \
            - 0.5 * m * math.log(2.0 * math.pi) \
            - log_bessel_i(0.5 * m - 1.0, self.kappa)


@dataclass(frozen=True, eq=False)
class DirichletBase:
    """Dirichlet on the simplex in R^{d+1} with concentration vector alpha."""

    dim: int
    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if alpha.ndim == 0:
            alpha = np.full(self.dim + 1, float(alpha))
        if alpha.shape != (self.dim + 1,):
            raise DomainError(f"alpha must have {self.dim + 1} components")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
            raise DomainError("all alpha components must be positive")
        object.__setattr__(self, "alpha", alpha)

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def log_normalizer(self) -> float:
        """log Z(alpha) = sum log Gamma(alpha_k) - log Gamma(sum alpha)."""
        return float(np.sum(log_gamma(self.alpha)) - log_gamma(self.alpha.sum()))


BaseDistribution = GaussianBase | VmfBase | DirichletBase


def _as_points(x, width: int, name: str):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise SupportError(f"{name} expects points with {width} coordinates")
    return x, single


def log_density(base: BaseDistribution, point) -> float | np.ndarray:
    """Exact log-density of ``point`` (a vector or batch) under ``base``.

    Points must lie on the support within 1e-8; small violations from
    accumulated roundoff are renormalized rather than rejected.
    """
    if isinstance(base, GaussianBase):
        x, single = _as_points(point, base.dim, "gaussian log_density")
        if not np.all(np.isfinite(x)):
            raise SupportError("point has non-finite coordinates")
        out = -0.5 * (x * x).sum(axis=1) / base.scale ** 2 \
            - base.dim * math.log(base.scale) \
            - 0.5 * base.dim * math.log(2.0 * math.pi)
        return float(out[0]) if single else out

    if isinstance(base, VmfBase):
        s, single = _as_points(point, base.ambient_dim, "vmf log_density")
        if not np.all(np.isfinite(s)):
            raise SupportError("point has non-finite coordinates")
        norms = np.linalg.norm(s, axis=1)
        if np.any(np.abs(norms - 1.0) > _SUPPORT_TOL):
            raise SupportError("vMF point must have unit 2-norm")
        s = s / norms[:, None]
        out = base.log_normalizer() + base.kappa * (s @ base.mu)
        return float(out[0]) if single else out

    if isinstance(base, DirichletBase):
        s, single = _as_points(point, base.ambient_dim, "dirichlet log_density")
        if not np.all(np.isfinite(s)):
            raise SupportError("point has non-finite coordinates")
        if np.any(s < 0):
            raise SupportError("Dirichlet point must be nonnegative")
        sums = s.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _SUPPORT_TOL):
            raise SupportError("Dirichlet point must sum to 1")
        s = s / sums[:, None]
        zero = s == 0.0
        if np.any(zero & (base.alpha < 1.0)[None, :]):
            raise SupportError("zero component with alpha < 1 has unbounded density")
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(s)
            terms = np.where(zero & (base.alpha == 1.0)[None, :], 0.0,
                             (base.alpha - 1.0)[None, :] * logs)
        out = terms.sum(axis=1) - base.log_normalizer()
        return float(out[0]) if single else out

    raise DomainError(f"unknown base distribution {type(base).__name__}")


def log_density_grad(base: BaseDistribution, point: np.ndarray) -> np.ndarray:
    """Gradient of `log_density` with respect to the point coordinates.

    For the manifold bases the point is treated as free coordinates in
    R^{d+1}; the manifold maps' VJPs project the result correctly.
    """
    x = np.asarray(point, dtype=np.float64)
    if isinstance(base, GaussianBase):
        return -x / base.scale ** 2
    if isinstance(base, VmfBase):
        return np.broadcast_to(base.kappa * base.mu, x.shape).copy()
    if isinstance(base, DirichletBase):
        return (base.alpha - 1.0) / x
    raise DomainError(f"unknown base distribution {type(base).__name__}")


def with_temperature(base: BaseDistribution, temp: Temperature) -> BaseDistribution:
    """The distribution proportional to ``p^(1/T^2)``.

    Gaussian: sigma' = T (times any existing scale).  vMF: kappa' =
    kappa / T^2.  The Dirichlet has no temperature rule and raises for
    T != 1.
    """
    if isinstance(base, GaussianBase):
        if temp.t == 1.0:
            return base
        return GaussianBase(dim=base.dim, scale=base.scale * temp.t)
    if isinstance(base, VmfBase):
        if temp.t == 1.0:
            return base
        return VmfBase(dim=base.dim, mu=base.mu, kappa=base.kappa / temp.t ** 2)
    if isinstance(base, DirichletBase):
        if temp.t == 1.0:
            return base
        raise UnsupportedTemperatureError(
            "no temperature rule exists for the Dirichlet base")
    raise DomainError(f"unknown base distribution {type(base).__name__}")


def _sample_vmf_cosines(kappa: float, m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    # Rejection sampler for t = mu . s  (Ulrich's method with Wood's
    # envelope).  The envelope constant divides by m-1, the sphere
    # dimension of the ambient space R^m; acceptance is ~2/3 or better.
    dm = float(m - 1)
    b = dm / (2.0 * kappa + math.hypot(2.0 * kappa, dm))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dm * math.log1p(-x0 * x0)
    out = np.empty(n)
    got = 0
    while got < n:
        k = n - got
        z = rng.beta(dm / 2.0, dm / 2.0, size=k)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=k)
        accept = kappa * w + dm * np.log1p(-x0 * w) - c >= np.log(u)
        take = w[accept]
        out[got:got + take.size] = take
        got += take.size
    return out


def _sample_vmf(base: VmfBase, n: int, rng: np.random.Generator) -> np.ndarray:
    m = base.ambient_dim
    w = _sample_vmf_cosines(base.kappa, m, n, rng)
    v = rng.standard_normal((n, m - 1))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    s = np.concatenate([np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * v,
                        w[:, None]], axis=1)
    # Householder reflection carrying the north pole onto mu.
    pole = np.zeros(m)
    pole[-1] = 1.0
    u = pole - base.mu
    norm = np.linalg.norm(u)
    if norm > 1e-12:
        u /= norm
        s = s - 2.0 * np.outer(s @ u, u)
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    return s


def sample(base: BaseDistribution, n: int, temp: Temperature | float = 1.0,
           rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw ``n`` i.i.d. support points at the given temperature.

    Deterministic given the generator state.  vMF outputs have unit
    2-norm; Dirichlet outputs are nonnegative and sum to one.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    if not isinstance(temp, Temperature):
        temp = Temperature(float(temp))
    if rng is None:
        rng = np.random.default_rng()
    tempered = with_temperature(base, temp)
    if isinstance(tempered, GaussianBase):
        return tempered.scale * rng.standard_normal((n, tempered.dim))
    if isinstance(tempered, VmfBase):
        return _sample_vmf(tempered, n, rng)
    if isinstance(tempered, DirichletBase):
        g = rng.gamma(shape=tempered.alpha, size=(n, tempered.ambient_dim))
        return g / g.sum(axis=1, keepdims=True)
    raise DomainError(f"unknown base distribution {type(base).__name__}")


def vmf_mean_resultant_length(dim: int, kappa: float) -> float:
    """Expected resultant length A_m(kappa) = I_{m/2}(kappa)/I_{m/2-1}(kappa)
    for the vMF on the sphere in R^{d+1} (m = d+1)."""
    m = dim + 1
    return math.exp(log_bessel_i(0.5 * m, kappa) - log_bessel_i(0.5 * m - 1.0, kappa))
