"""Likelihood and sample-quality metrics, and the paired-interpolation
protocol that feeds them.

FID fits a Gaussian to each feature set and reports the Frechet distance;
KID is the unbiased MMD^2 estimator under a degree-3 polynomial kernel
with a block-averaged standard error.  Features come from a pluggable
`FeatureExtractor` (identity for low-dimensional toys, per-pixel whitening
for images, or an external projection matrix), so absolute values are
only comparable across runs of this harness, never to scores computed
with a pretrained image network.  Every report says so.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .flows import FlowModel
from .interpolation import data_interpolate
from .special import matrix_sqrt_psd

__all__ = [
    "FeatureExtractor",
    "MetricReport",
    "NormHistogram",
    "ProtocolResult",
    "fid",
    "fid_from_stats",
    "kid",
    "bpd_suite",
    "interpolation_protocol",
    "norm_diagnostics",
]

_REPORT_NOTE = ("feature-space scores; not comparable to Inception-based "
                "FID/KID numbers")


@dataclass(frozen=True, eq=False)
class FeatureExtractor:
    """Deterministic map from raw vectors to metric features.

    kind 'identity' passes data through; 'whitened' standardizes each
    dimension with statistics fit on a reference set; 'external' applies a
    projection matrix loaded from an .npy file.
    """

    kind: str = "identity"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    matrix: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "FeatureExtractor":
        return cls(kind="identity")

    @classmethod
    def whitened(cls, reference) -> "FeatureExtractor":
        reference = np.asarray(reference, dtype=np.float64)
        std = reference.std(axis=0)
        return cls(kind="whitened", mean=reference.mean(axis=0),
                   std=np.where(std < 1e-8, 1.0, std))

    @classmethod
    def from_file(cls, path: str) -> "FeatureExtractor":
        return cls(kind="external", matrix=np.asarray(np.load(path), dtype=np.float64))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "identity":
            return x
        if self.kind == "whitened":
            return (x - self.mean) / self.std
        if self.kind == "external":
            return x @ self.matrix
        raise DomainError(f"unknown feature kind {self.kind!r}")


@dataclass(frozen=True)
class MetricReport:
    """One generated-vs-reference comparison with full provenance."""

    bpd: float
    fid: float
    kid: float
    kid_stderr: float
    n_reference: int
    n_generated: int
    seed: int
    feature_kind: str
    note: str = _REPORT_NOTE

    def __post_init__(self):
        if self.kid_stderr < 0:
            raise DomainError("kid_stderr must be nonnegative")
        if self.n_reference <= 0 or self.n_generated <= 0:
            raise DomainError("sample counts must be positive")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        return cls(**json.loads(text))


@dataclass(frozen=True, eq=False)
class NormHistogram:
    """Squared-norm samples with a two-sided mean check against a
    reference law (chi-squared with ``dim`` degrees of freedom, or the
    constant 1 for fixed-norm supports)."""

    sq_norms: np.ndarray
    reference: str
    ref_mean: float
    ref_var: float
    mean: float
    var: float
    z_score: float


def _feature_pair(ref, gen):
    ref = np.asarray(ref, dtype=np.float64)
    gen = np.asarray(gen, dtype=np.float64)
    if ref.ndim != 2 or gen.ndim != 2:
        raise DomainError("feature sets must be 2-D matrices")
    if ref.shape[1] != gen.shape[1]:
        raise DomainError("feature dimensions differ")
    if ref.shape[0] < 2 or gen.shape[0] < 2:
        raise DomainError("each feature set needs at least 2 rows")
    return ref, gen


def fid_from_stats(mu1, cov1, mu2, cov2) -> float:
    """Frechet distance between two Gaussians given their statistics:
    ||mu1 - mu2||^2 + Tr(cov1 + cov2 - 2 (cov1 cov2)^(1/2))."""
    mu1 = np.asarray(mu1, dtype=np.float64)
    mu2 = np.asarray(mu2, dtype=np.float64)
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    root1 = matrix_sqrt_psd(cov1)
    cross = matrix_sqrt_psd(root1 @ cov2 @ root1)  # same trace as (cov1 cov2)^(1/2)
    value = float(((mu1 - mu2) ** 2).sum()
                  + np.trace(cov1) + np.trace(cov2) - 2.0 * np.trace(cross))
    if value < -1e-6:
        raise DomainError(f"Frechet distance came out negative: {value}")
    return max(value, 0.0)


def fid(ref_features, gen_features) -> float:
    """FID with sample means and unbiased covariances; small negative
    rounding (above -1e-6) clamps to zero."""
    ref, gen = _feature_pair(ref_features, gen_features)
    return fid_from_stats(ref.mean(axis=0), np.cov(ref, rowvar=False),
                          gen.mean(axis=0), np.cov(gen, rowvar=False))


def _poly_kernel(x, y, degree, offset, scale):
    return (scale * (x @ y.T) + offset) ** degree


def _mmd2_unbiased(ref, gen, degree, offset, scale):
    m, n = ref.shape[0], gen.shape[0]
    kxx = _poly_kernel(ref, ref, degree, offset, scale)
    kyy = _poly_kernel(gen, gen, degree, offset, scale)
    kxy = _poly_kernel(ref, gen, degree, offset, scale)
    sum_xx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    sum_yy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(sum_xx + sum_yy - 2.0 * kxy.mean())


def kid(ref_features, gen_features, degree: int = 3, offset: float = 1.0,
        feature_scale: float | None = None, n_blocks: int = 10) -> tuple[float, float]:
    """Unbiased MMD^2 under k(x, y) = (scale * x.y + offset)^degree.

    ``feature_scale`` defaults to 1/feature_dim.  The standard error
    comes from the spread of the estimator over disjoint blocks of both
    sets (0.0 when the sets are too small to split).
    """
    ref, gen = _feature_pair(ref_features, gen_features)
    scale = 1.0 / ref.shape[1] if feature_scale is None else float(feature_scale)
    value = _mmd2_unbiased(ref, gen, degree, offset, scale)
    blocks = max(1, min(n_blocks, ref.shape[0] // 2, gen.shape[0] // 2))
    if blocks < 2:
        return value, 0.0
    ref_chunks = np.array_split(ref, blocks)
    gen_chunks = np.array_split(gen, blocks)
    vals = [_mmd2_unbiased(r, g, degree, offset, scale)
            for r, g in zip(ref_chunks, gen_chunks)]
    stderr = float(np.std(vals, ddof=1) / math.sqrt(blocks))
    return value, stderr


def bpd_suite(model: FlowModel, test_set, interpolated_set,
              data_kind: str = "continuous", bit_depth: int | None = None,
              rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Bits per dimension on held-out data and on interpolated samples."""
    test_set = np.asarray(test_set, dtype=np.float64)
    interpolated_set = np.asarray(interpolated_set, dtype=np.float64)
    if test_set.shape[0] == 0 or interpolated_set.shape[0] == 0:
        raise DomainError("bpd_suite needs nonempty sample sets")
    return (model.bits_per_dim(test_set, data_kind, bit_depth, rng),
            model.bits_per_dim(interpolated_set, data_kind, bit_depth, rng))


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    """Output of the paired-interpolation protocol."""

    interpolants: np.ndarray
    pairs: np.ndarray
    k: int
    within_class: bool
    skipped_classes: tuple = ()


def interpolation_protocol(model: FlowModel, data, labels=None, k: int = 5,
                           within_class: bool = False,
                           rng: np.random.Generator | None = None,
                           rule: str | None = None) -> ProtocolResult:
    """Sample floor(n/5) endpoint pairs from ``data`` and decode ``k``
    equally spaced interpolants per pair, keeping only the generated
    points (the endpoints are training data and are excluded).

    With ``within_class`` both endpoints share a label; classes with
    fewer than two members are skipped with a warning.  Without it,
    pairs are drawn uniformly, so they also cross classes.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n < 5:
        raise DomainError("the protocol needs at least 5 data points")
    if k < 1:
        raise DomainError("k must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    n_pairs = n // 5

    skipped: list = []
    if within_class:
        if labels is None:
            raise DomainError("within-class pairing requires labels")
        labels = np.asarray(labels)
        if labels.shape[0] != n:
            raise DomainError("labels length must match the data")
        members: dict = {}
        for label in np.unique(labels):
            idx = np.flatnonzero(labels == label)
            if idx.size < 2:
                skipped.append(label.item() if hasattr(label, "item") else label)
                warnings.warn(f"class {label!r} has fewer than 2 members; skipped",
                              stacklevel=2)
            else:
                members[label.item() if hasattr(label, "item") else label] = idx
        if not members:
            raise DomainError("no class has 2 or more members")
        eligible = np.concatenate(list(members.values()))
        eligible.sort()
    else:
        eligible = np.arange(n)

    pairs = np.empty((n_pairs, 2), dtype=np.intp)
    for p in range(n_pairs):
        ia = int(rng.choice(eligible))
        if within_class:
            pool = np.flatnonzero(labels == labels[ia])
        else:
            pool = np.arange(n)
        pool = pool[pool != ia]
        ib = int(rng.choice(pool))
        pairs[p] = (ia, ib)

    chunks = []
    for ia, ib in pairs:
        path = data_interpolate(model, data[ia], data[ib], k=k, rule=rule)
        chunks.append(path.interior)
    interpolants = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, data.shape[1]))
    return ProtocolResult(interpolants=interpolants, pairs=pairs, k=k,
                          within_class=within_class, skipped_classes=tuple(skipped))


def norm_diagnostics(points, reference: str = "chi2", dim: int | None = None,
                     ord: int = 2) -> NormHistogram:
    """Squared p-norm distribution of a point set against its reference.

    'chi2' expects squared 2-norms of d-dimensional standard Gaussians
    (mean d, variance 2d); 'unit' expects the constant 1, as on a unit
    p-norm sphere.  The z-score is the two-sided test statistic of the
    empirical mean against the reference mean.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise DomainError("norm_diagnostics needs a nonempty (n, d) matrix")
    sq = np.linalg.norm(points, ord=ord, axis=1) ** 2
    if reference == "chi2":
        d = points.shape[1] if dim is None else int(dim)
        ref_mean, ref_var = float(d), float(2 * d)
    elif reference == "unit":
        ref_mean, ref_var = 1.0, 0.0
    else:
        raise DomainError("reference must be 'chi2' or 'unit'")
    mean = float(sq.mean())
    var = float(sq.var(ddof=1)) if sq.size > 1 else 0.0
    se = math.sqrt(var / sq.size) if var > 0 else 0.0
    if se > 0:
        z = (mean - ref_mean) / se
    else:
        z = 0.0 if mean == ref_mean else math.inf
    return NormHistogram(sq_norms=sq, reference=reference, ref_mean=ref_mean,
                         ref_var=ref_var, mean=mean, var=var, z_score=float(z))
