"""Dataset ingestion: seeded synthetic generators, CSV, and IDX files.

A dataset spec is either a builtin generator expression such as
``two_moons(n=2000, noise=0.05, seed=7)`` or a file path.  CSV files hold
comma-separated floats with an optional header row; ``path.csv#labels``
treats the final column as integer labels.  IDX files are the big-endian
image/label containers used by the MNIST-family datasets; pixel values
are scaled to [0, 1].  ``path#labels=other`` attaches a separate labels
file of either format.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError

__all__ = [
    "DatasetHandle",
    "two_moons",
    "rings",
    "gaussian_mixture",
    "load_csv",
    "load_idx",
    "load_dataset",
]

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class DatasetHandle:
    """An (n, d) data matrix with optional integer labels and provenance."""

    data: np.ndarray
    labels: np.ndarray | None
    provenance: str
    value_range: tuple[float, float]

    def __post_init__(self):
        if self.data.ndim != 2:
            raise DomainError("data must be an (n, d) matrix")
        if not np.all(np.isfinite(self.data)):
            raise DomainError("data must be finite")
        if self.labels is not None and self.labels.shape[0] != self.data.shape[0]:
            raise DomainError("labels length must match the data")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def _handle(data, labels, provenance) -> DatasetHandle:
    data = np.asarray(data, dtype=np.float64)
    return DatasetHandle(data=data, labels=labels, provenance=provenance,
                         value_range=(float(data.min()), float(data.max())))


def two_moons(n: int, noise: float = 0.05, seed: int = 0) -> DatasetHandle:
    """Two interleaved half circles in 2-D; labels identify the moon."""
    if n < 2:
        raise DomainError("two_moons needs n >= 2")
    rng = np.random.default_rng(seed)
    n_a = n // 2
    t_a = rng.uniform(0.0, math.pi, n_a)
    t_b = rng.uniform(0.0, math.pi, n - n_a)
    upper = np.stack([np.cos(t_a), np.sin(t_a)], axis=1)
    lower = np.stack([1.0 - np.cos(t_b), 0.5 - np.sin(t_b)], axis=1)
    data = np.concatenate([upper, lower]) + noise * rng.standard_normal((n, 2))
    labels = np.concatenate([np.zeros(n_a, dtype=np.intp), np.ones(n - n_a, dtype=np.intp)])
    return _handle(data, labels, f"two_moons(n={n}, noise={noise}, seed={seed})")


def rings(n: int, radii=(1.0, 2.0), noise: float = 0.05, seed: int = 0) -> DatasetHandle:
    """Concentric noisy circles; labels identify the ring."""
    radii = tuple(float(r) for r in np.atleast_1d(radii))
    if n < len(radii):
        raise DomainError("rings needs at least one point per ring")
    rng = np.random.default_rng(seed)
    counts = [n // len(radii)] * len(radii)
    counts[-1] += n - sum(counts)
    parts, labels = [], []
    for i, (r, c) in enumerate(zip(radii, counts)):
        theta = rng.uniform(0.0, 2.0 * math.pi, c)
        rad = r + noise * rng.standard_normal(c)
        parts.append(np.stack([rad * np.cos(theta), rad * np.sin(theta)], axis=1))
        labels.append(np.full(c, i, dtype=np.intp))
    return _handle(np.concatenate(parts), np.concatenate(labels),
                   f"rings(n={n}, radii={radii}, noise={noise}, seed={seed})")


def gaussian_mixture(n: int, centers=4, scale: float = 0.25, seed: int = 0) -> DatasetHandle:
    """Equal-weight isotropic Gaussian blobs; ``centers`` is either a count
    (placed on the unit circle) or an explicit (k, d) array of means."""
    rng = np.random.default_rng(seed)
    if np.isscalar(centers):
        k = int(centers)
        angles = 2.0 * math.pi * np.arange(k) / k
        centers = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        centers = np.asarray(centers, dtype=np.float64)
        if centers.ndim != 2:
            raise DomainError("centers must be a (k, d) array or an integer count")
        k = centers.shape[0]
    labels = rng.integers(0, k, n)
    data = centers[labels] + scale * rng.standard_normal((n, centers.shape[1]))
    return _handle(data, labels.astype(np.intp),
                   f"gaussian_mixture(n={n}, k={k}, scale={scale}, seed={seed})")


_BUILTINS = {"two_moons": two_moons, "rings": rings, "gaussian_mixture": gaussian_mixture}


def _parse_builtin(expr: str) -> DatasetHandle:
    try:
        node = ast.parse(expr, mode="eval").body
        if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
            raise ValueError
        name = node.func.id
        args = [ast.literal_eval(a) for a in node.args]
        kwargs = {kw.arg: ast.literal_eval(kw.value) for kw in node.keywords}
    except (SyntaxError, ValueError):
        raise FormatError(f"cannot parse dataset expression {expr!r}") from None
    if name not in _BUILTINS:
        raise FormatError(f"unknown builtin dataset {name!r}; "
                          f"choose from {sorted(_BUILTINS)}")
    return _BUILTINS[name](*args, **kwargs)


def load_csv(path, labels: bool = False) -> DatasetHandle:
    """Comma-separated floats, one row per line, optional header row.

    A value that fails to parse, or parses to NaN/inf, raises
    `FormatError` with its line number.
    """
    path = Path(path)
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                row = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise FormatError("unparsable CSV value",
                                  detail=f"{path} line {lineno}") from None
            if any(not math.isfinite(v) for v in row):
                raise FormatError("non-finite CSV value", detail=f"{path} line {lineno}")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError("inconsistent CSV row width",
                                  detail=f"{path} line {lineno}")
            rows.append(row)
    if not rows:
        raise FormatError(f"{path} holds no data rows")
    data = np.asarray(rows, dtype=np.float64)
    label_col = None
    if labels:
        if data.shape[1] < 2:
            raise FormatError(f"{path} has no label column to split off")
        label_col = data[:, -1].astype(np.intp)
        data = data[:, :-1]
    return _handle(data, label_col, str(path))


def load_idx(path) -> DatasetHandle:
    """Big-endian IDX container: magic 0x00000803 for uint8 image stacks
    (flattened to vectors, scaled to [0, 1]) or 0x00000801 for uint8
    labels."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4:
        raise FormatError("truncated IDX file", detail=f"{path} byte 0")
    magic = int.from_bytes(raw[0:4], "big")
    if magic == _IDX_IMAGES_MAGIC:
        if len(raw) < 16:
            raise FormatError("truncated IDX image header", detail=f"{path} byte 4")
        n = int.from_bytes(raw[4:8], "big")
        r = int.from_bytes(raw[8:12], "big")
        c = int.from_bytes(raw[12:16], "big")
        expected = 16 + n * r * c
        if len(raw) != expected:
            raise FormatError(
                f"IDX payload is {len(raw) - 16} bytes, header promises {n * r * c}",
                detail=f"{path} byte 16")
        data = np.frombuffer(raw, dtype=np.uint8, offset=16).astype(np.float64) / 255.0
        return DatasetHandle(data=data.reshape(n, r * c), labels=None,
                             provenance=str(path), value_range=(0.0, 1.0))
    if magic == _IDX_LABELS_MAGIC:
        if len(raw) < 8:
            raise FormatError("truncated IDX label header", detail=f"{path} byte 4")
        n = int.from_bytes(raw[4:8], "big")
        if len(raw) != 8 + n:
            raise FormatError(
                f"IDX payload is {len(raw) - 8} bytes, header promises {n}",
                detail=f"{path} byte 8")
        labels = np.frombuffer(raw, dtype=np.uint8, offset=8).astype(np.intp)
        return DatasetHandle(data=labels[:, None].astype(np.float64), labels=labels,
                             provenance=str(path), value_range=(0.0, 255.0))
    raise FormatError(f"unrecognized IDX magic 0x{magic:08x}", detail=f"{path} byte 0")


def load_dataset(spec) -> DatasetHandle:
    """Resolve a dataset spec: builtin expression, CSV path, or IDX path.

    ``#labels`` after a CSV path splits off the final column as labels;
    ``#labels=<path>`` attaches a separate label file (CSV single column
    or IDX labels).
    """
    if isinstance(spec, DatasetHandle):
        return spec
    if not isinstance(spec, str):
        raise DomainError("dataset spec must be a string or DatasetHandle")
    spec = spec.strip()
    if "(" in spec:
        return _parse_builtin(spec)

    label_path = None
    csv_labels = False
    base = spec
    if "#labels=" in spec:
        base, label_path = spec.split("#labels=", 1)
    elif spec.endswith("#labels"):
        base, csv_labels = spec[: -len("#labels")], True

    path = Path(base)
    if not path.exists():
        raise FormatError(f"dataset file {path} does not exist")
    with open(path, "rb") as fh:
        head = fh.read(4)
    is_idx = len(head) == 4 and int.from_bytes(head, "big") in (
        _IDX_IMAGES_MAGIC, _IDX_LABELS_MAGIC)
    handle = load_idx(path) if is_idx else load_csv(path, labels=csv_labels)

    if label_path is not None:
        labels_handle = load_dataset(label_path)
        labels = labels_handle.labels
        if labels is None:
            labels = labels_handle.data[:, -1].astype(np.intp)
        if labels.shape[0] != handle.n:
            raise FormatError("label file length does not match the data")
        handle = DatasetHandle(data=handle.data, labels=labels,
                               provenance=f"{handle.provenance}+{label_path}",
                               value_range=handle.value_range)
    return handle
