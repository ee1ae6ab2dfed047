"""Invertible layer zoo, chain composition, and exact log-likelihood.

The chain maps data ``x`` to a latent ``z`` while accumulating per-example
log-determinants.  With a Gaussian base the latent is scored directly;
with a vMF or Dirichlet base the latent is first pushed through the
matching manifold map, whose density-change term joins the sum:

    log p(x) = log p_base(mapped z) + sum_layers log|det J| + map term

Every layer implements ``forward`` / ``inverse`` plus a reverse-mode
``backward`` (vector-Jacobian product with cached activations), so the
training module can accumulate exact gradients without an autodiff
framework.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import bases as _bases
from . import maps as _maps
from .bases import BaseDistribution, DirichletBase, GaussianBase, VmfBase
from .errors import DomainError, NonFiniteError

__all__ = [
    "CouplingNet",
    "AffineCoupling",
    "ActNorm",
    "Permutation",
    "FlowModel",
    "alternating_mask",
    "build_flow_model",
]


class CouplingNet:
    """Dense net mapping the identity half to per-dimension (raw log-scale,
    shift) pairs.

    Hidden layers use tanh; the final layer starts at zero so a fresh
    coupling layer is the identity map.
    """

    def __init__(self, in_dim: int, out_dim: int, hidden: Sequence[int] = (64, 64),
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng()
        self.in_dim = in_dim
        self.out_dim = out_dim
        widths = [in_dim, *hidden, 2 * out_dim]
        self.weights = []
        self.biases = []
        for i in range(len(widths) - 1):
            fan_in, fan_out = widths[i], widths[i + 1]
            last = i == len(widths) - 2
            if last or fan_in == 0:
                w = np.zeros((fan_out, fan_in))
            else:
                w = rng.standard_normal((fan_out, fan_in)) / math.sqrt(fan_in)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def set_param(self, name: str, value: np.ndarray) -> None:
        kind, idx = name[0], int(name[1:])
        target = self.weights if kind == "w" else self.biases
        if value.shape != target[idx].shape:
            raise DomainError(f"shape mismatch for {name}")
        target[idx] = value

    def forward(self, h: np.ndarray):
        acts = [h]
        out = h
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out = out @ w.T + b
            if i < n_layers - 1:
                out = np.tanh(out)
                acts.append(out)
        return out, acts

    def backward(self, acts, grad_out):
        grads = {}
        g = grad_out
        n_layers = len(self.weights)
        for i in range(n_layers - 1, -1, -1):
            a_prev = acts[i]
            grads[f"w{i}"] = g.T @ a_prev
            grads[f"b{i}"] = g.sum(axis=0)
            g = g @ self.weights[i]
            if i > 0:
                g = g * (1.0 - a_prev * a_prev)  # through the tanh
        return g, grads


class AffineCoupling:
    """RealNVP-style affine coupling on a fixed index partition.

    The identity half feeds the net; the transformed half becomes
    ``x * exp(log_scale) + shift``.  Raw log-scales pass through
    ``bound * tanh(raw / bound)`` so early optimization cannot blow up
    ``exp(log_scale)``.
    """

    def __init__(self, dim: int, id_idx, tr_idx, hidden: Sequence[int] = (64, 64),
                 clamp: float = 5.0, rng: np.random.Generator | None = None):
        id_idx = np.asarray(id_idx, dtype=np.intp)
        tr_idx = np.asarray(tr_idx, dtype=np.intp)
        merged = np.sort(np.concatenate([id_idx, tr_idx]))
        if not np.array_equal(merged, np.arange(dim)):
            raise DomainError("mask halves must partition the dimension indices")
        if tr_idx.size == 0:
            raise DomainError("transformed half must be nonempty")
        if not (clamp > 0):
            raise DomainError("clamp bound must be positive")
        self.dim = dim
        self.id_idx = id_idx
        self.tr_idx = tr_idx
        self.clamp = float(clamp)
        self.net = CouplingNet(id_idx.size, tr_idx.size, hidden, rng)

    @property
    def params(self):
        return self.net.params

    def set_param(self, name, value):
        self.net.set_param(name, value)

    def _scales(self, h):
        net_out, acts = self.net.forward(h)
        k = self.tr_idx.size
        raw = net_out[:, :k]
        shift = net_out[:, k:]
        log_scale = self.clamp * np.tanh(raw / self.clamp)
        return raw, shift, log_scale, acts

    def forward(self, x, with_cache: bool = False):
        h = x[:, self.id_idx]
        raw, shift, log_scale, acts = self._scales(h)
        y = x.copy()
        y[:, self.tr_idx] = x[:, self.tr_idx] * np.exp(log_scale) + shift
        log_det = log_scale.sum(axis=1)
        if with_cache:
            cache = (x, raw, shift, log_scale, acts)
            return y, log_det, cache
        return y, log_det

    def inverse(self, y):
        h = y[:, self.id_idx]
        _, shift, log_scale, _ = self._scales(h)
        x = y.copy()
        x[:, self.tr_idx] = (y[:, self.tr_idx] - shift) * np.exp(-log_scale)
        return x

    def backward(self, cache, grad_y, grad_log_det):
        x, raw, shift, log_scale, acts = cache
        e = np.exp(log_scale)
        gy_tr = grad_y[:, self.tr_idx]
        grad_ls = gy_tr * x[:, self.tr_idx] * e + grad_log_det[:, None]
        t = np.tanh(raw / self.clamp)
        grad_raw = grad_ls * (1.0 - t * t)
        grad_net_out = np.concatenate([grad_raw, gy_tr], axis=1)
        grad_h, net_grads = self.net.backward(acts, grad_net_out)
        grad_x = np.zeros_like(grad_y)
        grad_x[:, self.tr_idx] = gy_tr * e
        grad_x[:, self.id_idx] = grad_y[:, self.id_idx] + grad_h
        return grad_x, net_grads


class ActNorm:
    """Per-dimension affine normalization, y = scale * x + bias.

    ``initialize`` sets the parameters from a data batch so the outputs
    start at zero mean and unit variance per dimension.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.scale = np.ones(dim)
        self.bias = np.zeros(dim)
        self.initialized = False

    @property
    def params(self):
        return {"scale": self.scale, "bias": self.bias}

    def set_param(self, name, value):
        if value.shape != (self.dim,):
            raise DomainError(f"shape mismatch for {name}")
        setattr(self, name, value)

    def initialize(self, x: np.ndarray) -> None:
        std = x.std(axis=0)
        std = np.where(std < 1e-6, 1.0, std)
        self.scale = 1.0 / std
        self.bias = -x.mean(axis=0) / std
        self.initialized = True

    def forward(self, x, with_cache: bool = False):
        y = x * self.scale + self.bias
        log_det = np.full(x.shape[0], np.log(np.abs(self.scale)).sum())
        if with_cache:
            return y, log_det, x
        return y, log_det

    def inverse(self, y):
        return (y - self.bias) / self.scale

    def backward(self, cache, grad_y, grad_log_det):
        x = cache
        grad_x = grad_y * self.scale
        grads = {
            "scale": (grad_y * x).sum(axis=0) + grad_log_det.sum() / self.scale,
            "bias": grad_y.sum(axis=0),
        }
        return grad_x, grads


class Permutation:
    """Fixed channel permutation; volume preserving."""

    def __init__(self, perm):
        perm = np.asarray(perm, dtype=np.intp)
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise DomainError("not a permutation")
        self.perm = perm
        self.inv_perm = np.argsort(perm)

    @property
    def params(self):
        return {}

    def set_param(self, name, value):
        raise DomainError("permutation layers have no parameters")

    def forward(self, x, with_cache: bool = False):
        y = x[:, self.perm]
        log_det = np.zeros(x.shape[0])
        if with_cache:
            return y, log_det, None
        return y, log_det

    def inverse(self, y):
        return y[:, self.inv_perm]

    def backward(self, cache, grad_y, grad_log_det):
        grad_x = np.empty_like(grad_y)
        grad_x[:, self.perm] = grad_y
        return grad_x, {}


_MANIFOLD_FOR_BASE = {
    GaussianBase: "none",
    VmfBase: "sphere",
    DirichletBase: "simplex",
}


class FlowModel:
    """An ordered layer chain over one of the three base distributions.

    The manifold map is determined by the base: Gaussian scores the latent
    directly, vMF via the stereographic sphere map, Dirichlet via the
    stick-breaking simplex map.
    """

    def __init__(self, dim: int, layers: Sequence, base: BaseDistribution,
                 meta: dict | None = None):
        if base.dim != dim:
            raise DomainError(f"base dimension {base.dim} != flow dimension {dim}")
        self.dim = dim
        self.layers = list(layers)
        self.base = base
        self.manifold = _MANIFOLD_FOR_BASE[type(base)]
        self.meta = dict(meta or {})

    # -- chain ------------------------------------------------------------

    def _check_batch(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DomainError(f"expected points with {self.dim} coordinates")
        return x

    def forward(self, x):
        """Data -> latent with the accumulated per-example log-determinant."""
        h = self._check_batch(x)
        log_det = np.zeros(h.shape[0])
        for layer in self.layers:
            h, ld = layer.forward(h)
            log_det += ld
        return h, log_det

    def forward_cached(self, x):
        """Like `forward` but retains per-layer caches for `backward`, and
        diagnoses which layer produced a non-finite value."""
        h = self._check_batch(x)
        log_det = np.zeros(h.shape[0])
        caches = []
        for i, layer in enumerate(self.layers):
            h, ld, cache = layer.forward(h, with_cache=True)
            if not np.all(np.isfinite(h)):
                raise NonFiniteError("non-finite activation", layer_index=i)
            log_det += ld
            caches.append(cache)
        return h, log_det, caches

    def inverse(self, z):
        """Latent -> data (pre-manifold-map coordinates in R^d)."""
        h = self._check_batch(z)
        for layer in reversed(self.layers):
            h = layer.inverse(h)
        return h

    def init_actnorm(self, x) -> None:
        """Data-dependent ActNorm initialization from one batch."""
        h = self._check_batch(x)
        for layer in self.layers:
            if isinstance(layer, ActNorm) and not layer.initialized:
                layer.initialize(h)
            h, _ = layer.forward(h)

    # -- manifold ----------------------------------------------------------

    def to_manifold(self, z) -> _maps.MapResult:
        """Apply the base's manifold map to latents (identity for Gaussian)."""
        if self.manifold == "sphere":
            return _maps.sphere_forward(z)
        if self.manifold == "simplex":
            return _maps.simplex_forward(z)
        z = np.asarray(z, dtype=np.float64)
        return _maps.MapResult(point=z, log_det=np.zeros(z.shape[0]) if z.ndim == 2 else 0.0)

    def from_manifold(self, s) -> np.ndarray:
        if self.manifold == "sphere":
            return _maps.sphere_inverse(s)
        if self.manifold == "simplex":
            return _maps.simplex_inverse(s)
        return np.asarray(s, dtype=np.float64)

    # -- likelihood ---------------------------------------------------------

    def log_prob(self, x) -> np.ndarray:
        """Exact per-example log-density of data under the flow."""
        z, log_det = self.forward(x)
        mapped = self.to_manifold(z)
        return _bases.log_density(self.base, mapped.point) + mapped.log_det + log_det

    def bits_per_dim(self, x, data_kind: str = "continuous",
                     bit_depth: int | None = None,
                     rng: np.random.Generator | None = None) -> float:
        """Mean -log2 p(x) / d.

        ``quantized`` inputs are integers in [0, 2^bit_depth); they are
        uniformly dequantized onto [0, 1) and the density is rescaled by
        the bin width, so a near-uniform model scores ~bit_depth BPD.
        """
        x = self._check_batch(x)
        if data_kind == "continuous":
            nll = -self.log_prob(x).mean()
            return float(nll / (self.dim * math.log(2.0)))
        if data_kind == "quantized":
            if bit_depth is None:
                raise DomainError("quantized data needs a bit_depth")
            levels = 2 ** bit_depth
            if np.any(x != np.round(x)) or np.any(x < 0) or np.any(x >= levels):
                raise DomainError(f"quantized inputs must be integers in [0, {levels})")
            if rng is None:
                rng = np.random.default_rng()
            y = (x + rng.uniform(size=x.shape)) / levels
            nll = -self.log_prob(y).mean()
            return float(nll / (self.dim * math.log(2.0)) + bit_depth)
        raise DomainError("data_kind must be 'continuous' or 'quantized'")

    def sample(self, n: int, temp=1.0, rng: np.random.Generator | None = None) -> np.ndarray:
        """Draw data-space samples: base draw, manifold inverse, chain inverse."""
        if rng is None:
            rng = np.random.default_rng()
        pts = _bases.sample(self.base, n, temp, rng)
        if n == 0:
            return np.zeros((0, self.dim))
        z = self.from_manifold(pts)
        return self.inverse(z)

    # -- parameters ----------------------------------------------------------

    @property
    def param_spec(self) -> list[tuple[int, str, tuple]]:
        """Stable flattening order: (layer index, parameter name, shape)."""
        spec = []
        for i, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                spec.append((i, name, value.shape))
        return spec

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(shape)) for _, _, shape in self.param_spec)

    def get_flat_params(self) -> np.ndarray:
        parts = [self.layers[i].params[name].ravel() for i, name, _ in self.param_spec]
        return np.concatenate(parts) if parts else np.zeros(0)

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise DomainError("flat parameter vector has the wrong length")
        pos = 0
        for i, name, shape in self.param_spec:
            size = int(np.prod(shape))
            self.layers[i].set_param(name, flat[pos:pos + size].reshape(shape).copy())
            pos += size


def alternating_mask(dim: int, flip: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Even/odd index partition; ``flip`` swaps which half is transformed.

    At dim = 1 the identity half is empty and the net degenerates to a
    learned constant (log-scale, shift) pair, which keeps every layer type
    usable in one dimension.
    """
    idx = np.arange(dim)
    if dim == 1:
        return idx[:0], idx
    even, odd = idx[::2], idx[1::2]
    return (odd, even) if flip else (even, odd)


def build_flow_model(dim: int, base: BaseDistribution, levels: int = 1, steps: int = 8,
                     width: int = 64, clamp: float = 5.0,
                     seed: int | None = None) -> FlowModel:
    """Assemble the standard chain: levels x steps blocks of
    [ActNorm, Permutation, AffineCoupling] with alternating masks.

    Levels do not factor out coordinates at this scale; (levels, steps) is
    recorded in the model metadata.
    """
    rng = np.random.default_rng(seed)
    layers = []
    n_steps = levels * steps
    for k in range(n_steps):
        layers.append(ActNorm(dim))
        layers.append(Permutation(rng.permutation(dim)))
        id_idx, tr_idx = alternating_mask(dim, flip=bool(k % 2))
        layers.append(AffineCoupling(dim, id_idx, tr_idx, hidden=(width, width),
                                     clamp=clamp, rng=rng))
    meta = {"levels": levels, "steps": steps, "coupling_width": width, "clamp": clamp}
    return FlowModel(dim, layers, base, meta=meta)
