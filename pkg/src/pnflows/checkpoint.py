"""Binary checkpoint format for flow models.

Layout (all integers little-endian):

    bytes 0-3    magic "SFLW"
    bytes 4-7    format version (u32, currently 1)
    bytes 8-11   header length H (u32)
    ...          header: canonical JSON (sorted keys, no whitespace) with
                 the dimension, base spec, and per-layer manifest of
                 (type tag, config, ordered parameter shapes)
    ...          payload: every parameter flattened as float64,
                 little-endian, in manifest order
    last 4       CRC-32 of everything before it (u32)

The canonical header plus exact float64 payload make save -> load -> save
byte-identical, and the trailing CRC catches any payload corruption.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .bases import DirichletBase, GaussianBase, VmfBase
from .errors import FormatError
from .flows import ActNorm, AffineCoupling, FlowModel, Permutation

__all__ = ["save_checkpoint", "load_checkpoint", "MAGIC", "VERSION"]

MAGIC = b"SFLW"
VERSION = 1


def _base_spec(base) -> dict:
    if isinstance(base, GaussianBase):
        return {"kind": "gaussian", "dim": base.dim, "scale": base.scale}
    if isinstance(base, VmfBase):
        return {"kind": "vmf", "dim": base.dim, "kappa": base.kappa,
                "mu": base.mu.tolist()}
    if isinstance(base, DirichletBase):
        return {"kind": "dirichlet", "dim": base.dim, "alpha": base.alpha.tolist()}
    raise FormatError(f"cannot serialize base {type(base).__name__}")


def _base_from_spec(spec: dict):
    kind = spec.get("kind")
    if kind == "gaussian":
        return GaussianBase(dim=spec["dim"], scale=spec.get("scale", 1.0))
    if kind == "vmf":
        return VmfBase(dim=spec["dim"], mu=np.asarray(spec["mu"]), kappa=spec["kappa"])
    if kind == "dirichlet":
        return DirichletBase(dim=spec["dim"], alpha=np.asarray(spec["alpha"]))
    raise FormatError(f"unknown base kind {kind!r} in checkpoint")


def _layer_manifest(layer) -> dict:
    params = [[name, list(value.shape)] for name, value in layer.params.items()]
    if isinstance(layer, ActNorm):
        return {"type": "actnorm", "config": {"dim": layer.dim,
                                              "initialized": layer.initialized},
                "params": params}
    if isinstance(layer, Permutation):
        return {"type": "permutation", "config": {"perm": layer.perm.tolist()},
                "params": params}
    if isinstance(layer, AffineCoupling):
        hidden = [w.shape[0] for w in layer.net.weights[:-1]]
        return {"type": "coupling",
                "config": {"dim": layer.dim,
                           "id_idx": layer.id_idx.tolist(),
                           "tr_idx": layer.tr_idx.tolist(),
                           "hidden": hidden,
                           "clamp": layer.clamp},
                "params": params}
    raise FormatError(f"cannot serialize layer {type(layer).__name__}")


def _layer_from_manifest(entry: dict):
    kind = entry.get("type")
    cfg = entry.get("config", {})
    if kind == "actnorm":
        layer = ActNorm(cfg["dim"])
        layer.initialized = bool(cfg.get("initialized", False))
        return layer
    if kind == "permutation":
        return Permutation(np.asarray(cfg["perm"], dtype=np.intp))
    if kind == "coupling":
        return AffineCoupling(cfg["dim"], cfg["id_idx"], cfg["tr_idx"],
                              hidden=tuple(cfg["hidden"]), clamp=cfg["clamp"])
    raise FormatError(f"unknown layer type {kind!r} in checkpoint")


def save_checkpoint(path, model: FlowModel) -> None:
    """Serialize the model; the write is atomic (temp file + rename)."""
    header = {
        "dim": model.dim,
        "base": _base_spec(model.base),
        "layers": [_layer_manifest(layer) for layer in model.layers],
        "meta": model.meta,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = bytearray()
    for layer in model.layers:
        for value in layer.params.values():
            payload += np.ascontiguousarray(value, dtype="<f8").tobytes()
    body = MAGIC + struct.pack("<II", VERSION, len(header_bytes)) + header_bytes + bytes(payload)
    blob = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_checkpoint(path) -> FlowModel:
    """Reconstruct a model, verifying magic, version, CRC, and that the
    manifest shapes account for the whole payload."""
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise FormatError("checkpoint too short", detail=f"byte {len(raw)}")
    if raw[:4] != MAGIC:
        raise FormatError("bad checkpoint magic", detail="byte 0")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise FormatError("checkpoint CRC mismatch: file is corrupt")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", detail="byte 4")
    header_end = 12 + header_len
    if header_end + 4 > len(raw):
        raise FormatError("checkpoint header overruns the file", detail="byte 8")
    try:
        header = json.loads(raw[12:header_end].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable checkpoint header: {exc}", detail="byte 12") from None

    layers = [_layer_from_manifest(entry) for entry in header["layers"]]
    declared = sum(int(np.prod(shape)) for entry in header["layers"]
                   for _, shape in entry["params"])
    payload = raw[header_end:-4]
    if declared * 8 != len(payload):
        raise FormatError(
            f"manifest promises {declared} parameters, payload holds {len(payload) // 8}",
            detail=f"byte {header_end}")
    flat = np.frombuffer(payload, dtype="<f8")
    pos = 0
    for layer, entry in zip(layers, header["layers"]):
        for name, shape in entry["params"]:
            size = int(np.prod(shape))
            layer.set_param(name, flat[pos:pos + size].reshape(shape).astype(np.float64))
            pos += size
    base = _base_from_spec(header["base"])
    return FlowModel(header["dim"], layers, base, meta=header.get("meta"))
