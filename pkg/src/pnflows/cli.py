"""Command-line entry point.

Four subcommands cover the experiment lifecycle:

    pnflows train       --config cfg.json
    pnflows sample      --checkpoint m.ckpt --n 100 --temperature 0.7 --seed 0
    pnflows interpolate --checkpoint m.ckpt --data <spec> --k 5 [--within-class]
                        [--rule <name>] --seed 0
    pnflows evaluate    --checkpoint m.ckpt --train <spec> --test <spec> --seed 0

Exit codes: 0 success, 1 validation error (bad config, file format,
incompatible options), 2 runtime or numeric error.  All file writes are
atomic (write to temp, rename).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .bases import Temperature
from .checkpoint import load_checkpoint, save_checkpoint
from .config import load_experiment_config
from .datasets import load_dataset
from .errors import (DomainError, NonFiniteError, PnflowsError,
                     SimplexUnderflowWarning)
from .evaluation import (FeatureExtractor, MetricReport, fid,
                         interpolation_protocol, kid, norm_diagnostics)
from .interpolation import compatible_rules, data_interpolate, path_diagnostics
from .training import train

__all__ = ["main"]

_SCHEMA_VERSION = 1


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _atomic_write_bytes(path: Path, blob: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def _write_csv(path: Path, matrix: np.ndarray, columns: list[str]) -> None:
    lines = [",".join(columns)]
    for row in np.atleast_2d(matrix) if matrix.size else []:
        lines.append(",".join(repr(float(v)) for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _write_pgm_grid(path: Path, images: np.ndarray) -> None:
    """P5 grid of square grayscale images; values clipped to [0, 1]."""
    n, d = images.shape
    side = int(round(math.sqrt(d)))
    if side * side != d:
        raise DomainError(f"PGM output needs square images, got d={d}")
    cols = max(1, int(math.ceil(math.sqrt(n))))
    rows = int(math.ceil(n / cols)) if n else 1
    canvas = np.zeros((rows * side, cols * side), dtype=np.uint8)
    for i in range(n):
        r, c = divmod(i, cols)
        tile = np.clip(images[i].reshape(side, side), 0.0, 1.0)
        canvas[r * side:(r + 1) * side, c * side:(c + 1) * side] = \
            np.round(tile * 255).astype(np.uint8)
    header = f"P5\n{canvas.shape[1]} {canvas.shape[0]}\n255\n".encode()
    _atomic_write_bytes(path, header + canvas.tobytes())


def _content_hash(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for chunk in chunks:
        h.update(chunk)
    return h.hexdigest()


def _norm_histogram(points: np.ndarray, manifold: str):
    if manifold == "sphere":
        return norm_diagnostics(points, "unit", ord=2)
    if manifold == "simplex":
        return norm_diagnostics(points, "unit", ord=1)
    return norm_diagnostics(points, "chi2")


def _norm_summary(hist) -> dict:
    return {"reference": hist.reference, "ref_mean": hist.ref_mean,
            "mean": hist.mean, "var": hist.var, "z_score": hist.z_score,
            "n": int(hist.sq_norms.size)}


def _write_norm_csv(path: Path, histograms: dict) -> None:
    lines = ["set,reference,sq_norm"]
    for name, hist in histograms.items():
        lines.extend(f"{name},{hist.reference},{v!r}" for v in hist.sq_norms)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_train(args) -> int:
    cfg = load_experiment_config(args.config)
    dataset = load_dataset(cfg.dataset)
    model = cfg.build_model(dataset.dim)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SimplexUnderflowWarning)
        model, trace = train(model, dataset.data, cfg.train_config())
    underflows = sum(issubclass(w.category, SimplexUnderflowWarning) for w in caught)
    wall = time.perf_counter() - started

    ckpt_path = out / "model.ckpt"
    save_checkpoint(ckpt_path, model)
    _write_csv(out / "loss.csv",
               np.array([[t.epoch, t.nll, t.bpd] for t in trace]).reshape(-1, 3),
               ["epoch", "nll", "bpd"])
    manifest = {
        "schema_version": _SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "dataset_provenance": dataset.provenance,
        "input_hash": _content_hash(Path(args.config).read_bytes(),
                                    np.ascontiguousarray(dataset.data).tobytes()),
        "n_params": model.n_params,
        "wall_time_s": wall,
        "simplex_underflow_events": underflows,
        "final_nll": trace[-1].nll if trace else None,
    }
    _atomic_write_text(out / "run.json", json.dumps(manifest, sort_keys=True, indent=2))
    print(f"wrote {ckpt_path}, {out / 'loss.csv'}, {out / 'run.json'}")
    return 0


def cmd_sample(args) -> int:
    model = load_checkpoint(args.checkpoint)
    rng = np.random.default_rng(args.seed)
    samples = model.sample(args.n, Temperature(args.temperature), rng)
    out = Path(args.out)
    if args.format == "pgm":
        _write_pgm_grid(out, samples)
    else:
        _write_csv(out, samples, [f"x{i}" for i in range(model.dim)])
    print(f"wrote {args.n} samples to {out}")
    return 0


def cmd_interpolate(args) -> int:
    model = load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.data)
    if args.rule is not None and args.rule not in compatible_rules(model.base):
        raise DomainError(
            f"rule {args.rule!r} is incompatible with base "
            f"{type(model.base).__name__}; choose from {compatible_rules(model.base)}")
    rng = np.random.default_rng(args.seed)
    result = interpolation_protocol(model, dataset.data, dataset.labels, k=args.k,
                                    within_class=args.within_class, rng=rng,
                                    rule=args.rule)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "interpolants.csv", result.interpolants,
               [f"x{i}" for i in range(dataset.dim)])
    if args.format == "pgm":
        _write_pgm_grid(out / "interpolants.pgm", result.interpolants)

    path_rows, diag_rows = [], []
    width = None
    for p, (ia, ib) in enumerate(result.pairs):
        decoded = data_interpolate(model, dataset.data[ia], dataset.data[ib],
                                   k=args.k, rule=args.rule)
        diag = path_diagnostics(decoded.latent)
        diag_rows.append([p, ia, ib, diag.spacing_cv,
                          diag.step_lengths.mean(), diag.norms.min(), diag.norms.max()])
        pts = decoded.latent.points
        width = pts.shape[1]
        for lam, point, norm in zip(decoded.latent.lambdas, pts, diag.norms):
            path_rows.append([p, lam, norm, *point])
    coord_cols = [f"c{i}" for i in range(width or dataset.dim)]
    _write_csv(out / "paths.csv", np.array(path_rows),
               ["pair", "lambda", "norm", *coord_cols])
    _write_csv(out / "diagnostics.csv", np.array(diag_rows),
               ["pair", "index_a", "index_b", "spacing_cv", "step_mean",
                "norm_min", "norm_max"])
    summary = {
        "schema_version": _SCHEMA_VERSION,
        "n_pairs": int(result.pairs.shape[0]),
        "n_interpolants": int(result.interpolants.shape[0]),
        "k": args.k,
        "rule": args.rule or "default",
        "within_class": args.within_class,
        "skipped_classes": [str(c) for c in result.skipped_classes],
        "seed": args.seed,
    }
    _atomic_write_text(out / "summary.json", json.dumps(summary, sort_keys=True, indent=2))
    print(f"wrote {result.interpolants.shape[0]} interpolants to {out}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_checkpoint(args.checkpoint)
    train_set = load_dataset(args.train)
    test_set = load_dataset(args.test)
    rng = np.random.default_rng(args.seed)

    generated = model.sample(train_set.n, Temperature(args.temperature), rng)
    within = args.within_class and train_set.labels is not None
    protocol = interpolation_protocol(model, train_set.data, train_set.labels,
                                      k=args.k, within_class=within, rng=rng)
    interpolated = protocol.interpolants

    if args.features == "whitened":
        extract = FeatureExtractor.whitened(train_set.data)
    elif args.features == "identity":
        extract = FeatureExtractor.identity()
    else:
        extract = FeatureExtractor.from_file(args.features)
    ref = extract(train_set.data)

    bpd_test = model.bits_per_dim(test_set.data)
    bpd_interp = model.bits_per_dim(interpolated)
    fid_gen = fid(ref, extract(generated))
    kid_gen, kid_gen_se = kid(ref, extract(generated))
    fid_int = fid(ref, extract(interpolated))
    kid_int, kid_int_se = kid(ref, extract(interpolated))

    gen_report = MetricReport(bpd=bpd_test, fid=fid_gen, kid=kid_gen,
                              kid_stderr=kid_gen_se, n_reference=train_set.n,
                              n_generated=generated.shape[0], seed=args.seed,
                              feature_kind=extract.kind)
    int_report = MetricReport(bpd=bpd_interp, fid=fid_int, kid=kid_int,
                              kid_stderr=kid_int_se, n_reference=train_set.n,
                              n_generated=interpolated.shape[0], seed=args.seed,
                              feature_kind=extract.kind)

    z_test, _ = model.forward(test_set.data)
    z_gen, _ = model.forward(generated)
    histograms = {
        "test_latents": _norm_histogram(
            model.to_manifold(z_test).point if model.manifold != "none" else z_test,
            model.manifold),
        "generated_latents": _norm_histogram(
            model.to_manifold(z_gen).point if model.manifold != "none" else z_gen,
            model.manifold),
    }
    report = {
        "schema_version": _SCHEMA_VERSION,
        "seed": args.seed,
        "feature_kind": extract.kind,
        "note": gen_report.note,
        "bpd_test": bpd_test,
        "bpd_interpolated": bpd_interp,
        "generated_vs_train": json.loads(gen_report.to_json()),
        "interpolated_vs_train": json.loads(int_report.to_json()),
        "norm_test_latents": _norm_summary(histograms["test_latents"]),
        "norm_generated_latents": _norm_summary(histograms["generated_latents"]),
        "counts": {"n_train": train_set.n, "n_test": test_set.n,
                   "n_generated": int(generated.shape[0]),
                   "n_interpolated": int(interpolated.shape[0])},
    }
    text = json.dumps(report, sort_keys=True, indent=2)
    out = Path(args.out)
    _atomic_write_text(out, text)
    _write_norm_csv(out.with_name(out.stem + "_norms.csv"), histograms)
    print(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnflows",
                                     description="Normalizing flows on unit p-norm spheres")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a flow from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sample", help="decode base samples from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="samples.csv")
    p.add_argument("--format", choices=("csv", "pgm"), default="csv")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("interpolate", help="run the paired-interpolation protocol")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--within-class", action="store_true")
    p.add_argument("--rule", choices=("lerp", "nclerp", "slerp", "simplex_lerp"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="interpolation")
    p.add_argument("--format", choices=("csv", "pgm"), default="csv")
    p.set_defaults(fn=cmd_interpolate)

    p = sub.add_parser("evaluate", help="likelihood and sample-quality metrics")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--within-class", action="store_true")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--features", default="identity",
                   help="identity, whitened, or a path to an .npy projection")
    p.add_argument("--out", default="report.json")
    p.set_defaults(fn=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PnflowsError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
