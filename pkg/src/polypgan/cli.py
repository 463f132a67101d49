"""Command-line driver: synth, train, eval, predict, bench.

Exit codes: 0 success, 1 runtime error, 2 usage error. Set
POLYPGAN_NUM_THREADS to cap BLAS worker threads (useful for CI
determinism); it must be honored before numpy is first imported, so this
module sets the usual thread env vars at import time.
"""

from __future__ import annotations

import os

_threads = os.environ.get("POLYPGAN_NUM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import hashlib
import json
import platform
import sys
import time

import numpy as np
from PIL import Image

from . import __version__
from .checkpoint import load_checkpoint
from .core_types import Dataset, DatasetRecord, Tensor, load_manifest
from .data_pipeline import (
    PrepConfig,
    binarize_mask,
    fit_to_dims,
    load_raw,
    normalize,
    prepare_pairs,
    split_dataset,
)
from .errors import PolypGanError
from .metrics import evaluate_pairs, throughput
from .networks import DiscriminatorConfig, GeneratorConfig, generator_forward
from .synth_data import SynthConfig, generate_dataset
from .training import TrainConfig, train


def _levels_for_size(size: int) -> int:
    levels = 0
    while levels < 8 and size % (2 ** (levels + 1)) == 0 and size >> (levels + 1):
        levels += 1
    if levels < 2:
        raise ValueError(f"image size {size} supports no valid network depth")
    return levels


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        count=args.count,
        width=args.size,
        height=args.size,
        min_axes=max(1, round(args.size * 10 / 64)),
        max_axes=max(2, round(args.size * 20 / 64)),
        seed=args.seed,
    )
    ds = generate_dataset(cfg, args.out)
    print(f"wrote {len(ds)} pairs to {args.out} (manifest: {ds.manifest_path})")
    return 0


def cmd_train(args) -> int:
    dataset = load_manifest(args.data)
    n_train = int(round(args.split * len(dataset)))
    prep = PrepConfig(
        target_width=args.size,
        target_height=args.size,
        split_train=n_train,
        split_val=len(dataset) - n_train,
        shuffle_seed=args.seed,
    )
    train_set, val_set = split_dataset(dataset, prep)
    train_pairs = prepare_pairs(train_set, args.size, args.size)
    val_pairs = prepare_pairs(val_set, args.size, args.size) if len(val_set) else None

    levels = args.levels or _levels_for_size(args.size)
    gen_cfg = GeneratorConfig(base_filters=args.f, levels=levels)
    disc_cfg = DiscriminatorConfig(base_filters=args.f)
    train_cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        generator_loss_mode=args.gen_loss.replace("-", "_"),
        feature_matching=args.feature_matching,
        seed=args.seed,
    )

    os.makedirs(args.out, exist_ok=True)
    run_manifest = {
        "version": __version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "dataset_manifest": os.path.abspath(args.data),
        "dataset_sha256": _sha256(args.data),
        "train_config": vars(train_cfg) | {},
        "generator_config": vars(gen_cfg) | {},
        "discriminator_config": vars(disc_cfg) | {},
        "prep_config": vars(prep) | {},
    }
    with open(os.path.join(args.out, "run_manifest.json"), "w") as fh:
        json.dump(run_manifest, fh, indent=2, sort_keys=True)

    def log_fn(rec):
        if rec.step % 50 == 0:
            print(
                f"epoch {rec.epoch} step {rec.step}: "
                f"d_loss={rec.d_loss:.4f} g_loss={rec.g_loss:.4f} "
                f"D(real)={rec.d_real_mean:.3f} D(fake)={rec.d_fake_mean:.3f}"
            )

    ckpts = train(
        train_cfg, gen_cfg, disc_cfg, train_pairs, val_pairs, args.out, log_fn=log_fn
    )
    print(f"done: {len(ckpts)} checkpoints in {args.out}")
    return 0


def cmd_eval(args) -> int:
    gen_cfg, gen_params, _, _, _, meta = load_checkpoint(args.ckpt)
    size_h = meta.get("image_height", 256)
    size_w = meta.get("image_width", 256)
    dataset = load_manifest(args.data)
    pairs = prepare_pairs(dataset, size_w, size_h)
    agg = "per_image_mean" if args.agg == "per-image" else "global_counts"
    report = evaluate_pairs(gen_params, gen_cfg, pairs, args.threshold, agg)
    print(report.to_json())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json() + "\n")
    if args.csv:
        report.write_csv(args.csv)
    return 0


def _predict_one(gen_params, gen_cfg, raw, size_w, size_h, threshold, want_raw):
    fitted = fit_to_dims(raw, size_w, size_h)
    x = normalize(fitted).data[None]
    y = generator_forward(gen_params, gen_cfg, x, training=False)[0]
    if want_raw:
        out = np.clip(np.floor((y[0] + 1.0) * 127.5 + 0.5), 0, 255).astype(np.uint8)
    else:
        out = (binarize_mask(Tensor(y), threshold).data[0] * 255).astype(np.uint8)
    # map back to the source geometry: un-crop by padding, un-pad by cropping
    h0, w0 = raw.height, raw.width
    full = np.zeros((h0, w0), dtype=np.uint8)
    sy = (h0 - size_h) // 2 if h0 >= size_h else 0
    sx = (w0 - size_w) // 2 if w0 >= size_w else 0
    dy = (size_h - h0) // 2 if size_h > h0 else 0
    dx = (size_w - w0) // 2 if size_w > w0 else 0
    ly, lx = min(h0, size_h), min(w0, size_w)
    full[sy : sy + ly, sx : sx + lx] = out[dy : dy + ly, dx : dx + lx]
    return full


def cmd_predict(args) -> int:
    gen_cfg, gen_params, _, _, _, meta = load_checkpoint(args.ckpt)
    size_h = meta.get("image_height", 256)
    size_w = meta.get("image_width", 256)
    if os.path.isdir(args.images):
        names = sorted(
            f
            for f in os.listdir(args.images)
            if f.lower().endswith((".png", ".jpg", ".jpeg"))
            and "_mask" not in f.lower()
        )
        paths = [os.path.join(args.images, f) for f in names]
    else:
        paths = [r.image_path for r in load_manifest(args.images).records]
    if not paths:
        raise PolypGanError(f"no input images found in {args.images}")
    os.makedirs(args.out, exist_ok=True)
    for path in paths:
        raw = load_raw(path)
        mask = _predict_one(
            gen_params, gen_cfg, raw, size_w, size_h, args.threshold, args.raw
        )
        stem = os.path.splitext(os.path.basename(path))[0]
        Image.fromarray(mask).save(os.path.join(args.out, f"{stem}.png"))
    print(f"wrote {len(paths)} masks to {args.out}")
    return 0


def cmd_bench(args) -> int:
    gen_cfg, gen_params, _, _, _, meta = load_checkpoint(args.ckpt)
    size_h = meta.get("image_height", 256)
    size_w = meta.get("image_width", 256)
    dataset = load_manifest(args.data)
    pairs = prepare_pairs(dataset, size_w, size_h)
    fps = throughput(gen_params, gen_cfg, pairs, repeats=args.repeats)
    print(
        f"{fps:.2f} frames/sec "
        f"(f={gen_cfg.base_filters}, size={size_w}x{size_h}, "
        f"{len(pairs)} images x {args.repeats} repeats, "
        f"{platform.processor() or platform.machine()}, "
        f"python {platform.python_version()})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polypgan", description="Conditional-GAN polyp segmentation toolkit"
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    sp.add_argument("--count", type=int, default=200)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)

    tp = sub.add_parser("train", help="train the adversarial model")
    tp.add_argument("--data", required=True, help="dataset manifest path")
    tp.add_argument("--out", required=True, help="output directory")
    tp.add_argument("--epochs", type=int, default=12)
    tp.add_argument("--batch", type=int, default=4)
    tp.add_argument("--lr", type=float, default=0.002)
    tp.add_argument("--f", type=int, default=64, help="base filter count")
    tp.add_argument("--size", type=int, default=256, help="working resolution")
    tp.add_argument("--levels", type=int, default=0, help="encoder depth override")
    tp.add_argument("--split", type=float, default=0.8, help="train fraction")
    tp.add_argument("--seed", type=int, default=0)
    tp.add_argument(
        "--gen-loss",
        choices=["saturating", "non-saturating"],
        default="saturating",
    )
    tp.add_argument("--feature-matching", action="store_true")
    tp.set_defaults(func=cmd_train)

    ep = sub.add_parser("eval", help="evaluate a checkpoint")
    ep.add_argument("--ckpt", required=True)
    ep.add_argument("--data", required=True)
    ep.add_argument("--threshold", type=float, default=0.5)
    ep.add_argument("--agg", choices=["per-image", "global"], default="per-image")
    ep.add_argument("--json", help="write the report to this JSON path")
    ep.add_argument("--csv", help="write the report to this CSV path")
    ep.set_defaults(func=cmd_eval)

    pp = sub.add_parser("predict", help="write predicted masks for images")
    pp.add_argument("--ckpt", required=True)
    pp.add_argument("--images", required=True, help="image directory or manifest")
    pp.add_argument("--out", required=True)
    pp.add_argument("--threshold", type=float, default=0.5)
    pp.add_argument("--raw", action="store_true", help="emit probability maps")
    pp.set_defaults(func=cmd_predict)

    bp = sub.add_parser("bench", help="measure inference throughput")
    bp.add_argument("--ckpt", required=True)
    bp.add_argument("--data", required=True)
    bp.add_argument("--repeats", type=int, default=1)
    bp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PolypGanError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
