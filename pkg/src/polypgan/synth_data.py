"""Deterministic synthetic dataset: one filled ellipse ("polyp") per image
on a low-frequency textured background, with the exact ellipse as the mask.

Every sample is generated from a counter-based PRNG keyed by (seed, index),
so regeneration is byte-identical and order-independent.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core_types import Dataset, DatasetRecord, RawImage, write_manifest
from .errors import EmptyDataset


@dataclass(frozen=True)
class SynthConfig:
    count: int = 200
    width: int = 64
    height: int = 64
    min_axes: int = 10
    max_axes: int = 20
    noise_level: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.min_axes <= self.max_axes:
            raise ValueError("need 0 < min_axes <= max_axes")
        if self.max_axes >= min(self.width, self.height) / 2:
            raise ValueError("max_axes must be < min(width, height)/2")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ValueError("noise_level must be in [0, 1]")


def _sample_rng(cfg: SynthConfig, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[cfg.seed, index]))


def _value_noise(rng, h: int, w: int, cells: int = 8) -> np.ndarray:
    """Low-frequency noise in [0, 1]: coarse random grid, bilinear upsample."""
    grid = rng.random((cells + 1, cells + 1))
    ys = np.linspace(0, cells, h)
    xs = np.linspace(0, cells, w)
    y0 = np.minimum(ys.astype(int), cells - 1)
    x0 = np.minimum(xs.astype(int), cells - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g00 = grid[np.ix_(y0, x0)]
    g01 = grid[np.ix_(y0, x0 + 1)]
    g10 = grid[np.ix_(y0 + 1, x0)]
    g11 = grid[np.ix_(y0 + 1, x0 + 1)]
    return (
        g00 * (1 - fy) * (1 - fx)
        + g01 * (1 - fy) * fx
        + g10 * fy * (1 - fx)
        + g11 * fy * fx
    )


def generate_sample(cfg: SynthConfig, index: int) -> tuple[RawImage, RawImage]:
    """One (image, mask) pair, fully determined by (cfg.seed, index)."""
    if index >= cfg.count:
        raise ValueError(f"index {index} out of range for count {cfg.count}")
    rng = _sample_rng(cfg, index)
    h, w = cfg.height, cfg.width

    ax = rng.integers(cfg.min_axes, cfg.max_axes + 1)
    ay = rng.integers(cfg.min_axes, cfg.max_axes + 1)
    # keep foreground fraction below one half
    while np.pi * ax * ay / (w * h) >= 0.45:
        ay = max(cfg.min_axes, ay - 1)
        ax = max(cfg.min_axes, ax - 1)
    cx = rng.integers(ax, w - ax + 1)
    cy = rng.integers(ay, h - ay + 1)

    yy, xx = np.mgrid[0:h, 0:w]
    inside = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0
    mask = np.where(inside, 255, 0).astype(np.uint8)[:, :, None]

    # reddish mucosa-like background, paler raised blob
    base = _value_noise(rng, h, w)
    r = 120 + 90 * base
    g = 50 + 60 * base
    b = 50 + 50 * base
    img = np.stack([r, g, b], axis=-1)
    blob = np.array([70.0, 60.0, 40.0])
    img = img + inside[:, :, None] * blob[None, None, :]
    if cfg.noise_level > 0:
        img = img + rng.normal(0.0, 40.0 * cfg.noise_level, img.shape)
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return RawImage(img), RawImage(mask)


def generate_dataset(cfg: SynthConfig, out_dir: str) -> Dataset:
    """Write count PNG pairs plus a manifest; returns the loaded Dataset."""
    if cfg.count <= 0:
        raise EmptyDataset("count must be positive")
    os.makedirs(out_dir, exist_ok=True)
    records = []
    for i in range(cfg.count):
        image, mask = generate_sample(cfg, i)
        sid = f"synth_{i:05d}"
        img_path = os.path.join(out_dir, f"{sid}.png")
        msk_path = os.path.join(out_dir, f"{sid}_mask.png")
        Image.fromarray(image.array).save(img_path)
        Image.fromarray(mask.array[:, :, 0]).save(msk_path)
        records.append(DatasetRecord(id=sid, image_path=img_path, mask_path=msk_path))
    manifest = os.path.join(out_dir, "manifest.tsv")
    write_manifest(manifest, records)
    return Dataset(records=records, manifest_path=os.path.abspath(manifest))
