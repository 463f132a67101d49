"""Dataset loading and preparation: geometric fitting (center crop / zero
pad), value normalization to [-1, 1], mask binarization, deterministic
splitting, and seeded epoch iteration. No augmentation stage by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core_types import Batch, Dataset, RawImage, SamplePair, Tensor, make_batch
from .errors import EmptyInput, OutOfRange, SplitTooLarge

LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class PrepConfig:
    target_width: int
    target_height: int
    split_train: int
    split_val: int
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.target_width <= 0 or self.target_height <= 0:
            raise ValueError("target dims must be positive")


def load_raw(path: str) -> RawImage:
    """Read a PNG/JPEG as RGB (or keep single-channel as-is)."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16"):
            arr = np.asarray(im.convert("L"), dtype=np.uint8)[:, :, None]
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return RawImage(arr)


def compute_mean_dims(dims: list[tuple[int, int]]) -> tuple[int, int]:
    """Mean width and height over (w, h) pairs, rounded to nearest integer."""
    if not dims:
        raise EmptyInput("no image dimensions given")
    ws = [d[0] for d in dims]
    hs = [d[1] for d in dims]
    return (
        int(np.floor(sum(ws) / len(ws) + 0.5)),
        int(np.floor(sum(hs) / len(hs) + 0.5)),
    )


def dataset_mean_dims(dataset: Dataset) -> tuple[int, int]:
    dims = []
    for r in dataset.records:
        with Image.open(r.image_path) as im:
            dims.append(im.size)  # (w, h)
    return compute_mean_dims(dims)


def _fit_axis(n: int, target: int) -> tuple[int, int, int, int]:
    """Return (src_off, dst_off, copy_len, _) for one axis.

    Crops take the center with the extra pixel removed from the far side;
    pads center the content with the extra pixel added on the far side.
    """
    if n >= target:
        off = (n - target) // 2
        return off, 0, target, n
    off = (target - n) // 2
    return 0, off, n, n


def fit_to_dims(img: RawImage, target_w: int, target_h: int) -> RawImage:
    """Center-crop oversize axes and zero-pad undersize axes independently."""
    a = img.array
    sy, dy, ly, _ = _fit_axis(img.height, target_h)
    sx, dx, lx, _ = _fit_axis(img.width, target_w)
    out = np.zeros((target_h, target_w, img.channels), dtype=np.uint8)
    out[dy : dy + ly, dx : dx + lx] = a[sy : sy + ly, sx : sx + lx]
    return RawImage(out)


def normalize(img: RawImage, dtype=np.float32) -> Tensor:
    """8-bit intensities to [-1, 1] floats, channel-first [C, H, W]."""
    a = img.array.astype(dtype) / dtype(127.5) - dtype(1.0)
    return Tensor(np.transpose(a, (2, 0, 1)))


def denormalize(t: Tensor, eps: float = 1e-4) -> RawImage:
    """Inverse of normalize; exact round-trip on 8-bit inputs."""
    d = t.data
    if d.min() < -1.0 - eps or d.max() > 1.0 + eps:
        raise OutOfRange(
            f"values span [{d.min():.4f}, {d.max():.4f}], expected [-1, 1]"
        )
    a = np.clip(np.floor((d + 1.0) * 127.5 + 0.5), 0, 255).astype(np.uint8)
    return RawImage(np.transpose(a, (1, 2, 0)))


def binarize_mask(t: Tensor, threshold: float = 0.5) -> Tensor:
    """Map a [-1, 1] mask to {0, 1}: pixel -> 1 iff (p + 1)/2 >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    return Tensor(((t.data + 1.0) / 2.0 >= threshold).astype(t.data.dtype))


def mask_to_tensor(img: RawImage, dtype=np.float32) -> Tensor:
    """Ground-truth mask to a single-channel tensor with values in {-1, +1}.

    RGB masks are reduced via luminance, then binarized at 127.5.
    """
    a = img.array.astype(np.float64)
    if img.channels == 3:
        lum = a[:, :, 0] * LUMA[0] + a[:, :, 1] * LUMA[1] + a[:, :, 2] * LUMA[2]
    else:
        lum = a[:, :, 0]
    binary = (lum >= 127.5).astype(dtype)
    return Tensor((binary * 2.0 - 1.0).astype(dtype)[None, :, :])


def load_pair(
    record, target_w: int, target_h: int, dtype=np.float32
) -> SamplePair:
    img = fit_to_dims(load_raw(record.image_path), target_w, target_h)
    msk = fit_to_dims(load_raw(record.mask_path), target_w, target_h)
    return SamplePair(
        image=normalize(img, dtype), mask=mask_to_tensor(msk, dtype), id=record.id
    )


def prepare_pairs(
    dataset: Dataset, target_w: int, target_h: int, dtype=np.float32
) -> list[SamplePair]:
    """Load and preprocess every record; pure given paths and targets."""
    if not len(dataset):
        raise EmptyInput("dataset is empty")
    return [load_pair(r, target_w, target_h, dtype) for r in dataset.records]


def split_dataset(dataset: Dataset, cfg: PrepConfig) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint train/val split driven by cfg.shuffle_seed."""
    n = len(dataset)
    if cfg.split_train + cfg.split_val > n:
        raise SplitTooLarge(
            f"requested {cfg.split_train}+{cfg.split_val} from {n} samples"
        )
    rng = np.random.Generator(np.random.Philox(key=[cfg.shuffle_seed, 0x73706C]))
    order = rng.permutation(n)
    train_idx = sorted(order[: cfg.split_train].tolist())
    val_idx = sorted(order[cfg.split_train : cfg.split_train + cfg.split_val].tolist())
    train = Dataset(
        records=[dataset.records[i] for i in train_idx],
        manifest_path=dataset.manifest_path,
    )
    val = Dataset(
        records=[dataset.records[i] for i in val_idx],
        manifest_path=dataset.manifest_path,
    )
    return train, val


def epoch_iterator(
    pairs: list[SamplePair], batch_size: int, seed: int, epoch: int
):
    """Yield shuffled batches; order is a pure function of (seed, epoch).

    Every sample appears exactly once; the final partial batch is emitted.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=[seed, epoch]))
    order = rng.permutation(len(pairs))
    for start in range(0, len(pairs), batch_size):
        chunk = [pairs[i] for i in order[start : start + batch_size]]
        yield make_batch(chunk)
