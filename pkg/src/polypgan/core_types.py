"""Shared domain types: raw images, tensors, sample pairs, datasets, batches.

Layout convention is channel-first [C, H, W] for single samples and
[B, C, H, W] for batches. Tensors are treated as immutable once built.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, MixedShapes


@dataclass(frozen=True)
class RawImage:
    """An 8-bit image as read from disk, row-major, shape (H, W, C)."""

    array: np.ndarray

    def __post_init__(self):
        a = self.array
        if a.dtype != np.uint8 or a.ndim != 3:
            raise ValueError("RawImage needs a uint8 array of shape (H, W, C)")
        if a.shape[2] not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {a.shape[2]}")

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def channels(self) -> int:
        return self.array.shape[2]


class Tensor:
    """A dense float array with an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data: np.ndarray, grad: np.ndarray | None = None):
        self.data = np.asarray(data)
        if grad is not None and grad.shape != self.data.shape:
            raise MixedShapes(
                f"grad shape {grad.shape} != data shape {self.data.shape}"
            )
        self.grad = grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def check(self) -> None:
        assert self.data.size == math.prod(self.data.shape)
        if self.grad is not None:
            assert self.grad.shape == self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


@dataclass(frozen=True)
class SamplePair:
    """One training example: RGB image and ground-truth mask, both in [-1, 1]."""

    image: Tensor  # [3, H, W]
    mask: Tensor  # [1, H, W]
    id: str

    def __post_init__(self):
        if self.image.shape[1:] != self.mask.shape[1:]:
            raise MixedShapes(
                f"image {self.image.shape} and mask {self.mask.shape} disagree on H, W"
            )


@dataclass(frozen=True)
class DatasetRecord:
    """One manifest line: an id plus the image and mask paths."""

    id: str
    image_path: str
    mask_path: str


@dataclass
class Dataset:
    """An ordered set of records backed by a tab-separated manifest file."""

    records: list[DatasetRecord]
    manifest_path: str = ""

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids in dataset")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Batch:
    """A stacked minibatch: images [B, 3, H, W], masks [B, 1, H, W]."""

    images: Tensor
    masks: Tensor
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        b = len(self.ids)
        if self.images.shape[0] != b or self.masks.shape[0] != b:
            raise MixedShapes("leading dimension must equal len(ids)")

    def __len__(self) -> int:
        return len(self.ids)


def make_batch(pairs: list[SamplePair]) -> Batch:
    """Stack sample pairs along a new leading dimension, preserving order."""
    if not pairs:
        raise EmptyInput("cannot batch an empty list of pairs")
    hw = pairs[0].image.shape[1:]
    for p in pairs:
        if p.image.shape[1:] != hw:
            raise MixedShapes(f"pair {p.id!r} has H, W {p.image.shape[1:]} != {hw}")
    images = Tensor(np.stack([p.image.data for p in pairs]))
    masks = Tensor(np.stack([p.mask.data for p in pairs]))
    return Batch(images=images, masks=masks, ids=[p.id for p in pairs])


def split_batch(batch: Batch) -> list[SamplePair]:
    """Inverse of make_batch: recover the individual pairs bit-exactly."""
    return [
        SamplePair(
            image=Tensor(batch.images.data[i]),
            mask=Tensor(batch.masks.data[i]),
            id=batch.ids[i],
        )
        for i in range(len(batch))
    ]


def load_manifest(manifest_path: str) -> Dataset:
    """Read a tab-separated `id<TAB>image_path<TAB>mask_path` manifest.

    Relative paths are resolved against the manifest's directory.
    """
    base = os.path.dirname(os.path.abspath(manifest_path))
    records = []
    with open(manifest_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            sample_id, image_path, mask_path = line.split("\t")
            records.append(
                DatasetRecord(
                    id=sample_id,
                    image_path=os.path.join(base, image_path),
                    mask_path=os.path.join(base, mask_path),
                )
            )
    if not records:
        raise EmptyInput(f"manifest {manifest_path} has no records")
    return Dataset(records=records, manifest_path=os.path.abspath(manifest_path))


def write_manifest(manifest_path: str, records: list[DatasetRecord]) -> None:
    """Write records as tab-separated lines, paths relative to the manifest dir."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for r in records:
            img = os.path.relpath(r.image_path, base)
            msk = os.path.relpath(r.mask_path, base)
            fh.write(f"{r.id}\t{img}\t{msk}\n")
