"""Pixel-level segmentation metrics (Jaccard, DSC, recall, precision,
accuracy, F-beta), dataset-level aggregation, and an inference throughput
benchmark.

Aggregation modes:
  per_image_mean — compute each metric per image, then average (default);
  global_counts  — sum confusion counts over the dataset first.

Vacuous denominators score 1.0: a perfect prediction of an empty mask is
perfect, not undefined.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, asdict

import numpy as np

from .core_types import SamplePair, Tensor, make_batch
from .data_pipeline import binarize_mask
from .errors import EmptyInput, MixedShapes, NonBinary
from .networks import GeneratorConfig, GeneratorParams, generator_forward

# Test-set results reported by the Medico 2020 challenge organizers for
# this method, computed on a hidden 160-image set. Context only: they are
# not reproducible without that hidden data.
REPORTED_TEST_METRICS = {
    "jaccard": 0.4382,
    "dsc": 0.562,
    "recall": 0.697,
    "precision": 0.556,
    "accuracy": 0.881,
    "f2": 0.611,
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn + other.fn,
        )


@dataclass(frozen=True)
class MetricReport:
    jaccard: float
    dsc: float
    recall: float
    precision: float
    accuracy: float
    f2: float
    n_images: int
    aggregation: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def write_csv(self, path: str) -> None:
        d = asdict(self)
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(d))
            writer.writeheader()
            writer.writerow(d)


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    """Pixelwise confusion counts; foreground (1) is the positive class."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise MixedShapes(f"pred {pred.shape} vs gt {gt.shape}")
    for name, m in (("pred", pred), ("gt", gt)):
        if not np.isin(m, (0, 1)).all():
            raise NonBinary(f"{name} mask contains values outside {{0, 1}}")
    p = pred.astype(bool)
    g = gt.astype(bool)
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        tn=int(np.count_nonzero(~p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 1.0


def jaccard(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp + c.fn)


def dsc(c: ConfusionCounts) -> float:
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)


def precision(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn)


def accuracy(c: ConfusionCounts) -> float:
    return _ratio(c.tp + c.tn, c.total)


def f_beta(precision_value: float, recall_value: float, beta: float = 2.0) -> float:
    den = beta * beta * precision_value + recall_value
    if den == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision_value * recall_value / den


def report_from_counts(counts: list[ConfusionCounts], aggregation: str) -> MetricReport:
    if not counts:
        raise EmptyInput("no confusion counts")
    if aggregation == "global_counts":
        total = counts[0]
        for c in counts[1:]:
            total = total + c
        per = [total]
    elif aggregation == "per_image_mean":
        per = counts
    else:
        raise ValueError(f"unknown aggregation {aggregation!r}")

    def mean(fn):
        return float(np.mean([fn(c) for c in per]))

    return MetricReport(
        jaccard=mean(jaccard),
        dsc=mean(dsc),
        recall=mean(recall),
        precision=mean(precision),
        accuracy=mean(accuracy),
        f2=mean(lambda c: f_beta(precision(c), recall(c), 2.0)),
        n_images=len(counts),
        aggregation=aggregation,
    )


def predict_masks(
    gen_params: GeneratorParams,
    gen_cfg: GeneratorConfig,
    pairs: list[SamplePair],
    threshold: float = 0.5,
    batch_size: int = 8,
) -> list[np.ndarray]:
    """Binary {0,1} predictions for each pair, inference mode (no dropout)."""
    out = []
    for start in range(0, len(pairs), batch_size):
        batch = make_batch(pairs[start : start + batch_size])
        y = generator_forward(gen_params, gen_cfg, batch.images.data, training=False)
        for i in range(y.shape[0]):
            out.append(binarize_mask(Tensor(y[i]), threshold).data)
    return out


def evaluate_pairs(
    gen_params: GeneratorParams,
    gen_cfg: GeneratorConfig,
    pairs: list[SamplePair],
    threshold: float = 0.5,
    aggregation: str = "per_image_mean",
) -> MetricReport:
    """Generate, binarize, and score every pair against its ground truth."""
    if not pairs:
        raise EmptyInput("no pairs to evaluate")
    preds = predict_masks(gen_params, gen_cfg, pairs, threshold)
    counts = []
    for pair, pred in zip(pairs, preds):
        gt = binarize_mask(pair.mask, 0.5).data
        counts.append(confusion(pred, gt))
    return report_from_counts(counts, aggregation)


def throughput(
    gen_params: GeneratorParams,
    gen_cfg: GeneratorConfig,
    pairs: list[SamplePair],
    repeats: int = 1,
    batch_size: int = 8,
) -> float:
    """Wall-clock inference frames/sec; one untimed warm-up pass."""
    if not pairs:
        raise EmptyInput("no pairs to benchmark")
    warm = make_batch(pairs[: min(batch_size, len(pairs))])
    generator_forward(gen_params, gen_cfg, warm.images.data, training=False)
    t0 = time.perf_counter()
    frames = 0
    for _ in range(repeats):
        for start in range(0, len(pairs), batch_size):
            batch = make_batch(pairs[start : start + batch_size])
            generator_forward(gen_params, gen_cfg, batch.images.data, training=False)
            frames += len(batch)
    elapsed = time.perf_counter() - t0
    return frames / elapsed if elapsed > 0 else float("inf")
