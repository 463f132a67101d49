import os

import numpy as np
import pytest

from polypgan.core_types import Dataset, DatasetRecord, RawImage, Tensor
from polypgan.data_pipeline import (
    PrepConfig,
    binarize_mask,
    compute_mean_dims,
    denormalize,
    epoch_iterator,
    fit_to_dims,
    mask_to_tensor,
    normalize,
    split_dataset,
)
from polypgan.errors import EmptyInput, OutOfRange, SplitTooLarge

from conftest import random_pair

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def gray(values):
    a = np.asarray(values, dtype=np.uint8)
    return RawImage(a[:, :, None])


class TestMeanDims:
    def test_two_images(self):
        assert compute_mean_dims([(600, 500), (400, 300)]) == (500, 400)

    def test_identity(self):
        assert compute_mean_dims([(256, 256)] * 5) == (256, 256)

    def test_rounding_up(self):
        # mean of 3,4,4 is 3.667 -> 4
        assert compute_mean_dims([(3, 3), (4, 4), (4, 4)]) == (4, 4)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            compute_mean_dims([])


class TestFitToDims:
    def test_identity_bit_exact(self, rng):
        img = RawImage(rng.integers(0, 256, (256, 256, 3), dtype=np.uint8).astype(np.uint8))
        out = fit_to_dims(img, 256, 256)
        np.testing.assert_array_equal(out.array, img.array)

    def test_center_crop_4_to_2(self):
        img = gray(np.arange(16).reshape(4, 4))
        out = fit_to_dims(img, 2, 2)
        np.testing.assert_array_equal(out.array[:, :, 0], [[5, 6], [9, 10]])

    def test_center_pad_2_to_4(self):
        img = gray([[1, 2], [3, 4]])
        out = fit_to_dims(img, 4, 4)
        expected = np.zeros((4, 4), dtype=np.uint8)
        expected[1:3, 1:3] = [[1, 2], [3, 4]]
        np.testing.assert_array_equal(out.array[:, :, 0], expected)

    def test_odd_crop_removes_extra_from_far_side(self):
        # 5 -> 2: offset 1, so rows 1..2 survive (1 removed top, 2 bottom)
        img = gray(np.arange(25).reshape(5, 5))
        out = fit_to_dims(img, 2, 2)
        np.testing.assert_array_equal(out.array[:, :, 0], [[6, 7], [11, 12]])

    def test_odd_pad_puts_extra_on_far_side(self):
        img = gray([[7]])
        out = fit_to_dims(img, 2, 2)
        np.testing.assert_array_equal(out.array[:, :, 0], [[7, 0], [0, 0]])

    def test_mixed_axes(self, rng):
        img = RawImage(rng.integers(0, 256, (10, 3, 3), dtype=np.uint8).astype(np.uint8))
        out = fit_to_dims(img, 8, 4)
        assert (out.height, out.width) == (4, 8)
        # width padded: columns 0,1 and 5..7 are zero
        assert out.array[:, :2].sum() == 0 and out.array[:, 5:].sum() == 0


class TestNormalize:
    def test_endpoints(self):
        t = normalize(gray([[0, 255]]))
        assert t.data[0, 0, 0] == -1.0
        assert t.data[0, 0, 1] == 1.0

    def test_midpoint(self):
        t = normalize(gray([[128]]))
        assert abs(t.data[0, 0, 0] - (128 / 127.5 - 1.0)) < 1e-7

    def test_round_trip_all_8bit_values(self):
        img = gray([list(range(256))])
        back = denormalize(normalize(img))
        np.testing.assert_array_equal(back.array, img.array)

    def test_denormalize_endpoints(self):
        img = denormalize(Tensor(np.array([[[-1.0, 1.0]]])))
        np.testing.assert_array_equal(img.array[:, :, 0], [[0, 255]])

    def test_denormalize_out_of_range(self):
        with pytest.raises(OutOfRange):
            denormalize(Tensor(np.array([[[1.5]]])))


class TestBinarize:
    def test_all_background(self):
        t = Tensor(np.full((1, 4, 4), -1.0))
        assert binarize_mask(t, 0.5).data.sum() == 0

    def test_all_foreground(self):
        t = Tensor(np.full((1, 4, 4), 1.0))
        assert binarize_mask(t, 0.5).data.sum() == 16

    def test_boundary_value_is_foreground(self):
        # (0 + 1)/2 = 0.5 >= 0.5
        t = Tensor(np.array([[[0.0]]]))
        assert binarize_mask(t, 0.5).data[0, 0, 0] == 1


def test_mask_to_tensor_rgb_luminance():
    arr = np.zeros((1, 2, 3), dtype=np.uint8)
    arr[0, 1] = [255, 255, 255]
    t = mask_to_tensor(RawImage(arr))
    np.testing.assert_array_equal(t.data[0], [[-1.0, 1.0]])


def _dataset(n):
    return Dataset(
        records=[DatasetRecord(f"s{i}", f"{i}.png", f"{i}_m.png") for i in range(n)]
    )


class TestSplit:
    def test_800_200(self):
        train, val = split_dataset(
            _dataset(1000), PrepConfig(256, 256, 800, 200, shuffle_seed=7)
        )
        assert len(train) == 800 and len(val) == 200
        assert not {r.id for r in train.records} & {r.id for r in val.records}

    def test_degenerate_all_train(self):
        train, val = split_dataset(_dataset(10), PrepConfig(64, 64, 10, 0))
        assert len(train) == 10 and len(val) == 0

    def test_deterministic(self):
        cfg = PrepConfig(64, 64, 6, 4, shuffle_seed=42)
        a = split_dataset(_dataset(10), cfg)
        b = split_dataset(_dataset(10), cfg)
        assert [r.id for r in a[0].records] == [r.id for r in b[0].records]
        assert [r.id for r in a[1].records] == [r.id for r in b[1].records]

    def test_too_large(self):
        with pytest.raises(SplitTooLarge):
            split_dataset(_dataset(10), PrepConfig(64, 64, 8, 4))


class TestEpochIterator:
    def test_batch_sizes(self, rng):
        pairs = [random_pair(rng, 8, 8, f"p{i}") for i in range(10)]
        sizes = [len(b) for b in epoch_iterator(pairs, 4, seed=0, epoch=0)]
        assert sizes == [4, 4, 2]

    def test_single_full_batch(self, rng):
        pairs = [random_pair(rng, 8, 8, f"p{i}") for i in range(4)]
        assert [len(b) for b in epoch_iterator(pairs, 4, 0, 0)] == [4]

    def test_each_sample_once_per_epoch(self, rng):
        pairs = [random_pair(rng, 8, 8, f"p{i}") for i in range(10)]
        for epoch in range(3):
            seen = [i for b in epoch_iterator(pairs, 3, 9, epoch) for i in b.ids]
            assert sorted(seen) == sorted(p.id for p in pairs)

    def test_deterministic_per_seed_epoch(self, rng):
        pairs = [random_pair(rng, 8, 8, f"p{i}") for i in range(10)]
        a = [b.ids for b in epoch_iterator(pairs, 4, 5, 2)]
        b = [b.ids for b in epoch_iterator(pairs, 4, 5, 2)]
        assert a == b
        c = [b.ids for b in epoch_iterator(pairs, 4, 5, 3)]
        assert a != c


class TestGoldenFiles:
    """Frozen outputs for the identity / crop / pad preparation cases."""

    def test_identity_case(self):
        img = gray(np.arange(16, dtype=np.uint8).reshape(4, 4) * 16)
        out = fit_to_dims(img, 4, 4)
        golden = np.load(os.path.join(GOLDEN, "fit_identity.npy"))
        np.testing.assert_array_equal(out.array, golden)

    def test_crop_case(self):
        img = gray(np.arange(36, dtype=np.uint8).reshape(6, 6) * 7)
        out = fit_to_dims(img, 4, 2)
        golden = np.load(os.path.join(GOLDEN, "fit_crop.npy"))
        np.testing.assert_array_equal(out.array, golden)

    def test_pad_case(self):
        img = gray(np.arange(6, dtype=np.uint8).reshape(2, 3) * 40)
        out = fit_to_dims(img, 5, 4)
        golden = np.load(os.path.join(GOLDEN, "fit_pad.npy"))
        np.testing.assert_array_equal(out.array, golden)

    def test_normalize_golden(self):
        img = gray(np.arange(16, dtype=np.uint8).reshape(4, 4) * 16)
        out = normalize(fit_to_dims(img, 4, 4))
        golden = np.load(os.path.join(GOLDEN, "normalize_identity.npy"))
        np.testing.assert_array_equal(out.data, golden)
