import os

import numpy as np
import pytest

from polypgan.errors import EmptyDataset
from polypgan.synth_data import SynthConfig, generate_dataset, generate_sample


def test_mask_matches_brute_force_ellipse():
    cfg = SynthConfig(count=1, width=64, height=64, min_axes=8, max_axes=8, seed=3)
    _, mask = generate_sample(cfg, 0)
    m = mask.array[:, :, 0]
    fg = np.argwhere(m == 255)
    # recover center from the mask's bounding box, then recheck every pixel
    cy = (fg[:, 0].min() + fg[:, 0].max()) / 2
    cx = (fg[:, 1].min() + fg[:, 1].max()) / 2
    for y in range(64):
        for x in range(64):
            inside = ((x - cx) / 8) ** 2 + ((y - cy) / 8) ** 2 <= 1.0
            assert (m[y, x] == 255) == inside, (y, x)


def test_same_seed_index_bit_identical():
    cfg = SynthConfig(count=5, seed=9)
    a_img, a_msk = generate_sample(cfg, 2)
    b_img, b_msk = generate_sample(cfg, 2)
    np.testing.assert_array_equal(a_img.array, b_img.array)
    np.testing.assert_array_equal(a_msk.array, b_msk.array)


def test_samples_independent_of_order():
    cfg = SynthConfig(count=5, seed=9)
    first = generate_sample(cfg, 4)[0].array
    for i in range(4):
        generate_sample(cfg, i)
    np.testing.assert_array_equal(generate_sample(cfg, 4)[0].array, first)


def test_tiny_axes_nonempty_mask():
    cfg = SynthConfig(count=1, width=16, height=16, min_axes=1, max_axes=1, seed=0)
    _, mask = generate_sample(cfg, 0)
    assert (mask.array == 255).any()


def test_mask_binary_and_foreground_fraction():
    cfg = SynthConfig(count=20, seed=5)
    for i in range(cfg.count):
        _, mask = generate_sample(cfg, i)
        vals = np.unique(mask.array)
        assert set(vals.tolist()) <= {0, 255}
        frac = (mask.array == 255).mean()
        assert 0.0 < frac < 0.5


def test_generate_dataset_files(tmp_path):
    cfg = SynthConfig(count=10, seed=1)
    ds = generate_dataset(cfg, str(tmp_path))
    assert len(ds) == 10
    pngs = [f for f in os.listdir(tmp_path) if f.endswith(".png")]
    assert len(pngs) == 20
    with open(ds.manifest_path) as fh:
        assert len(fh.readlines()) == 10


def test_generate_dataset_zero_count(tmp_path):
    with pytest.raises(EmptyDataset):
        generate_dataset(SynthConfig(count=0, seed=1), str(tmp_path))


def test_regeneration_byte_identical(tmp_path):
    cfg = SynthConfig(count=3, seed=4)
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate_dataset(cfg, str(a))
    generate_dataset(cfg, str(b))
    for name in sorted(os.listdir(a)):
        if name.endswith(".png"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


def test_invalid_configs():
    with pytest.raises(ValueError):
        SynthConfig(min_axes=0)
    with pytest.raises(ValueError):
        SynthConfig(min_axes=40, max_axes=40, width=64, height=64)
