import numpy as np
import pytest

from polypgan.checkpoint import load_checkpoint, save_checkpoint
from polypgan.errors import BadCheckpoint
from polypgan.networks import (
    DiscriminatorConfig,
    GeneratorConfig,
    init_discriminator,
    init_generator,
)


@pytest.fixture
def small_nets():
    gen_cfg = GeneratorConfig(base_filters=2, levels=3)
    disc_cfg = DiscriminatorConfig(base_filters=2)
    return gen_cfg, init_generator(gen_cfg, 1), disc_cfg, init_discriminator(disc_cfg, 2)


class TestRoundTrip:
    def test_generator_only(self, small_nets, tmp_path):
        gen_cfg, gen, _, _ = small_nets
        path = str(tmp_path / "g.bin")
        save_checkpoint(path, gen_cfg, gen, meta={"epoch": 3})
        cfg2, gen2, disc_cfg2, disc2, extra, meta = load_checkpoint(path)
        assert cfg2 == gen_cfg
        assert disc_cfg2 is None and disc2 is None
        assert extra == {}
        assert meta == {"epoch": 3}
        for (na, ta), (nb, tb) in zip(gen.named_tensors(), gen2.named_tensors()):
            assert na == nb
            np.testing.assert_array_equal(ta, tb)

    def test_with_discriminator_and_extras(self, small_nets, tmp_path):
        gen_cfg, gen, disc_cfg, disc = small_nets
        extras = [("opt.gen.enc1.w.m", np.full_like(gen.enc_w[0], 0.5))]
        path = str(tmp_path / "full.bin")
        save_checkpoint(path, gen_cfg, gen, disc_cfg, disc, extras)
        _, _, disc_cfg2, disc2, extra, _ = load_checkpoint(path)
        assert disc_cfg2 == disc_cfg
        for (na, ta), (nb, tb) in zip(disc.named_tensors(), disc2.named_tensors()):
            np.testing.assert_array_equal(ta, tb)
        np.testing.assert_array_equal(extra["opt.gen.enc1.w.m"], extras[0][1])

    def test_float64_dtype_preserved(self, tmp_path):
        gen_cfg = GeneratorConfig(base_filters=1, levels=2)
        gen = init_generator(gen_cfg, 0, dtype=np.float64)
        path = str(tmp_path / "g64.bin")
        save_checkpoint(path, gen_cfg, gen)
        _, gen2, _, _, _, _ = load_checkpoint(path)
        assert gen2.enc_w[0].dtype == np.float64

    def test_save_is_byte_deterministic(self, small_nets, tmp_path):
        gen_cfg, gen, disc_cfg, disc = small_nets
        a = tmp_path / "a.bin"
        b = tmp_path / "b.bin"
        save_checkpoint(str(a), gen_cfg, gen, disc_cfg, disc, meta={"k": 1})
        save_checkpoint(str(b), gen_cfg, gen, disc_cfg, disc, meta={"k": 1})
        assert a.read_bytes() == b.read_bytes()


class TestCorruption:
    def test_missing_file(self, tmp_path):
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(tmp_path / "nope.bin"))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(path))

    def test_truncated_payload(self, small_nets, tmp_path):
        gen_cfg, gen, _, _ = small_nets
        path = tmp_path / "t.bin"
        save_checkpoint(str(path), gen_cfg, gen)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 64])
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(path))

    def test_corrupt_header(self, small_nets, tmp_path):
        gen_cfg, gen, _, _ = small_nets
        path = tmp_path / "h.bin"
        save_checkpoint(str(path), gen_cfg, gen)
        blob = bytearray(path.read_bytes())
        blob[20] = 0xFF  # inside the JSON header
        path.write_bytes(bytes(blob))
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(path))

    def test_wrong_version(self, small_nets, tmp_path):
        import struct

        gen_cfg, gen, _, _ = small_nets
        path = tmp_path / "v.bin"
        save_checkpoint(str(path), gen_cfg, gen)
        blob = bytearray(path.read_bytes())
        blob[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(blob))
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(path))
