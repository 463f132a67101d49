"""Versioned binary checkpoint files.

Layout (all integers little-endian):

    bytes 0..3   magic b"PGCK"
    bytes 4..7   format version, uint32 (currently 1)
    bytes 8..15  header length N, uint64
    N bytes      UTF-8 JSON header
    rest         raw tensor payloads, concatenated in header order

The JSON header carries the generator/discriminator configs, training
metadata (epoch, step, seed, image size, loss mode, threshold), the float
dtype, and an ordered tensor directory of {name, shape}. Payloads are plain
little-endian floats in the header's dtype.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import BadCheckpoint
from .networks import (
    DiscriminatorConfig,
    DiscriminatorParams,
    GeneratorConfig,
    GeneratorParams,
)

MAGIC = b"PGCK"
VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8"}


def _collect(gen: GeneratorParams, disc: DiscriminatorParams | None, extra):
    tensors: list[tuple[str, np.ndarray]] = []
    for name, t in gen.named_tensors():
        tensors.append((f"gen.{name}", t))
    if disc is not None:
        for name, t in disc.named_tensors():
            tensors.append((f"disc.{name}", t))
    for name, t in extra or []:
        tensors.append((name, t))
    return tensors


def save_checkpoint(
    path: str,
    gen_cfg: GeneratorConfig,
    gen_params: GeneratorParams,
    disc_cfg: DiscriminatorConfig | None = None,
    disc_params: DiscriminatorParams | None = None,
    extra_tensors=None,
    meta: dict | None = None,
) -> None:
    tensors = _collect(gen_params, disc_params, extra_tensors)
    dtype = str(tensors[0][1].dtype)
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported checkpoint dtype {dtype}")
    header = {
        "generator": vars(gen_cfg) | {},
        "discriminator": vars(disc_cfg) | {} if disc_cfg else None,
        "dtype": dtype,
        "meta": meta or {},
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, t in tensors:
            fh.write(np.ascontiguousarray(t, dtype=_DTYPES[dtype]).tobytes())


def load_checkpoint(path: str):
    """Returns (gen_cfg, gen_params, disc_cfg, disc_params, extra, meta).

    disc_* are None when the checkpoint holds only a generator; extra is a
    dict of the remaining named tensors (optimizer moments etc).
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise BadCheckpoint(f"cannot read {path}: {e}") from e
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise BadCheckpoint(f"{path}: not a checkpoint file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise BadCheckpoint(f"{path}: unsupported format version {version}")
    (hlen,) = struct.unpack_from("<Q", raw, 8)
    try:
        header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise BadCheckpoint(f"{path}: corrupt header") from e
    dtype = header.get("dtype")
    if dtype not in _DTYPES:
        raise BadCheckpoint(f"{path}: bad dtype {dtype!r}")
    np_dtype = np.dtype(_DTYPES[dtype])

    offset = 16 + hlen
    named: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * np_dtype.itemsize
        if offset + nbytes > len(raw):
            raise BadCheckpoint(f"{path}: truncated tensor payload")
        named[entry["name"]] = np.frombuffer(
            raw, dtype=np_dtype, count=count, offset=offset
        ).reshape(shape).copy()
        offset += nbytes

    try:
        gen_cfg = GeneratorConfig(**header["generator"])
        gen_params = _rebuild_generator(gen_cfg, named)
        disc_cfg = disc_params = None
        if header.get("discriminator"):
            disc_cfg = DiscriminatorConfig(**header["discriminator"])
            disc_params = _rebuild_discriminator(disc_cfg, named)
    except (KeyError, TypeError, ValueError) as e:
        raise BadCheckpoint(f"{path}: inconsistent header/tensors: {e}") from e
    extra = {n: t for n, t in named.items() if not n.startswith(("gen.", "disc."))}
    return gen_cfg, gen_params, disc_cfg, disc_params, extra, header.get("meta", {})


def _rebuild_generator(cfg: GeneratorConfig, named) -> GeneratorParams:
    params = GeneratorParams(
        enc_w=[named[f"gen.enc{i}.w"] for i in range(1, cfg.levels + 1)],
        enc_b=[named[f"gen.enc{i}.b"] for i in range(1, cfg.levels + 1)],
        dec_w=[named[f"gen.dec{i}.w"] for i in range(1, cfg.levels + 1)],
        dec_b=[named[f"gen.dec{i}.b"] for i in range(1, cfg.levels + 1)],
    )
    _check_generator_shapes(cfg, params)
    return params


def _check_generator_shapes(cfg: GeneratorConfig, params: GeneratorParams):
    enc = cfg.encoder_channels()
    cin = cfg.in_channels
    for i, cout in enumerate(enc):
        if params.enc_w[i].shape != (cout, cin, 4, 4):
            raise BadCheckpoint(f"generator enc{i + 1} weight shape mismatch")
        cin = cout
    for j, (ci, co) in enumerate(zip(cfg.decoder_in_channels(), cfg.decoder_channels())):
        if params.dec_w[j].shape != (ci, co, 4, 4):
            raise BadCheckpoint(f"generator dec{j + 1} weight shape mismatch")


def _rebuild_discriminator(cfg: DiscriminatorConfig, named) -> DiscriminatorParams:
    params = DiscriminatorParams(
        w=[named[f"disc.conv{i}.w"] for i in range(1, 5)],
        b=[named[f"disc.conv{i}.b"] for i in range(1, 5)],
    )
    cin = cfg.in_channels
    for i, cout in enumerate(cfg.channels()):
        if params.w[i].shape != (cout, cin, 4, 4):
            raise BadCheckpoint(f"discriminator conv{i + 1} weight shape mismatch")
        cin = cout
    return params
