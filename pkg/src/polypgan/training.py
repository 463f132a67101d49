"""Adversarial training: alternating discriminator/generator Adam updates,
per-epoch checkpoints, contact-sheet sample dumps, and an ndjson loss log.

Per batch the step is: one discriminator update on real pairs (image, mask)
and fake pairs (image, generated mask with gradients detached), then one
generator update through the frozen discriminator. The default generator
objective is the saturating form, descending +E[log(1 - D(fake))]; the
non-saturating form and a feature-matching variant are selectable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np
from PIL import Image

from . import metrics as metrics_mod
from .checkpoint import save_checkpoint
from .core_types import Batch, SamplePair, Tensor
from .data_pipeline import denormalize, epoch_iterator
from .errors import EmptyInput, MixedShapes, NonFiniteLoss
from .networks import (
    DiscriminatorConfig,
    DiscriminatorParams,
    GeneratorConfig,
    GeneratorParams,
    concat_condition,
    discriminator_backward,
    discriminator_forward,
    generator_backward,
    generator_forward,
    init_discriminator,
    init_generator,
)

ADAM_EPS = 1e-8
_STREAM_D = 0xD0 << 48
_STREAM_G = 0x60 << 48


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 12
    batch_size: int = 4
    learning_rate: float = 0.002
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    log_eps: float = 1e-8
    generator_loss_mode: str = "saturating"
    feature_matching: bool = False
    seed: int = 0
    sample_dump_count: int = 4

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs/batch_size >= 1 and learning_rate > 0 required")
        if self.generator_loss_mode not in ("saturating", "non_saturating"):
            raise ValueError(f"unknown loss mode {self.generator_loss_mode!r}")


@dataclass
class AdamMoments:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, named) -> "AdamMoments":
        named = list(named)
        return cls(
            m={n: np.zeros_like(t) for n, t in named},
            v={n: np.zeros_like(t) for n, t in named},
        )


@dataclass
class TrainState:
    gen_params: GeneratorParams
    disc_params: DiscriminatorParams
    gen_opt: AdamMoments
    disc_opt: AdamMoments
    step: int = 0
    epoch: int = 0
    seed: int = 0


@dataclass(frozen=True)
class LossRecord:
    epoch: int
    step: int
    d_loss: float
    g_loss: float
    d_real_mean: float
    d_fake_mean: float


def init_train_state(
    gen_cfg: GeneratorConfig,
    disc_cfg: DiscriminatorConfig,
    seed: int,
    dtype=np.float32,
) -> TrainState:
    gen = init_generator(gen_cfg, seed, dtype)
    disc = init_discriminator(disc_cfg, seed + 1, dtype)
    return TrainState(
        gen_params=gen,
        disc_params=disc,
        gen_opt=AdamMoments.zeros_like(gen.named_tensors()),
        disc_opt=AdamMoments.zeros_like(disc.named_tensors()),
        seed=seed,
    )


def _clip(p: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    # float64 internally: in float32 the upper bound 1 - eps rounds to 1.0
    p64 = np.asarray(p, dtype=np.float64)
    clipped = np.clip(p64, eps, 1.0 - eps)
    interior = (p64 > eps) & (p64 < 1.0 - eps)
    return clipped, interior


def discriminator_loss(d_real, d_fake, eps: float = 1e-8):
    """-mean(log d_real) - mean(log(1 - d_fake)) over batch and patches.

    Returns (loss, grad_d_real, grad_d_fake); inputs are clamped to
    [eps, 1-eps] so the loss is finite for any probabilities.
    """
    dtype = np.asarray(d_real).dtype
    r, r_in = _clip(np.asarray(d_real), eps)
    f, f_in = _clip(np.asarray(d_fake), eps)
    loss = float(-np.mean(np.log(r)) - np.mean(np.log1p(-f)))
    grad_r = np.where(r_in, -1.0 / (r.size * r), 0.0).astype(dtype)
    grad_f = np.where(f_in, 1.0 / (f.size * (1.0 - f)), 0.0).astype(dtype)
    return loss, grad_r, grad_f


def generator_loss(d_fake, mode: str = "saturating", eps: float = 1e-8):
    """Adversarial generator objective; returns (loss, grad_d_fake).

    saturating: +mean(log(1 - d_fake)) — the minimax objective as written;
    non_saturating: -mean(log d_fake).
    """
    dtype = np.asarray(d_fake).dtype
    f, f_in = _clip(np.asarray(d_fake), eps)
    if mode == "saturating":
        loss = float(np.mean(np.log1p(-f)))
        grad = np.where(f_in, -1.0 / (f.size * (1.0 - f)), 0.0)
    elif mode == "non_saturating":
        loss = float(-np.mean(np.log(f)))
        grad = np.where(f_in, -1.0 / (f.size * f), 0.0)
    else:
        raise ValueError(f"unknown loss mode {mode!r}")
    return loss, grad.astype(dtype)


def feature_matching_loss(feat_real, feat_fake):
    """Mean absolute difference of discriminator features.

    Returns (loss, grad_feat_fake); feat_real is treated as constant.
    """
    if feat_real.shape != feat_fake.shape:
        raise MixedShapes(f"{feat_real.shape} vs {feat_fake.shape}")
    diff = feat_fake - feat_real
    loss = float(np.mean(np.abs(diff)))
    grad = np.sign(diff) / diff.size
    return loss, grad


def adam_update(
    params_named: list[tuple[str, np.ndarray]],
    grads: dict[str, np.ndarray],
    opt: AdamMoments,
    step: int,
    lr: float,
    beta1: float,
    beta2: float,
) -> None:
    """In-place bias-corrected Adam step; `step` is 1-based."""
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    for name, p in params_named:
        g = grads[name]
        m = opt.m[name]
        v = opt.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= (lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)).astype(p.dtype)


def _dropout_rng(seed: int, stream: int, step: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, stream | step]))


def discriminator_step(
    state: TrainState,
    batch: Batch,
    cfg: TrainConfig,
    gen_cfg: GeneratorConfig,
    disc_cfg: DiscriminatorConfig,
    fake: np.ndarray,
):
    """One discriminator update against the given (detached) fake masks."""
    x = batch.images.data
    y = batch.masks.data
    d_real, _, cache_r = discriminator_forward(
        state.disc_params, disc_cfg, concat_condition(x, y), want_cache=True
    )
    d_fake, _, cache_f = discriminator_forward(
        state.disc_params, disc_cfg, concat_condition(x, fake), want_cache=True
    )
    d_loss, grad_r, grad_f = discriminator_loss(d_real, d_fake, cfg.log_eps)
    grads_r, _ = discriminator_backward(grad_r, cache_r)
    grads_f, _ = discriminator_backward(grad_f, cache_f)
    grads = {n: grads_r[n] + grads_f[n] for n in grads_r}
    adam_update(
        list(state.disc_params.named_tensors()),
        grads,
        state.disc_opt,
        state.step + 1,
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
    )
    return d_loss, float(d_real.mean()), float(d_fake.mean())


def train_step(
    state: TrainState,
    batch: Batch,
    cfg: TrainConfig,
    gen_cfg: GeneratorConfig,
    disc_cfg: DiscriminatorConfig,
) -> LossRecord:
    """One discriminator update then one generator update; mutates state."""
    x = batch.images.data
    y = batch.masks.data

    # -- discriminator half-step (generator output detached)
    fake = generator_forward(
        state.gen_params,
        gen_cfg,
        x,
        training=True,
        dropout_rng=_dropout_rng(cfg.seed, _STREAM_D, state.step),
    )
    d_loss, d_real_mean, d_fake_mean = discriminator_step(
        state, batch, cfg, gen_cfg, disc_cfg, fake
    )

    # -- generator half-step (discriminator frozen)
    fake2, gen_cache = generator_forward(
        state.gen_params,
        gen_cfg,
        x,
        training=True,
        dropout_rng=_dropout_rng(cfg.seed, _STREAM_G, state.step),
        want_cache=True,
    )
    d_fake2, feat_fake, disc_cache = discriminator_forward(
        state.disc_params, disc_cfg, concat_condition(x, fake2), want_cache=True
    )
    if cfg.feature_matching:
        _, feat_real = discriminator_forward(
            state.disc_params, disc_cfg, concat_condition(x, y)
        )
        g_loss, grad_feat = feature_matching_loss(feat_real, feat_fake)
        grad_probs = np.zeros_like(d_fake2)
        _, grad_input = discriminator_backward(grad_probs, disc_cache, grad_feat)
    else:
        g_loss, grad_probs = generator_loss(
            d_fake2, cfg.generator_loss_mode, cfg.log_eps
        )
        _, grad_input = discriminator_backward(grad_probs, disc_cache)
    if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
        raise NonFiniteLoss(
            f"step {state.step}: d_loss={d_loss}, g_loss={g_loss}"
        )
    grad_fake = grad_input[:, gen_cfg.in_channels :]
    gen_grads = generator_backward(grad_fake, gen_cache)
    adam_update(
        list(state.gen_params.named_tensors()),
        gen_grads,
        state.gen_opt,
        state.step + 1,
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
    )

    state.step += 1
    return LossRecord(
        epoch=state.epoch,
        step=state.step,
        d_loss=d_loss,
        g_loss=g_loss,
        d_real_mean=d_real_mean,
        d_fake_mean=d_fake_mean,
    )


def _to_gray_panel(mask01: np.ndarray) -> np.ndarray:
    """[1,H,W] values in [-1,1] -> HxWx3 uint8 grayscale panel."""
    g = np.clip(np.floor((mask01[0] + 1.0) * 127.5 + 0.5), 0, 255).astype(np.uint8)
    return np.stack([g, g, g], axis=-1)


def write_sample_sheet(
    path: str,
    gen_params: GeneratorParams,
    gen_cfg: GeneratorConfig,
    pairs: list[SamplePair],
) -> None:
    """Contact sheet: one row per sample — input | generated mask | truth."""
    rows = []
    for p in pairs:
        y = generator_forward(gen_params, gen_cfg, p.image.data[None], training=False)
        img = denormalize(Tensor(p.image.data)).array
        panels = [img, _to_gray_panel(y[0]), _to_gray_panel(p.mask.data)]
        rows.append(np.concatenate(panels, axis=1))
    Image.fromarray(np.concatenate(rows, axis=0)).save(path)


def train(
    cfg: TrainConfig,
    gen_cfg: GeneratorConfig,
    disc_cfg: DiscriminatorConfig,
    train_pairs: list[SamplePair],
    val_pairs: list[SamplePair] | None,
    out_dir: str,
    dtype=np.float32,
    state: TrainState | None = None,
    log_fn=None,
) -> list[str]:
    """Full training run; returns the per-epoch checkpoint paths.

    Writes ckpt_epoch_{N:03}.bin, epoch_{N:03}.png sample sheets,
    loss_log.ndjson, and (with a val set) val_metrics.ndjson under out_dir.
    """
    if not train_pairs:
        raise EmptyInput("empty training set")
    os.makedirs(out_dir, exist_ok=True)
    if state is None:
        state = init_train_state(gen_cfg, disc_cfg, cfg.seed, dtype)
    dump_pairs = (val_pairs or train_pairs)[: cfg.sample_dump_count]
    ckpt_paths = []
    log_path = os.path.join(out_dir, "loss_log.ndjson")
    val_path = os.path.join(out_dir, "val_metrics.ndjson")
    if val_pairs:
        open(val_path, "w").close()
    with open(log_path, "w") as log_fh:
        for epoch in range(1, cfg.epochs + 1):
            state.epoch = epoch
            for batch in epoch_iterator(train_pairs, cfg.batch_size, cfg.seed, epoch):
                record = train_step(state, batch, cfg, gen_cfg, disc_cfg)
                log_fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")
                if log_fn:
                    log_fn(record)
            ckpt = os.path.join(out_dir, f"ckpt_epoch_{epoch:03d}.bin")
            save_checkpoint(
                ckpt,
                gen_cfg,
                state.gen_params,
                disc_cfg,
                state.disc_params,
                extra_tensors=_opt_tensors(state),
                meta={
                    "epoch": epoch,
                    "step": state.step,
                    "seed": cfg.seed,
                    "generator_loss_mode": cfg.generator_loss_mode,
                    "feature_matching": cfg.feature_matching,
                    "image_height": int(train_pairs[0].image.shape[1]),
                    "image_width": int(train_pairs[0].image.shape[2]),
                },
            )
            ckpt_paths.append(ckpt)
            write_sample_sheet(
                os.path.join(out_dir, f"epoch_{epoch:03d}.png"),
                state.gen_params,
                gen_cfg,
                dump_pairs,
            )
            if val_pairs:
                report = metrics_mod.evaluate_pairs(
                    state.gen_params, gen_cfg, val_pairs
                )
                with open(val_path, "a") as fh:
                    fh.write(
                        json.dumps({"epoch": epoch} | json.loads(report.to_json()))
                        + "\n"
                    )
    return ckpt_paths


def _opt_tensors(state: TrainState):
    out = []
    for prefix, opt in (("gen", state.gen_opt), ("disc", state.disc_opt)):
        for name, t in sorted(opt.m.items()):
            out.append((f"opt.{prefix}.{name}.m", t))
        for name, t in sorted(opt.v.items()):
            out.append((f"opt.{prefix}.{name}.v", t))
    return out
