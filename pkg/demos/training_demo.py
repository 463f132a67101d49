"""Train the adversarial pair for a few epochs on synthetic data.

The generator maps a 3-channel image to a 1-channel mask in [-1, 1]; the
discriminator scores (image, mask) pairs patch-wise. Each step updates the
discriminator against detached generator output, then updates the
generator through the frozen discriminator. Everything is seeded, so two
runs of this script print identical numbers.

Run:  python3 demos/training_demo.py
(~1 minute on one CPU core)
"""

import tempfile

from polypgan.data_pipeline import PrepConfig, prepare_pairs, split_dataset
from polypgan.metrics import evaluate_pairs
from polypgan.networks import DiscriminatorConfig, GeneratorConfig
from polypgan.synth_data import SynthConfig, generate_dataset
from polypgan.training import TrainConfig, train

data_dir = tempfile.mkdtemp(prefix="train_demo_data_")
run_dir = tempfile.mkdtemp(prefix="train_demo_run_")

dataset = generate_dataset(SynthConfig(count=60, seed=6), data_dir)
prep = PrepConfig(
    target_width=64, target_height=64,
    split_train=48, split_val=12, shuffle_seed=0,
)
train_set, val_set = split_dataset(dataset, prep)
train_pairs = prepare_pairs(train_set, 64, 64)
val_pairs = prepare_pairs(val_set, 64, 64)

gen_cfg = GeneratorConfig(base_filters=8, levels=6)
disc_cfg = DiscriminatorConfig(base_filters=8)
cfg = TrainConfig(epochs=3, batch_size=4, seed=6)


def log(rec):
    if rec.step % 6 == 0:
        print(
            f"  epoch {rec.epoch} step {rec.step}: "
            f"d_loss={rec.d_loss:.3f} g_loss={rec.g_loss:.3f} "
            f"D(real)={rec.d_real_mean:.2f} D(fake)={rec.d_fake_mean:.2f}"
        )


print(f"training {gen_cfg.base_filters}-filter networks on "
      f"{len(train_pairs)} pairs ({cfg.epochs} epochs)...")
checkpoints = train(cfg, gen_cfg, disc_cfg, train_pairs, val_pairs, run_dir,
                    log_fn=log)

print(f"\ncheckpoints: {checkpoints}")
print(f"sample sheets and loss log in {run_dir}")

# reload the last checkpoint and score the validation split
from polypgan.checkpoint import load_checkpoint

gcfg, gparams, _, _, _, meta = load_checkpoint(checkpoints[-1])
report = evaluate_pairs(gparams, gcfg, val_pairs)
print(f"validation after epoch {meta['epoch']}:")
print(report.to_json())
