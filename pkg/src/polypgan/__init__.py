"""Conditional-GAN polyp segmentation toolkit built on numpy.

An encoder-decoder generator translates RGB endoscopy-style images into
binary masks; a patch discriminator scores image-mask pairs; the two train
adversarially. Includes a synthetic dataset generator, a full metric
suite, versioned checkpoints, and a CLI (``polypgan``).
"""

__version__ = "0.1.0"

from .core_types import Batch, Dataset, RawImage, SamplePair, Tensor, make_batch
from .networks import (
    DiscriminatorConfig,
    GeneratorConfig,
    concat_condition,
    discriminator_forward,
    generator_forward,
    init_discriminator,
    init_generator,
)
from .training import TrainConfig, train, train_step

__all__ = [
    "Batch",
    "Dataset",
    "DiscriminatorConfig",
    "GeneratorConfig",
    "RawImage",
    "SamplePair",
    "Tensor",
    "TrainConfig",
    "concat_condition",
    "discriminator_forward",
    "generator_forward",
    "init_discriminator",
    "init_generator",
    "make_batch",
    "train",
    "train_step",
    "__version__",
]
