"""Toy BART-style denoising transformer in numpy."""

from .bundle import Embedder, embed_molecule, load_bundle, save_bundle
from .model import (DenoisingTransformer, ModelConfig, backward, encode, forward_denoise,
                    init_model, pool)
from .train import TrainConfig, TrainReport, evaluate_reconstruction, pretrain

__all__ = [
    "DenoisingTransformer", "Embedder", "ModelConfig", "TrainConfig", "TrainReport",
    "backward", "embed_molecule", "encode", "evaluate_reconstruction", "forward_denoise",
    "init_model", "load_bundle", "pool", "pretrain", "save_bundle",
]
