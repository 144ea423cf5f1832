"""Per-feature adversarial crafting: C&W, WGAN evasion and dependency repair."""

from .constraints import (
    DEPENDENTS,
    EPSILON,
    INITIAL_TTL,
    adjust_dependencies,
    dependency_residual,
    feature_mask,
    touched_columns,
)
from .cw import (
    AdversarialBatch,
    CwConfig,
    cw_batch,
    cw_gradient,
    cw_loss,
    finalize_batch,
    generate_cw_adversary,
    generate_relative_noise,
)
from .gan import GanConfig, Generator, composite, gan_generate_adversaries, train_evasion_gan
from .io import write_adversarial_csv, write_attack_manifest

__all__ = [
    "DEPENDENTS", "EPSILON", "INITIAL_TTL", "adjust_dependencies", "dependency_residual",
    "feature_mask", "touched_columns", "AdversarialBatch", "CwConfig", "cw_batch", "cw_gradient",
    "cw_loss", "finalize_batch", "generate_cw_adversary", "generate_relative_noise", "GanConfig",
    "Generator", "composite", "gan_generate_adversaries", "train_evasion_gan",
    "write_adversarial_csv", "write_attack_manifest",
]
