from .cvae import (
    PriorConfig,
    PriorModel,
    kl_divergence,
    load_prior,
    prior_step,
    save_prior,
    train_prior,
)
from .rollout import rollout
from .toy_motion import (
    ToyMotionConfig,
    flat_ankle_height,
    generate_toy_motions,
    standing_height,
    standing_pose,
    synthesize_clip,
)
