"""Autoregressive reverse-time rollout from a trained prior."""

from __future__ import annotations

import numpy as np
import torch

from ..errors import ModelStateError
from ..kinematics import Trajectory
from ..kinematics.pose import POSE_DIM
from .cvae import PriorModel, _prior_step_gen


def rollout(
    model: PriorModel,
    start,
    frames: int = 30,
    seed: int = 0,
    sample: bool = True,
) -> Trajectory:
    """Reverse-time trajectory of `frames` states, frame 0 == start exactly.

    Convert with kinematics.reverse_time to get the forward-time clip that
    ends at the start pose.
    """
    if not getattr(model, "trained", False):
        raise ModelStateError("prior model has not been trained")
    out = np.zeros((max(frames, 1), POSE_DIM))
    out[0] = start.flatten()
    gen = torch.Generator().manual_seed(seed)
    current = start
    for i in range(1, frames):
        current = _prior_step_gen(model, current, sample, gen)
        out[i] = current.flatten()
    return Trajectory(out[:frames], interaction_frame_index=0)
