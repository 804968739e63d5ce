"""Reverse-time conditional VAE over single-frame transitions.

Given the current 336-dim pose state the model predicts the state one
frame EARLIER in time (training clips are time-reversed before pairing).
Every transition is expressed in the local ground frame of its input
pose (root over the origin, heading +Z), which makes the model exactly
translation- and yaw-equivariant. Posterior, conditional prior, and
decoder are 3-layer MLPs; the decoder predicts a normalized state delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from ..errors import DataError, HeadingUndefinedError, ModelStateError
from ..kinematics import (
    GroundTransform,
    PoseState,
    Trajectory,
    forward_kinematics,
    reverse_time,
)
from ..kinematics.pose import J_P, J_R, T_P, POSE_DIM, heading_angle
from ..kinematics.skeleton import DEFAULT_SKELETON, Skeleton

CHECKPOINT_FORMAT_VERSION = 1


def _mlp(dims, out_dim):
    layers = []
    prev = dims[0]
    for h in dims[1:]:
        layers += [nn.Linear(prev, h), nn.ReLU()]
        prev = h
    layers.append(nn.Linear(prev, out_dim))
    return nn.Sequential(*layers)


class _SkipDecoder(nn.Module):
    """MLP that re-injects the latent at every layer (guards z-usage)."""

    def __init__(self, x_dim: int, z_dim: int, hidden: int, out_dim: int):
        super().__init__()
        self.fc1 = nn.Linear(x_dim + z_dim, hidden)
        self.fc2 = nn.Linear(hidden + z_dim, hidden)
        self.fc3 = nn.Linear(hidden + z_dim, hidden)
        self.out = nn.Linear(hidden, out_dim)
        self.act = nn.ReLU()

    def forward(self, x, z):
        h = self.act(self.fc1(torch.cat([x, z], dim=-1)))
        h = self.act(self.fc2(torch.cat([h, z], dim=-1)))
        h = self.act(self.fc3(torch.cat([h, z], dim=-1)))
        return self.out(h)


@dataclass
class PriorConfig:
    latent_dim: int = 32
    hidden: int = 256
    steps: int = 8000
    batch_size: int = 256
    lr: float = 1e-3
    kl_weight: float = 0.02
    input_noise: float = 0.08  # std of normalized-space noise on inputs
    seed: int = 0


class PriorModel(nn.Module):
    def __init__(self, config: PriorConfig | None = None,
                 skeleton: Skeleton = DEFAULT_SKELETON):
        super().__init__()
        self.config = config or PriorConfig()
        self.skeleton = skeleton
        h = self.config.hidden
        z = self.config.latent_dim
        self.encoder = _mlp([POSE_DIM * 2, h, h, h], z * 2)
        self.prior_net = _mlp([POSE_DIM, h, h, h], z * 2)
        self.decoder = _SkipDecoder(POSE_DIM, z, h, POSE_DIM)
        self.register_buffer("data_mean", torch.zeros(POSE_DIM))
        self.register_buffer("data_std", torch.ones(POSE_DIM))
        self.trained = False

    def normalize(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.data_mean) / self.data_std

    def denormalize(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.data_std + self.data_mean

    def posterior(self, x_norm, y_norm):
        mu, logvar = self.encoder(torch.cat([x_norm, y_norm], dim=-1)).chunk(2, -1)
        return mu, logvar.clamp(-8.0, 8.0)

    def conditional_prior(self, x_norm):
        mu, logvar = self.prior_net(x_norm).chunk(2, -1)
        return mu, logvar.clamp(-8.0, 8.0)

    def decode(self, x_norm, z):
        return x_norm + self.decoder(x_norm, z)


def kl_divergence(mu_q, logvar_q, mu_p, logvar_p) -> torch.Tensor:
    """KL(q || p) for diagonal Gaussians, grouped so each term is >= 0."""
    d = logvar_q - logvar_p
    ratio_term = torch.expm1(d) - d  # exp(d) - 1 - d >= 0
    mean_term = (mu_q - mu_p) ** 2 / torch.exp(logvar_p)
    return 0.5 * (ratio_term + mean_term).sum(dim=-1)


def _frame_transform(frame_flat: np.ndarray) -> GroundTransform:
    """Local ground frame of one pose; identity heading if undefined."""
    try:
        phi = heading_angle(frame_flat[66:72])
    except HeadingUndefinedError:
        phi = 0.0
    return GroundTransform(
        yaw=-phi, translation=np.array([frame_flat[330], 0.0, frame_flat[332]])
    )


def _transition_pairs(data: list[Trajectory]) -> tuple[np.ndarray, np.ndarray]:
    """(current, previous-in-time) pairs from time-reversed clips, each pair
    expressed in the local ground frame of its input pose."""
    xs, ys = [], []
    for traj in data:
        rev = reverse_time(traj)
        frames = rev.frames
        for i in range(frames.shape[0] - 1):
            tf = _frame_transform(frames[i])
            block = tf.apply_frames(frames[i : i + 2])
            xs.append(block[0])
            ys.append(block[1])
    if not xs:
        raise DataError("no transitions found in the prior training data")
    return np.stack(xs), np.stack(ys)


def train_prior(
    data: list[Trajectory],
    config: PriorConfig | None = None,
    skeleton: Skeleton = DEFAULT_SKELETON,
    log_every: int = 0,
) -> PriorModel:
    """Train the reverse-time CVAE on forward-time clips.

    Clips are time-reversed before forming transition pairs, so a rollout
    from an end pose generates the motion that leads up to it.
    """
    if not data:
        raise DataError("empty prior training dataset")
    config = config or PriorConfig()
    torch.manual_seed(config.seed)
    model = PriorModel(config, skeleton)
    x_np, y_np = _transition_pairs(data)
    # Stats over inputs AND targets: local-frame inputs have exactly-zero
    # dims (root ground position) whose targets still vary.
    both = np.concatenate([x_np, y_np])
    mean = both.mean(axis=0)
    std = np.maximum(both.std(axis=0), 1e-3)
    model.data_mean.copy_(torch.from_numpy(mean).float())
    model.data_std.copy_(torch.from_numpy(std).float())
    x = model.normalize(torch.from_numpy(x_np).float())
    y = model.normalize(torch.from_numpy(y_np).float())
    opt = torch.optim.AdamW(model.parameters(), lr=config.lr)
    gen = torch.Generator().manual_seed(config.seed)
    n = x.shape[0]
    model.train()
    losses = []
    for step in range(config.steps):
        idx = torch.randint(0, n, (min(config.batch_size, n),), generator=gen)
        xb, yb = x[idx], y[idx]
        if config.input_noise > 0:
            # Denoising-style robustness: condition on perturbed inputs so
            # autoregressive rollout errors do not compound.
            xb = xb + config.input_noise * torch.randn(xb.shape, generator=gen)
        mu_q, logvar_q = model.posterior(xb, yb)
        mu_p, logvar_p = model.conditional_prior(xb)
        eps = torch.randn(mu_q.shape, generator=gen)
        z = mu_q + torch.exp(0.5 * logvar_q) * eps
        pred = model.decode(xb, z)
        recon = ((pred - yb) ** 2).mean()
        kl = kl_divergence(mu_q, logvar_q, mu_p, logvar_p).mean()
        # Linear KL warmup over the first 40% of training wires the decoder
        # to the latent before the KL squeezes it (posterior-collapse guard).
        anneal = min(1.0, step / max(1, int(0.4 * config.steps)))
        loss = recon + anneal * config.kl_weight * kl
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
        if log_every and (step + 1) % log_every == 0:
            print(f"prior step {step + 1}: loss={loss:.5f} "
                  f"recon={recon:.5f} kl={kl:.3f}")
    model.trained = True
    model.loss_history = losses
    model.eval()
    return model


def _fk_feedback(pose_flat: np.ndarray, skeleton: Skeleton) -> np.ndarray:
    """Replace predicted joint positions with FK of predicted rotations."""
    out = pose_flat.copy()
    j_r = out[J_R].reshape(-1, 6)
    t_p = out[T_P]
    out[J_P] = forward_kinematics(skeleton, j_r, t_p).reshape(-1)
    return out


def prior_step(
    model: PriorModel,
    current: PoseState,
    sample: bool = True,
    seed: int = 0,
    fk_feedback: bool = True,
) -> PoseState:
    """One reverse-time transition; deterministic when sample=False."""
    if not getattr(model, "trained", False):
        raise ModelStateError("prior model has not been trained")
    gen = torch.Generator().manual_seed(seed)
    return _prior_step_gen(model, current, sample, gen, fk_feedback)


def _prior_step_gen(model, current, sample, gen, fk_feedback=True) -> PoseState:
    flat = current.flatten()
    tf = _frame_transform(flat)
    local = tf.apply_frames(flat[None])[0]
    with torch.no_grad():
        x = model.normalize(torch.from_numpy(local).float().unsqueeze(0))
        mu_p, logvar_p = model.conditional_prior(x)
        if sample:
            eps = torch.randn(mu_p.shape, generator=gen)
            z = mu_p + torch.exp(0.5 * logvar_p) * eps
        else:
            z = mu_p
        pred = model.denormalize(model.decode(x, z))[0].numpy().astype(np.float64)
    pred = tf.inverse().apply_frames(pred[None])[0]
    if fk_feedback:
        pred = _fk_feedback(pred, model.skeleton)
    return PoseState.from_flat(pred)


def save_prior(model: PriorModel, path) -> None:
    torch.save(
        {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "kind": "prior",
            "config": vars(model.config),
            "skeleton": model.skeleton.to_dict(),
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_prior(path) -> PriorModel:
    ckpt = torch.load(path, weights_only=False)
    if ckpt.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataError(f"unsupported prior checkpoint version in {path}")
    model = PriorModel(PriorConfig(**ckpt["config"]),
                       Skeleton.from_dict(ckpt["skeleton"]))
    model.load_state_dict(ckpt["state_dict"])
    model.trained = True
    model.eval()
    return model
