"""Pose states, trajectories, canonicalization, and time manipulation.

A pose state holds 336 scalars for 22 joints:
positions (66), 6D rotations (132, local to the parent joint; the root
entry is the global orientation), linear velocities (66), angular
velocities (66, body-frame rotation-vector rate), root translation (3)
and root velocity (3).

Axes: Y up, ground plane XZ, canonical heading +Z. Velocities are
backward finite differences at the trajectory frame rate with
v[0] = v[1]; angular velocity at frame i is rotvec(R_{i-1}^T R_i) * rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import HeadingUndefinedError, TrajectoryLengthError
from .rotations import (
    matrix_to_rot6d,
    matrix_to_rotvec,
    rot6d_to_matrix,
    yaw_matrix,
)

NUM_JOINTS = 22
POSE_DIM = 336
FRAME_RATE = 30.0
MAX_FRAMES = 150

# Flatten layout (row-major per joint inside each block).
J_P = slice(0, 66)
J_R = slice(66, 198)
J_V = slice(198, 264)
J_W = slice(264, 330)
T_P = slice(330, 333)
T_V = slice(333, 336)

# Index ranges of the "simplified pose" (joint positions + root translation).
SIMPLIFIED_INDICES = np.concatenate([np.arange(66), np.arange(330, 333)])


@dataclass(frozen=True)
class PoseState:
    j_p: np.ndarray  # (22, 3)
    j_r: np.ndarray  # (22, 6)
    j_v: np.ndarray  # (22, 3)
    j_w: np.ndarray  # (22, 3)
    t_p: np.ndarray  # (3,)
    t_v: np.ndarray  # (3,)

    def flatten(self) -> np.ndarray:
        out = np.empty(POSE_DIM)
        out[J_P] = self.j_p.reshape(-1)
        out[J_R] = self.j_r.reshape(-1)
        out[J_V] = self.j_v.reshape(-1)
        out[J_W] = self.j_w.reshape(-1)
        out[T_P] = self.t_p
        out[T_V] = self.t_v
        return out

    @classmethod
    def from_flat(cls, x: np.ndarray) -> "PoseState":
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (POSE_DIM,):
            raise ValueError(f"pose vector must have length {POSE_DIM}")
        return cls(
            j_p=x[J_P].reshape(NUM_JOINTS, 3).copy(),
            j_r=x[J_R].reshape(NUM_JOINTS, 6).copy(),
            j_v=x[J_V].reshape(NUM_JOINTS, 3).copy(),
            j_w=x[J_W].reshape(NUM_JOINTS, 3).copy(),
            t_p=x[T_P].copy(),
            t_v=x[T_V].copy(),
        )


@dataclass
class Trajectory:
    """N pose states stored as an (N, 336) array."""

    frames: np.ndarray
    frame_rate: float = FRAME_RATE
    interaction_frame_index: int = -1

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[1] != POSE_DIM:
            raise ValueError("frames must be (N, 336)")
        if self.frames.shape[0] < 1:
            raise TrajectoryLengthError("trajectory needs at least one frame")
        if self.interaction_frame_index < 0:
            self.interaction_frame_index = self.frames.shape[0] - 1

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def num_real_frames(self) -> int:
        return self.interaction_frame_index + 1

    def pose(self, i: int) -> PoseState:
        return PoseState.from_flat(self.frames[i])

    def joint_positions(self) -> np.ndarray:
        return self.frames[:, J_P].reshape(-1, NUM_JOINTS, 3)

    def joint_rot6d(self) -> np.ndarray:
        return self.frames[:, J_R].reshape(-1, NUM_JOINTS, 6)

    def root_positions(self) -> np.ndarray:
        return self.frames[:, T_P]

    def root_velocities(self) -> np.ndarray:
        return self.frames[:, T_V]

    def copy(self) -> "Trajectory":
        return Trajectory(
            self.frames.copy(), self.frame_rate, self.interaction_frame_index
        )


def finite_difference(values: np.ndarray, rate: float) -> np.ndarray:
    """Backward differences scaled by rate, first entry copied from the second."""
    v = np.zeros_like(values)
    if values.shape[0] > 1:
        v[1:] = (values[1:] - values[:-1]) * rate
        v[0] = v[1]
    return v


def angular_velocities(rotmats: np.ndarray, rate: float) -> np.ndarray:
    """Body-frame angular velocity vectors from (N, J, 3, 3) local rotations."""
    n = rotmats.shape[0]
    w = np.zeros(rotmats.shape[:2] + (3,))
    if n > 1:
        rel = np.swapaxes(rotmats[:-1], -1, -2) @ rotmats[1:]
        w[1:] = matrix_to_rotvec(rel) * rate
        w[0] = w[1]
    return w


def trajectory_from_keyframes(
    j_p: np.ndarray,
    local_rotmats: np.ndarray,
    t_p: np.ndarray,
    frame_rate: float = FRAME_RATE,
) -> Trajectory:
    """Assemble a trajectory from positions/rotations, deriving all velocities."""
    n = j_p.shape[0]
    frames = np.zeros((n, POSE_DIM))
    frames[:, J_P] = j_p.reshape(n, -1)
    frames[:, J_R] = matrix_to_rot6d(local_rotmats).reshape(n, -1)
    frames[:, J_V] = finite_difference(j_p, frame_rate).reshape(n, -1)
    frames[:, J_W] = angular_velocities(local_rotmats, frame_rate).reshape(n, -1)
    frames[:, T_P] = t_p
    frames[:, T_V] = finite_difference(t_p, frame_rate)
    return Trajectory(frames, frame_rate)


@dataclass(frozen=True)
class GroundTransform:
    """Rigid ground-plane transform p' = R_yaw (p - t); t has zero height."""

    yaw: float
    translation: np.ndarray  # (3,), [1] == 0

    @property
    def rotation(self) -> np.ndarray:
        return yaw_matrix(self.yaw)

    def apply_points(self, p: np.ndarray) -> np.ndarray:
        return (p - self.translation) @ self.rotation.T

    def apply_vectors(self, v: np.ndarray) -> np.ndarray:
        return v @ self.rotation.T

    def apply_matrix4(self, m: np.ndarray) -> np.ndarray:
        """Compose with a 4x4 rigid transform: returns T_self @ m."""
        t4 = np.eye(4)
        t4[:3, :3] = self.rotation
        t4[:3, 3] = -self.rotation @ self.translation
        return t4 @ m

    def inverse(self) -> "GroundTransform":
        return GroundTransform(
            yaw=-self.yaw, translation=-(yaw_matrix(self.yaw) @ self.translation)
        )

    def apply_frames(self, frames: np.ndarray) -> np.ndarray:
        """Transform an (N, 336) frame block: points, root rotation, velocities."""
        out = frames.copy()
        n = frames.shape[0]
        r = self.rotation
        out[:, J_P] = self.apply_points(
            frames[:, J_P].reshape(n, NUM_JOINTS, 3)
        ).reshape(n, -1)
        out[:, T_P] = self.apply_points(frames[:, T_P])
        out[:, J_V] = self.apply_vectors(
            frames[:, J_V].reshape(n, NUM_JOINTS, 3)
        ).reshape(n, -1)
        out[:, T_V] = self.apply_vectors(frames[:, T_V])
        # Only the root rotation is global; child rotations are parent-local
        # and body-frame angular velocities are invariant to world rotations.
        root6d = frames[:, 66:72]
        root_m = rot6d_to_matrix(root6d)
        out[:, 66:72] = matrix_to_rot6d(r[None] @ root_m)
        return out


def heading_angle(root_rot6d: np.ndarray) -> float:
    """Yaw of the root's forward (+Z) axis projected to the ground plane."""
    rot = rot6d_to_matrix(root_rot6d)
    fwd = rot @ np.array([0.0, 0.0, 1.0])
    horiz = np.array([fwd[0], 0.0, fwd[2]])
    norm = np.linalg.norm(horiz)
    if norm < 1e-8:
        raise HeadingUndefinedError("horizontal heading has near-zero norm")
    return float(np.arctan2(horiz[0], horiz[2]))


def canonical_transform(traj: Trajectory) -> GroundTransform:
    """Transform that moves frame 0 to the origin facing +Z."""
    t_p0 = traj.frames[0, T_P]
    phi = heading_angle(traj.frames[0, 66:72])
    return GroundTransform(
        yaw=-phi, translation=np.array([t_p0[0], 0.0, t_p0[2]])
    )


def canonicalize(traj: Trajectory) -> Trajectory:
    """Express the trajectory in the local ground frame of its first pose."""
    tf = canonical_transform(traj)
    return Trajectory(
        tf.apply_frames(traj.frames), traj.frame_rate, traj.interaction_frame_index
    )


@dataclass(frozen=True)
class RecoveredMotion:
    """World-space root path plus per-frame joint rotations."""

    root_positions: np.ndarray   # (N, 3)
    joint_rot6d: np.ndarray      # (N, 22, 6)


def recover_motion(traj: Trajectory) -> RecoveredMotion:
    """Integrate the root velocity on the ground plane; height from t_p.

    The XZ accumulation is a sequential Riemann sum so results are
    bitwise reproducible.
    """
    n = len(traj)
    t_v = traj.frames[:, T_V]
    root = np.zeros((n, 3))
    root[:, 1] = traj.frames[:, T_P.start + 1]
    acc_x = 0.0
    acc_z = 0.0
    dt = 1.0 / traj.frame_rate
    for i in range(1, n):
        acc_x += t_v[i - 1, 0] * dt
        acc_z += t_v[i - 1, 2] * dt
        root[i, 0] = acc_x
        root[i, 2] = acc_z
    return RecoveredMotion(root_positions=root, joint_rot6d=traj.joint_rot6d())


def reverse_time(traj: Trajectory) -> Trajectory:
    """Reverse frame order and negate all velocity channels."""
    frames = traj.frames[::-1].copy()
    frames[:, J_V] = -frames[:, J_V]
    frames[:, J_W] = -frames[:, J_W]
    frames[:, T_V] = -frames[:, T_V]
    return Trajectory(
        frames,
        traj.frame_rate,
        len(traj) - 1 - traj.interaction_frame_index,
    )


def pad_trajectory(traj: Trajectory, target: int = MAX_FRAMES) -> Trajectory:
    """Pad to `target` frames by repeating the last frame with zero velocities."""
    n = len(traj)
    if n > target:
        raise TrajectoryLengthError(f"trajectory has {n} frames > target {target}")
    if n == target:
        return traj.copy()
    pad = np.repeat(traj.frames[-1:], target - n, axis=0)
    pad[:, J_V] = 0.0
    pad[:, J_W] = 0.0
    pad[:, T_V] = 0.0
    return Trajectory(
        np.concatenate([traj.frames, pad], axis=0), traj.frame_rate, n - 1
    )


def truncate_start(traj: Trajectory, target: int = MAX_FRAMES) -> Trajectory:
    """Drop leading frames so at most `target` remain, preserving the end."""
    n = len(traj)
    if n <= target:
        return traj.copy()
    drop = n - target
    return Trajectory(
        traj.frames[drop:].copy(),
        traj.frame_rate,
        traj.interaction_frame_index - drop,
    )


def write_trajectories(path, trajs) -> None:
    """Write trajectories as one JSON object per line (.traj.jsonl)."""
    with open(path, "w") as f:
        for t in trajs:
            rec = {
                "frame_rate": t.frame_rate,
                "interaction_frame_index": int(t.interaction_frame_index),
                "frames": t.frames.tolist(),
            }
            f.write(json.dumps(rec) + "\n")


def read_trajectories(path) -> list:
    trajs = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            trajs.append(
                Trajectory(
                    np.asarray(rec["frames"], dtype=np.float64),
                    rec["frame_rate"],
                    rec["interaction_frame_index"],
                )
            )
    return trajs
