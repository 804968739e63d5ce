"""Procedural anchor poses: the settled frame of each interaction.

Anchors live in the object's canonical frame. Sit anchors snap the
pelvis just above the annotated seat surface with legs folded to reach
the floor; lift anchors crouch in front of the object with straight
arms aimed at the annotated rim. All posing is closed-form (no
iterative IK) with seeded jitter in yaw and seat offset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..kinematics import (
    PoseState,
    forward_kinematics_full,
    matrix_to_rot6d,
    rotation_between,
    yaw_matrix,
)
from ..kinematics.skeleton import Skeleton, build_body
from ..prior.toy_motion import (
    L_ANKLE,
    L_COLLAR,
    L_ELBOW,
    L_HIP,
    L_KNEE,
    L_SHOULDER,
    R_ANKLE,
    R_COLLAR,
    R_ELBOW,
    R_HIP,
    R_KNEE,
    R_SHOULDER,
    SPINE,
    _rx,
    _rz,
    flat_ankle_height,
)
from ..scene import ObjectModel, ObjectPlacement, object_sdf

SIT_PELVIS_MAX_ABOVE = 0.10
LIFT_WRIST_MAX_DIST = 0.15
NUM_SUBJECTS = 7


@dataclass
class AnchorPose:
    pose: PoseState            # in the object's canonical frame
    action: str                # sit | lift
    object_label: str
    subject_shape: np.ndarray = field(default_factory=lambda: np.zeros(10))


def subject_shapes(seed: int = 1234, count: int = NUM_SUBJECTS) -> np.ndarray:
    """A small fixed roster of body shapes, ~+-10% proportions."""
    rng = np.random.default_rng(seed)
    return np.clip(rng.normal(0.0, 0.35, size=(count, 10)), -0.9, 0.9)


def _pose_from_locals(
    skeleton: Skeleton, local: np.ndarray, t_p: np.ndarray
) -> PoseState:
    rot6 = matrix_to_rot6d(local)
    j_p = forward_kinematics_full(skeleton, rot6, t_p)[0]
    zeros = np.zeros((skeleton.joint_count, 3))
    return PoseState(j_p=j_p, j_r=rot6, j_v=zeros, j_w=zeros,
                     t_p=np.asarray(t_p, dtype=np.float64), t_v=np.zeros(3))


def _folded_legs(
    skeleton: Skeleton, local: np.ndarray, pelvis_y: float, thigh_tilt: float
) -> None:
    """Fold both legs: thigh tilted below horizontal, shank slanted so the
    flat foot reaches the ground. Writes hip/knee/ankle local rotations."""
    l1 = float(np.linalg.norm(skeleton.rest_offsets[L_KNEE]))
    l2 = float(np.linalg.norm(skeleton.rest_offsets[L_ANKLE]))
    hip_drop = -float(skeleton.rest_offsets[L_HIP, 1])
    ankle_h = flat_ankle_height(skeleton)
    knee_y = pelvis_y - hip_drop - l1 * np.sin(thigh_tilt)
    cos_b = np.clip((knee_y - ankle_h) / l2, -1.0, 1.0)
    beta = float(np.arccos(cos_b))
    theta1 = -(np.pi / 2.0 - thigh_tilt)
    theta2 = -beta
    for hip_j, knee_j, ankle_j in ((L_HIP, L_KNEE, L_ANKLE),
                                   (R_HIP, R_KNEE, R_ANKLE)):
        local[hip_j] = _rx(theta1)
        local[knee_j] = _rx(theta2 - theta1)
        local[ankle_j] = _rx(-theta2)


def _sit_anchor(
    obj: ObjectModel, skeleton: Skeleton, rng: np.random.Generator
) -> PoseState:
    ann = obj.require_annotation("sit")
    seat_h = float(ann["height"])
    rx, rz = ann["region"]
    dx = rng.uniform(-rx, rx)
    dz = rng.uniform(-0.3 * rz, 0.3 * rz)
    dh = rng.uniform(0.03, 0.08)
    yaw = rng.uniform(-0.25, 0.25)
    pelvis = np.array([dx, seat_h + dh, dz])
    local = np.tile(np.eye(3), (skeleton.joint_count, 1, 1))
    local[0] = yaw_matrix(yaw)
    _folded_legs(skeleton, local, pelvis[1], thigh_tilt=rng.uniform(0.05, 0.18))
    lean = rng.uniform(-0.10, 0.02)
    for j in SPINE:
        local[j] = _rx(lean / len(SPINE))
    hang = 1.25
    rest_arms = rng.uniform(-0.35, -0.15)
    local[L_SHOULDER] = _rx(rest_arms) @ _rz(-hang)
    local[R_SHOULDER] = _rx(rest_arms) @ _rz(hang)
    local[L_ELBOW] = _rz(-0.45)
    local[R_ELBOW] = _rz(0.45)
    return _pose_from_locals(skeleton, local, pelvis)


def _aim_arm(
    skeleton: Skeleton,
    local: np.ndarray,
    t_p: np.ndarray,
    side: str,
    target: np.ndarray,
) -> None:
    """Point a straight arm's wrist at `target` by rotating the shoulder."""
    shoulder = L_SHOULDER if side == "left" else R_SHOULDER
    elbow = L_ELBOW if side == "left" else R_ELBOW
    local[shoulder] = np.eye(3)
    local[elbow] = np.eye(3)
    rot6 = matrix_to_rot6d(local)
    pos, glob = forward_kinematics_full(skeleton, rot6, t_p)
    rest_dir = glob[shoulder] @ (
        skeleton.rest_offsets[elbow] / np.linalg.norm(skeleton.rest_offsets[elbow])
    )
    aim = target - pos[shoulder]
    aim = aim / max(np.linalg.norm(aim), 1e-9)
    parent_rot = glob[L_COLLAR if side == "left" else R_COLLAR]
    local[shoulder] = parent_rot.T @ rotation_between(rest_dir, aim) @ glob[shoulder]


def _lift_anchor(
    obj: ObjectModel, skeleton: Skeleton, rng: np.random.Generator
) -> PoseState:
    ann = obj.require_annotation("lift")
    grasp_h = float(ann["height"])
    half_w = float(ann["half_width"])
    yaw = np.pi + rng.uniform(-0.15, 0.15)  # facing -Z toward the object
    z_near = _near_face_z(obj)
    dx_jitter = rng.uniform(-0.04, 0.04)
    back_jitter = rng.uniform(-0.03, 0.03)
    arm_len = float(
        np.linalg.norm(skeleton.rest_offsets[L_ELBOW])
        + np.linalg.norm(skeleton.rest_offsets[L_ELBOW + 2])
    )
    torso = float(
        sum(skeleton.rest_offsets[j, 1] for j in SPINE)
        + skeleton.rest_offsets[L_COLLAR, 1]
    )
    best = None
    # Snap through increasingly aggressive crouches until the straight
    # arms reach the rim; keep the closest configuration otherwise.
    for pitch, back_scale in ((-0.45, 1.0), (-0.55, 0.85), (-0.65, 0.7)):
        stand_back = np.clip(0.30 * arm_len / 0.51 + back_jitter, 0.16, 0.36)
        pelvis_z = z_near + stand_back * back_scale
        shoulder_z = pelvis_z - torso * np.sin(-pitch)
        dz = shoulder_z - (z_near + 0.02)
        dx = half_w * 0.3
        reach_sq = max((arm_len - 0.03) ** 2 - dz * dz - dx * dx, 0.0)
        shoulder_y = grasp_h + np.sqrt(reach_sq)
        pelvis_y = float(np.clip(shoulder_y - torso * np.cos(pitch), 0.42, 0.85))
        pelvis = np.array([dx_jitter, pelvis_y, pelvis_z])
        local = np.tile(np.eye(3), (skeleton.joint_count, 1, 1))
        local[0] = yaw_matrix(yaw)
        _folded_legs(skeleton, local, pelvis[1], thigh_tilt=0.45)
        for j in SPINE:
            local[j] = _rx(pitch / len(SPINE))
        # Each hand aims at the near rim corner on its own side of the
        # body (the person faces -Z, so their left hand is at negative x).
        for side, sx in (("left", -1.0), ("right", 1.0)):
            target = np.array([sx * half_w * 0.7, grasp_h, z_near + 0.02])
            _aim_arm(skeleton, local, pelvis, side, target)
        pose = _pose_from_locals(skeleton, local, pelvis)
        ident = ObjectPlacement.identity()
        worst = max(
            abs(object_sdf(obj, ident, pose.j_p[w])) for w in (20, 21)
        )
        if best is None or worst < best[0]:
            best = (worst, pose)
        if worst <= 0.13:
            break
    return best[1]


def _near_face_z(obj: ObjectModel) -> float:
    """Z extent of the object toward +Z (where the lifter stands)."""
    z = 0.0
    for p in obj.primitives:
        if p.kind == "box":
            z = max(z, p.center[2] + p.half_extents[2])
        else:
            z = max(z, p.center[2] + p.radius)
    return z


def anchor_is_plausible(
    anchor: AnchorPose, obj: ObjectModel
) -> tuple[bool, str]:
    pose = anchor.pose
    ident = ObjectPlacement.identity()
    if anchor.action == "sit":
        ann = obj.require_annotation("sit")
        above = pose.t_p[1] - float(ann["height"])
        if not (0.0 <= above <= SIT_PELVIS_MAX_ABOVE):
            return False, f"pelvis {above:.3f} m above seat"
        rx, rz = ann["region"]
        if abs(pose.t_p[0]) > rx + 0.05 or abs(pose.t_p[2]) > rz + 0.10:
            return False, "pelvis outside seat region"
        return True, ""
    if anchor.action == "lift":
        for wrist in (20, 21):
            d = abs(object_sdf(obj, ident, pose.j_p[wrist]))
            if d > LIFT_WRIST_MAX_DIST:
                return False, f"wrist {wrist} at {d:.3f} m from surface"
        return True, ""
    return False, f"unknown action {anchor.action!r}"


def make_anchor_poses(
    obj: ObjectModel, action: str, count: int, seed: int = 0
) -> list[AnchorPose]:
    """Generate `count` plausible anchors for one object and action."""
    if action not in ("sit", "lift"):
        raise ValueError(f"unknown action {action!r}")
    obj.require_annotation(action)
    shapes = subject_shapes()
    rng = np.random.default_rng(seed)
    anchors = []
    attempts = 0
    while len(anchors) < count:
        attempts += 1
        if attempts > count * 50 + 100:
            raise DataError(
                f"could not build {count} plausible {action} anchors "
                f"for {obj.label!r}"
            )
        shape = shapes[attempts % len(shapes)]
        skeleton = build_body(shape)
        if action == "sit":
            pose = _sit_anchor(obj, skeleton, rng)
        else:
            pose = _lift_anchor(obj, skeleton, rng)
        anchor = AnchorPose(pose, action, obj.label, shape)
        ok, _ = anchor_is_plausible(anchor, obj)
        if ok:
            anchors.append(anchor)
    return anchors
