"""Branching reverse-time rollouts from anchor poses, with prune checks.

A tree node holds a 30-frame reverse-time clip whose frame 0 equals its
parent's last pose; the root holds the anchor and no clip. Growth is
breadth-first: a node at depth d attempts branching[d] children, each a
pruned rollout retried up to n_tries times. Root-to-leaf paths become
forward-time training sequences ending exactly at the anchor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kinematics import (
    PoseState,
    Trajectory,
    canonical_transform,
    matrix_to_rotvec,
    pad_trajectory,
    reverse_time,
    rot6d_to_matrix,
    truncate_start,
)
from ..kinematics.pose import J_R, MAX_FRAMES, T_P
from ..prior.rollout import rollout
from ..scene import ObjectModel, ObjectPlacement, object_sdf
from .anchors import AnchorPose

DEFAULT_BRANCHING = (6, 6, 2, 2, 2, 2, 2)


@dataclass
class PruneConfig:
    collision_depth: float = 0.02      # m of penetration into the object
    float_height: float = 0.10         # both feet above this height...
    float_frames: int = 15             # ...for more than this many frames
    stationary_dist: float = 0.05      # min root displacement per clip
    ground_depth: float = 0.02         # any joint below -ground_depth
    joint_envelope: np.ndarray = field(
        default_factory=lambda: default_joint_envelope()
    )

    def __post_init__(self):
        self.joint_envelope = np.asarray(self.joint_envelope, dtype=np.float64)


def default_joint_envelope() -> np.ndarray:
    """Fallback per-joint rotation-angle limits (rad); entry 0 is root tilt."""
    env = np.full(22, 2.9)
    env[0] = 1.2            # root tilt from vertical
    env[[3, 6, 9]] = 1.0    # spine segments
    env[[12, 15]] = 1.0     # neck, head
    return env


def joint_angle_envelope(trajs, margin: float = 1.2) -> np.ndarray:
    """Per-joint envelope from a corpus: max observed local angle * margin.

    Entry 0 holds the root TILT (angle of the body up-axis from vertical)
    rather than the full root rotation, which legitimately spans all yaws.
    """
    max_angles = np.zeros(22)
    for traj in trajs:
        angles = local_joint_angles(traj)
        max_angles = np.maximum(max_angles, angles.max(axis=0))
    return max_angles * margin + 1e-3


def local_joint_angles(traj: Trajectory) -> np.ndarray:
    """(N, 22) rotation magnitudes; column 0 is root tilt from vertical."""
    rot6 = traj.frames[:, J_R].reshape(len(traj), -1, 6)
    mats = rot6d_to_matrix(rot6)
    angles = np.linalg.norm(matrix_to_rotvec(mats), axis=-1)
    up = mats[:, 0] @ np.array([0.0, 1.0, 0.0])
    tilt = np.arccos(np.clip(up[:, 1], -1.0, 1.0))
    angles[:, 0] = tilt
    return angles


def prune_check(
    clip: Trajectory,
    obj: ObjectModel,
    placement: ObjectPlacement,
    cfg: PruneConfig,
) -> tuple[bool, str]:
    """Validity of a forward-time clip; reports the first firing heuristic."""
    jp = clip.joint_positions()
    n = len(clip)
    sd = object_sdf(obj, placement, jp.reshape(-1, 3)).reshape(n, -1)
    if sd.min() < -cfg.collision_depth:
        return False, "collision"
    toes = jp[:, (10, 11), 1]
    floating = toes.min(axis=1) > cfg.float_height
    run = 0
    for f in floating:
        run = run + 1 if f else 0
        if run > cfg.float_frames:
            return False, "float"
    angles = local_joint_angles(clip)
    if np.any(angles > cfg.joint_envelope[None, :]):
        return False, "unnatural"
    roots = clip.frames[:, T_P]
    if np.linalg.norm(roots[-1] - roots[0]) < cfg.stationary_dist:
        return False, "stationary"
    if jp[..., 1].min() < -cfg.ground_depth:
        return False, "below-ground"
    return True, ""


def rollout_with_retries(
    model,
    start: PoseState,
    obj: ObjectModel,
    placement: ObjectPlacement,
    cfg: PruneConfig,
    n_tries: int = 20,
    frames: int = 30,
    seed: int = 0,
    prune=prune_check,
) -> Trajectory | None:
    """First reverse-time rollout whose forward-time clip passes the prune.

    Returns None when all n_tries attempts fail; the prune callable can be
    stubbed out in tests.
    """
    rng = np.random.default_rng(seed)
    for _ in range(n_tries):
        clip_seed = int(rng.integers(0, 2**31 - 1))
        clip = rollout(model, start, frames=frames, seed=clip_seed)
        ok, _reason = prune(reverse_time(clip), obj, placement, cfg)
        if ok:
            return clip
    return None


@dataclass
class TreeNode:
    clip: Trajectory | None     # reverse-time; None only at the root
    last_pose: PoseState
    depth: int
    children: list = field(default_factory=list)


@dataclass
class MotionTree:
    anchor: AnchorPose
    root: TreeNode
    max_depth: int
    branching: tuple
    seed: int

    def node_count(self) -> int:
        count = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            count += 1
            stack.extend(node.children)
        return count

    def leaves(self) -> list:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not node.children:
                out.append(node)
            else:
                stack.extend(node.children)
        return out

    def structure(self) -> dict:
        """Topology summary (depths and child counts) for the tree file."""

        def walk(node):
            return {
                "depth": node.depth,
                "children": [walk(c) for c in node.children],
            }

        return {
            "action": self.anchor.action,
            "object_label": self.anchor.object_label,
            "seed": self.seed,
            "max_depth": self.max_depth,
            "branching": list(self.branching),
            "node_count": self.node_count(),
            "root": walk(self.root),
        }


def node_count_bound(max_depth: int, branching) -> int:
    total = 1
    level = 1
    for d in range(max_depth):
        level *= branching[d] if d < len(branching) else branching[-1]
        total += level
    return total


def grow_tree(
    anchor: AnchorPose,
    obj: ObjectModel,
    placement: ObjectPlacement,
    model,
    cfg: PruneConfig,
    max_depth: int = 7,
    branching=DEFAULT_BRANCHING,
    n_tries: int = 20,
    frames: int = 30,
    seed: int = 0,
    prune=prune_check,
) -> MotionTree:
    """Breadth-first tree growth per the rollout/prune recipe."""
    root = TreeNode(clip=None, last_pose=anchor.pose, depth=0)
    tree = MotionTree(anchor, root, max_depth, tuple(branching), seed)
    rng = np.random.default_rng(seed)
    queue = [root]
    while queue:
        node = queue.pop(0)
        if node.depth >= max_depth:
            continue
        b = branching[node.depth] if node.depth < len(branching) else branching[-1]
        for _child in range(b):
            try_seed = int(rng.integers(0, 2**31 - 1))
            clip = rollout_with_retries(
                model, node.last_pose, obj, placement, cfg,
                n_tries=n_tries, frames=frames, seed=try_seed, prune=prune,
            )
            if clip is None:
                continue
            child = TreeNode(
                clip=clip, last_pose=clip.pose(len(clip) - 1),
                depth=node.depth + 1,
            )
            node.children.append(child)
            queue.append(child)
    return tree


@dataclass
class InteractionSequence:
    """A canonical training sequence with its interaction conditioning."""

    trajectory: Trajectory              # canonical, padded to 150 frames
    placement: ObjectPlacement          # object pose in the canonical frame
    object_label: str
    shape: np.ndarray                   # body shape params (10,)


def extract_paths(
    tree: MotionTree,
    placement: ObjectPlacement,
    pad_to: int = MAX_FRAMES,
) -> list[InteractionSequence]:
    """One forward-time sequence per root-to-leaf path.

    Clips along a path are concatenated in reverse-time order, flipped to
    forward time (so the anchor is the final frame), truncated from the
    start to at most `pad_to` frames, canonicalized, and padded. The
    object placement is re-expressed in each sequence's canonical frame.
    """
    out = []
    for leaf in tree.leaves():
        if leaf is tree.root:
            continue
        chain = _path_to(tree.root, leaf)
        frames = np.concatenate([n.clip.frames for n in chain], axis=0)
        rev = Trajectory(frames, interaction_frame_index=0)
        fwd = truncate_start(reverse_time(rev), pad_to)
        tf = canonical_transform(fwd)
        canonical = Trajectory(
            tf.apply_frames(fwd.frames), fwd.frame_rate,
            fwd.interaction_frame_index,
        )
        out.append(
            InteractionSequence(
                trajectory=pad_trajectory(canonical, pad_to),
                placement=placement.compose_left(
                    tf.apply_matrix4(np.eye(4))
                ),
                object_label=tree.anchor.object_label,
                shape=tree.anchor.subject_shape,
            )
        )
    return out


def _path_to(root: TreeNode, target: TreeNode) -> list:
    """Nodes with clips along the path root -> target (root excluded)."""

    def dfs(node, acc):
        if node is target:
            return acc
        for child in node.children:
            found = dfs(child, acc + [child])
            if found is not None:
                return found
        return None

    found = dfs(root, [])
    if found is None:
        raise ValueError("target node is not part of the tree")
    return found


def post_filter(
    sequences: list[InteractionSequence], min_distance: float = 1.0
) -> list[InteractionSequence]:
    """Keep sequences whose first root is at least 1 m from the object."""
    from ..scene import load_object_template

    templates: dict = {}
    kept = []
    for seq in sequences:
        obj = templates.get(seq.object_label)
        if obj is None:
            obj = templates[seq.object_label] = load_object_template(
                seq.object_label
            )
        root0 = seq.trajectory.frames[0, T_P]
        if object_sdf(obj, seq.placement, root0) >= min_distance:
            kept.append(seq)
    return kept
