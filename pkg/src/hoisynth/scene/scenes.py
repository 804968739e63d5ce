"""Randomized test scenes: a placed object plus a start pose from the prior."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelStateError
from ..kinematics import (
    PoseState,
    Trajectory,
    canonicalize,
    reverse_time,
)
from .objects import ObjectModel, ObjectPlacement, load_object_template, object_sdf

SIT_LABELS = ("chair", "stool", "table", "ball")
LIFT_LABELS = ("chair", "stool", "table", "suitcase")
ANNULUS = (1.5, 3.5)
MIN_START_DISTANCE = 1.0


@dataclass
class TestScene:
    object: ObjectModel
    placement: ObjectPlacement
    start_pose: PoseState
    action: str
    seed: int
    shape: np.ndarray = field(default_factory=lambda: np.zeros(10))


def labels_for_action(action: str) -> tuple:
    if action == "sit":
        return SIT_LABELS
    if action == "lift":
        return LIFT_LABELS
    raise ValueError(f"unknown action {action!r}")


def _start_pose_from_prior(prior, skeleton, seed: int) -> PoseState:
    """Roll the motion prior for 1 s from a standing pose, canonicalized."""
    from ..prior.rollout import rollout
    from ..prior.toy_motion import standing_pose

    clip = rollout(prior, standing_pose(skeleton), frames=30, seed=seed, sample=True)
    last = Trajectory(clip.frames[-1:].copy(), clip.frame_rate)
    return canonicalize(reverse_time(last)).pose(0)


def generate_test_scenes(
    action: str,
    count: int = 500,
    seed: int = 0,
    prior=None,
    skeleton=None,
) -> list[TestScene]:
    """Deterministically generate `count` scenes for one action.

    Object yaw is uniform; the ground-plane offset is uniform over an
    annulus of [1.5, 3.5] m around the human origin, resampled until the
    start root is at least 1 m from the object surface.
    """
    if prior is None:
        raise ModelStateError("a trained motion prior is required for start poses")
    if skeleton is None:
        from ..kinematics import DEFAULT_SKELETON

        skeleton = DEFAULT_SKELETON
    labels = labels_for_action(action)
    templates = {lbl: load_object_template(lbl) for lbl in labels}
    root_seq = np.random.SeedSequence(seed)
    scenes = []
    for i, child in enumerate(root_seq.spawn(count)):
        rng = np.random.default_rng(child)
        pose_seed = int(rng.integers(0, 2**31 - 1))
        start = _start_pose_from_prior(prior, skeleton, pose_seed)
        obj = templates[labels[int(rng.integers(0, len(labels)))]]
        placement = None
        for _ in range(100):
            yaw = rng.uniform(0.0, 2.0 * np.pi)
            angle = rng.uniform(0.0, 2.0 * np.pi)
            radius = np.sqrt(rng.uniform(ANNULUS[0] ** 2, ANNULUS[1] ** 2))
            cand = ObjectPlacement.from_yaw_translation(
                yaw, [radius * np.sin(angle), 0.0, radius * np.cos(angle)]
            )
            if object_sdf(obj, cand, start.t_p) >= MIN_START_DISTANCE:
                placement = cand
                break
        if placement is None:
            raise RuntimeError("could not place object at a valid distance")
        scenes.append(
            TestScene(
                object=obj,
                placement=placement,
                start_pose=start,
                action=action,
                seed=pose_seed,
            )
        )
    return scenes


def write_scenes(path, scenes) -> None:
    with open(path, "w") as f:
        for s in scenes:
            rec = {
                "label": s.object.label,
                "action": s.action,
                "placement": s.placement.matrix.reshape(-1).tolist(),
                "start_pose": s.start_pose.flatten().tolist(),
                "seed": int(s.seed),
                "shape": s.shape.tolist(),
            }
            f.write(json.dumps(rec) + "\n")


def read_scenes(path) -> list[TestScene]:
    scenes = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            scenes.append(
                TestScene(
                    object=load_object_template(rec["label"]),
                    placement=ObjectPlacement(
                        np.asarray(rec["placement"]).reshape(4, 4)
                    ),
                    start_pose=PoseState.from_flat(np.asarray(rec["start_pose"])),
                    action=rec["action"],
                    seed=int(rec["seed"]),
                    shape=np.asarray(rec.get("shape", np.zeros(10))),
                )
            )
    return scenes
