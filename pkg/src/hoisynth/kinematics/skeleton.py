"""Capsule skeleton definition and shape-parameterized body construction.

The 22-joint topology, rest offsets (average adult proportions), and
per-bone capsule radii are committed in data/skeleton.json. Shape
parameters scale bone groups linearly: b[0] is a global +-20% scale,
b[1..9] scale the bone groups listed in the data file by +-20% each.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import InvalidShapeError

NUM_JOINTS = 22
SHAPE_DIM = 10
SCALE_PER_UNIT = 0.2
SCALE_MIN, SCALE_MAX = 0.5, 2.0


def _load_skeleton_spec() -> dict:
    with resources.files("hoisynth.data").joinpath("skeleton.json").open() as f:
        return json.load(f)


_SPEC = _load_skeleton_spec()


@dataclass(frozen=True)
class Skeleton:
    """Articulated capsule body: joint tree plus per-bone capsule radii."""

    parents: np.ndarray          # (22,) int, -1 for the root
    rest_offsets: np.ndarray     # (22, 3) offset from parent, meters
    capsule_radii: np.ndarray    # (22,) radius of the bone parent->joint, [0] unused
    toe_indices: dict = field(default_factory=lambda: dict(_SPEC["toe_indices"]))

    @property
    def joint_count(self) -> int:
        return self.parents.shape[0]

    def bone_joints(self) -> np.ndarray:
        """Joint indices that terminate a bone (all non-root joints)."""
        return np.arange(1, self.joint_count)

    def to_dict(self) -> dict:
        return {
            "parents": self.parents.tolist(),
            "rest_offsets": self.rest_offsets.tolist(),
            "capsule_radii": self.capsule_radii.tolist(),
            "toe_indices": dict(self.toe_indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Skeleton":
        return cls(
            parents=np.asarray(d["parents"], dtype=np.int64),
            rest_offsets=np.asarray(d["rest_offsets"], dtype=np.float64),
            capsule_radii=np.asarray(d["capsule_radii"], dtype=np.float64),
            toe_indices=dict(d["toe_indices"]),
        )


def shape_to_bone_scales(shape: np.ndarray) -> np.ndarray:
    """Map 10 shape params to a per-joint bone scale factor (22,)."""
    shape = np.asarray(shape, dtype=np.float64)
    if shape.shape != (SHAPE_DIM,):
        raise InvalidShapeError(f"shape params must have length {SHAPE_DIM}")
    global_scale = 1.0 + SCALE_PER_UNIT * shape[0]
    scales = np.full(NUM_JOINTS, global_scale)
    for gi, joints in enumerate(_SPEC["shape_groups"]):
        scales[joints] *= 1.0 + SCALE_PER_UNIT * shape[gi + 1]
    return scales


def build_body(shape: np.ndarray | None = None) -> Skeleton:
    """Construct a skeleton whose bone lengths are scaled by the shape params.

    Raises InvalidShapeError when any resulting bone scale leaves
    [0.5, 2.0]. shape=None (or zeros) gives the default body.
    """
    if shape is None:
        shape = np.zeros(SHAPE_DIM)
    scales = shape_to_bone_scales(shape)
    if np.any(scales[1:] < SCALE_MIN) or np.any(scales[1:] > SCALE_MAX):
        raise InvalidShapeError(
            f"bone scales outside [{SCALE_MIN}, {SCALE_MAX}]: "
            f"min={scales[1:].min():.3f} max={scales[1:].max():.3f}"
        )
    offsets = np.asarray(_SPEC["rest_offsets"], dtype=np.float64) * scales[:, None]
    radii = np.asarray(_SPEC["capsule_radii"], dtype=np.float64) * scales
    return Skeleton(
        parents=np.asarray(_SPEC["parents"], dtype=np.int64),
        rest_offsets=offsets,
        capsule_radii=radii,
        toe_indices=dict(_SPEC["toe_indices"]),
    )


DEFAULT_SKELETON = build_body()
