"""Forward kinematics and the capsule body: SDF and surface sampling.

The body surface is the union of one capsule per bone, with endpoints at
the posed joint positions. The body SDF is positive INSIDE the body
(max over per-capsule radius-minus-distance), the opposite convention
from object SDFs.
"""

from __future__ import annotations

import numpy as np

from .pose import PoseState
from .rotations import rot6d_to_matrix
from .skeleton import Skeleton


def forward_kinematics_full(
    skeleton: Skeleton, j_r: np.ndarray, t_p: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Joint positions and global rotations from local 6D rotations.

    j_r: (22, 6) or (N, 22, 6); t_p: (3,) or (N, 3). Parent indices are
    always smaller than child indices so a single in-order pass works.
    """
    j_r = np.asarray(j_r, dtype=np.float64)
    single = j_r.ndim == 2
    if single:
        j_r = j_r[None]
        t_p = np.asarray(t_p, dtype=np.float64)[None]
    else:
        t_p = np.asarray(t_p, dtype=np.float64)
    n, j = j_r.shape[0], j_r.shape[1]
    local = rot6d_to_matrix(j_r)  # (N, J, 3, 3)
    global_rot = np.zeros_like(local)
    pos = np.zeros((n, j, 3))
    global_rot[:, 0] = local[:, 0]
    pos[:, 0] = t_p
    for child in range(1, j):
        parent = int(skeleton.parents[child])
        global_rot[:, child] = global_rot[:, parent] @ local[:, child]
        offset = skeleton.rest_offsets[child]
        pos[:, child] = pos[:, parent] + global_rot[:, parent] @ offset
    if single:
        return pos[0], global_rot[0]
    return pos, global_rot


def forward_kinematics(
    skeleton: Skeleton, j_r: np.ndarray, t_p: np.ndarray
) -> np.ndarray:
    """Joint positions only; see forward_kinematics_full."""
    return forward_kinematics_full(skeleton, j_r, t_p)[0]


def segment_distances(queries: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points (Q, 3) to segments a->b (B, 3): returns (Q, B)."""
    queries = np.atleast_2d(queries)
    ab = b - a  # (B, 3)
    ab_sq = np.maximum(np.sum(ab * ab, axis=-1), 1e-18)  # (B,)
    qa = queries[:, None, :] - a[None, :, :]  # (Q, B, 3)
    t = np.clip(np.sum(qa * ab[None], axis=-1) / ab_sq, 0.0, 1.0)  # (Q, B)
    closest = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(queries[:, None, :] - closest, axis=-1)


def capsule_sdf(
    joints: np.ndarray, skeleton: Skeleton, queries: np.ndarray
) -> np.ndarray:
    """Signed distance to the capsule union, positive inside the body.

    joints: (22, 3) posed joint positions; queries: (Q, 3) or (3,).
    """
    queries = np.asarray(queries, dtype=np.float64)
    single = queries.ndim == 1
    q = np.atleast_2d(queries)
    bones = skeleton.bone_joints()
    a = joints[skeleton.parents[bones]]
    b = joints[bones]
    d = segment_distances(q, a, b)  # (Q, B)
    sd = skeleton.capsule_radii[bones][None, :] - d
    out = np.max(sd, axis=-1)
    return float(out[0]) if single else out


def body_sdf(skeleton: Skeleton, pose: PoseState, query: np.ndarray):
    return capsule_sdf(pose.j_p, skeleton, query)


def _bone_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair perpendicular to a unit axis."""
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis[0]) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


def _capsule_areas(skeleton: Skeleton) -> np.ndarray:
    lengths = np.linalg.norm(skeleton.rest_offsets[skeleton.bone_joints()], axis=-1)
    radii = skeleton.capsule_radii[skeleton.bone_joints()]
    return 2.0 * np.pi * radii * lengths + 4.0 * np.pi * radii**2


def _allocate_counts(weights: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment of `total` across weights."""
    if total == 0:
        return np.zeros(len(weights), dtype=int)
    exact = weights / weights.sum() * total
    counts = np.floor(exact).astype(int)
    remainder = total - counts.sum()
    if remainder > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def _sample_capsule_local(
    rng: np.random.Generator, radius: float, rest_length: float
) -> tuple[str, np.ndarray]:
    """One surface sample identity on a capsule in local coordinates.

    Cylinder samples store (axial fraction, angle); cap samples store a
    unit direction with the axial component signed toward the cap.
    """
    cyl_area = 2.0 * np.pi * radius * rest_length
    cap_area = 4.0 * np.pi * radius**2
    u = rng.uniform(0.0, cyl_area + cap_area)
    if u < cyl_area:
        return "cyl", np.array([rng.uniform(), rng.uniform(0.0, 2.0 * np.pi)])
    # Uniform on the sphere, split into two hemispherical caps.
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    return "cap", d


def _local_to_world(
    kind: str, params: np.ndarray, a: np.ndarray, b: np.ndarray, radius: float
) -> np.ndarray:
    axis = b - a
    length = np.linalg.norm(axis)
    axis = axis / length if length > 1e-12 else np.array([0.0, 1.0, 0.0])
    u, v = _bone_frame(axis)
    if kind == "cyl":
        frac, angle = params
        return a + frac * (b - a) + radius * (np.cos(angle) * u + np.sin(angle) * v)
    d_world = params[0] * u + params[1] * v + params[2] * axis
    end = b if params[2] >= 0.0 else a
    return end + radius * d_world


def body_surface_points(
    skeleton: Skeleton, pose: PoseState, count: int, seed: int
) -> np.ndarray:
    """Deterministic, area-weighted capsule surface samples (count, 3).

    Point identities (bone, local coordinate) depend only on
    (skeleton, count, seed): candidates are rejection-filtered against the
    rest pose so rest-pose samples lie on the union surface, then the same
    identities are mapped onto the posed capsules. Index i therefore
    refers to the same material point in every pose.
    """
    if count <= 0:
        return np.zeros((0, 3))
    identities = _surface_identities(skeleton, count, seed)
    joints = pose.j_p
    bones = skeleton.bone_joints()
    out = np.empty((count, 3))
    for i, (bone_i, kind, params) in enumerate(identities):
        child = bones[bone_i]
        parent = int(skeleton.parents[child])
        out[i] = _local_to_world(
            kind, params, joints[parent], joints[child], skeleton.capsule_radii[child]
        )
    return out


_IDENTITY_CACHE: dict = {}


def _skeleton_key(skeleton: Skeleton) -> bytes:
    return (
        skeleton.parents.tobytes()
        + skeleton.rest_offsets.tobytes()
        + skeleton.capsule_radii.tobytes()
    )


def _surface_identities(skeleton: Skeleton, count: int, seed: int) -> list:
    key = (_skeleton_key(skeleton), count, seed)
    cached = _IDENTITY_CACHE.get(key)
    if cached is not None:
        return cached
    rng = np.random.default_rng(seed)
    bones = skeleton.bone_joints()
    counts = _allocate_counts(_capsule_areas(skeleton), count)
    rest_rot = np.tile(np.array([1.0, 0, 0, 0, 1.0, 0]), (skeleton.joint_count, 1))
    rest_joints = forward_kinematics(skeleton, rest_rot, np.zeros(3))
    rest_lengths = np.linalg.norm(skeleton.rest_offsets[bones], axis=-1)
    identities = []
    for bone_i, n_b in enumerate(counts):
        child = bones[bone_i]
        parent = int(skeleton.parents[child])
        radius = skeleton.capsule_radii[child]
        a, b = rest_joints[parent], rest_joints[child]
        others = [j for j in range(len(bones)) if j != bone_i]
        other_a = rest_joints[skeleton.parents[bones[others]]]
        other_b = rest_joints[bones[others]]
        other_r = skeleton.capsule_radii[bones[others]]
        for _ in range(n_b):
            for _attempt in range(200):
                kind, params = _sample_capsule_local(rng, radius, rest_lengths[bone_i])
                p = _local_to_world(kind, params, a, b, radius)
                d = segment_distances(p[None], other_a, other_b)[0]
                if np.all(other_r - d < -1e-9):
                    identities.append((bone_i, kind, params))
                    break
            else:
                identities.append((bone_i, kind, params))
    _IDENTITY_CACHE[key] = identities
    return identities
