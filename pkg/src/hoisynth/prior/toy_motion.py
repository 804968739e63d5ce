"""Procedural walking / sit-down / crouch-to-lift clips.

These scripted clips stand in for mocap when training the motion prior.
The controller plans footsteps along a turning path, plants the stance
foot (fixed world ankle + frozen foot yaw), swings the other leg, and
solves hip/knee/ankle rotations with an analytic two-bone IK so joint
positions, rotations, and velocities stay mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kinematics import (
    PoseState,
    Trajectory,
    canonicalize,
    forward_kinematics_full,
    matrix_to_rot6d,
    trajectory_from_keyframes,
    yaw_matrix,
)
from ..kinematics.skeleton import DEFAULT_SKELETON, Skeleton

L_HIP, R_HIP = 1, 2
L_KNEE, R_KNEE = 4, 5
L_ANKLE, R_ANKLE = 7, 8
L_TOE, R_TOE = 10, 11
L_COLLAR, R_COLLAR = 13, 14
L_SHOULDER, R_SHOULDER = 16, 17
L_ELBOW, R_ELBOW = 18, 19
SPINE = (3, 6, 9)


@dataclass
class ToyMotionConfig:
    count: int = 32
    speed_range: tuple = (0.7, 1.4)        # m/s
    turn_range: tuple = (-0.5, 0.5)        # rad/s
    lift_height_range: tuple = (0.05, 0.10)  # swing foot apex, m
    arm_swing_range: tuple = (0.15, 0.45)  # rad
    frames_range: tuple = (90, 150)
    action: str = "walk"                   # walk | approach-sit | approach-lift
    seed: int = 0

    def __post_init__(self):
        for name in ("speed_range", "turn_range", "lift_height_range",
                     "arm_swing_range", "frames_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is degenerate: {(lo, hi)}")
        if self.action not in ("walk", "approach-sit", "approach-lift"):
            raise ValueError(f"unknown action {self.action!r}")


def _rx(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def _rz(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def _smoothstep(u: np.ndarray | float):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def standing_height(skeleton: Skeleton) -> float:
    """Pelvis height with straight legs and toe capsules touching ground."""
    rest6 = np.tile(np.array([1.0, 0, 0, 0, 1.0, 0]), (skeleton.joint_count, 1))
    pos = forward_kinematics_full(skeleton, rest6, np.zeros(3))[0]
    toes = [skeleton.toe_indices["left"], skeleton.toe_indices["right"]]
    lowest = min(pos[t, 1] - skeleton.capsule_radii[t] for t in toes)
    return -lowest


def flat_ankle_height(skeleton: Skeleton) -> float:
    """Ankle height when the foot is flat with the toe capsule on the ground."""
    toe = skeleton.toe_indices["right"]
    return -skeleton.rest_offsets[toe, 1] + skeleton.capsule_radii[toe]


def standing_pose(skeleton: Skeleton = DEFAULT_SKELETON) -> PoseState:
    """Neutral idle stance (arms hanging, slight knee bend), zero velocity.

    Built from the gait script at zero speed so it sits on the same pose
    manifold as the training clips.
    """
    return synthesize_clip(
        skeleton, 2, speed=0.0, turn_rate=0.0, arm_swing=0.0
    ).pose(0)


def _leg_ik(
    hip_pos: np.ndarray,
    ankle_target: np.ndarray,
    pole_dir: np.ndarray,
    l1: float,
    l2: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Global thigh/shank rotations plus the reached ankle position.

    The knee lies in the plane spanned by the hip->ankle axis and the pole
    direction (character forward), which also fixes the bend axis.
    """
    delta = ankle_target - hip_pos
    d = np.linalg.norm(delta)
    d = np.clip(d, abs(l1 - l2) + 1e-6, l1 + l2 - 1e-6)
    direction = delta / max(np.linalg.norm(delta), 1e-12)
    pole = pole_dir - np.dot(pole_dir, direction) * direction
    pn = np.linalg.norm(pole)
    if pn < 1e-8:
        pole = np.array([0.0, 0.0, 1.0]) - direction[2] * direction
        pn = np.linalg.norm(pole)
    pole = pole / pn
    cos_hip = (l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d)
    cos_hip = np.clip(cos_hip, -1.0, 1.0)
    sin_hip = np.sqrt(max(0.0, 1.0 - cos_hip * cos_hip))
    knee = hip_pos + l1 * (cos_hip * direction + sin_hip * pole)
    ankle = hip_pos + d * direction
    bend_axis = np.cross(pole, direction)
    bend_axis /= max(np.linalg.norm(bend_axis), 1e-12)

    def frame_from(bone_dir: np.ndarray) -> np.ndarray:
        y = -bone_dir
        x = bend_axis - np.dot(bend_axis, y) * y
        x /= max(np.linalg.norm(x), 1e-12)
        z = np.cross(x, y)
        return np.stack([x, y, z], axis=1)

    thigh_dir = (knee - hip_pos) / l1
    shank_dir = (ankle - knee) / max(np.linalg.norm(ankle - knee), 1e-12)
    return frame_from(thigh_dir), frame_from(shank_dir), ankle


@dataclass
class _FootPlan:
    """Per-leg plant schedule: world ankle targets and frozen foot yaws."""

    plant_pos: np.ndarray   # (K, 3)
    plant_yaw: np.ndarray   # (K,)
    phase_offset: float


class _WalkScript:
    """Deterministic gait script evaluated per frame."""

    def __init__(
        self,
        skeleton: Skeleton,
        n_frames: int,
        speed,
        turn_rate,
        lift: float,
        arm_swing: float,
        action: str = "walk",
        frame_rate: float = 30.0,
        gait_period: float = 0.9,
        stance_frac: float = 0.55,
    ):
        self.sk = skeleton
        self.n = n_frames
        self.rate = frame_rate
        self.period = gait_period
        self.stance_frac = stance_frac
        self.lift = lift
        self.arm_swing = arm_swing
        self.action = action
        self.h_stand = standing_height(skeleton)
        self.h_ankle = flat_ankle_height(skeleton)
        self.l1 = float(np.linalg.norm(skeleton.rest_offsets[L_KNEE]))
        self.l2 = float(np.linalg.norm(skeleton.rest_offsets[L_ANKLE]))
        self.lat = float(abs(skeleton.rest_offsets[L_HIP, 0]))

        dt = 1.0 / frame_rate
        # speed / turn_rate may be scalars or per-frame profiles.
        speed = np.broadcast_to(np.asarray(speed, dtype=np.float64), (n_frames,))
        turn = np.broadcast_to(np.asarray(turn_rate, dtype=np.float64), (n_frames,))
        # Settle window at the end for sit/lift endings.
        self.settle_frames = 0 if action == "walk" else min(45, n_frames // 2)
        move_frames = n_frames - self.settle_frames
        self.speed = speed.copy()
        if self.settle_frames:
            ramp = 12
            for i in range(max(0, move_frames - ramp), n_frames):
                u = (i - (move_frames - ramp)) / max(ramp, 1)
                self.speed[i] = speed[i] * max(0.0, 1.0 - _smoothstep(u))
        self.heading = np.zeros(n_frames)
        self.path = np.zeros((n_frames, 3))
        h = 0.0
        p = np.zeros(3)
        for i in range(n_frames):
            self.heading[i] = h
            self.path[i] = p
            fwd = np.array([np.sin(h), 0.0, np.cos(h)])
            p = p + self.speed[i] * dt * fwd
            if i < move_frames:
                h = h + turn[i] * dt
        self.total_time = n_frames * dt
        self.plans = {
            "left": self._plan_foot(+1.0, 0.0),
            "right": self._plan_foot(-1.0, 0.5),
        }
        # Symmetric final stance for sit/lift endings, relative to the
        # settled pelvis (which shifts back while folding down).
        self.final_yaw = float(self.heading[-1])
        fwd_end = np.array([np.sin(self.final_yaw), 0.0, np.cos(self.final_yaw)])
        pelvis_end = self.path[-1] - 0.10 * fwd_end
        ahead = 0.16 if action == "approach-sit" else 0.04
        widen = 1.0 if action == "approach-sit" else 1.25
        lat_end = yaw_matrix(self.final_yaw) @ np.array([self.lat * widen, 0, 0])
        self.final_targets = {}
        for side, sgn in (("left", 1.0), ("right", -1.0)):
            tgt = pelvis_end + sgn * lat_end + ahead * fwd_end
            tgt[1] = self.h_ankle
            self.final_targets[side] = tgt

    def _path_at(self, t: float) -> tuple[np.ndarray, float]:
        i = np.clip(t * self.rate, 0.0, self.n - 1)
        i0 = int(np.floor(i))
        i1 = min(i0 + 1, self.n - 1)
        u = i - i0
        return (
            (1 - u) * self.path[i0] + u * self.path[i1],
            (1 - u) * self.heading[i0] + u * self.heading[i1],
        )

    def _plan_foot(self, side: float, phase_offset: float) -> _FootPlan:
        n_cycles = int(np.ceil(self.total_time / self.period)) + 2
        pos = np.zeros((n_cycles + 1, 3))
        yaws = np.zeros(n_cycles + 1)
        for k in range(n_cycles + 1):
            t_mid = (k - phase_offset + self.stance_frac / 2.0) * self.period
            center, hd = self._path_at(t_mid)
            lateral = yaw_matrix(hd) @ np.array([side * self.lat, 0.0, 0.0])
            pos[k] = center + lateral
            pos[k, 1] = self.h_ankle
            yaws[k] = hd
        return _FootPlan(plant_pos=pos, plant_yaw=yaws, phase_offset=phase_offset)

    def _foot_state(self, plan: _FootPlan, t: float) -> tuple[np.ndarray, float]:
        """World ankle target and foot yaw at time t."""
        c = t / self.period + plan.phase_offset
        k = int(np.floor(c))
        phase = c - k
        k = max(k, 0)
        k_next = min(k + 1, len(plan.plant_yaw) - 1)
        k = min(k, len(plan.plant_yaw) - 1)
        if phase < self.stance_frac:
            return plan.plant_pos[k].copy(), plan.plant_yaw[k]
        u = (phase - self.stance_frac) / (1.0 - self.stance_frac)
        s = _smoothstep(u)
        p = (1 - s) * plan.plant_pos[k] + s * plan.plant_pos[k_next]
        p[1] = self.h_ankle + self.lift * np.sin(np.pi * u)
        yaw = (1 - s) * plan.plant_yaw[k] + s * plan.plant_yaw[k_next]
        return p, yaw

    def _ending_blend(self, i: int) -> float:
        """0 while moving, smoothly to 1 over the settle window."""
        if not self.settle_frames:
            return 0.0
        start = self.n - self.settle_frames
        if i < start:
            return 0.0
        return float(_smoothstep((i - start) / max(self.settle_frames - 1, 1)))

    def frame(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Local rotation matrices (J, 3, 3) and root translation (3,)."""
        sk = self.sk
        t = i / self.rate
        blend = self._ending_blend(i)
        gait_phase = 2.0 * np.pi * t / self.period
        gait_amp = 1.0 if not self.settle_frames else (1.0 - blend)

        heading = self.heading[i]
        r_root = yaw_matrix(heading)
        bob = 0.012 * np.sin(2.0 * gait_phase) * gait_amp * min(
            1.0, self.speed[i] / 0.5 + 1e-9
        )
        h_walk = self.h_stand - 0.015 + bob
        if self.action == "approach-sit":
            h_end = 0.52
        elif self.action == "approach-lift":
            h_end = 0.58
        else:
            h_end = h_walk
        root_h = (1.0 - blend) * h_walk + blend * h_end
        t_p = self.path[i].copy()
        if blend > 0.0:
            # Hips move back over the heels while folding down.
            back = yaw_matrix(heading) @ np.array([0.0, 0.0, -0.10 * blend])
            t_p = t_p + back
        t_p[1] = root_h

        local = np.tile(np.eye(3), (sk.joint_count, 1, 1))
        local[0] = r_root

        # Torso: small counter-sway while walking, forward pitch for lift.
        sway = 0.04 * np.sin(gait_phase) * gait_amp
        pitch = 0.0
        if self.action == "approach-lift":
            pitch = -0.17 * blend
        elif self.action == "approach-sit":
            pitch = -0.05 * blend
        for j in SPINE:
            local[j] = _rx(pitch) @ _rz(sway / len(SPINE))

        # Legs: planted/swinging ankle targets solved by two-bone IK.
        hip_l = t_p + r_root @ sk.rest_offsets[L_HIP]
        hip_r = t_p + r_root @ sk.rest_offsets[R_HIP]
        fwd = r_root @ np.array([0.0, 0.0, 1.0])
        for side, hip_pos, hip_j, knee_j, ankle_j in (
            ("left", hip_l, L_HIP, L_KNEE, L_ANKLE),
            ("right", hip_r, R_HIP, R_KNEE, R_ANKLE),
        ):
            target, foot_yaw = self._foot_state(self.plans[side], t)
            if blend > 0.0:
                # Step both feet to a symmetric stance, with a small lift
                # so the adjustment is a step rather than a slide.
                final_target = self.final_targets[side]
                gap = np.linalg.norm((final_target - target)[[0, 2]])
                target = (1 - blend) * target + blend * final_target
                target[1] += min(0.04, gap) * np.sin(np.pi * blend)
                foot_yaw = (1 - blend) * foot_yaw + blend * self.final_yaw
            thigh_g, shank_g, _ = _leg_ik(hip_pos, target, fwd, self.l1, self.l2)
            local[hip_j] = r_root.T @ thigh_g
            local[knee_j] = thigh_g.T @ shank_g
            local[ankle_j] = shank_g.T @ yaw_matrix(foot_yaw)

        # Arms: hang at the sides with an anti-phase swing (pitch about the
        # lateral axis applied after the hang so it moves the whole arm).
        hang = 1.25
        swing_l = self.arm_swing * np.sin(gait_phase + np.pi) * gait_amp
        swing_r = self.arm_swing * np.sin(gait_phase) * gait_amp
        reach = 0.0
        elbow = 0.25
        if self.action == "approach-lift":
            reach = -0.45 * blend
            elbow = 0.25 * (1.0 - blend)  # straighten while reaching down
        local[L_SHOULDER] = _rx(swing_l + reach) @ _rz(-hang)
        local[R_SHOULDER] = _rx(swing_r + reach) @ _rz(hang)
        local[L_ELBOW] = _rz(-elbow)
        local[R_ELBOW] = _rz(elbow)
        return local, t_p


def synthesize_clip(
    skeleton: Skeleton,
    n_frames: int,
    speed,
    turn_rate,
    lift: float = 0.07,
    arm_swing: float = 0.3,
    action: str = "walk",
    frame_rate: float = 30.0,
) -> Trajectory:
    """One deterministic scripted clip, canonicalized to its first frame.

    speed (m/s) and turn_rate (rad/s) may be scalars or per-frame arrays.
    """
    script = _WalkScript(
        skeleton, n_frames, speed, turn_rate, lift, arm_swing, action,
        frame_rate=frame_rate,
    )
    locals_all = np.zeros((n_frames, skeleton.joint_count, 3, 3))
    roots = np.zeros((n_frames, 3))
    for i in range(n_frames):
        locals_all[i], roots[i] = script.frame(i)
    j_p = forward_kinematics_full(
        skeleton, matrix_to_rot6d(locals_all), roots
    )[0]
    traj = trajectory_from_keyframes(j_p, locals_all, roots, frame_rate)
    return canonicalize(traj)


def _wander_profile(
    rng: np.random.Generator, n: int, base_range: tuple, amp: float,
    lo: float, hi: float, rate: float = 30.0, white: float = 0.0,
) -> np.ndarray:
    """Randomly varying profile: base value, two low-freq sines, and
    optional per-frame white noise.

    The white component makes single-step transitions genuinely
    stochastic, which is what lets a learned transition model produce
    diverging branches from one pose.
    """
    t = np.arange(n) / rate
    base = rng.uniform(*base_range)
    prof = np.full(n, base)
    for _ in range(2):
        a = rng.uniform(0.0, amp)
        f = rng.uniform(0.05, 0.30)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        prof = prof + a * np.sin(2.0 * np.pi * f * t + phase)
    if white > 0.0:
        prof = prof + rng.normal(0.0, white, size=n)
    return np.clip(prof, lo, hi)


def generate_toy_motions(
    cfg: ToyMotionConfig, skeleton: Skeleton = DEFAULT_SKELETON
) -> list[Trajectory]:
    """Randomized scripted clips; a pure function of the config."""
    rng = np.random.default_rng(cfg.seed)
    clips = []
    for _ in range(cfg.count):
        n = int(rng.integers(cfg.frames_range[0], cfg.frames_range[1] + 1))
        speed = _wander_profile(
            rng, n, cfg.speed_range, amp=0.35, white=0.10,
            lo=min(0.4, cfg.speed_range[0]), hi=cfg.speed_range[1] + 0.35,
        )
        turn = _wander_profile(
            rng, n, cfg.turn_range, amp=0.55, white=0.80,
            lo=cfg.turn_range[0] - 1.3, hi=cfg.turn_range[1] + 1.3,
        )
        clips.append(
            synthesize_clip(
                skeleton,
                n,
                speed=speed,
                turn_rate=turn,
                lift=rng.uniform(*cfg.lift_height_range),
                arm_swing=rng.uniform(*cfg.arm_swing_range),
                action=cfg.action,
            )
        )
    return clips
