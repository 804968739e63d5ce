from .body import (
    body_sdf,
    body_surface_points,
    capsule_sdf,
    forward_kinematics,
    forward_kinematics_full,
    segment_distances,
)
from .pose import (
    FRAME_RATE,
    MAX_FRAMES,
    NUM_JOINTS,
    POSE_DIM,
    SIMPLIFIED_INDICES,
    GroundTransform,
    J_P,
    J_R,
    J_V,
    J_W,
    PoseState,
    RecoveredMotion,
    T_P,
    T_V,
    Trajectory,
    angular_velocities,
    canonical_transform,
    canonicalize,
    finite_difference,
    heading_angle,
    pad_trajectory,
    read_trajectories,
    recover_motion,
    reverse_time,
    trajectory_from_keyframes,
    truncate_start,
    write_trajectories,
)
from .rotations import (
    matrix_to_rot6d,
    matrix_to_rotvec,
    rot6d_to_matrix,
    rotation_between,
    rotvec_to_matrix,
    yaw_matrix,
)
from .skeleton import (
    DEFAULT_SKELETON,
    SHAPE_DIM,
    Skeleton,
    build_body,
    shape_to_bone_scales,
)
