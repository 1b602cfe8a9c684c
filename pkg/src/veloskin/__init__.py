"""Velocity-driven secondary deformation over linear blend skinning."""

from .assets_io import (
    Precomputed,
    SceneFile,
    load_obj,
    load_params,
    load_scene,
    precompute_model,
    save_params,
    save_scene,
)
from .geometry import RigidTransform
from .kinematics import (
    AnimationClip,
    BoneKinematics,
    Pose,
    Track,
    bone_velocities_analytic,
    bone_velocities_finite_difference,
    evaluate_pose,
    forward_kinematics,
    smooth_velocities,
)
from .lbs import lbs_deform, skinning_matrices, vertex_velocity_oracle
from .rig import (
    Bone,
    BoneGeometry,
    Skeleton,
    SkinnedMesh,
    compute_bone_centroids,
    compute_vertex_masses,
    posed_bone_geometry,
    propagate_weights_downward,
    propagate_weights_upward,
    validate_skeleton,
)
from .velocity_skinning import (
    DeformedFrame,
    VelocityComponent,
    VsParams,
    deform_mesh,
    deform_vertex,
    floppy_rotational,
    floppy_translational,
    phi_support,
    squash_rotational,
    squash_translational,
    trace_trajectories,
    velocity_component,
)

__version__ = "0.1.0"
