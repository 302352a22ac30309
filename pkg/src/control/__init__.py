"""Mallet trajectory MPC and the joint-level arm tracker."""

from .arm import (
    JointState,
    batch_fk_jacobian,
    fk,
    ik_dls,
    jacobian,
    joint_velocity_box,
    min_singular_value,
    projected_gradient,
    qp_objective,
    qp_track,
    solve_box_qp,
)
from .basis import (
    MIN_HORIZON,
    BasisSet,
    HorizonTooShortError,
    acceleration_functional,
    build_basis,
)
from .mpc import (
    CandidateScores,
    TrajectoryCandidate,
    allowed_region,
    basis_for_contact,
    final_approach_command,
    mpc_step,
    rollout_candidate,
    sample_terminal_velocities,
    score_candidates,
    steps_to_contact,
    track_contact,
)

__all__ = [
    "JointState",
    "batch_fk_jacobian",
    "fk",
    "ik_dls",
    "jacobian",
    "joint_velocity_box",
    "min_singular_value",
    "projected_gradient",
    "qp_objective",
    "qp_track",
    "solve_box_qp",
    "MIN_HORIZON",
    "BasisSet",
    "HorizonTooShortError",
    "acceleration_functional",
    "build_basis",
    "CandidateScores",
    "TrajectoryCandidate",
    "allowed_region",
    "basis_for_contact",
    "final_approach_command",
    "mpc_step",
    "rollout_candidate",
    "sample_terminal_velocities",
    "score_candidates",
    "steps_to_contact",
    "track_contact",
]
