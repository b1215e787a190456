"""Monocular fiducial-target tracking and 3D postural sway analytics.

Recovers sub-millimeter 3D sway trajectories from single-camera grayscale
frames of worn geometric targets, transforms them into anatomical axes, and
computes standard posturography and agreement statistics.
"""
from swaykin.camera import (
    BehindCameraError,
    CalibrationError,
    CalibrationResult,
    CameraIntrinsics,
    DegenerateGeometryError,
    DistortionInversionError,
    RigidTransform,
    calibrate,
    distort_normalized,
    distort_point,
    estimate_homography,
    estimate_planar_extrinsics,
    project,
    undistort_frame,
    undistort_normalized,
    undistort_point,
)
from swaykin.features import (
    FeatureObservation,
    InsufficientCorrespondenceError,
    LatticeMatchError,
    NoGradientError,
    bootstrap_correspondence,
    corner_likelihood,
    detect_features,
    detect_refined,
    match_features,
    order_checkerboard_corners,
    refine_subpixel,
)
from swaykin.target import (
    AmbiguousTargetError,
    GeometricTargetModel,
    default_target,
    validate_asymmetry,
    virtual_point,
)
from swaykin.pose import (
    FitConfig,
    FitReport,
    GimbalLockError,
    KinematicParams,
    PoseTrack,
    TrackingError,
    euler_from_rotation,
    fit_pose,
    initialize_first_frame,
    motion_matrix,
    reprojection_residuals,
    track_sequence,
)
from swaykin.anatomy import (
    AnatomicalFrame,
    SwayTrajectory,
    anatomical_from_board,
    interpolate_gaps,
    resample_linear,
    savitzky_golay,
    to_anatomical,
)
from swaykin.metrics import (
    AgreementReport,
    StanceBins,
    TplResult,
    bin_trajectory,
    bland_altman,
    cohens_d,
    cousineau_morey,
    cousineau_morey_sem,
    total_path_length,
)
from swaykin.synth import NoiseSpec, SwayProfile, generate_trajectory, render_frame, render_observations

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "AmbiguousTargetError",
    "AnatomicalFrame",
    "BehindCameraError",
    "CalibrationError",
    "CalibrationResult",
    "CameraIntrinsics",
    "DegenerateGeometryError",
    "DistortionInversionError",
    "FeatureObservation",
    "FitConfig",
    "FitReport",
    "GeometricTargetModel",
    "GimbalLockError",
    "InsufficientCorrespondenceError",
    "KinematicParams",
    "LatticeMatchError",
    "NoGradientError",
    "NoiseSpec",
    "PoseTrack",
    "RigidTransform",
    "StanceBins",
    "SwayProfile",
    "SwayTrajectory",
    "TplResult",
    "TrackingError",
    "anatomical_from_board",
    "bin_trajectory",
    "bland_altman",
    "bootstrap_correspondence",
    "calibrate",
    "cohens_d",
    "corner_likelihood",
    "cousineau_morey",
    "cousineau_morey_sem",
    "default_target",
    "detect_features",
    "detect_refined",
    "distort_normalized",
    "distort_point",
    "estimate_homography",
    "estimate_planar_extrinsics",
    "euler_from_rotation",
    "fit_pose",
    "generate_trajectory",
    "initialize_first_frame",
    "interpolate_gaps",
    "match_features",
    "motion_matrix",
    "order_checkerboard_corners",
    "project",
    "refine_subpixel",
    "render_frame",
    "render_observations",
    "reprojection_residuals",
    "resample_linear",
    "savitzky_golay",
    "to_anatomical",
    "total_path_length",
    "track_sequence",
    "undistort_frame",
    "undistort_normalized",
    "undistort_point",
    "virtual_point",
]
