"""6-DOF rigid kinematic model fitting against per-frame feature observations.

The kinematic state is six parameters: three Z-Y-X Euler angles (radians)
followed by three camera-frame translations (millimeters). Fitting minimizes
the sum of squared reprojection residuals with a damped Levenberg-Marquardt
loop using numeric central-difference Jacobians; sequences are tracked by
warm-starting each frame from the previous solution.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from swaykin import camera
from swaykin.features import FeatureObservation, InsufficientCorrespondenceError

if TYPE_CHECKING:
    from swaykin.target import GeometricTargetModel

logger = logging.getLogger(__name__)

GIMBAL_MARGIN = 1e-6
MIN_OBSERVATIONS = 4


class GimbalLockError(ValueError):
    """Pitch too close to +-90 degrees for a unique Euler decomposition."""


class TrackingError(RuntimeError):
    """A sequence could not be tracked at all."""


@dataclass(frozen=True)
class KinematicParams:
    """Pose parameters: Euler angles theta1..theta3 (Z, Y, X order, radians)
    and translation theta4..theta6 (mm, camera frame)."""

    theta1: float
    theta2: float
    theta3: float
    theta4: float
    theta5: float
    theta6: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError("kinematic parameters must be finite")
        if abs(self.theta2) >= math.pi / 2 - GIMBAL_MARGIN:
            raise ValueError(
                f"theta2={self.theta2:.6f} rad is within the gimbal guard of +-pi/2"
            )

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.theta1, self.theta2, self.theta3, self.theta4, self.theta5, self.theta6]
        )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "KinematicParams":
        a = np.asarray(arr, dtype=float).reshape(6)
        return cls(*a.tolist())

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.theta4, self.theta5, self.theta6])


def _rotation(t1: float, t2: float, t3: float) -> np.ndarray:
    c1, s1 = math.cos(t1), math.sin(t1)
    c2, s2 = math.cos(t2), math.sin(t2)
    c3, s3 = math.cos(t3), math.sin(t3)
    return np.array(
        [
            [c1 * c2, c1 * s2 * s3 - s1 * c3, c1 * s2 * c3 + s1 * s3],
            [s1 * c2, s1 * s2 * s3 + c1 * c3, s1 * s2 * c3 - c1 * s3],
            [-s2, c2 * s3, c2 * c3],
        ]
    )


def motion_matrix(theta: KinematicParams) -> np.ndarray:
    """Homogeneous 4x4 motion matrix: rotation Rz(t1)*Ry(t2)*Rx(t3),
    translation (t4, t5, t6)."""
    M = np.eye(4)
    M[:3, :3] = _rotation(theta.theta1, theta.theta2, theta.theta3)
    M[:3, 3] = theta.translation
    return M


def euler_from_rotation(R: np.ndarray) -> tuple[float, float, float]:
    """Z-Y-X Euler angles (theta1, theta2, theta3) of a rotation matrix.

    Raises :class:`GimbalLockError` when |R[2,0]| is too close to 1 for the
    decomposition to be unique.
    """
    r31 = float(R[2, 0])
    if abs(r31) > 1.0 - 1e-9:
        raise GimbalLockError(f"|R[2,0]|={abs(r31):.12f} is at gimbal lock")
    return (
        math.atan2(R[1, 0], R[0, 0]),
        -math.asin(r31),
        math.atan2(R[2, 1], R[2, 2]),
    )


@dataclass(frozen=True)
class FitConfig:
    """Levenberg-Marquardt settings for :func:`fit_pose`."""

    max_iterations: int = 100
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    angle_step: float = 1e-6  # central-difference step, radians
    translation_step: float = 1e-4  # central-difference step, mm
    init_lambda: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    nominal_depth_mm: float = 1000.0


@dataclass(frozen=True)
class FitReport:
    theta: KinematicParams
    rms_residual_px: float
    iterations: int
    converged: bool
    covariance_diag: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class PoseTrack:
    """Per-frame fit results on a uniform timebase. ``reports[i]`` is None
    exactly where ``statuses[i] == "gap"``."""

    rate_hz: float
    reports: list[FitReport | None]
    statuses: list[str]

    def __post_init__(self) -> None:
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        if len(self.reports) != len(self.statuses):
            raise ValueError("reports and statuses must cover the same frames")

    @property
    def n_frames(self) -> int:
        return len(self.reports)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.rate_hz


def _check_matched(obs: Sequence[FeatureObservation]) -> tuple[np.ndarray, np.ndarray]:
    if any(o.model_index is None for o in obs):
        raise ValueError("all observations must carry a model_index")
    idx = np.array([o.model_index for o in obs], dtype=int)
    pts = np.stack([o.position for o in obs])
    return idx, pts


def _residuals_array(
    th: np.ndarray, points: np.ndarray, obs_uv: np.ndarray, intrinsics: camera.CameraIntrinsics
) -> np.ndarray:
    """Residual vector for parameter array th against matched points."""
    R = _rotation(th[0], th[1], th[2])
    pc = points @ R.T + th[3:]
    z = pc[:, 2]
    if np.any(z <= camera.MIN_DEPTH_MM):
        bad = int(np.argmax(z <= camera.MIN_DEPTH_MM))
        raise camera.BehindCameraError(f"feature {bad} transformed behind the camera")
    u = intrinsics.fx * pc[:, 0] / z + intrinsics.skew * pc[:, 1] / z + intrinsics.x0
    v = intrinsics.fy * pc[:, 1] / z + intrinsics.y0
    return (np.column_stack([u, v]) - obs_uv).ravel()


def reprojection_residuals(
    theta: KinematicParams,
    model: "GeometricTargetModel",
    obs: Sequence[FeatureObservation],
    intrinsics: camera.CameraIntrinsics,
) -> np.ndarray:
    """Signed residual vector (2m,): predicted minus observed pixels, in
    observation order (u then v per feature)."""
    idx, pts = _check_matched(obs)
    return _residuals_array(theta.as_array(), model.points[idx], pts, intrinsics)


def _numeric_jacobian(
    th: np.ndarray,
    points: np.ndarray,
    obs_uv: np.ndarray,
    intrinsics: camera.CameraIntrinsics,
    config: FitConfig,
) -> np.ndarray:
    J = np.empty((2 * len(points), 6))
    for j in range(6):
        h = config.angle_step if j < 3 else config.translation_step
        tp, tm = th.copy(), th.copy()
        tp[j] += h
        tm[j] -= h
        J[:, j] = (
            _residuals_array(tp, points, obs_uv, intrinsics)
            - _residuals_array(tm, points, obs_uv, intrinsics)
        ) / (2.0 * h)
    return J


def fit_pose(
    init: KinematicParams,
    model: "GeometricTargetModel",
    obs: Sequence[FeatureObservation],
    intrinsics: camera.CameraIntrinsics,
    config: FitConfig = FitConfig(),
) -> FitReport:
    """Levenberg-Marquardt fit of the kinematic parameters to observations.

    Damping starts at ``init_lambda``, divides by ``lambda_down`` on accepted
    steps and multiplies by ``lambda_up`` on rejected ones. Terminates on
    gradient norm < gradient_tol, accepted-step norm < step_tol, or
    max_iterations. The report flags ``degenerate`` when the final Jacobian
    has rank < 6, and carries diag((J^T J)^-1) as a covariance proxy.
    """
    if len(obs) < MIN_OBSERVATIONS:
        raise InsufficientCorrespondenceError(
            f"{len(obs)} observation(s); pose fitting needs at least {MIN_OBSERVATIONS}"
        )
    idx, obs_uv = _check_matched(obs)
    points = model.points[idx]

    th = init.as_array()
    r = _residuals_array(th, points, obs_uv, intrinsics)
    cost = float(r @ r)
    if not math.isfinite(cost):
        raise ValueError("objective is not finite at the initial parameters")

    lam = config.init_lambda
    converged = False
    iterations = 0
    J = _numeric_jacobian(th, points, obs_uv, intrinsics, config)
    for iterations in range(1, config.max_iterations + 1):
        g = J.T @ r
        if np.linalg.norm(g) < config.gradient_tol:
            converged = True
            iterations -= 1
            break
        JtJ = J.T @ J
        accepted = False
        while lam < 1e12:
            try:
                step = np.linalg.solve(JtJ + lam * np.eye(6), -g)
            except np.linalg.LinAlgError:
                lam *= config.lambda_up
                continue
            cand = th + step
            if abs(cand[1]) >= math.pi / 2 - GIMBAL_MARGIN:
                # Reject steps that cross the gimbal guard; more damping
                # shortens the step until it stays inside.
                lam *= config.lambda_up
                continue
            try:
                r_new = _residuals_array(cand, points, obs_uv, intrinsics)
            except camera.BehindCameraError:
                lam *= config.lambda_up
                continue
            cost_new = float(r_new @ r_new)
            if not math.isfinite(cost_new):
                raise ValueError("objective became non-finite during optimization")
            if cost_new < cost:
                th, r, cost = cand, r_new, cost_new
                lam /= config.lambda_down
                accepted = True
                break
            lam *= config.lambda_up
        if not accepted:
            break
        J = _numeric_jacobian(th, points, obs_uv, intrinsics, config)
        if np.linalg.norm(step) < config.step_tol:
            converged = True
            break

    sv = np.linalg.svd(J, compute_uv=False)
    degenerate = bool(sv[-1] < 1e-10 * sv[0])
    if degenerate:
        logger.warning("pose Jacobian is rank deficient (singular values %s)", sv)
    cov_diag = np.diag(np.linalg.pinv(J.T @ J)).copy()

    return FitReport(
        theta=KinematicParams.from_array(th),
        rms_residual_px=math.sqrt(cost / len(points)),
        iterations=iterations,
        converged=converged,
        covariance_diag=cov_diag,
        degenerate=degenerate,
    )


def initialize_first_frame(
    model: "GeometricTargetModel",
    obs: Sequence[FeatureObservation],
    intrinsics: camera.CameraIntrinsics,
    config: FitConfig = FitConfig(),
) -> KinematicParams:
    """Closed-form pose initialization for a frame with no prior.

    Planar models use the plane-to-image homography decomposition; the
    resulting rotation is converted to Z-Y-X Euler angles. Non-planar models
    fall back to a full fit from a frontal prior at the nominal depth.
    """
    if len(obs) < MIN_OBSERVATIONS:
        raise InsufficientCorrespondenceError(
            f"{len(obs)} observation(s); initialization needs at least {MIN_OBSERVATIONS}"
        )
    idx, obs_uv = _check_matched(obs)
    pts = model.points[idx]

    centroid = model.points.mean(axis=0)
    _, sv, Vt = np.linalg.svd(model.points - centroid)
    if sv[2] <= 1e-6:
        if np.linalg.det(Vt) < 0:
            Vt = Vt * np.array([[1.0], [1.0], [-1.0]])
        plane_xy = (pts - centroid) @ Vt[:2].T
        pose = camera.estimate_planar_extrinsics(intrinsics, plane_xy, obs_uv)
        # Compose plane-to-camera with the model-to-plane basis change.
        R = pose.rotation @ Vt
        t = pose.translation - R @ centroid
        t1, t2, t3 = euler_from_rotation(R)
        return KinematicParams(t1, t2, t3, *t.tolist())

    prior = KinematicParams(0.0, 0.0, 0.0, 0.0, 0.0, config.nominal_depth_mm)
    return fit_pose(prior, model, obs, intrinsics, config).theta


def track_sequence(
    frames: Sequence[Sequence[FeatureObservation]],
    model: "GeometricTargetModel",
    intrinsics: camera.CameraIntrinsics,
    config: FitConfig = FitConfig(),
    rate_hz: float = 30.0,
) -> PoseTrack:
    """Fit every frame of a sequence with temporal warm starting.

    The first fittable frame is initialized closed-form; each later frame
    starts from the most recent fitted parameters. Frames with fewer than 4
    matched observations (or where bootstrap initialization fails) get status
    ``gap`` and no report. Raises :class:`TrackingError` if nothing fits.
    """
    reports: list[FitReport | None] = []
    statuses: list[str] = []
    prev: KinematicParams | None = None
    for i, obs in enumerate(frames):
        if len(obs) < MIN_OBSERVATIONS:
            reports.append(None)
            statuses.append("gap")
            continue
        try:
            init = prev if prev is not None else initialize_first_frame(
                model, obs, intrinsics, config
            )
            report = fit_pose(init, model, obs, intrinsics, config)
        except (GimbalLockError, camera.DegenerateGeometryError, camera.BehindCameraError) as e:
            logger.warning("frame %d: %s; marking gap", i, e)
            reports.append(None)
            statuses.append("gap")
            continue
        reports.append(report)
        statuses.append("fitted")
        prev = report.theta
    if prev is None:
        raise TrackingError("no frame in the sequence could be fitted")
    return PoseTrack(rate_hz=rate_hz, reports=reports, statuses=statuses)
