"""A-priori geometric target models and body-fixed virtual points.

A target is a rigid board of checker-junction features with known 3D
coordinates in its own frame (millimeters, origin at the reference corner,
z pointing into the body when worn). Models must be rotationally asymmetric
so a single 2D view pins down the full 6-DOF pose without ambiguity.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from swaykin.pose import KinematicParams, motion_matrix

GRID_PITCH_MM = 20.0
DEFAULT_VIRTUAL_OFFSET_MM = np.array([0.0, 0.0, 100.0])

SET_MATCH_TOL_MM = 1e-6


class AmbiguousTargetError(ValueError):
    """Target geometry maps onto itself under a nontrivial rotation."""


@dataclass(frozen=True)
class GeometricTargetModel:
    """Named rigid feature model: ``points`` is (n, 3) target-frame mm.

    ``virtual_offset`` optionally names a body-interior point (target frame)
    tracked alongside the target origin; None disables it.
    """

    name: str
    points: np.ndarray
    virtual_offset: np.ndarray | None = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {pts.shape}")
        if len(pts) < 4:
            raise ValueError(f"target needs at least 4 features, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("target points must be finite")
        sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if sv[1] < 1e-9:
            raise ValueError("target points are collinear")
        object.__setattr__(self, "points", pts)
        if self.virtual_offset is not None:
            off = np.asarray(self.virtual_offset, dtype=float).reshape(3)
            if not np.all(np.isfinite(off)):
                raise ValueError("virtual offset must be finite")
            object.__setattr__(self, "virtual_offset", off)

    @property
    def n_features(self) -> int:
        return len(self.points)


def _cube_rotations() -> list[np.ndarray]:
    """The 24 proper rotations of the cube, as matrices."""
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            R = np.zeros((3, 3))
            for row, (col, s) in enumerate(zip(perm, signs)):
                R[row, col] = s
            if np.linalg.det(R) > 0:
                mats.append(R)
    return mats


_CUBE_ROTATIONS = _cube_rotations()


def _rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _maps_onto_itself(centered: np.ndarray, R: np.ndarray) -> bool:
    rotated = centered @ R.T
    d = np.linalg.norm(rotated[:, None, :] - centered[None, :, :], axis=2)
    nearest = np.argmin(d, axis=1)
    if np.any(d[np.arange(len(centered)), nearest] > SET_MATCH_TOL_MM):
        return False
    return len(np.unique(nearest)) == len(centered)


def validate_asymmetry(model: GeometricTargetModel, grid_step_deg: float = 1.0) -> None:
    """Check that no sampled nontrivial rotation maps the point set onto itself.

    Candidate rotations are the 24 cube symmetries composed with in-plane
    (z-axis) rotations sampled every ``grid_step_deg``; the point set is
    compared about its centroid with a 1e-6 mm set-match tolerance. Raises
    :class:`AmbiguousTargetError` naming the first offending rotation. The
    grid sampling makes this a sound but approximate check: a symmetry axis
    falling between samples could go unnoticed.
    """
    if grid_step_deg <= 0:
        raise ValueError("grid_step_deg must be positive")
    centered = model.points - model.points.mean(axis=0)
    n_steps = int(round(360.0 / grid_step_deg))
    for phi_idx in range(n_steps):
        Rz = _rotation_z(math.radians(phi_idx * grid_step_deg))
        for cube in _CUBE_ROTATIONS:
            R = cube @ Rz
            angle = math.acos(max(-1.0, min(1.0, (np.trace(R) - 1.0) / 2.0)))
            if angle < 1e-9:
                continue
            if _maps_onto_itself(centered, R):
                raise AmbiguousTargetError(
                    f"target '{model.name}' maps onto itself under a "
                    f"{math.degrees(angle):.1f} degree rotation "
                    f"(in-plane sample {phi_idx * grid_step_deg:.1f} degrees)"
                )


def virtual_point(theta: KinematicParams, delta: np.ndarray) -> np.ndarray:
    """Camera-frame position of a target-frame offset under a fitted pose.

    Appends the homogeneous 1 to ``delta`` and returns the first three
    components of the motion matrix product.
    """
    d = np.asarray(delta, dtype=float).reshape(3)
    return (motion_matrix(theta) @ np.append(d, 1.0))[:3]


def _grid_with_hole(skip: tuple[int, int]) -> np.ndarray:
    pts = [
        (j * GRID_PITCH_MM, i * GRID_PITCH_MM, 0.0)
        for i in range(4)
        for j in range(4)
        if (i, j) != skip
    ]
    return np.array(pts)


def default_target(name: str) -> GeometricTargetModel:
    """Built-in target models.

    Both are 4x4 junction grids at 20 mm pitch with one off-diagonal edge
    feature removed (15 features); the hole breaks every grid symmetry, which
    a removed corner would not (a corner hole survives the 180-degree
    rotation about the grid diagonal through it). The lumbar target carries
    the 100 mm body-interior virtual offset.
    """
    if name == "lumbar":
        return GeometricTargetModel(
            "lumbar", _grid_with_hole((0, 1)), DEFAULT_VIRTUAL_OFFSET_MM.copy()
        )
    if name == "shoulder":
        return GeometricTargetModel("shoulder", _grid_with_hole((3, 2)), None)
    raise KeyError(f"unknown target '{name}'; built-ins are 'lumbar' and 'shoulder'")
