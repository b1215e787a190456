#!/usr/bin/env python3
"""
Sway tracking against synthetic ground truth
============================================

Generates a 20 s sway recording, corrupts the feature observations with
pixel noise and dropout, tracks the target pose frame by frame, and reports
recovery error per anatomical axis. The depth-aligned axis (AP here) is
always the noisy one: a 60 mm target at a meter gives pixel noise a long
lever arm on range.
"""

import numpy as np

from swaykin import (
    AnatomicalFrame,
    KinematicParams,
    NoiseSpec,
    RigidTransform,
    SwayProfile,
    anatomical_from_board,
    default_target,
    generate_trajectory,
    render_observations,
    to_anatomical,
    track_sequence,
)
from swaykin.synth import DEFAULT_INTRINSICS
from swaykin.target import virtual_point

profile = SwayProfile(duration_sec=20.0, seed=42)
model = default_target("lumbar")
theta = generate_trajectory(profile)
obs = render_observations(
    theta, model, DEFAULT_INTRINSICS, NoiseSpec(sigma_px=0.2, dropout=0.01, seed=43)
)

track = track_sequence(obs, model, DEFAULT_INTRINSICS, rate_hz=profile.rate_hz)
fitted = sum(s == "fitted" for s in track.statuses)
iters = [r.iterations for r in track.reports if r is not None]
print(f"tracked {fitted}/{track.n_frames} frames, median {int(np.median(iters))} LM iterations")

# both truth and estimate go through the same virtual-point mapping
frame = AnatomicalFrame.from_transform(RigidTransform.identity())
delta = model.virtual_offset


def anatomical(theta_row):
    p = virtual_point(KinematicParams.from_array(theta_row), delta)
    return anatomical_from_board(to_anatomical(frame, p))


err_origin = np.full((track.n_frames, 3), np.nan)
err_virtual = np.full((track.n_frames, 3), np.nan)
for i, rep in enumerate(track.reports):
    if rep is None:
        continue
    est = rep.theta.as_array()
    # board-origin translation, reordered to AP/ML/SI
    err_origin[i] = anatomical_from_board(est[3:] - theta[i, 3:])
    err_virtual[i] = anatomical(est) - anatomical(theta[i])


def table(err, tag):
    print(f"\n{tag}:")
    for k, axis in enumerate(("AP", "ML", "SI")):
        e = err[np.isfinite(err[:, k]), k]
        print(f"  {axis}: rms {np.sqrt(np.mean(e**2)):7.4f} mm   max {np.max(np.abs(e)):7.4f} mm")


table(err_origin, "board-origin recovery error")
table(err_virtual, "virtual-point recovery error (100 mm behind the board)")

print("\n0.2 px of feature noise is only ~0.05 mm laterally at this focal length,")
print("but depth rides on triangulation (AP), and the virtual point's 100 mm")
print("lever arm converts tilt noise back into lateral error. Smoothing in the")
print("trajectory stage claws most of this back; see the agreement demo.")
