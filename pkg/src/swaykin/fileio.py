"""File formats: PGM frames, JSON descriptors, and pipeline CSVs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from swaykin.anatomy import SwayTrajectory
from swaykin.camera import CameraIntrinsics, RigidTransform
from swaykin.features import FeatureObservation
from swaykin.metrics import AgreementReport, TplResult
from swaykin.pose import PoseTrack
from swaykin.target import GeometricTargetModel, validate_asymmetry


def _fmt(x) -> str:
    # repr of a Python float round-trips exactly; numpy scalars do not.
    return repr(float(x))


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM into a float image in [0, 1]."""
    data = Path(path).read_bytes()
    # Header: magic, width, height, maxval, separated by whitespace/comments.
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        c = data[i : i + 1]
        if c == b"#":
            i = data.index(b"\n", i)
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    raw = data[i + 1 : i + 1 + width * height]
    if len(raw) < width * height:
        raise ValueError(f"{path}: truncated pixel data")
    img = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return img.astype(float) / 255.0


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write a float image in [0, 1] as binary (P5) 8-bit PGM."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {img.shape}")
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = q.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(q.tobytes())


def save_intrinsics(path: str | Path, intrinsics: CameraIntrinsics, rms_px: float | None = None) -> None:
    doc = {
        "fx": intrinsics.fx,
        "fy": intrinsics.fy,
        "s": intrinsics.skew,
        "x0": intrinsics.x0,
        "y0": intrinsics.y0,
        "k1": intrinsics.k1,
        "k2": intrinsics.k2,
    }
    if rms_px is not None:
        doc["rms_px"] = rms_px
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_intrinsics(path: str | Path) -> CameraIntrinsics:
    doc = json.loads(Path(path).read_text())
    return CameraIntrinsics(
        fx=doc["fx"],
        fy=doc["fy"],
        x0=doc["x0"],
        y0=doc["y0"],
        skew=doc.get("s", 0.0),
        k1=doc.get("k1", 0.0),
        k2=doc.get("k2", 0.0),
    )


def save_target(path: str | Path, model: GeometricTargetModel) -> None:
    doc = {"name": model.name, "points_mm": model.points.tolist()}
    if model.virtual_offset is not None:
        doc["virtual_offset_mm"] = model.virtual_offset.tolist()
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_target(path: str | Path, validate: bool = True) -> GeometricTargetModel:
    """Load a target model; by default also checks its rotational asymmetry."""
    doc = json.loads(Path(path).read_text())
    model = GeometricTargetModel(
        name=doc["name"],
        points=np.array(doc["points_mm"], dtype=float),
        virtual_offset=(
            np.array(doc["virtual_offset_mm"], dtype=float)
            if "virtual_offset_mm" in doc
            else None
        ),
    )
    if validate:
        validate_asymmetry(model)
    return model


def save_extrinsics(path: str | Path, pose: RigidTransform) -> None:
    doc = {"rotation": pose.rotation.tolist(), "translation_mm": pose.translation.tolist()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_extrinsics(path: str | Path) -> RigidTransform:
    doc = json.loads(Path(path).read_text())
    return RigidTransform(
        np.array(doc["rotation"], dtype=float), np.array(doc["translation_mm"], dtype=float)
    )


def save_features_csv(path: str | Path, frames: list[list[FeatureObservation]]) -> None:
    """Write per-frame observations as `frame,model_index,u,v,score` rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["frame", "model_index", "u", "v", "score"])
        for k, obs in enumerate(frames):
            for o in obs:
                idx = "" if o.model_index is None else o.model_index
                w.writerow([k, idx, _fmt(o.position[0]), _fmt(o.position[1]), _fmt(o.score)])


def load_features_csv(path: str | Path) -> list[list[FeatureObservation]]:
    """Read a feature CSV back into per-frame observation lists.

    Frames are the contiguous range 0..max(frame); frames with no rows come
    back empty (a dropout-induced gap).
    """
    by_frame: dict[int, list[FeatureObservation]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        required = {"frame", "model_index", "u", "v", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            idx = row["model_index"]
            obs = FeatureObservation(
                np.array([float(row["u"]), float(row["v"])]),
                float(row["score"]),
                model_index=None if idx in ("", None) else int(idx),
            )
            by_frame.setdefault(int(row["frame"]), []).append(obs)
    if not by_frame:
        return []
    n = max(by_frame) + 1
    return [by_frame.get(k, []) for k in range(n)]


def save_pose_track_csv(path: str | Path, track: PoseTrack) -> None:
    """Write `frame,t_sec,status,theta1..theta6,rms_px,iters` rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["frame", "t_sec", "status"]
            + [f"theta{i}" for i in range(1, 7)]
            + ["rms_px", "iters"]
        )
        for k, (report, status) in enumerate(zip(track.reports, track.statuses)):
            t = k / track.rate_hz
            if report is None:
                w.writerow([k, _fmt(t), status] + [""] * 8)
            else:
                w.writerow(
                    [k, _fmt(t), status]
                    + [_fmt(v) for v in report.theta.as_array()]
                    + [_fmt(report.rms_residual_px), report.iterations]
                )


def save_theta_csv(path: str | Path, theta_seq: np.ndarray, rate_hz: float) -> None:
    """Write a ground-truth parameter sequence as `frame,t_sec,theta1..theta6`."""
    seq = np.asarray(theta_seq, dtype=float)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["frame", "t_sec"] + [f"theta{i}" for i in range(1, 7)])
        for k, row in enumerate(seq):
            w.writerow([k, _fmt(k / rate_hz)] + [_fmt(v) for v in row])


def load_theta_csv(path: str | Path) -> tuple[np.ndarray, float]:
    """Read a parameter sequence; returns (theta array (n,6), rate_hz)."""
    rows = []
    times = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            times.append(float(row["t_sec"]))
            rows.append([float(row[f"theta{i}"]) for i in range(1, 7)])
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 rows")
    rate = 1.0 / (times[1] - times[0])
    return np.array(rows), rate


def save_trajectory_csv(path: str | Path, traj: SwayTrajectory) -> None:
    """Write `t_sec,segment,AP_mm,ML_mm,SI_mm,valid` rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t_sec", "segment", "AP_mm", "ML_mm", "SI_mm", "valid"])
        for t, row, ok in zip(traj.times, traj.samples, traj.valid):
            w.writerow([_fmt(t), traj.label] + [_fmt(v) for v in row] + [int(ok)])


def load_trajectory_csv(path: str | Path) -> SwayTrajectory:
    times = []
    samples = []
    valid = []
    label = ""
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            times.append(float(row["t_sec"]))
            label = row["segment"]
            samples.append([float(row["AP_mm"]), float(row["ML_mm"]), float(row["SI_mm"])])
            valid.append(bool(int(row["valid"])))
    if len(times) < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-6:
        raise ValueError(f"{path}: timebase is not uniform")
    return SwayTrajectory(
        sample_rate_hz=1.0 / float(dt[0]),
        label=label,
        samples=np.array(samples),
        valid=np.array(valid, dtype=bool),
        t0=times[0],
    )


def save_tpl_csv(path: str | Path, results: list[TplResult]) -> None:
    """Write `segment,direction,bin,tpl_mm` rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["segment", "direction", "bin", "tpl_mm"])
        for r in results:
            w.writerow([r.segment, r.direction, r.bin_label, _fmt(r.value_mm)])


def save_agreement_json(path: str | Path, report: AgreementReport) -> None:
    doc = {
        "bias_mm": float(report.bias_mm),
        "loa": [float(report.loa_mm[0]), float(report.loa_mm[1])],
        "slope": float(report.slope),
        "intercept": float(report.intercept),
        "r2": float(report.r2),
        "n": int(report.n),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
