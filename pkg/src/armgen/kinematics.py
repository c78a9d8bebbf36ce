"""Euler-angle stream preprocessing and arm forward kinematics.

Orientation streams arrive as per-segment yaw/pitch/roll samples in degrees.
They are unwrapped, smoothed, turned into 3D joint trajectories by chaining
segment rotations from the shoulder, then resampled and split into phases.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

SEGMENTS = ("upper_arm", "forearm", "hand")
JOINTS = ("shoulder", "elbow", "wrist", "hand")


@dataclass
class EulerStream:
    """Per-segment orientation samples: angles[frame, segment, (yaw, pitch, roll)] in degrees."""

    sample_rate: float
    angles: np.ndarray
    segments: tuple = SEGMENTS

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.angles.ndim != 3 or self.angles.shape[1:] != (len(self.segments), 3):
            raise ValueError(f"angles must be (frames, {len(self.segments)}, 3), got {self.angles.shape}")

    @property
    def frames(self):
        return self.angles.shape[0]


@dataclass
class ArmModel:
    """Segment lengths (upper arm, forearm, hand) in meters and the shoulder anchor point."""

    segment_lengths: tuple = (0.30, 0.25, 0.08)
    shoulder_origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.segment_lengths = tuple(float(v) for v in self.segment_lengths)
        self.shoulder_origin = np.asarray(self.shoulder_origin, dtype=np.float64)
        if len(self.segment_lengths) != 3 or any(v <= 0 for v in self.segment_lengths):
            raise ValueError(f"need 3 positive segment lengths, got {self.segment_lengths}")
        if self.shoulder_origin.shape != (3,):
            raise ValueError("shoulder_origin must be a 3-vector")


@dataclass
class Trajectory:
    """Joint positions over time: positions[frame, joint, xyz] in meters."""

    positions: np.ndarray
    frame_period: float
    joint_names: tuple = JOINTS

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 3 or self.positions.shape[2] != 3:
            raise ValueError(f"positions must be (frames, joints, 3), got {self.positions.shape}")
        if self.positions.shape[0] < 1 or self.positions.shape[1] < 1:
            raise ValueError("need at least one frame and one joint")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions contain non-finite values")
        if self.frame_period <= 0:
            raise ValueError(f"frame_period must be positive, got {self.frame_period}")
        if len(self.joint_names) != self.positions.shape[1]:
            raise ValueError("joint_names length must match joint count")

    @property
    def frames(self):
        return self.positions.shape[0]

    @property
    def joints(self):
        return self.positions.shape[1]


@dataclass
class PhaseSplit:
    """Contiguous frame ranges [start, stop) that partition a trajectory."""

    reaching: tuple
    drinking_returning: tuple


def unwrap_angles(stream: EulerStream) -> EulerStream:
    """Remove 360-degree jumps so successive samples differ by < 180 degrees."""
    if stream.frames == 0:
        raise ValueError("cannot unwrap an empty stream")
    unwrapped = np.unwrap(stream.angles, axis=0, period=360.0)
    return EulerStream(stream.sample_rate, unwrapped, stream.segments)


def smooth(stream: EulerStream, window: int) -> EulerStream:
    """Centered moving average per channel; windows truncate at the ends."""
    window = int(window)
    if window % 2 == 0 or window < 1:
        raise ValueError(f"window must be odd and positive, got {window}")
    n = stream.frames
    if window > n:
        raise ValueError(f"window {window} exceeds frame count {n}")
    half = window // 2
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    c = np.concatenate([np.zeros((1, *stream.angles.shape[1:])), np.cumsum(stream.angles, axis=0)])
    out = (c[hi] - c[lo]) / (hi - lo)[:, None, None]
    return EulerStream(stream.sample_rate, out, stream.segments)


def euler_to_rotation(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """Rotation matrix for intrinsic Z-Y-X (yaw, then pitch, then roll)."""
    cy, sy = np.cos(np.radians(yaw_deg)), np.sin(np.radians(yaw_deg))
    cp, sp = np.cos(np.radians(pitch_deg)), np.sin(np.radians(pitch_deg))
    cr, sr = np.cos(np.radians(roll_deg)), np.sin(np.radians(roll_deg))
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def forward_kinematics(stream: EulerStream, arm: ArmModel) -> Trajectory:
    """Chain segment rotations from the shoulder into (shoulder, elbow, wrist, hand) positions."""
    n = stream.frames
    if n == 0:
        raise ValueError("empty stream")
    positions = np.empty((n, 4, 3))
    positions[:, 0] = arm.shoulder_origin
    for f in range(n):
        p = arm.shoulder_origin
        for s, length in enumerate(arm.segment_lengths):
            r = euler_to_rotation(*stream.angles[f, s])
            p = p + r @ np.array([length, 0.0, 0.0])
            positions[f, s + 1] = p
    return Trajectory(positions, 1.0 / stream.sample_rate)


def resample(traj: Trajectory, n: int) -> Trajectory:
    """Linear interpolation onto n uniform parameter values; endpoints kept exactly."""
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 output frames, got {n}")
    if traj.frames < 2:
        raise ValueError("need at least 2 input frames to resample")
    t_old = np.linspace(0.0, 1.0, traj.frames)
    t_new = np.linspace(0.0, 1.0, n)
    flat = traj.positions.reshape(traj.frames, -1)
    out = np.empty((n, flat.shape[1]))
    for j in range(flat.shape[1]):
        out[:, j] = np.interp(t_new, t_old, flat[:, j])
    duration = (traj.frames - 1) * traj.frame_period
    return Trajectory(out.reshape(n, traj.joints, 3), duration / (n - 1), traj.joint_names)


def split_phases(traj: Trajectory, t_in: int) -> PhaseSplit:
    """Positional split: reaching = first t_in frames, the rest is drinking/returning."""
    t_in = int(t_in)
    if not 0 < t_in < traj.frames:
        raise ValueError(f"split index {t_in} must be interior to {traj.frames} frames")
    return PhaseSplit((0, t_in), (t_in, traj.frames))


# ---------------------------------------------------------------------------
# CSV formats


def _fmt(x):
    return repr(float(x))


def write_euler_csv(stream: EulerStream, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "segment", "yaw_deg", "pitch_deg", "roll_deg"])
        for f in range(stream.frames):
            for s, name in enumerate(stream.segments):
                w.writerow([f, name, *(_fmt(v) for v in stream.angles[f, s])])


def read_euler_csv(path, sample_rate: float = 100.0) -> EulerStream:
    by_frame = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            f = int(row["frame"])
            by_frame.setdefault(f, {})[row["segment"]] = [
                float(row["yaw_deg"]),
                float(row["pitch_deg"]),
                float(row["roll_deg"]),
            ]
    if not by_frame:
        raise ValueError(f"no samples in {path}")
    n = max(by_frame) + 1
    if sorted(by_frame) != list(range(n)):
        raise ValueError("frames must be contiguous from 0")
    angles = np.empty((n, len(SEGMENTS), 3))
    for f in range(n):
        for s, name in enumerate(SEGMENTS):
            if name not in by_frame[f]:
                raise ValueError(f"frame {f} missing segment {name}")
            angles[f, s] = by_frame[f][name]
    return EulerStream(sample_rate, angles)


def write_trajectory_csv(traj: Trajectory, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "joint", "x_m", "y_m", "z_m"])
        for f in range(traj.frames):
            for j, name in enumerate(traj.joint_names):
                w.writerow([f, name, *(_fmt(v) for v in traj.positions[f, j])])


def read_trajectory_csv(path, frame_period: float = 0.05) -> Trajectory:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((int(row["frame"]), row["joint"], float(row["x_m"]), float(row["y_m"]), float(row["z_m"])))
    if not rows:
        raise ValueError(f"no samples in {path}")
    names = []
    for _, name, *_ in rows:
        if name not in names:
            names.append(name)
    n = max(r[0] for r in rows) + 1
    positions = np.full((n, len(names), 3), np.nan)
    index = {name: j for j, name in enumerate(names)}
    for f, name, x, y, z in rows:
        positions[f, index[name]] = (x, y, z)
    if not np.all(np.isfinite(positions)):
        raise ValueError("missing (frame, joint) samples")
    return Trajectory(positions, frame_period, tuple(names))
