"""Synthetic drinking-demonstration corpus and training-pair windowing.

Each demo is a 150-frame wrist path (reach to a bottle on a desk grid, lift
to the mouth along a bowed arc, hold, return along an oppositely bowed arc)
with elbow and hand joints reconstructed by a fixed two-link model. The bow
lies in the vertical plane through bottle and mouth so the outbound and
return legs enclose area there, giving every demo visible hysteresis.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kinematics import ArmModel, Trajectory, read_trajectory_csv, write_trajectory_csv

GRID_XS = (0.35, 0.50)
GRID_YS = (-0.15, 0.0, 0.15)
DESK_Z = 0.0


def default_grid():
    return np.array([[x, y, DESK_Z] for x in GRID_XS for y in GRID_YS])


@dataclass
class TaskLayout:
    """Bottle grid on the desk plane plus mouth and rest points, shoulder frame."""

    grid: np.ndarray = field(default_factory=default_grid)
    mouth_point: np.ndarray = field(default_factory=lambda: np.array([0.10, 0.0, 0.45]))
    rest_point: np.ndarray = field(default_factory=lambda: np.array([0.20, 0.0, 0.0]))

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.mouth_point = np.asarray(self.mouth_point, dtype=np.float64)
        self.rest_point = np.asarray(self.rest_point, dtype=np.float64)
        if self.grid.shape != (6, 3):
            raise ValueError(f"grid must be 6 positions x 3 coords, got {self.grid.shape}")
        if len({tuple(p) for p in self.grid}) != 6:
            raise ValueError("grid positions must be distinct")
        if not np.all(self.grid[:, 2] == self.grid[0, 2]):
            raise ValueError("grid positions must share one desk height")


@dataclass
class DemoSpec:
    participant_id: int
    bottle_position: np.ndarray
    noise_seed: int
    scale_factor: float = 1.0

    def __post_init__(self):
        self.bottle_position = np.asarray(self.bottle_position, dtype=np.float64)
        if not 0.85 <= self.scale_factor <= 1.15:
            raise ValueError(f"scale_factor {self.scale_factor} outside [0.85, 1.15]")


@dataclass
class GenParams:
    """Generator constants; frame counts sum to the 30 + 120 window layout."""

    reach_frames: int = 30
    lift_frames: int = 45
    hold_frames: int = 15
    return_frames: int = 60
    bow_m: float = 0.05
    noise_m: float = 0.01
    duration_s: float = 6.0

    @property
    def total_frames(self):
        return self.reach_frames + self.lift_frames + self.hold_frames + self.return_frames


@dataclass
class TrainingPair:
    """Input window and self-supervised label cut from one demo, shoulder-centered."""

    input: Trajectory
    label: Trajectory
    position_index: int | None = None

    def __post_init__(self):
        if self.input.joints != self.label.joints:
            raise ValueError("input and label must share the joint count")


def min_jerk(s0, s1, n: int) -> np.ndarray:
    """Straight-line point path with the classic smooth position profile."""
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 frames, got {n}")
    s0 = np.asarray(s0, dtype=np.float64)
    s1 = np.asarray(s1, dtype=np.float64)
    tau = np.linspace(0.0, 1.0, n)
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    return s0 + np.outer(s, s1 - s0)


def _in_plane_up(u):
    """Unit vector perpendicular to u inside the vertical plane containing u."""
    n = np.array([0.0, 0.0, 1.0]) - u[2] * u
    if np.linalg.norm(n) < 1e-9:
        n = np.array([1.0, 0.0, 0.0]) - u[0] * u
    return n / np.linalg.norm(n)


def bowed_arc(p0, p1, n: int, bow: float) -> np.ndarray:
    """Min-jerk progress along the chord plus a circular-arc offset of peak |bow|.

    Positive bow bulges toward the in-plane vertical-ish normal, negative the
    opposite side; bow 0 degenerates to the straight min-jerk path.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    base = min_jerk(p0, p1, n)
    if bow == 0.0:
        return base
    chord = p1 - p0
    c = np.linalg.norm(chord)
    if c < 1e-9:
        raise ValueError("cannot bow a zero-length chord")
    u = chord / c
    normal = _in_plane_up(u)
    tau = np.linspace(0.0, 1.0, n)
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    h = abs(bow)
    r = c * c / (8.0 * h) + h / 2.0
    off = np.sqrt(np.maximum(r * r - (c * (s - 0.5)) ** 2, 0.0)) - (r - h)
    return base + np.sign(bow) * np.outer(off, normal)


def two_link_elbow(shoulder, wrist, l1: float, l2: float) -> np.ndarray:
    """Elbow-down branch of the planar two-link chain from shoulder to wrist."""
    shoulder = np.asarray(shoulder, dtype=np.float64)
    w = np.asarray(wrist, dtype=np.float64) - shoulder
    d = np.linalg.norm(w)
    if not abs(l1 - l2) + 1e-9 < d < l1 + l2 - 1e-9:
        raise ValueError(f"wrist distance {d:.4f} unreachable for links {l1}, {l2}")
    u = w / d
    axis = np.cross(u, [0.0, 0.0, 1.0])
    if np.linalg.norm(axis) < 1e-9:
        axis = np.cross(u, [1.0, 0.0, 0.0])
    axis = axis / np.linalg.norm(axis)
    perp = np.cross(axis, u)
    a = (d * d + l1 * l1 - l2 * l2) / (2.0 * d)
    h = np.sqrt(max(l1 * l1 - a * a, 0.0))
    return shoulder + a * u - h * perp


def synth_demo(spec: DemoSpec, layout: TaskLayout, arm: ArmModel, gen: GenParams = None) -> Trajectory:
    """One 150-frame demo: reach, bowed lift, hold at mouth, oppositely bowed return."""
    gen = gen or GenParams()
    lo = layout.grid.min(axis=0) - 1e-9
    hi = layout.grid.max(axis=0) + 1e-9
    if np.any(spec.bottle_position < lo) or np.any(spec.bottle_position > hi):
        raise ValueError(f"bottle {spec.bottle_position} outside grid box")
    bottle = spec.bottle_position
    mouth = layout.mouth_point
    bow = gen.bow_m * spec.scale_factor
    wrist = np.concatenate(
        [
            min_jerk(layout.rest_point, bottle, gen.reach_frames),
            bowed_arc(bottle, mouth, gen.lift_frames, +bow),
            np.tile(mouth, (gen.hold_frames, 1)),
            bowed_arc(mouth, bottle, gen.return_frames, -bow),
        ]
    )
    n = gen.total_frames
    rng = np.random.default_rng(spec.noise_seed)
    tau = np.linspace(0.0, 1.0, n)
    for axis in range(3):
        amp = rng.uniform(0.0, gen.noise_m)
        cycles = rng.uniform(0.5, 2.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wrist[:, axis] += amp * np.sin(2.0 * np.pi * cycles * tau + phase)
    l1, l2, l3 = arm.segment_lengths
    positions = np.empty((n, 4, 3))
    positions[:, 0] = arm.shoulder_origin
    positions[:, 2] = arm.shoulder_origin + wrist
    for f in range(n):
        elbow = two_link_elbow(arm.shoulder_origin, positions[f, 2], l1, l2)
        positions[f, 1] = elbow
        fore = positions[f, 2] - elbow
        positions[f, 3] = positions[f, 2] + l3 * fore / np.linalg.norm(fore)
    return Trajectory(positions, gen.duration_s / (n - 1))


def synth_corpus(
    layout: TaskLayout,
    arm: ArmModel,
    participants: int = 5,
    demos_per_position: int = 10,
    seed: int = 0,
    gen: GenParams = None,
):
    """Full corpus ordered by (participant, position, demo). Returns (spec, index, traj) triples."""
    gen = gen or GenParams()
    scale_rng = np.random.default_rng(np.random.SeedSequence([seed]))
    scales = scale_rng.uniform(0.85, 1.15, participants)
    out = []
    for p in range(participants):
        for pos_idx in range(len(layout.grid)):
            for d in range(demos_per_position):
                child = np.random.SeedSequence([seed, p, pos_idx, d]).generate_state(1)[0]
                spec = DemoSpec(p, layout.grid[pos_idx], int(child), float(scales[p]))
                out.append((spec, pos_idx, synth_demo(spec, layout, arm, gen)))
    return out


def make_pairs(corpus, t_in: int, k_out: int, rollouts: int, position_indices=None):
    """Cut each demo into (first t_in frames, remaining rollouts*k_out frames).

    Coordinates are re-centered at the shoulder position of frame 0 so the
    model always sees a shoulder-origin frame.
    """
    need = t_in + rollouts * k_out
    if position_indices is None:
        position_indices = [None] * len(corpus)
    if len(position_indices) != len(corpus):
        raise ValueError("one position index per trajectory required")
    pairs = []
    for traj, pos_idx in zip(corpus, position_indices):
        if traj.frames != need:
            raise ValueError(f"trajectory has {traj.frames} frames, expected {need}")
        centered = traj.positions - traj.positions[0, 0]
        pairs.append(
            TrainingPair(
                Trajectory(centered[:t_in], traj.frame_period, traj.joint_names),
                Trajectory(centered[t_in:], traj.frame_period, traj.joint_names),
                pos_idx,
            )
        )
    return pairs


def split_corpus(pairs, held_out_positions):
    """Partition pairs into (train, test) by bottle-position index."""
    held = set(held_out_positions)
    if not held:
        raise ValueError("hold-out set is empty")
    present = {p.position_index for p in pairs}
    if not held < present:
        raise ValueError(f"hold-out {sorted(held)} must be a proper subset of positions {sorted(present)}")
    train = [p for p in pairs if p.position_index not in held]
    test = [p for p in pairs if p.position_index in held]
    return train, test


# ---------------------------------------------------------------------------
# corpus on disk


def write_corpus(corpus, out_dir):
    """Write demo CSVs plus the manifest listing who produced which file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    demos = []
    for i, (spec, pos_idx, traj) in enumerate(corpus):
        name = f"demo_{i:03d}.csv"
        write_trajectory_csv(traj, out_dir / name)
        demos.append(
            {
                "participant": spec.participant_id,
                "position_index": pos_idx,
                "seed": spec.noise_seed,
                "file": name,
            }
        )
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"demos": demos}, indent=2) + "\n")
    return manifest


def read_corpus(dir_path, frame_period: float):
    """Load (trajectories, position indices) in manifest order."""
    dir_path = Path(dir_path)
    meta = json.loads((dir_path / "manifest.json").read_text())
    trajs, positions = [], []
    for demo in meta["demos"]:
        trajs.append(read_trajectory_csv(dir_path / demo["file"], frame_period))
        positions.append(demo["position_index"])
    return trajs, positions
