"""Path-shape metrics: curvature, straightness, and hysteresis of wrist paths.

A reaching round trip is summarized by four scalars: total path length, the
outbound chord length, the largest distance of either half from its own chord
line, and the area enclosed between outbound and return (projected onto the
dominant plane of the points). A straight interpolation scores zero deviation
and zero area; human-like reaching bows away from the chord and encloses a
visible loop.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .kinematics import Trajectory

# distances below these are floating-point residue, reported as exact zeros
DEVIATION_FLOOR = 1e-9
AREA_FLOOR = 1e-12


@dataclass(frozen=True)
class PathMetrics:
    path_length: float
    chord_length: float
    max_chord_deviation: float
    hysteresis_area: float

    def __post_init__(self):
        vals = (self.path_length, self.chord_length, self.max_chord_deviation, self.hysteresis_area)
        if not all(np.isfinite(v) and v >= 0.0 for v in vals):
            raise ValueError(f"metrics must be finite and non-negative, got {vals}")
        if self.path_length < self.chord_length - 1e-12:
            raise ValueError("path_length cannot be shorter than its chord")


def _points(traj: Trajectory):
    if traj.joints != 1:
        raise ValueError(f"expected a single-joint trajectory, got {traj.joints} joints")
    return traj.positions[:, 0, :]


def _line_deviation(pts):
    """Largest distance from pts to the line through their first and last point.

    Falls back to the distance from the first point when the two coincide.
    """
    chord = pts[-1] - pts[0]
    length = float(np.linalg.norm(chord))
    rel = pts - pts[0]
    if length > 0.0:
        u = chord / length
        return float(np.linalg.norm(rel - np.outer(rel @ u, u), axis=1).max())
    return float(np.linalg.norm(rel, axis=1).max())


def path_metrics(traj: Trajectory, split_frame: int) -> PathMetrics:
    """Measure one round trip; split_frame marks the outbound/return boundary.

    The deviation is the larger of the two halves' deviations, each measured
    against the line through that half's own endpoints, so a path built from
    straight outbound and return segments scores exactly zero even when it
    does not close on its start. The hysteresis area is the absolute shoelace
    area of the point sequence closed back to its start, projected onto the
    plane of the two dominant principal directions of the centered points.
    """
    pts = _points(traj)
    n = pts.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 frames, got {n}")
    split = int(split_frame)
    if not 1 <= split <= n - 2:
        raise ValueError(f"split_frame {split} not interior to 0..{n - 1}")

    path_length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    chord_length = float(np.linalg.norm(pts[split] - pts[0]))
    dev = max(_line_deviation(pts[: split + 1]), _line_deviation(pts[split:]))
    if dev < DEVIATION_FLOOR:
        dev = 0.0

    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    xy = centered @ vt[:2].T
    x, y = xy[:, 0], xy[:, 1]
    area = 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    if area < AREA_FLOOR:
        area = 0.0

    return PathMetrics(path_length, chord_length, dev, area)


def apex_frame(traj: Trajectory) -> int:
    """Frame farthest from the start, clamped to the interior: the turn point."""
    pts = _points(traj)
    if pts.shape[0] < 3:
        raise ValueError(f"need at least 3 frames, got {pts.shape[0]}")
    apex = int(np.argmax(np.linalg.norm(pts - pts[0], axis=1)))
    return min(max(apex, 1), pts.shape[0] - 2)


def compare_runs(
    gnn: Trajectory,
    joint_baseline: Trajectory,
    task_baseline: Trajectory,
    endpoint_tol: float = 0.02,
):
    """Metric rows for a learned path and its two classical replays.

    All three must share start and end points within endpoint_tol. Each is
    split at its own apex. The task-space row is asserted perfectly straight.
    """
    named = (("gnn", gnn), ("joint_space", joint_baseline), ("task_space", task_baseline))
    starts = [_points(t)[0] for _, t in named]
    ends = [_points(t)[-1] for _, t in named]
    for i in range(3):
        for j in range(i + 1, 3):
            gap = max(
                float(np.linalg.norm(starts[i] - starts[j])),
                float(np.linalg.norm(ends[i] - ends[j])),
            )
            if gap > endpoint_tol:
                raise ValueError(
                    f"{named[i][0]} and {named[j][0]} endpoints differ by "
                    f"{gap:.4f} m (tolerance {endpoint_tol} m)"
                )
    rows = [(name, path_metrics(t, apex_frame(t))) for name, t in named]
    task = rows[2][1]
    if task.max_chord_deviation != 0.0:
        raise ValueError(
            f"task-space baseline is not straight: deviation {task.max_chord_deviation:.3e} m"
        )
    return rows


def write_comparison_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "path_length_m", "chord_m", "max_dev_m", "hysteresis_area_m2"])
        for name, m in rows:
            w.writerow(
                [
                    name,
                    repr(m.path_length),
                    repr(m.chord_length),
                    repr(m.max_chord_deviation),
                    repr(m.hysteresis_area),
                ]
            )


def read_comparison_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                (
                    row["name"],
                    PathMetrics(
                        float(row["path_length_m"]),
                        float(row["chord_m"]),
                        float(row["max_dev_m"]),
                        float(row["hysteresis_area_m2"]),
                    ),
                )
            )
    return rows
