"""Six-joint robot mapping: workspace scaling, DH kinematics, IK baselines.

The generated human wrist path is scaled per axis into the robot's
end-effector box. Two classical replays of the same endpoints serve as
comparison baselines: joint-space interpolation (damped-least-squares IK at
the endpoints, per-joint trapezoidal profiles time-scaled to the slowest
joint) and the straight task-space line.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kinematics import Trajectory

# editable defaults for a UR5e-class arm: rows of (a, d, alpha), standard DH
DEFAULT_DH = (
    (0.0, 0.1625, np.pi / 2),
    (-0.425, 0.0, 0.0),
    (-0.3922, 0.0, 0.0),
    (0.0, 0.1333, np.pi / 2),
    (0.0, 0.0997, -np.pi / 2),
    (0.0, 0.0996, 0.0),
)
DEFAULT_LIMITS = tuple((-2.0 * np.pi, 2.0 * np.pi) for _ in range(6))
DEFAULT_ROBOT_BOX = ((0.30, 0.55), (-0.20, 0.20), (0.15, 0.50))
DEFAULT_HUMAN_BOX = ((0.05, 0.55), (-0.20, 0.20), (-0.05, 0.50))
HOME_Q = (0.0, -np.pi / 2, np.pi / 2, -np.pi / 2, -np.pi / 2, 0.0)


@dataclass
class RobotConfig:
    dh: tuple = DEFAULT_DH
    joint_limits: tuple = DEFAULT_LIMITS
    workspace_box: tuple = DEFAULT_ROBOT_BOX

    def __post_init__(self):
        self.dh = tuple(tuple(float(v) for v in row) for row in self.dh)
        self.joint_limits = tuple(tuple(float(v) for v in lim) for lim in self.joint_limits)
        self.workspace_box = tuple(tuple(float(v) for v in ax) for ax in self.workspace_box)
        if len(self.dh) != 6 or any(len(r) != 3 for r in self.dh):
            raise ValueError("dh needs 6 rows of (a, d, alpha)")
        if len(self.joint_limits) != 6 or any(lo >= hi for lo, hi in self.joint_limits):
            raise ValueError("joint_limits need 6 (min, max) rows with min < max")
        if len(self.workspace_box) != 3 or any(lo >= hi for lo, hi in self.workspace_box):
            raise ValueError("workspace_box needs positive extent on all 3 axes")


@dataclass
class WorkspaceMap:
    human_box: tuple = DEFAULT_HUMAN_BOX
    robot_box: tuple = DEFAULT_ROBOT_BOX

    def __post_init__(self):
        self.human_box = tuple(tuple(float(v) for v in ax) for ax in self.human_box)
        self.robot_box = tuple(tuple(float(v) for v in ax) for ax in self.robot_box)
        for box in (self.human_box, self.robot_box):
            if len(box) != 3 or any(hi <= lo for lo, hi in box):
                raise ValueError("boxes need positive extent per axis")
        h = np.array(self.human_box)
        r = np.array(self.robot_box)
        self.scale = (r[:, 1] - r[:, 0]) / (h[:, 1] - h[:, 0])
        self.offset = r[:, 0] - self.scale * h[:, 0]
        if not np.all(np.isfinite(self.scale)) or np.any(self.scale == 0.0):
            raise ValueError("degenerate workspace scaling")

    def apply(self, points):
        return np.asarray(points, dtype=np.float64) * self.scale + self.offset


@dataclass
class JointTrajectory:
    """Joint angles over time, radians: q[frame, joint]."""

    q: np.ndarray
    frame_period: float

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.q.ndim != 2 or self.q.shape[1] != 6:
            raise ValueError(f"q must be (frames, 6), got {self.q.shape}")
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")

    @property
    def frames(self):
        return self.q.shape[0]


class IkError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e} m)")
        self.residual = residual


def map_workspace(wrist: Trajectory, m: WorkspaceMap, clamp_tol: float = 0.01) -> Trajectory:
    """Per-axis affine map of a single-joint trajectory into the robot box.

    Points up to clamp_tol outside the human box are clamped with a warning;
    anything further out is an error.
    """
    if wrist.joints != 1:
        raise ValueError(f"expected a single-joint trajectory, got {wrist.joints} joints")
    pts = wrist.positions[:, 0, :]
    h = np.array(m.human_box)
    lo, hi = h[:, 0], h[:, 1]
    under = lo - pts.min(axis=0)
    over = pts.max(axis=0) - hi
    worst = float(np.max(np.concatenate([under, over])))
    if worst > clamp_tol:
        raise ValueError(f"wrist leaves the human box by {worst:.4f} m (tolerance {clamp_tol} m)")
    if worst > 0.0:
        warnings.warn(f"wrist leaves the human box by {worst:.4f} m; clamping", stacklevel=2)
        pts = np.clip(pts, lo, hi)
    mapped = m.apply(pts)
    return Trajectory(mapped[:, None, :], wrist.frame_period, wrist.joint_names)


def _dh_transform(theta, a, d, alpha):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def fk6(q, cfg: RobotConfig):
    """End-effector (position, rotation) from the standard DH chain."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (6,):
        raise ValueError(f"q must be 6 joint angles, got {q.shape}")
    for i, (angle, (lo, hi)) in enumerate(zip(q, cfg.joint_limits)):
        if not lo <= angle <= hi:
            raise ValueError(f"joint {i + 1} angle {angle:.4f} outside [{lo:.4f}, {hi:.4f}]")
    t = np.eye(4)
    for angle, (a, d, alpha) in zip(q, cfg.dh):
        t = t @ _dh_transform(angle, a, d, alpha)
    return t[:3, 3].copy(), t[:3, :3].copy()


def _position(q, cfg):
    t = np.eye(4)
    for angle, (a, d, alpha) in zip(q, cfg.dh):
        t = t @ _dh_transform(angle, a, d, alpha)
    return t[:3, 3]


def ik_dls(
    target,
    seed_q,
    cfg: RobotConfig,
    damping: float = 0.05,
    tol: float = 1e-8,
    max_iter: int = 200,
    jac_step: float = 1e-6,
):
    """Position-only damped-least-squares IK with a numeric Jacobian.

    Iterates q += J^T (J J^T + damping^2 I)^-1 error until the end effector is
    within tol of target; raises IkError with the final residual otherwise.
    """
    target = np.asarray(target, dtype=np.float64)
    q = np.asarray(seed_q, dtype=np.float64).copy()
    err = target - _position(q, cfg)
    for _ in range(max_iter):
        if np.linalg.norm(err) < tol:
            break
        jac = np.empty((3, 6))
        for j in range(6):
            bumped = q.copy()
            bumped[j] += jac_step
            hi = _position(bumped, cfg)
            bumped[j] -= 2.0 * jac_step
            lo = _position(bumped, cfg)
            jac[:, j] = (hi - lo) / (2.0 * jac_step)
        gain = jac @ jac.T + damping * damping * np.eye(3)
        q = q + jac.T @ np.linalg.solve(gain, err)
        err = target - _position(q, cfg)
    residual = float(np.linalg.norm(err))
    if residual >= tol:
        raise IkError("inverse kinematics did not converge", residual)
    limits = np.array(cfg.joint_limits)
    # q and q +/- 2pi are the same pose; report the branch nearest the limit centers
    q = _wrap_near(q, limits.mean(axis=1))
    if np.any(q < limits[:, 0]) or np.any(q > limits[:, 1]):
        raise IkError("converged outside joint limits", residual)
    return q


def trapezoid(q0: float, q1: float, vmax: float, amax: float, dt: float):
    """Sample an accelerate/cruise/decelerate move; returns (times, positions).

    Falls back to the triangular profile for short moves. The grid step is
    shrunk to duration/ceil(duration/dt) so the final sample lands exactly on
    q1 at the true end time.
    """
    if min(vmax, amax, dt) <= 0:
        raise ValueError("vmax, amax, dt must all be positive")
    dist = abs(q1 - q0)
    if dist == 0.0:
        return np.zeros(1), np.full(1, float(q0))
    sign = 1.0 if q1 > q0 else -1.0
    if dist < vmax * vmax / amax:
        t_acc = np.sqrt(dist / amax)
        t_cruise = 0.0
        peak = amax * t_acc
    else:
        t_acc = vmax / amax
        t_cruise = (dist - vmax * vmax / amax) / vmax
        peak = vmax
    duration = 2.0 * t_acc + t_cruise
    steps = max(1, int(np.ceil(duration / dt - 1e-12)))
    times = np.linspace(0.0, duration, steps + 1)
    pos = np.empty_like(times)
    for i, t in enumerate(times):
        if t <= t_acc:
            s = 0.5 * amax * t * t
        elif t <= t_acc + t_cruise:
            s = 0.5 * amax * t_acc * t_acc + peak * (t - t_acc)
        else:
            td = duration - t
            s = dist - 0.5 * amax * td * td
        pos[i] = q0 + sign * s
    pos[-1] = q1
    return times, pos


def _wrap_near(q, ref):
    """Shift each joint by whole turns to land nearest the reference angles."""
    return q - 2.0 * np.pi * np.round((q - ref) / (2.0 * np.pi))


def joint_space_baseline(
    start_p,
    end_p,
    cfg: RobotConfig,
    vmax: float = 1.0,
    amax: float = 2.0,
    dt: float = 0.05,
    seed_q=HOME_Q,
):
    """IK both endpoints, run per-joint trapezoids stretched to the slowest joint.

    Returns (JointTrajectory, end-effector Trajectory recovered by fk6).
    """
    q_start = ik_dls(start_p, seed_q, cfg)
    q_end = ik_dls(end_p, q_start, cfg)
    q_end = _wrap_near(q_end, q_start)
    profiles = [trapezoid(q_start[j], q_end[j], vmax, amax, dt) for j in range(6)]
    durations = np.array([p[0][-1] for p in profiles])
    t_total = float(durations.max())
    if t_total == 0.0:
        q = np.tile(q_start, (2, 1))
        ee = np.tile(start_p, (2, 1, 1)).reshape(2, 1, 3)
        return JointTrajectory(q, dt), Trajectory(ee, dt, ("ee",))
    steps = max(1, int(np.ceil(t_total / dt - 1e-12)))
    grid = np.linspace(0.0, t_total, steps + 1)
    q = np.empty((steps + 1, 6))
    for j, (times, pos) in enumerate(profiles):
        # time-dilate joint j's own profile to fill the shared duration
        q[:, j] = np.interp(grid * (durations[j] / t_total), times, pos)
    ee = np.stack([_position(qi, cfg) for qi in q])
    period = t_total / steps
    return JointTrajectory(q, period), Trajectory(ee[:, None, :], period, ("ee",))


def task_space_baseline(start_p, end_p, n: int, frame_period: float = 0.05) -> Trajectory:
    """The classic straight line: n collinear samples from start to end."""
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    start_p = np.asarray(start_p, dtype=np.float64)
    end_p = np.asarray(end_p, dtype=np.float64)
    pts = start_p + np.outer(np.linspace(0.0, 1.0, n), end_p - start_p)
    return Trajectory(pts[:, None, :], frame_period, ("ee",))


# ---------------------------------------------------------------------------
# configuration and joint-trajectory files


def write_robot_config(cfg: RobotConfig, path):
    blob = {
        "dh": [list(r) for r in cfg.dh],
        "joint_limits": [list(r) for r in cfg.joint_limits],
        "workspace_box": [list(r) for r in cfg.workspace_box],
    }
    with open(path, "w") as fh:
        json.dump(blob, fh, indent=2)
        fh.write("\n")


def read_robot_config(path) -> RobotConfig:
    with open(path) as fh:
        blob = json.load(fh)
    return RobotConfig(blob["dh"], blob["joint_limits"], blob["workspace_box"])


def write_joint_csv(traj: JointTrajectory, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "q1", "q2", "q3", "q4", "q5", "q6"])
        for f in range(traj.frames):
            w.writerow([f, *(repr(float(v)) for v in traj.q[f])])


def read_joint_csv(path, frame_period: float = 0.05) -> JointTrajectory:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append([float(row[f"q{j}"]) for j in range(1, 7)])
    if not rows:
        raise ValueError(f"no samples in {path}")
    return JointTrajectory(np.array(rows), frame_period)
