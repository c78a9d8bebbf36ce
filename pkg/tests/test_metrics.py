"""Path metric tests: analytic areas, invariances, and comparison rules."""

import numpy as np
import pytest

from armgen.kinematics import Trajectory
from armgen.metrics import (
    PathMetrics,
    apex_frame,
    compare_runs,
    path_metrics,
    read_comparison_csv,
    write_comparison_csv,
)


def wrap(pts, period=0.05):
    pts = np.asarray(pts, dtype=np.float64)
    return Trajectory(pts[:, None, :], period, ("wrist",))


def line(p0, p1, n):
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    return p0 + np.outer(np.linspace(0.0, 1.0, n), p1 - p0)


def shoelace2d(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def test_straight_line_scores_zero():
    traj = wrap(line([0, 0, 0], [0.6, 0.8, 0.0], 100))
    m = path_metrics(traj, 50)
    assert m.max_chord_deviation == 0.0
    assert m.hysteresis_area == 0.0
    assert m.path_length == pytest.approx(1.0, abs=1e-12)
    assert m.chord_length == pytest.approx(np.linalg.norm([0.6, 0.8]) * 50 / 99, rel=1e-12)


def test_unit_chord_length_at_any_density():
    for n in (3, 17, 1000):
        traj = wrap(line([0.2, -0.1, 0.3], [0.2 + 1.0, -0.1, 0.3], n))
        assert path_metrics(traj, 1).path_length == pytest.approx(1.0, abs=1e-12)


def test_semicircle_hysteresis_area():
    theta = np.linspace(0.0, np.pi, 1000)
    out = np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], axis=1)
    back = line([-1, 0, 0], [1, 0, 0], 500)
    traj = wrap(np.vstack([out, back]))
    m = path_metrics(traj, 999)
    assert abs(m.hysteresis_area - np.pi / 2) / (np.pi / 2) < 0.01
    # farthest point of the arc from the diameter line
    assert m.max_chord_deviation == pytest.approx(1.0, abs=1e-5)
    assert m.chord_length == pytest.approx(2.0, abs=1e-12)


def test_full_circle_area():
    theta = np.linspace(0.0, 2 * np.pi, 2000)
    r = 0.5
    pts = np.stack([r * np.cos(theta), r * np.sin(theta), np.full_like(theta, 0.3)], axis=1)
    m = path_metrics(wrap(pts), 1000)
    assert abs(m.hysteresis_area - np.pi * r * r) / (np.pi * r * r) < 0.01


def test_tilted_plane_area_matches_2d_shoelace():
    rng = np.random.default_rng(8)
    xy = rng.uniform(-0.2, 0.2, size=(40, 2))
    expected = shoelace2d(xy)
    # embed the polygon in a tilted plane through an offset point
    e1 = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    e2 = np.array([-1.0, 1.0, 3.0]) / np.sqrt(11)
    pts = np.array([0.3, -0.2, 0.5]) + np.outer(xy[:, 0], e1) + np.outer(xy[:, 1], e2)
    m = path_metrics(wrap(pts), 20)
    assert m.hysteresis_area == pytest.approx(expected, rel=1e-9)


def test_metrics_rigid_motion_invariant():
    rng = np.random.default_rng(4)
    pts = np.cumsum(rng.normal(scale=0.02, size=(60, 3)), axis=0)
    base = path_metrics(wrap(pts), 30)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    moved = pts @ q.T + np.array([1.0, -2.0, 0.5])
    m = path_metrics(wrap(moved), 30)
    assert m.path_length == pytest.approx(base.path_length, rel=1e-9)
    assert m.chord_length == pytest.approx(base.chord_length, rel=1e-9)
    assert m.max_chord_deviation == pytest.approx(base.max_chord_deviation, rel=1e-9)
    assert m.hysteresis_area == pytest.approx(base.hysteresis_area, rel=1e-9)


def test_metrics_scaling_laws():
    rng = np.random.default_rng(9)
    pts = np.cumsum(rng.normal(scale=0.05, size=(50, 3)), axis=0)
    base = path_metrics(wrap(pts), 25)
    s = 2.5
    m = path_metrics(wrap(pts * s), 25)
    assert m.path_length == pytest.approx(s * base.path_length, rel=1e-9)
    assert m.chord_length == pytest.approx(s * base.chord_length, rel=1e-9)
    assert m.max_chord_deviation == pytest.approx(s * base.max_chord_deviation, rel=1e-9)
    assert m.hysteresis_area == pytest.approx(s * s * base.hysteresis_area, rel=1e-9)


def test_degenerate_chord_falls_back_to_point_distance():
    # outbound half returns to its start, so its chord is a point; the
    # deviation of that half is the farthest excursion from it
    pts = np.array([[0, 0, 0], [1, 0.5, 0], [0, 0, 0], [0.5, -2.0, 0]], dtype=float)
    m = path_metrics(wrap(pts), 2)
    assert m.chord_length == 0.0
    assert m.max_chord_deviation == pytest.approx(np.linalg.norm([1, 0.5]))


def test_unclosed_two_leg_path_scores_zero_deviation():
    # straight out to an apex, straight back to a different end point:
    # both halves sit on their own chords, so deviation is exactly zero
    out = line([0.1, 0, 0], [0.4, 0.1, 0.45], 40)
    back = line([0.4, 0.1, 0.45], [0.13, 0.02, 0.01], 40)
    pts = np.vstack([out, back[1:]])
    m = path_metrics(wrap(pts), 39)
    assert m.max_chord_deviation == 0.0
    assert m.hysteresis_area > 0.0


def test_path_metrics_validation():
    with pytest.raises(ValueError):
        path_metrics(wrap([[0, 0, 0], [1, 0, 0]]), 1)
    traj = wrap(line([0, 0, 0], [1, 0, 0], 10))
    for bad in (0, 9, -1):
        with pytest.raises(ValueError):
            path_metrics(traj, bad)
    multi = Trajectory(np.zeros((5, 2, 3)), 0.05, ("a", "b"))
    with pytest.raises(ValueError):
        path_metrics(multi, 2)


def test_apex_frame_finds_turn_point():
    out = line([0, 0, 0], [0, 0, 1.0], 20)
    back = line([0, 0, 1.0], [0, 0, 0], 30)[1:]
    assert apex_frame(wrap(np.vstack([out, back]))) == 19
    # one-way path: farthest point is the last frame, clamped interior
    assert apex_frame(wrap(out)) == 18


def test_compare_runs_on_round_trips():
    t = np.linspace(0.0, np.pi, 60)
    apex = np.array([0.0, 0.0, 0.5])
    # learned-style loop: bowed outbound, differently bowed return
    out = np.stack([0.2 * np.sin(t), np.zeros_like(t), 0.25 - 0.25 * np.cos(t)], axis=1)
    back = np.stack([0.1 * np.sin(t), np.zeros_like(t), 0.25 + 0.25 * np.cos(t)], axis=1)[1:]
    gnn = wrap(np.vstack([out, back]))
    joint = wrap(np.vstack([out, out[::-1][1:]]))
    task = wrap(np.vstack([line([0, 0, 0], apex, 40), line(apex, [0, 0, 0], 40)[1:]]))
    rows = compare_runs(gnn, joint, task)
    assert [name for name, _ in rows] == ["gnn", "joint_space", "task_space"]
    by = dict(rows)
    assert by["gnn"].hysteresis_area > 1e-4
    assert by["gnn"].max_chord_deviation > 0.01
    assert by["joint_space"].max_chord_deviation > 0.01
    assert by["task_space"].max_chord_deviation == 0.0
    assert by["task_space"].hysteresis_area == 0.0


def test_compare_runs_identical_straight_lines():
    traj = wrap(line([0, 0, 0], [0.3, 0.2, 0.1], 25))
    rows = compare_runs(traj, traj, traj)
    for _, m in rows:
        assert m == rows[0][1]
        assert m.max_chord_deviation == 0.0


def test_compare_runs_rejects_endpoint_mismatch():
    a = wrap(line([0, 0, 0], [0.4, 0, 0], 20))
    b = wrap(line([0, 0.03, 0], [0.4, 0, 0], 20))
    with pytest.raises(ValueError):
        compare_runs(a, b, a)


def test_metrics_validation():
    with pytest.raises(ValueError):
        PathMetrics(1.0, 2.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        PathMetrics(1.0, 0.5, -0.1, 0.0)


def test_comparison_csv_roundtrip(tmp_path):
    rows = [
        ("gnn", PathMetrics(1.25, 0.5, 0.08, 0.003)),
        ("task_space", PathMetrics(1.0, 0.5, 0.0, 0.0)),
    ]
    path = tmp_path / "compare.csv"
    write_comparison_csv(rows, path)
    assert read_comparison_csv(path) == rows
    header = path.read_text().splitlines()[0]
    assert header == "name,path_length_m,chord_m,max_dev_m,hysteresis_area_m2"
