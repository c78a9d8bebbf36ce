import numpy as np
import pytest

from armgen import synth
from armgen.kinematics import ArmModel


ARM = ArmModel()
LAYOUT = synth.TaskLayout()
QUIET = synth.GenParams(noise_m=0.0)


def spec_at(pos_idx, seed=7, scale=1.0):
    return synth.DemoSpec(0, LAYOUT.grid[pos_idx], seed, scale)


def test_min_jerk_boundaries_and_midpoint():
    p = synth.min_jerk([0, 0, 0], [1.0, 2.0, -1.0], 11)
    assert np.array_equal(p[0], [0, 0, 0])
    assert np.array_equal(p[-1], [1.0, 2.0, -1.0])
    assert np.allclose(p[5], [0.5, 1.0, -0.5])  # polynomial hits 0.5 at tau=0.5
    with pytest.raises(ValueError):
        synth.min_jerk([0, 0, 0], [1, 1, 1], 1)


def test_min_jerk_endpoint_velocities_vanish():
    # closed form: first-step FD velocity is 10/(n-1)^2, peak is 15/8, so the
    # ratio is 16/(3(n-1)^2); 1e-6 needs n ~ 2300
    for n, bound in ((1000, 16 / (3 * 999**2) * 1.01), (3000, 1e-6)):
        p = synth.min_jerk([0, 0, 0], [1.0, 0.0, 0.0], n)
        v = np.diff(p[:, 0]) * (n - 1)
        assert abs(v[0]) < bound * v.max()
        assert abs(v[-1]) < bound * v.max()


def test_bowed_arc_endpoints_and_peak():
    p0, p1 = np.array([0.35, 0.0, 0.0]), np.array([0.10, 0.0, 0.45])
    arc = synth.bowed_arc(p0, p1, 201, 0.05)
    assert np.allclose(arc[0], p0, atol=1e-12)
    assert np.allclose(arc[-1], p1, atol=1e-12)
    chord = p1 - p0
    u = chord / np.linalg.norm(chord)
    rel = arc - p0
    off = rel - np.outer(rel @ u, u)
    peak = np.linalg.norm(off, axis=1).max()
    assert peak == pytest.approx(0.05, abs=1e-4)
    # opposite sign bows to the other side
    arc2 = synth.bowed_arc(p0, p1, 201, -0.05)
    assert np.dot(arc2[100] - arc[100], arc[100] - synth.min_jerk(p0, p1, 201)[100]) < 0


def test_bowed_arc_offset_is_circular():
    # independent oracle: sagitta of a circle through both endpoints with peak h
    c, h, n = 1.0, 0.05, 101
    arc = synth.bowed_arc([0, 0, 0], [c, 0, 0], n, h)
    tau = np.linspace(0, 1, n)
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    r = c * c / (8 * h) + h / 2
    expected = np.sqrt(r * r - (c * (s - 0.5)) ** 2) - (r - h)
    assert np.allclose(arc[:, 2], expected, atol=1e-12)
    assert np.allclose(arc[:, 0], s * c, atol=1e-12)


def test_two_link_elbow_matches_planar_oracle():
    s = np.zeros(3)
    w = np.array([0.4, 0.0, 0.0])
    e = synth.two_link_elbow(s, w, 0.3, 0.25)
    a = (0.4**2 + 0.3**2 - 0.25**2) / (2 * 0.4)
    h = np.sqrt(0.3**2 - a * a)
    assert np.allclose(e, [a, 0.0, -h], atol=1e-12)  # elbow-down branch
    assert np.linalg.norm(e - s) == pytest.approx(0.3)
    assert np.linalg.norm(w - e) == pytest.approx(0.25)


def test_two_link_elbow_rejects_unreachable():
    with pytest.raises(ValueError):
        synth.two_link_elbow(np.zeros(3), np.array([0.6, 0, 0]), 0.3, 0.25)
    with pytest.raises(ValueError):
        synth.two_link_elbow(np.zeros(3), np.array([0.01, 0, 0]), 0.3, 0.25)


def test_demo_reaches_bottle_exactly_without_noise():
    for pos_idx in range(6):
        traj = synth.synth_demo(spec_at(pos_idx), LAYOUT, ARM, QUIET)
        assert traj.frames == 150
        wrist29 = traj.positions[29, 2] - ARM.shoulder_origin
        assert np.allclose(wrist29, LAYOUT.grid[pos_idx], atol=1e-12)
        # hold phase pins the wrist to the mouth
        assert np.allclose(traj.positions[75:90, 2], LAYOUT.mouth_point, atol=1e-12)


def test_demo_segment_lengths_constant():
    traj = synth.synth_demo(spec_at(3, seed=11, scale=1.15), LAYOUT, ARM)
    d = np.linalg.norm(np.diff(traj.positions, axis=1), axis=2)
    assert np.allclose(d, [0.30, 0.25, 0.08], atol=1e-9)
    assert np.all(np.isfinite(traj.positions))


def test_demo_seed_variation_bounded():
    worst = 0.0
    for pos_idx in (0, 2, 5):
        a = synth.synth_demo(spec_at(pos_idx, seed=1), LAYOUT, ARM)
        b = synth.synth_demo(spec_at(pos_idx, seed=2), LAYOUT, ARM)
        diff = np.abs(a.positions - b.positions).max()
        assert diff > 0.0
        worst = max(worst, diff)
    assert worst <= 0.02


def test_demo_hysteresis_area_in_vertical_plane():
    # zero-noise demos must enclose area between lift and return legs when
    # projected onto the vertical plane through bottle and mouth
    for pos_idx in (0, 4):
        traj = synth.synth_demo(spec_at(pos_idx), LAYOUT, ARM, QUIET)
        wrist = traj.positions[30:, 2] - ARM.shoulder_origin
        chord = LAYOUT.mouth_point - LAYOUT.grid[pos_idx]
        e1 = np.array([chord[0], chord[1], 0.0])
        e1 /= np.linalg.norm(e1)
        x = wrist @ e1
        z = wrist[:, 2]
        area = 0.5 * abs(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))
        assert area > 1e-3


def test_demo_rejects_bottle_outside_grid():
    bad = synth.DemoSpec(0, np.array([1.0, 0.0, 0.0]), 1)
    with pytest.raises(ValueError):
        synth.synth_demo(bad, LAYOUT, ARM)


def test_demo_deterministic():
    a = synth.synth_demo(spec_at(1, seed=9), LAYOUT, ARM)
    b = synth.synth_demo(spec_at(1, seed=9), LAYOUT, ARM)
    assert np.array_equal(a.positions, b.positions)


def test_corpus_shape_and_order():
    corpus = synth.synth_corpus(LAYOUT, ARM, participants=2, demos_per_position=2, seed=3)
    assert len(corpus) == 2 * 6 * 2
    for spec, pos_idx, traj in corpus:
        assert traj.positions.shape == (150, 4, 3)
        assert np.array_equal(spec.bottle_position, LAYOUT.grid[pos_idx])
        assert 0.85 <= spec.scale_factor <= 1.15
    # participant-major, then position, then demo
    assert [c[0].participant_id for c in corpus[:12]] == [0] * 12
    assert [c[1] for c in corpus[:6]] == [0, 0, 1, 1, 2, 2]


def test_corpus_full_size():
    corpus = synth.synth_corpus(LAYOUT, ARM, participants=5, demos_per_position=10, seed=0)
    assert len(corpus) == 300


def test_corpus_deterministic_given_seed():
    a = synth.synth_corpus(LAYOUT, ARM, participants=1, demos_per_position=1, seed=5)
    b = synth.synth_corpus(LAYOUT, ARM, participants=1, demos_per_position=1, seed=5)
    for (_, _, ta), (_, _, tb) in zip(a, b):
        assert np.array_equal(ta.positions, tb.positions)


def test_make_pairs_windows_and_recentering():
    shifted = ArmModel(shoulder_origin=np.array([1.0, 2.0, 3.0]))
    traj = synth.synth_demo(spec_at(0), LAYOUT, shifted, QUIET)
    pairs = synth.make_pairs([traj], 30, 30, 4, [0])
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.input.frames == 30
    assert pair.label.frames == 120
    assert pair.position_index == 0
    # shoulder moved back to the origin
    assert np.allclose(pair.input.positions[0, 0], [0, 0, 0], atol=1e-12)
    rejoined = np.concatenate([pair.input.positions, pair.label.positions])
    assert np.allclose(rejoined, traj.positions - traj.positions[0, 0], atol=1e-12)


def test_make_pairs_rejects_wrong_length():
    traj = synth.synth_demo(spec_at(0), LAYOUT, ARM, QUIET)
    short = synth.Trajectory(traj.positions[:149], traj.frame_period)
    with pytest.raises(ValueError):
        synth.make_pairs([short], 30, 30, 4)


def test_split_corpus_counts_and_errors():
    corpus = synth.synth_corpus(LAYOUT, ARM, participants=5, demos_per_position=10, seed=1)
    pairs = synth.make_pairs([c[2] for c in corpus], 30, 30, 4, [c[1] for c in corpus])
    train, test = synth.split_corpus(pairs, {4})
    assert len(train) == 250
    assert len(test) == 50
    assert all(p.position_index == 4 for p in test)
    assert all(p.position_index != 4 for p in train)
    with pytest.raises(ValueError):
        synth.split_corpus(pairs, set())
    with pytest.raises(ValueError):
        synth.split_corpus(pairs, set(range(6)))
    with pytest.raises(ValueError):
        synth.split_corpus(pairs, {99})


def test_corpus_disk_roundtrip(tmp_path):
    corpus = synth.synth_corpus(LAYOUT, ARM, participants=1, demos_per_position=2, seed=2)
    synth.write_corpus(corpus, tmp_path)
    trajs, positions = synth.read_corpus(tmp_path, corpus[0][2].frame_period)
    assert positions == [c[1] for c in corpus]
    for traj, (_, _, orig) in zip(trajs, corpus):
        assert np.array_equal(traj.positions, orig.positions)
    manifest = (tmp_path / "manifest.json").read_text()
    assert '"participant"' in manifest and '"file"' in manifest
