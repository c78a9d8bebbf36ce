"""Command-line pipeline: synthesize, train, generate, map, and compare.

Each subcommand reads the layered configuration, writes its outputs and a
resolved config snapshot into --out, and is deterministic for a given seed.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .config import RunConfig
from .kinematics import Trajectory, read_trajectory_csv, write_trajectory_csv
from .metrics import apex_frame, compare_runs, path_metrics, write_comparison_csv
from .model import load_checkpoint, rollout, save_checkpoint
from .robot import (
    IkError,
    JointTrajectory,
    joint_space_baseline,
    map_workspace,
    task_space_baseline,
    write_joint_csv,
)
from .synth import make_pairs, read_corpus, split_corpus, synth_corpus, write_corpus
from .training import train, write_report_csv


def _load_config(args, extra=None):
    overrides = {"seed": getattr(args, "seed", None)}
    overrides.update(extra or {})
    return RunConfig.load(getattr(args, "config", None), overrides)


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _frame_period(cfg: RunConfig) -> float:
    c = cfg.section("corpus")
    total = c["reach_frames"] + c["lift_frames"] + c["hold_frames"] + c["return_frames"]
    return float(c["duration_s"]) / (total - 1)


def _single_joint(traj: Trajectory, preferred=("wrist", "ee")) -> Trajectory:
    """Reduce a trajectory to one joint, picking wrist/ee from multi-joint files."""
    if traj.joints == 1:
        return traj
    for name in preferred:
        if name in traj.joint_names:
            j = traj.joint_names.index(name)
            return Trajectory(traj.positions[:, j : j + 1, :], traj.frame_period, (name,))
    raise ValueError(f"no {'/'.join(preferred)} joint in columns {traj.joint_names}")


def cmd_gen_data(args):
    cfg = _load_config(
        args,
        {
            "corpus.participants": args.participants,
            "corpus.demos_per_position": args.demos_per_position,
            "corpus.noise_m": args.noise_m,
            "corpus.bow_m": args.bow_m,
        },
    )
    out = _outdir(args)
    c = cfg.section("corpus")
    corpus = synth_corpus(
        cfg.task_layout(),
        cfg.arm_model(),
        participants=int(c["participants"]),
        demos_per_position=int(c["demos_per_position"]),
        seed=cfg.seed,
        gen=cfg.gen_params(),
    )
    write_corpus(corpus, out / "corpus")
    cfg.write_snapshot(out / "config.json")
    print(f"wrote {len(corpus)} demos to {out / 'corpus'}")


def cmd_train(args):
    cfg = _load_config(
        args,
        {
            "train.epochs": args.epochs,
            "train.batch_size": args.batch_size,
            "train.learning_rate": args.learning_rate,
            "train.checkpoint_every": args.checkpoint_every,
        },
    )
    out = _outdir(args)
    trajs, positions = read_corpus(args.corpus, _frame_period(cfg))
    model_cfg = cfg.model_config()
    pairs = make_pairs(trajs, model_cfg.t_in, model_cfg.k_out, model_cfg.rollouts, positions)
    held = set(int(p) for p in cfg.section("corpus")["held_out_positions"])
    if held:
        train_pairs, test_pairs = split_corpus(pairs, held)
    else:
        train_pairs, test_pairs = pairs, None
    report, params = train(
        train_pairs,
        model_cfg,
        cfg.train_config(),
        test_pairs=test_pairs,
        out_dir=out,
        checkpoint_every=int(cfg.section("train")["checkpoint_every"]),
    )
    save_checkpoint(out / "model.json", model_cfg, params, len(report.epochs) - 1, report.train_mpjpe)
    write_report_csv(report, out / "train_report.csv")
    from .plots import save_loss_curve

    save_loss_curve(report, out / "loss_curve.png")
    cfg.write_snapshot(out / "config.json")
    held_txt = f" test {report.test_mpjpe[-1]:.4f}" if test_pairs else ""
    print(f"trained {report.epochs[-1]} epochs: train MPJPE {report.train_mpjpe[-1]:.4f}{held_txt}")


def cmd_generate(args):
    cfg = _load_config(args)
    out = _outdir(args)
    model_cfg, params, _, _ = load_checkpoint(args.checkpoint)
    traj = read_trajectory_csv(args.input, _frame_period(cfg))
    if traj.frames < model_cfg.t_in or traj.joints != model_cfg.joints:
        raise ValueError(
            f"input is {traj.frames} frames x {traj.joints} joints, model takes "
            f"{model_cfg.t_in} x {model_cfg.joints}"
        )
    window = traj.positions[: model_cfg.t_in]
    shift = window[0, 0].copy()
    x = ad.tensor(np.transpose(window - shift, (2, 0, 1))[None])
    with ad.no_grad():
        pred = rollout(x, params, model_cfg.rollouts).data[0]
    positions = np.transpose(pred, (1, 2, 0)) + shift
    gen = Trajectory(positions, traj.frame_period, traj.joint_names)
    write_trajectory_csv(gen, out / "generated.csv")
    cfg.write_snapshot(out / "config.json")
    print(f"generated {gen.frames} frames from a {model_cfg.t_in}-frame input window")


def cmd_map_robot(args):
    cfg = _load_config(args)
    out = _outdir(args)
    traj = _single_joint(read_trajectory_csv(args.input, _frame_period(cfg)))
    mapped = map_workspace(traj, cfg.workspace_map(), clamp_tol=args.clamp_m)
    robot_traj = Trajectory(mapped.positions, mapped.frame_period, ("ee",))
    write_trajectory_csv(robot_traj, out / "robot_path.csv")
    cfg.write_snapshot(out / "config.json")
    print(f"mapped {robot_traj.frames} frames into the robot workspace")


def cmd_baseline(args):
    cfg = _load_config(args, {"robot.vmax": args.vmax, "robot.amax": args.amax})
    out = _outdir(args)
    traj = _single_joint(read_trajectory_csv(args.input, _frame_period(cfg)))
    pts = traj.positions[:, 0, :]
    start, apex, end = pts[0], pts[apex_frame(traj)], pts[-1]
    robot_cfg = cfg.robot_config()
    r = cfg.section("robot")
    vmax, amax, dt = float(r["vmax"]), float(r["amax"]), float(r["frame_period"])

    jt1, ee1 = joint_space_baseline(start, apex, robot_cfg, vmax, amax, dt)
    jt2, ee2 = joint_space_baseline(apex, end, robot_cfg, vmax, amax, dt, seed_q=jt1.q[-1])
    q = np.vstack([jt1.q, jt2.q[1:]])
    ee = np.vstack([ee1.positions, ee2.positions[1:]])
    joint_traj = JointTrajectory(q, jt1.frame_period)
    write_joint_csv(joint_traj, out / "joint_baseline_joints.csv")
    write_trajectory_csv(
        Trajectory(ee, ee1.frame_period, ("ee",)), out / "joint_baseline_path.csv"
    )

    half = (traj.frames + 1) // 2
    t1 = task_space_baseline(start, apex, half, dt)
    t2 = task_space_baseline(apex, end, half, dt)
    task = np.vstack([t1.positions, t2.positions[1:]])
    write_trajectory_csv(Trajectory(task, dt, ("ee",)), out / "task_baseline_path.csv")
    cfg.write_snapshot(out / "config.json")
    print(f"baselines written: joint-space {q.shape[0]} frames, task-space {task.shape[0]}")


def cmd_metrics(args):
    cfg = _load_config(args)
    out = _outdir(args)
    traj = _single_joint(read_trajectory_csv(args.input, _frame_period(cfg)))
    split = apex_frame(traj) if args.split is None else int(args.split)
    m = path_metrics(traj, split)
    rows = [(Path(args.input).stem, m)]
    write_comparison_csv(rows, out / "metrics.csv")
    from .plots import save_path_figure

    save_path_figure([(Path(args.input).stem, traj)], out / "metrics_path.png")
    cfg.write_snapshot(out / "config.json")
    print(
        f"length {m.path_length:.4f} m, chord {m.chord_length:.4f} m, "
        f"deviation {m.max_chord_deviation:.4f} m, area {m.hysteresis_area:.6f} m^2"
    )


def cmd_eval(args):
    cfg = _load_config(args)
    out = _outdir(args)
    period = _frame_period(cfg)
    gnn = _single_joint(read_trajectory_csv(args.gnn, period))
    joint = _single_joint(read_trajectory_csv(args.joint, period))
    task = _single_joint(read_trajectory_csv(args.task, period))
    rows = compare_runs(gnn, joint, task)
    write_comparison_csv(rows, out / "comparison.csv")
    from .plots import save_path_figure

    save_path_figure([(name, t) for (name, _), t in zip(rows, (gnn, joint, task))],
                     out / "comparison_paths.png")
    cfg.write_snapshot(out / "config.json")
    for name, m in rows:
        print(
            f"{name}: length {m.path_length:.4f} m, deviation {m.max_chord_deviation:.4f} m, "
            f"area {m.hysteresis_area:.6f} m^2"
        )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="armgen",
        description="Arm-trajectory generation pipeline: synthetic demos, "
        "graph-convolutional training, robot mapping, and path metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file layered over defaults")
        p.add_argument("--seed", type=int, help="global RNG seed")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen-data", help="synthesize a demonstration corpus")
    common(p)
    p.add_argument("--participants", type=int)
    p.add_argument("--demos-per-position", type=int)
    p.add_argument("--noise-m", type=float)
    p.add_argument("--bow-m", type=float)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the trajectory model on a corpus")
    common(p)
    p.add_argument("--corpus", required=True, help="corpus directory from gen-data")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--checkpoint-every", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="roll out a trajectory from an input window")
    common(p)
    p.add_argument("--checkpoint", required=True, help="model checkpoint JSON")
    p.add_argument("--input", required=True, help="input-window trajectory CSV")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("map-robot", help="map a wrist path into the robot workspace")
    common(p)
    p.add_argument("--input", required=True, help="trajectory CSV (wrist or single joint)")
    p.add_argument("--clamp-m", type=float, default=0.01,
                   help="largest box excursion to clamp instead of reject (m)")
    p.set_defaults(func=cmd_map_robot)

    p = sub.add_parser("baseline", help="classical IK replays of a mapped path")
    common(p)
    p.add_argument("--input", required=True, help="mapped end-effector CSV")
    p.add_argument("--vmax", type=float, help="joint speed limit (rad/s)")
    p.add_argument("--amax", type=float, help="joint acceleration limit (rad/s^2)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("metrics", help="path-shape metrics for one trajectory")
    common(p)
    p.add_argument("--input", required=True, help="trajectory CSV")
    p.add_argument("--split", type=int, help="outbound/return frame (default: apex)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("eval", help="compare a learned path against both baselines")
    common(p)
    p.add_argument("--gnn", required=True, help="learned wrist/EE path CSV")
    p.add_argument("--joint", required=True, help="joint-space baseline path CSV")
    p.add_argument("--task", required=True, help="task-space baseline path CSV")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, IkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
