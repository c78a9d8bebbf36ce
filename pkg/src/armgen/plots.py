"""Figure rendering for reports: loss curves and wrist-path comparisons.

Files are written headlessly with pinned metadata so rerunning a pipeline
with the same seed reproduces every byte.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams.update({"font.size": 9, "figure.dpi": 100})

_SAVE = {"dpi": 150, "metadata": {"Software": "armgen"}}
_COLORS = {"gnn": "#b03a2e", "joint_space": "#1f618d", "task_space": "#616a6b"}


def save_loss_curve(report, path):
    """Train/test MPJPE per epoch from a TrainReport."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(report.epochs, report.train_mpjpe, color="#b03a2e", label="train")
    if any(v is not None for v in report.test_mpjpe):
        xs = [e for e, v in zip(report.epochs, report.test_mpjpe) if v is not None]
        ys = [v for v in report.test_mpjpe if v is not None]
        ax.plot(xs, ys, color="#1f618d", label="held-out")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MPJPE (m)")
    ax.set_yscale("log")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def save_path_figure(named_trajs, path):
    """3-d overlay of single-joint paths, plus a sagittal projection.

    named_trajs: iterable of (label, Trajectory with one joint).
    """
    fig = plt.figure(figsize=(8, 3.6))
    ax3 = fig.add_subplot(1, 2, 1, projection="3d")
    ax2 = fig.add_subplot(1, 2, 2)
    for label, traj in named_trajs:
        pts = traj.positions[:, 0, :]
        color = _COLORS.get(label)
        ax3.plot(pts[:, 0], pts[:, 1], pts[:, 2], label=label, color=color, lw=1.2)
        ax3.scatter(*pts[0], color=color, s=12)
        ax2.plot(pts[:, 0], pts[:, 2], label=label, color=color, lw=1.2)
    ax3.set_xlabel("x (m)")
    ax3.set_ylabel("y (m)")
    ax3.set_zlabel("z (m)")
    ax2.set_xlabel("x (m)")
    ax2.set_ylabel("z (m)")
    ax2.set_aspect("equal", adjustable="datalim")
    ax2.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
