"""Self-supervised rollout training: MPJPE loss, Adam, and the epoch loop.

The loss is the mean per-joint position error of the full autoregressive
rollout against the demo's remaining frames; every batch backpropagates
through all rollout steps. Runs are bitwise deterministic given the seed
(fixed shuffle schedule, fixed reduction order); only the wall-clock column
of the report varies between identical runs.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .model import ModelConfig, ModelParams, init_params, rollout, save_checkpoint


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 16
    learning_rate: float = 1e-3
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    grad_clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive")


@dataclass
class TrainReport:
    """Per-epoch loss curve; row 0 is the untrained starting point."""

    epochs: list = field(default_factory=list)
    train_mpjpe: list = field(default_factory=list)
    test_mpjpe: list = field(default_factory=list)  # None entries when no test set
    seconds: list = field(default_factory=list)

    def append(self, epoch, train_m, test_m, secs):
        self.epochs.append(int(epoch))
        self.train_mpjpe.append(float(train_m))
        self.test_mpjpe.append(None if test_m is None else float(test_m))
        self.seconds.append(float(secs))


def mpjpe(pred: ad.Tensor, truth: ad.Tensor) -> ad.Tensor:
    """Mean over joints and frames of the per-joint Euclidean position error.

    Accepts (C, K', V) or batched (B, C, K', V); the batched value is the
    mean of the per-sample values.
    """
    if pred.shape != truth.shape:
        raise ad.ShapeError(f"mpjpe: shapes {pred.shape} vs {truth.shape}")
    if pred.ndim not in (3, 4):
        raise ad.ShapeError(f"mpjpe: expected (…,C,K,V), got {pred.shape}")
    return ad.tensor_mean(ad.vecnorm(ad.sub(pred, truth), axis=pred.ndim - 3))


class AdamState:
    """First/second moments per parameter tensor plus the shared step count."""

    def __init__(self, tensors):
        self.m = [np.zeros_like(t.data) for t in tensors]
        self.v = [np.zeros_like(t.data) for t in tensors]
        self.t = 0


def adam_step(tensors, state: AdamState, cfg: TrainConfig):
    """Global-norm gradient clip, then the bias-corrected Adam update in place."""
    grads = []
    for t in tensors:
        if t.grad is None:
            raise ValueError("adam_step: a parameter is missing its gradient")
        grads.append(t.grad)
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > cfg.grad_clip_norm:
        scale = cfg.grad_clip_norm / total
        grads = [g * scale for g in grads]
    b1, b2 = cfg.adam_betas
    state.t += 1
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for t, g, m, v in zip(tensors, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        t.data -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)


def _to_input(traj_positions):
    # (frames, V, 3) -> (C, frames, V)
    return np.transpose(traj_positions, (2, 0, 1))


def _check_pairs(pairs, cfg: ModelConfig):
    need_label = cfg.rollouts * cfg.k_out
    for p in pairs:
        if p.input.frames != cfg.t_in or p.label.frames != need_label or p.input.joints != cfg.joints:
            raise ValueError(
                f"pair has frames ({p.input.frames}, {p.label.frames}) joints {p.input.joints}, "
                f"expected ({cfg.t_in}, {need_label}) joints {cfg.joints}"
            )


def evaluate(pairs, params: ModelParams, cfg: ModelConfig, batch_size: int = 16) -> float:
    """Mean full-rollout MPJPE over pairs; parameters untouched."""
    if not pairs:
        raise ValueError("evaluate: empty pair set")
    _check_pairs(pairs, cfg)
    total = 0.0
    with ad.no_grad():
        for lo in range(0, len(pairs), batch_size):
            chunk = pairs[lo : lo + batch_size]
            x = ad.tensor(np.stack([_to_input(p.input.positions) for p in chunk]))
            y = ad.tensor(np.stack([_to_input(p.label.positions) for p in chunk]))
            loss = mpjpe(rollout(x, params, cfg.rollouts), y)
            total += float(loss.data) * len(chunk)
    return total / len(pairs)


def train(
    train_pairs,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    test_pairs=None,
    params: ModelParams = None,
    out_dir=None,
    checkpoint_every: int = 0,
):
    """Run the loop; returns (TrainReport, params). Report row 0 is pre-training."""
    if not train_pairs:
        raise ValueError("train: empty train set")
    _check_pairs(train_pairs, model_cfg)
    if test_pairs:
        _check_pairs(test_pairs, model_cfg)
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = init_params(model_cfg, rng)
    tensors = params.tensors()
    state = AdamState(tensors)
    inputs = [_to_input(p.input.positions) for p in train_pairs]
    labels = [_to_input(p.label.positions) for p in train_pairs]
    report = TrainReport()
    history = []

    def snapshot(epoch, secs):
        # forward-only passes take a larger batch than the gradient steps
        train_m = evaluate(train_pairs, params, model_cfg, batch_size=64)
        test_m = evaluate(test_pairs, params, model_cfg, batch_size=64) if test_pairs else None
        report.append(epoch, train_m, test_m, secs)
        history.append(train_m)

    snapshot(0, 0.0)
    n = len(train_pairs)
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            x = ad.tensor(np.stack([inputs[i] for i in idx]))
            y = ad.tensor(np.stack([labels[i] for i in idx]))
            params.zero_grads()
            loss = mpjpe(rollout(x, params, model_cfg.rollouts), y)
            loss.backward()
            adam_step(tensors, state, cfg)
        snapshot(epoch, time.perf_counter() - t0)
        if out_dir is not None and checkpoint_every > 0 and epoch % checkpoint_every == 0:
            save_checkpoint(
                f"{out_dir}/checkpoint_epoch{epoch:04d}.json", model_cfg, params, state.t, history
            )
    return report, params


def write_report_csv(report: TrainReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_mpjpe_m", "test_mpjpe_m", "seconds"])
        for e, tr, te, s in zip(report.epochs, report.train_mpjpe, report.test_mpjpe, report.seconds):
            w.writerow([e, repr(tr), "" if te is None else repr(te), repr(s)])


def read_report_csv(path) -> TrainReport:
    report = TrainReport()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            te = row["test_mpjpe_m"]
            report.append(
                int(row["epoch"]),
                float(row["train_mpjpe_m"]),
                None if te == "" else float(te),
                float(row["seconds"]),
            )
    return report
