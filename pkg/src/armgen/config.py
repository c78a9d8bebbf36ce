"""Layered run configuration: built-in defaults, then a JSON file, then flags.

Every tunable across the pipeline lives here under one section per stage, so
a single resolved snapshot written next to the outputs reproduces a run.
"""

import copy
import json

from .kinematics import ArmModel
from .model import ModelConfig
from .robot import (
    DEFAULT_DH,
    DEFAULT_HUMAN_BOX,
    DEFAULT_LIMITS,
    DEFAULT_ROBOT_BOX,
    RobotConfig,
    WorkspaceMap,
)
from .synth import GenParams, TaskLayout, default_grid
from .training import TrainConfig

DEFAULTS = {
    "seed": 0,
    "corpus": {
        "participants": 5,
        "demos_per_position": 10,
        "held_out_positions": [4],
        "reach_frames": 30,
        "lift_frames": 45,
        "hold_frames": 15,
        "return_frames": 60,
        "bow_m": 0.05,
        "noise_m": 0.01,
        "duration_s": 6.0,
    },
    "layout": {
        "grid": [list(p) for p in default_grid()],
        "mouth_point": [0.10, 0.0, 0.45],
        "rest_point": [0.20, 0.0, 0.0],
    },
    "arm": {
        "segment_lengths": [0.30, 0.25, 0.08],
        "shoulder_origin": [0.0, 0.0, 0.0],
    },
    "model": {
        "t_in": 30,
        "k_out": 30,
        "joints": 4,
        "channels": 3,
        "encoder_channels": [3, 64, 32, 64, 3],
        "rollouts": 4,
        "prelu_init_slope": 0.25,
    },
    "train": {
        "epochs": 300,
        "batch_size": 16,
        "learning_rate": 1e-3,
        "adam_betas": [0.9, 0.999],
        "adam_eps": 1e-8,
        "grad_clip_norm": 1.0,
        "checkpoint_every": 0,
    },
    "robot": {
        "dh": [list(r) for r in DEFAULT_DH],
        "joint_limits": [list(r) for r in DEFAULT_LIMITS],
        "workspace_box": [list(r) for r in DEFAULT_ROBOT_BOX],
        "human_box": [list(r) for r in DEFAULT_HUMAN_BOX],
        "vmax": 1.0,
        "amax": 2.0,
        "frame_period": 0.05,
    },
}


class RunConfig:
    """Resolved settings for one pipeline run."""

    def __init__(self, data):
        self.data = data

    @classmethod
    def load(cls, config_path=None, overrides=None):
        """defaults < JSON file < dotted-key overrides (e.g. {"train.epochs": 5})."""
        data = copy.deepcopy(DEFAULTS)
        if config_path is not None:
            with open(config_path) as fh:
                loaded = json.load(fh)
            _merge(data, loaded, context="")
        for dotted, value in (overrides or {}).items():
            if value is None:
                continue
            _set_dotted(data, dotted, value)
        return cls(data)

    def section(self, name):
        return self.data[name]

    @property
    def seed(self):
        return int(self.data["seed"])

    def task_layout(self) -> TaskLayout:
        lay = self.data["layout"]
        return TaskLayout(lay["grid"], lay["mouth_point"], lay["rest_point"])

    def arm_model(self) -> ArmModel:
        arm = self.data["arm"]
        return ArmModel(tuple(arm["segment_lengths"]), arm["shoulder_origin"])

    def gen_params(self) -> GenParams:
        c = self.data["corpus"]
        return GenParams(
            reach_frames=int(c["reach_frames"]),
            lift_frames=int(c["lift_frames"]),
            hold_frames=int(c["hold_frames"]),
            return_frames=int(c["return_frames"]),
            bow_m=float(c["bow_m"]),
            noise_m=float(c["noise_m"]),
            duration_s=float(c["duration_s"]),
        )

    def model_config(self) -> ModelConfig:
        m = self.data["model"]
        return ModelConfig(
            t_in=int(m["t_in"]),
            k_out=int(m["k_out"]),
            joints=int(m["joints"]),
            channels=int(m["channels"]),
            encoder_channels=tuple(m["encoder_channels"]),
            rollouts=int(m["rollouts"]),
            prelu_init_slope=float(m["prelu_init_slope"]),
        )

    def train_config(self) -> TrainConfig:
        t = self.data["train"]
        return TrainConfig(
            epochs=int(t["epochs"]),
            batch_size=int(t["batch_size"]),
            learning_rate=float(t["learning_rate"]),
            adam_betas=tuple(t["adam_betas"]),
            adam_eps=float(t["adam_eps"]),
            grad_clip_norm=float(t["grad_clip_norm"]),
            seed=self.seed,
        )

    def robot_config(self) -> RobotConfig:
        r = self.data["robot"]
        return RobotConfig(r["dh"], r["joint_limits"], r["workspace_box"])

    def workspace_map(self) -> WorkspaceMap:
        r = self.data["robot"]
        return WorkspaceMap(r["human_box"], r["workspace_box"])

    def write_snapshot(self, path):
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _merge(base, loaded, context):
    if not isinstance(loaded, dict):
        raise ValueError(f"config section {context or 'root'!r} must be an object")
    for key, value in loaded.items():
        where = f"{context}.{key}" if context else key
        if key not in base:
            raise ValueError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            _merge(base[key], value, where)
        else:
            base[key] = value


def _set_dotted(data, dotted, value):
    node = data
    parts = dotted.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ValueError(f"unknown config key {dotted!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ValueError(f"unknown config key {dotted!r}")
    node[parts[-1]] = value


__all__ = ["DEFAULTS", "RunConfig"]
