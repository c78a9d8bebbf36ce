"""Space-time-separable graph network with a frames-as-channels conv decoder.

The encoder stacks graph layers whose spatio-temporal adjacency is factorized
into a learned per-joint temporal matrix and a learned per-frame spatial
matrix. The decoder treats the T frames as conv channels over the (joint,
coordinate) plane and maps them to K output frames; feeding each K-frame
output back as the next input chains segments into the long rollout.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad


@dataclass
class ModelConfig:
    t_in: int = 30
    k_out: int = 30
    joints: int = 4
    channels: int = 3
    encoder_channels: tuple = (3, 64, 32, 64, 3)
    rollouts: int = 4
    prelu_init_slope: float = 0.25

    def __post_init__(self):
        self.encoder_channels = tuple(int(c) for c in self.encoder_channels)
        if len(self.encoder_channels) < 2:
            raise ValueError("encoder_channels needs at least one layer")
        if self.encoder_channels[0] != self.channels or self.encoder_channels[-1] != self.channels:
            raise ValueError(f"encoder_channels must start and end at {self.channels}")
        if self.t_in != self.k_out:
            raise ValueError("t_in must equal k_out so outputs can be re-fed as inputs")
        if min(self.t_in, self.joints, self.channels, self.rollouts) < 1:
            raise ValueError("config sizes must be positive")

    def to_dict(self):
        return {
            "t_in": self.t_in,
            "k_out": self.k_out,
            "joints": self.joints,
            "channels": self.channels,
            "encoder_channels": list(self.encoder_channels),
            "rollouts": self.rollouts,
            "prelu_init_slope": self.prelu_init_slope,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["encoder_channels"] = tuple(d["encoder_channels"])
        return cls(**d)


@dataclass
class StsLayerParams:
    A_t: ad.Tensor  # (V, T, T) per-joint temporal adjacency
    A_s: ad.Tensor  # (T, V, V) per-frame spatial adjacency
    W: ad.Tensor  # (C_out, C_in)
    b: ad.Tensor  # (C_out,)
    a: ad.Tensor  # scalar PReLU slope


@dataclass
class TcnLayerParams:
    kernels: ad.Tensor  # (C_out_frames, C_in_frames, 3, 3)
    b: ad.Tensor  # (C_out_frames,)
    a: ad.Tensor | None  # scalar PReLU slope; None on the final linear layer


@dataclass
class ModelParams:
    encoder: list = field(default_factory=list)
    decoder: list = field(default_factory=list)

    def named_params(self):
        for i, layer in enumerate(self.encoder):
            yield f"enc{i}.A_t", layer.A_t
            yield f"enc{i}.A_s", layer.A_s
            yield f"enc{i}.W", layer.W
            yield f"enc{i}.b", layer.b
            yield f"enc{i}.a", layer.a
        for i, layer in enumerate(self.decoder):
            yield f"dec{i}.kernels", layer.kernels
            yield f"dec{i}.b", layer.b
            if layer.a is not None:
                yield f"dec{i}.a", layer.a

    def tensors(self):
        return [t for _, t in self.named_params()]

    def zero_grads(self):
        for t in self.tensors():
            t.zero_grad()


DECODER_LAYERS = 5


def _param(data):
    return ad.tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Identity-biased adjacencies plus uniform fan-in weight init."""
    t, v = cfg.t_in, cfg.joints
    params = ModelParams()
    for c_in, c_out in zip(cfg.encoder_channels[:-1], cfg.encoder_channels[1:]):
        bound = np.sqrt(1.0 / c_in)
        params.encoder.append(
            StsLayerParams(
                A_t=_param(np.eye(t) + rng.uniform(-0.05, 0.05, (v, t, t))),
                A_s=_param(np.eye(v) + rng.uniform(-0.05, 0.05, (t, v, v))),
                W=_param(rng.uniform(-bound, bound, (c_out, c_in))),
                b=_param(np.zeros(c_out)),
                a=_param(cfg.prelu_init_slope),
            )
        )
    k = cfg.k_out
    for layer in range(DECODER_LAYERS):
        c_in = t if layer == 0 else k
        bound = np.sqrt(1.0 / (c_in * 9))
        params.decoder.append(
            TcnLayerParams(
                kernels=_param(rng.uniform(-bound, bound, (k, c_in, 3, 3))),
                b=_param(np.zeros(k)),
                a=None if layer == DECODER_LAYERS - 1 else _param(cfg.prelu_init_slope),
            )
        )
    return params


def identity_params(cfg: ModelConfig) -> ModelParams:
    """Wiring that makes the whole model the identity map (used by tests).

    Rectangular identity channel mixes, exact identity adjacencies, slope-1
    activations, a centered-delta kernel on the first and last decoder layers,
    and zero kernels inside the residual layers.
    """
    t, v = cfg.t_in, cfg.joints
    params = ModelParams()
    for c_in, c_out in zip(cfg.encoder_channels[:-1], cfg.encoder_channels[1:]):
        params.encoder.append(
            StsLayerParams(
                A_t=_param(np.tile(np.eye(t), (v, 1, 1))),
                A_s=_param(np.tile(np.eye(v), (t, 1, 1))),
                W=_param(np.eye(c_out, c_in)),
                b=_param(np.zeros(c_out)),
                a=_param(1.0),
            )
        )
    k = cfg.k_out
    delta = np.zeros((k, k, 3, 3))
    delta[np.arange(k), np.arange(k), 1, 1] = 1.0
    for layer in range(DECODER_LAYERS):
        passthrough = layer in (0, DECODER_LAYERS - 1)
        params.decoder.append(
            TcnLayerParams(
                kernels=_param(delta if passthrough else np.zeros((k, k, 3, 3))),
                b=_param(np.zeros(k)),
                a=None if layer == DECODER_LAYERS - 1 else _param(1.0),
            )
        )
    return params


def _batched(x):
    if x.ndim == 3:
        return ad.reshape(x, (1, *x.shape)), True
    if x.ndim == 4:
        return x, False
    raise ad.ShapeError(f"expected (C,T,V) or (B,C,T,V), got {x.shape}")


def _maybe_squeeze(x, squeeze):
    return ad.reshape(x, x.shape[1:]) if squeeze else x


def sts_layer(x: ad.Tensor, p: StsLayerParams) -> ad.Tensor:
    """Temporal mix per joint, spatial mix per frame, channel mix, PReLU."""
    x, squeeze = _batched(x)
    y = ad.einsum2("vts,bcsv->bctv", p.A_t, x)
    z = ad.einsum2("tvw,bctw->bctv", p.A_s, y)
    m = ad.einsum2("dc,bctv->bdtv", p.W, z)
    out = ad.prelu(ad.add_channel_bias(m, p.b, axis=1), p.a)
    return _maybe_squeeze(out, squeeze)


def encode(x: ad.Tensor, params: ModelParams) -> ad.Tensor:
    for layer in params.encoder:
        x = sts_layer(x, layer)
    return x


def decode(h: ad.Tensor, params: ModelParams) -> ad.Tensor:
    h, squeeze = _batched(h)
    x = ad.permute(h, (0, 2, 3, 1))  # frames become conv channels over (V, C)
    for i, layer in enumerate(params.decoder):
        y = ad.add_channel_bias(ad.conv2d(x, layer.kernels), layer.b, axis=1)
        if layer.a is not None:
            y = ad.prelu(y, layer.a)
        if 0 < i < DECODER_LAYERS - 1:
            y = ad.add(y, x)  # residual on the interior layers
        x = y
    out = ad.permute(x, (0, 3, 1, 2))
    return _maybe_squeeze(out, squeeze)


def forward(x: ad.Tensor, params: ModelParams) -> ad.Tensor:
    return decode(encode(x, params), params)


def rollout(x0: ad.Tensor, params: ModelParams, n: int) -> ad.Tensor:
    """Feed each K-frame output back as the next input; concatenate segments.

    Gradients flow through the whole recursion, no truncation.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"rollout count must be >= 1, got {n}")
    k_out, c_in = params.decoder[0].kernels.shape[:2]
    if k_out != c_in:
        raise ValueError(f"rollout needs T == K, got T={c_in}, K={k_out}")
    segments = []
    x = x0
    for _ in range(n):
        x = forward(x, params)
        segments.append(x)
    if n == 1:
        return segments[0]
    return ad.concat(segments, axis=segments[0].ndim - 2)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, cfg: ModelConfig, params: ModelParams, step: int, loss_history):
    """JSON checkpoint with named flat arrays; round trips bit-exactly."""
    blob = {
        "config": cfg.to_dict(),
        "params": {
            name: {"shape": list(t.shape), "data": [float(v) for v in t.data.reshape(-1)]}
            for name, t in params.named_params()
        },
        "step": int(step),
        "loss_history": [float(v) for v in loss_history],
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)
        fh.write("\n")


def load_checkpoint(path):
    with open(path) as fh:
        blob = json.load(fh)
    cfg = ModelConfig.from_dict(blob["config"])
    rng = np.random.default_rng(0)
    params = init_params(cfg, rng)
    stored = blob["params"]
    for name, t in params.named_params():
        if name not in stored:
            raise ValueError(f"checkpoint missing parameter {name}")
        entry = stored[name]
        arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if arr.shape != t.shape:
            raise ValueError(f"checkpoint {name} has shape {arr.shape}, expected {t.shape}")
        t.data = arr
    return cfg, params, blob["step"], list(blob["loss_history"])
