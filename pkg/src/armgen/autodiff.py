"""Reverse-mode automatic differentiation over numpy float64 arrays.

A Tensor wraps an ndarray and remembers the primitive op that produced it.
Calling backward() on a scalar loss topologically sorts the op graph into a
GradTape and replays each op's adjoint rule in reverse, accumulating .grad
on every tensor that requires gradients.
"""

import threading

import numpy as np

__all__ = [
    "Tensor",
    "GradTape",
    "ShapeError",
    "no_grad",
    "tensor",
    "add",
    "sub",
    "mul",
    "scale",
    "matmul",
    "contract",
    "einsum2",
    "prelu",
    "conv2d",
    "add_channel_bias",
    "permute",
    "reshape",
    "concat",
    "tensor_sum",
    "tensor_mean",
    "vecnorm",
]


class ShapeError(ValueError):
    """Raised when operand shapes or subscripts do not line up."""


_state = threading.local()


def _grad_enabled():
    return getattr(_state, "grad_enabled", True)


class no_grad:
    """Context manager that suspends graph recording."""

    def __enter__(self):
        self._prev = _grad_enabled()
        _state.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _state.grad_enabled = self._prev
        return False


class Tensor:
    """Float64 array plus the bookkeeping needed for reverse-mode autodiff.

    Leaf tensors are created directly; interior tensors are created by the
    primitive ops below, which attach the parent references and the adjoint
    callback that GradTape replays.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = "leaf"
        self._parents = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Accumulate gradients of this scalar into every reachable leaf."""
        if self.data.ndim != 0:
            raise ShapeError(f"backward() needs a scalar loss, got shape {self.shape}")
        tape = GradTape.trace(self)
        tape.replay(self)

    # operator sugar used by a few tests; the model code calls the named ops
    def __add__(self, other):
        return add(self, _wrap(other))

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)


def tensor(data, requires_grad=False):
    return Tensor(data, requires_grad=requires_grad)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, op, parents, vjp):
    """Build an interior node, or a detached leaf when recording is off."""
    out = Tensor(data)
    if _grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.op = op
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


class GradTape:
    """Ordered record of the primitive ops that produced one output tensor.

    Nodes are held in forward topological order; replaying their adjoint
    callbacks in reverse order yields gradients for every input.
    """

    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def trace(cls, root):
        nodes = []
        seen = set()

        def visit(t):
            if id(t) in seen or not t.requires_grad:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            if t._vjp is not None:
                nodes.append(t)

        visit(root)
        return cls(nodes)

    def __len__(self):
        return len(self.nodes)

    def replay(self, root):
        root.grad = np.ones_like(root.data)
        for node in reversed(self.nodes):
            node._vjp(node.grad)


# ---------------------------------------------------------------------------
# elementwise and structural primitives


def _require_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a, b):
    _require_same_shape(a, b, "add")

    def vjp(g):
        _accum(a, g)
        _accum(b, g)

    return _make(a.data + b.data, "add", (a, b), vjp)


def sub(a, b):
    _require_same_shape(a, b, "sub")

    def vjp(g):
        _accum(a, g)
        _accum(b, -g)

    return _make(a.data - b.data, "sub", (a, b), vjp)


def mul(a, b):
    _require_same_shape(a, b, "mul")

    def vjp(g):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    return _make(a.data * b.data, "mul", (a, b), vjp)


def scale(a, s):
    s = float(s)

    def vjp(g):
        _accum(a, g * s)

    return _make(a.data * s, "scale", (a,), vjp)


def permute(a, axes):
    axes = tuple(int(x) for x in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"permute: axes {axes} invalid for ndim {a.ndim}")
    inv = np.argsort(axes)

    def vjp(g):
        _accum(a, np.transpose(g, inv))

    return _make(np.transpose(a.data, axes), "permute", (a,), vjp)


def reshape(a, shape):
    shape = tuple(int(x) for x in shape)
    if int(np.prod(shape)) != a.data.size:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}")
    old = a.shape

    def vjp(g):
        _accum(a, g.reshape(old))

    return _make(a.data.reshape(shape), "reshape", (a,), vjp)


def concat(tensors, axis):
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat: no operands")
    axis = int(axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accum(t, g[tuple(sl)])

    return _make(np.concatenate([t.data for t in tensors], axis=axis), "concat", tensors, vjp)


def tensor_sum(a):
    def vjp(g):
        _accum(a, np.full_like(a.data, float(g)))

    return _make(np.sum(a.data), "sum", (a,), vjp)


def tensor_mean(a):
    n = a.data.size
    if n == 0:
        raise ShapeError("mean: empty tensor")

    def vjp(g):
        _accum(a, np.full_like(a.data, float(g) / n))

    return _make(np.mean(a.data), "mean", (a,), vjp)


def vecnorm(a, axis):
    """Euclidean norm along one axis. Subgradient 0 at zero vectors."""
    axis = int(axis)
    out = np.sqrt(np.sum(a.data * a.data, axis=axis))

    def vjp(g):
        n = np.expand_dims(out, axis)
        safe = np.where(n > 0.0, n, 1.0)
        _accum(a, np.expand_dims(g, axis) * a.data / safe * (n > 0.0))

    return _make(out, "vecnorm", (a,), vjp)


# ---------------------------------------------------------------------------
# contraction primitives


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul: need 2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner sizes {a.shape[1]} != {b.shape[0]}")

    def vjp(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _make(a.data @ b.data, "matmul", (a, b), vjp)


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _exec2(sa, sb, out, a, b):
    """Run a validated two-operand contraction as one batched matmul.

    Indices split into batch (in both operands and the output), m (first
    operand and output), n (second operand and output), and contraction
    (both operands only); both operands are permuted into 3-d stacks so the
    whole contraction is a single GEMM call instead of an index loop.
    """
    batch = [c for c in out if c in sa and c in sb]
    m = [c for c in sa if c in out and c not in sb]
    n = [c for c in sb if c in out and c not in sa]
    contr = [c for c in sa if c in sb and c not in out]
    sizes = dict(zip(sa + sb, a.shape + b.shape))

    def prod(idx):
        p = 1
        for c in idx:
            p *= sizes[c]
        return p

    a3 = a.transpose([sa.index(c) for c in batch + m + contr])
    b3 = b.transpose([sb.index(c) for c in batch + contr + n])
    c3 = np.matmul(
        a3.reshape(prod(batch), prod(m), prod(contr)),
        b3.reshape(prod(batch), prod(contr), prod(n)),
    )
    res = c3.reshape([sizes[c] for c in batch + m + n])
    src = batch + m + n
    return res.transpose([src.index(c) for c in out])


def einsum2(subscripts, a, b):
    """Two-operand einsum with no repeated index inside one operand.

    Every input index must appear in the output or in the other operand, so
    each adjoint is itself a two-operand einsum with output and the sibling
    swapped in: d/dA einsum("ij,jk->ik") = einsum("ik,jk->ij")(g, B).
    """
    if "->" not in subscripts:
        raise ShapeError(f"einsum2: explicit output required in {subscripts!r}")
    lhs, out = subscripts.split("->")
    parts = lhs.split(",")
    if len(parts) != 2:
        raise ShapeError(f"einsum2: exactly two operands required in {subscripts!r}")
    sa, sb = parts
    for s, t, name in ((sa, a, "first"), (sb, b, "second")):
        if len(s) != t.ndim:
            raise ShapeError(f"einsum2: {name} operand has ndim {t.ndim}, subscript {s!r}")
        if len(set(s)) != len(s):
            raise ShapeError(f"einsum2: repeated index within one operand in {subscripts!r}")
    if len(set(out)) != len(out) or not set(out) <= set(sa) | set(sb):
        raise ShapeError(f"einsum2: bad output subscript in {subscripts!r}")
    for ch in sa:
        if ch not in out and ch not in sb:
            raise ShapeError(f"einsum2: index {ch!r} summed within a single operand")
    for ch in sb:
        if ch not in out and ch not in sa:
            raise ShapeError(f"einsum2: index {ch!r} summed within a single operand")
    dims = {}
    for s, t in ((sa, a), (sb, b)):
        for ch, n in zip(s, t.shape):
            if dims.setdefault(ch, n) != n:
                raise ShapeError(f"einsum2: index {ch!r} has sizes {dims[ch]} and {n}")

    def vjp(g):
        # each adjoint swaps the output in for the missing operand
        if a.requires_grad:
            _accum(a, _exec2(out, sb, sa, g, b.data))
        if b.requires_grad:
            _accum(b, _exec2(out, sa, sb, g, a.data))

    return _make(_exec2(sa, sb, out, a.data, b.data), "einsum2", (a, b), vjp)


def contract(a, b, pairs):
    """Sum paired axes of a and b; output keeps a's free axes then b's.

    contract(a, b, [(i, j)]) pairs a's axis i with b's axis j. Pairing a
    square identity against the trailing axis of a tensor returns it
    unchanged, which is how the layer tests pin the convention.
    """
    pairs = [(int(i), int(j)) for i, j in pairs]
    ai = [i for i, _ in pairs]
    bi = [j for _, j in pairs]
    if len(set(ai)) != len(ai) or len(set(bi)) != len(bi):
        raise ShapeError("contract: an axis is paired twice")
    for i in ai:
        if not 0 <= i < a.ndim:
            raise ShapeError(f"contract: axis {i} out of range for shape {a.shape}")
    for j in bi:
        if not 0 <= j < b.ndim:
            raise ShapeError(f"contract: axis {j} out of range for shape {b.shape}")
    for i, j in pairs:
        if a.shape[i] != b.shape[j]:
            raise ShapeError(
                f"contract: paired axes {i},{j} have sizes {a.shape[i]} != {b.shape[j]}"
            )
    if a.ndim + b.ndim - len(pairs) > len(_LETTERS):
        raise ShapeError("contract: too many axes")
    sa = list(_LETTERS[: a.ndim])
    sb = list(_LETTERS[a.ndim : a.ndim + b.ndim])
    for i, j in pairs:
        sb[j] = sa[i]
    out = "".join(c for k, c in enumerate(sa) if k not in ai) + "".join(
        c for k, c in enumerate(sb) if k not in bi
    )
    return einsum2(f"{''.join(sa)},{''.join(sb)}->{out}", a, b)


# ---------------------------------------------------------------------------
# network-layer primitives


def prelu(x, slope):
    """Elementwise max(x, slope*x) with a single learned scalar slope."""
    if slope.ndim != 0:
        raise ShapeError(f"prelu: slope must be scalar, got shape {slope.shape}")
    pos = x.data > 0.0
    a = float(slope.data)

    def vjp(g):
        _accum(x, g * np.where(pos, 1.0, a))
        _accum(slope, np.asarray(np.sum(g * np.where(pos, 0.0, x.data))))

    return _make(np.where(pos, x.data, a * x.data), "prelu", (x, slope), vjp)


def add_channel_bias(x, b, axis=0):
    """Add a per-channel bias along the given axis of x."""
    axis = int(axis)
    if b.ndim != 1 or not 0 <= axis < x.ndim or b.shape[0] != x.shape[axis]:
        raise ShapeError(f"add_channel_bias: bias {b.shape} vs axis {axis} of {x.shape}")
    bshape = tuple(x.shape[axis] if k == axis else 1 for k in range(x.ndim))
    rest = tuple(k for k in range(x.ndim) if k != axis)

    def vjp(g):
        _accum(x, g)
        _accum(b, g.sum(axis=rest))

    return _make(x.data + b.data.reshape(bshape), "add_channel_bias", (x, b), vjp)


def _im2col3x3(x4):
    """Zero-pad by 1 and unfold 3x3 windows: (B,C,H,W) -> (B*H*W, C*9)."""
    b, c, h, w = x4.shape
    xp = np.pad(x4, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b * h * w, c * 9)


def _corr3x3(x4, k4):
    """Correlate (B,Cin,H,W) with (Cout,Cin,3,3) via one GEMM on the columns."""
    b, _, h, w = x4.shape
    col = _im2col3x3(x4)
    out = col @ k4.reshape(k4.shape[0], -1).T
    return out.reshape(b, h, w, k4.shape[0]).transpose(0, 3, 1, 2), col


def conv2d(x, k):
    """3x3 same-padding convolution.

    x is (Cin,H,W) or batched (B,Cin,H,W); k is (Cout,Cin,3,3); output keeps
    x's layout with Cin replaced by Cout.
    """
    if x.ndim not in (3, 4) or k.ndim != 4:
        raise ShapeError(f"conv2d: need x (…,Cin,H,W) and k (Cout,Cin,3,3), got {x.shape}, {k.shape}")
    if k.shape[2:] != (3, 3):
        raise ShapeError(f"conv2d: kernel window must be 3x3, got {k.shape[2:]}")
    batched = x.ndim == 4
    cin = x.shape[1] if batched else x.shape[0]
    if k.shape[1] != cin:
        raise ShapeError(f"conv2d: kernel expects {k.shape[1]} input channels, x has {cin}")
    x4 = x.data if batched else x.data[None]
    out, col = _corr3x3(x4, k.data)

    def vjp(g):
        g4 = g if batched else g[None]
        if k.requires_grad:
            b, o, h, w = g4.shape
            g2 = g4.transpose(0, 2, 3, 1).reshape(b * h * w, o)
            _accum(k, (g2.T @ col).reshape(k.shape))
        if x.requires_grad:
            # correlation with the 180-degree rotated kernel undoes the forward stencil
            kr = np.ascontiguousarray(k.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
            dx, _ = _corr3x3(g4, kr)
            _accum(x, dx if batched else dx[0])

    return _make(out if batched else out[0], "conv2d", (x, k), vjp)
