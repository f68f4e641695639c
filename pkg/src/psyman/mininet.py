"""Miniature fixed-architecture CNN with exact forward and backward passes.

Architecture, for a square input of side S (S divisible by 4, S >= 8):

    conv 3x3x1 -> 4 maps, stride 1, zero pad 1
    ReLU
    2x2 max pool, stride 2                     (S -> S/2)
    conv 3x3x4 -> 8 maps, stride 1, zero pad 1
    ReLU                                       (these maps feed class
    2x2 max pool, stride 2                      activation mapping)
    flatten (channel-major, row-major within each map)
    dense -> n_classes logits
    softmax

Parameters are stored as 32-bit floats; all inner products and gradients
accumulate in 64-bit. Pooling ties resolve to the first maximum in
row-major window order so backward routing is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import K
from .errors import ConfigError, DataError, FormatError, OptimizationError, ShapeError
from .rng import Xoshiro256StarStar
from .tensor_io import Tensor, tensor_from_bytes, tensor_to_bytes

__all__ = [
    "MiniNet",
    "MiniNetGrads",
    "ForwardTrace",
    "init",
    "forward",
    "backward",
    "train_steps",
    "batch_loss",
    "logits_from_feature_maps",
    "save_params",
    "load_params",
]

_PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b")


@dataclass(frozen=True)
class MiniNet:
    """Network parameters for a declared square input size and class count."""

    input_size: int
    n_classes: int
    conv1_w: np.ndarray = field(repr=False)
    conv1_b: np.ndarray = field(repr=False)
    conv2_w: np.ndarray = field(repr=False)
    conv2_b: np.ndarray = field(repr=False)
    dense_w: np.ndarray = field(repr=False)
    dense_b: np.ndarray = field(repr=False)

    def __post_init__(self):
        s, c = self.input_size, self.n_classes
        flat = 8 * (s // 4) * (s // 4)
        expected = {
            "conv1_w": (4, 1, 3, 3),
            "conv1_b": (4,),
            "conv2_w": (8, 4, 3, 3),
            "conv2_b": (8,),
            "dense_w": (c, flat),
            "dense_b": (c,),
        }
        for name, shape in expected.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float32)
            if arr.shape != shape:
                raise ShapeError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def feature_size(self) -> int:
        """Spatial side of the rectified second-conv maps (before pooling)."""
        return self.input_size // 2

    @property
    def pooled_size(self) -> int:
        return self.input_size // 4

    @property
    def param_count(self) -> int:
        return sum(getattr(self, name).size for name in _PARAM_NAMES)


@dataclass(frozen=True)
class MiniNetGrads:
    """Per-parameter gradients, 64-bit, shaped exactly like the parameters."""

    conv1_w: np.ndarray = field(repr=False)
    conv1_b: np.ndarray = field(repr=False)
    conv2_w: np.ndarray = field(repr=False)
    conv2_b: np.ndarray = field(repr=False)
    dense_w: np.ndarray = field(repr=False)
    dense_b: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ForwardTrace:
    """Every intermediate of one forward pass, single image (no batch axis)."""

    image: np.ndarray = field(repr=False)
    conv1_pre: np.ndarray = field(repr=False)
    conv1_act: np.ndarray = field(repr=False)
    pool1: np.ndarray = field(repr=False)
    conv2_pre: np.ndarray = field(repr=False)
    conv2_act: np.ndarray = field(repr=False)
    pool2: np.ndarray = field(repr=False)
    logits: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.logits)) or not np.all(np.isfinite(self.probs)):
            raise DataError("logits and probabilities must be finite")
        if abs(float(self.probs.sum()) - 1.0) > 1e-6:
            raise DataError("probabilities must sum to 1 within 1e-6")


def init(seed: int, input_size: int = 16, n_classes: int = 2) -> MiniNet:
    """Seeded Gaussian weights scaled by 1/sqrt(fan_in); zero biases.

    Weights are drawn from one PRNG stream in storage order: conv1, conv2,
    dense, each flattened row-major.
    """
    if input_size < 8 or input_size % 4 != 0:
        raise ConfigError(
            f"input_size must be >= 8 and divisible by 4, got {input_size}"
        )
    if n_classes < 2:
        raise ConfigError(f"n_classes must be >= 2, got {n_classes}")
    rng = Xoshiro256StarStar(seed)
    flat = 8 * (input_size // 4) * (input_size // 4)

    def draw(shape: tuple[int, ...], fan_in: int) -> np.ndarray:
        vals = rng.normals(int(np.prod(shape))) / np.sqrt(fan_in)
        return vals.reshape(shape).astype(np.float32)

    return MiniNet(
        input_size=input_size,
        n_classes=n_classes,
        conv1_w=draw((4, 1, 3, 3), 9),
        conv1_b=np.zeros(4, dtype=np.float32),
        conv2_w=draw((8, 4, 3, 3), 36),
        conv2_b=np.zeros(8, dtype=np.float32),
        dense_w=draw((n_classes, flat), flat),
        dense_b=np.zeros(n_classes, dtype=np.float32),
    )


def _as_batch(net: MiniNet, images) -> np.ndarray:
    """Coerce Tensor / (1,H,W) / (B,1,H,W) input into a float64 batch."""
    if isinstance(images, Tensor):
        arr = images.array.astype(np.float64)
    elif isinstance(images, (list, tuple)):
        rows = [im.array if isinstance(im, Tensor) else np.asarray(im) for im in images]
        arr = np.stack(rows).astype(np.float64)
    else:
        arr = np.asarray(images, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[None]
    s = net.input_size
    if arr.ndim != 4 or arr.shape[1:] != (1, s, s):
        raise ShapeError(
            f"expected image dims (1, {s}, {s}) (optionally batched), "
            f"got {arr.shape}"
        )
    return np.ascontiguousarray(arr)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class _BatchTrace:
    """Raw batched intermediates shared by forward, backward, and training."""

    __slots__ = (
        "x", "z1", "a1", "p1", "arg1", "z2", "a2", "p2", "arg2",
        "flat", "logits", "probs",
    )

    def __init__(self, net: MiniNet, x: np.ndarray):
        self.x = x
        self.z1 = K.conv2d_fwd(x, net.conv1_w.astype(np.float64), net.conv1_b.astype(np.float64))
        self.a1 = np.maximum(self.z1, 0.0)
        self.p1, self.arg1 = K.maxpool2_fwd(self.a1)
        self.z2 = K.conv2d_fwd(self.p1, net.conv2_w.astype(np.float64), net.conv2_b.astype(np.float64))
        self.a2 = np.maximum(self.z2, 0.0)
        self.p2, self.arg2 = K.maxpool2_fwd(self.a2)
        self.flat = self.p2.reshape(x.shape[0], -1)
        # einsum instead of @ keeps the reduction single-threaded and
        # bit-reproducible regardless of BLAS thread count.
        self.logits = (
            np.einsum("bf,cf->bc", self.flat, net.dense_w.astype(np.float64))
            + net.dense_b.astype(np.float64)
        )
        self.probs = _softmax(self.logits)


def forward(net: MiniNet, image) -> ForwardTrace:
    """Run one image through the net, retaining all intermediates."""
    x = _as_batch(net, image)
    if x.shape[0] != 1:
        raise ShapeError(f"forward takes a single image, got batch of {x.shape[0]}")
    t = _BatchTrace(net, x)
    return ForwardTrace(
        image=x[0],
        conv1_pre=t.z1[0],
        conv1_act=t.a1[0],
        pool1=t.p1[0],
        conv2_pre=t.z2[0],
        conv2_act=t.a2[0],
        pool2=t.p2[0],
        logits=t.logits[0],
        probs=t.probs[0],
    )


def _backward_params(net: MiniNet, t: _BatchTrace, dlogits: np.ndarray) -> MiniNetGrads:
    """Reverse-mode gradients of a scalar whose dL/dlogits is `dlogits`."""
    d_dense_w = np.einsum("bc,bf->cf", dlogits, t.flat)
    d_dense_b = dlogits.sum(axis=0)
    dflat = np.einsum("bc,cf->bf", dlogits, net.dense_w.astype(np.float64))
    b = t.x.shape[0]
    f = net.pooled_size
    dp2 = dflat.reshape(b, 8, f, f)
    da2 = K.maxpool2_bwd(t.arg2, dp2, net.feature_size, net.feature_size)
    dz2 = da2 * (t.z2 > 0.0)
    dp1, dw2, db2 = K.conv2d_bwd(t.p1, net.conv2_w.astype(np.float64), dz2)
    da1 = K.maxpool2_bwd(t.arg1, dp1, net.input_size, net.input_size)
    dz1 = da1 * (t.z1 > 0.0)
    _, dw1, db1 = K.conv2d_bwd(t.x, net.conv1_w.astype(np.float64), dz1)
    return MiniNetGrads(dw1, db1, dw2, db2, d_dense_w, d_dense_b)


def backward(net: MiniNet, image, label: int) -> tuple[MiniNetGrads, Tensor]:
    """Cross-entropy gradients plus attribution-map gradients.

    Returns exact gradients of -log p(label) with respect to every
    parameter, and the gradient of the label's logit (not the loss) with
    respect to the rectified second-conv maps, as a Tensor shaped
    (8, S/2, S/2). The latter is what class activation mapping consumes.
    """
    label = int(label)
    if not 0 <= label < net.n_classes:
        raise ConfigError(f"label {label} out of range for {net.n_classes} classes")
    x = _as_batch(net, image)
    if x.shape[0] != 1:
        raise ShapeError(f"backward takes a single image, got batch of {x.shape[0]}")
    t = _BatchTrace(net, x)
    dlogits = t.probs.copy()
    dlogits[0, label] -= 1.0
    grads = _backward_params(net, t, dlogits)
    f = net.pooled_size
    dp2 = net.dense_w[label].astype(np.float64).reshape(1, 8, f, f)
    dmaps = K.maxpool2_bwd(t.arg2, dp2, net.feature_size, net.feature_size)
    return grads, Tensor(dmaps[0].astype(np.float32))


def logits_from_feature_maps(net: MiniNet, feature_maps) -> np.ndarray:
    """Logits as a function of the rectified second-conv maps alone.

    Runs only the tail of the net (pool -> flatten -> dense), which is the
    function whose gradient `backward` reports for the attribution maps.
    """
    a2 = np.asarray(
        feature_maps.array if isinstance(feature_maps, Tensor) else feature_maps,
        dtype=np.float64,
    )
    f2 = net.feature_size
    if a2.shape != (8, f2, f2):
        raise ShapeError(f"feature maps must have shape {(8, f2, f2)}, got {a2.shape}")
    p2, _ = K.maxpool2_fwd(a2[None])
    flat = p2.reshape(1, -1)
    return (
        np.einsum("bf,cf->bc", flat, net.dense_w.astype(np.float64))
        + net.dense_b.astype(np.float64)
    )[0]


def batch_loss(net: MiniNet, images, labels) -> float:
    """Mean cross-entropy of the batch."""
    x = _as_batch(net, images)
    y = _check_labels(net, labels, x.shape[0])
    t = _BatchTrace(net, x)
    picked = t.probs[np.arange(x.shape[0]), y]
    # A fully underflowed probability yields inf loss, reported as-is.
    with np.errstate(divide="ignore"):
        return float(-np.mean(np.log(picked)))


def _check_labels(net: MiniNet, labels, n: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (n,):
        raise ShapeError(f"labels must have shape ({n},), got {y.shape}")
    if y.size and (y.min() < 0 or y.max() >= net.n_classes):
        raise ConfigError("label out of range")
    return y


def train_steps(
    net: MiniNet, images, labels, lr: float, steps: int
) -> tuple[MiniNet, list[float]]:
    """Full-batch gradient descent on mean cross-entropy.

    Returns the updated net and the loss recorded before each step's
    update. Parameters stay 32-bit between steps; each update is computed
    in 64-bit then rounded back.
    """
    x = _as_batch(net, images)
    if x.shape[0] == 0:
        raise DataError("training batch must be nonempty")
    y = _check_labels(net, labels, x.shape[0])
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    losses: list[float] = []
    b = x.shape[0]
    onehot_rows = np.arange(b)
    for step in range(steps):
        t = _BatchTrace(net, x)
        picked = t.probs[onehot_rows, y]
        with np.errstate(divide="ignore"):
            loss = float(-np.mean(np.log(picked)))
        if not np.isfinite(loss):
            raise OptimizationError("training loss became non-finite", step)
        losses.append(loss)
        dlogits = t.probs.copy()
        dlogits[onehot_rows, y] -= 1.0
        dlogits /= b
        g = _backward_params(net, t, dlogits)
        updated = {
            name: (
                getattr(net, name).astype(np.float64) - lr * getattr(g, name)
            ).astype(np.float32)
            for name in _PARAM_NAMES
        }
        net = MiniNet(net.input_size, net.n_classes, **updated)
    return net, losses


def save_params(net: MiniNet, path: str, index_path: str) -> None:
    """Concatenated named tensors plus a ``name,offset,ndim,dims...`` index.

    Each parameter is one complete tensor record; `offset` is the byte
    position of that record in the tensor file; the dims follow ndim as
    further comma-separated fields.
    """
    offset = 0
    lines = []
    with open(path, "wb") as fh:
        for name in _PARAM_NAMES:
            blob = tensor_to_bytes(Tensor(getattr(net, name)))
            fh.write(blob)
            dims = getattr(net, name).shape
            lines.append(
                ",".join([name, str(offset), str(len(dims))] + [str(d) for d in dims])
            )
            offset += len(blob)
    with open(index_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_params(path: str, index_path: str) -> MiniNet:
    """Rebuild a net from save_params output; malformed input -> FormatError."""
    with open(path, "rb") as fh:
        blob = fh.read()
    params: dict[str, np.ndarray] = {}
    with open(index_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 4:
                raise FormatError(f"malformed index line: {line!r}")
            name, offset_s, ndim_s = parts[0], parts[1], parts[2]
            try:
                offset, ndim = int(offset_s), int(ndim_s)
                dims = tuple(int(p) for p in parts[3:])
            except ValueError as exc:
                raise FormatError(f"malformed index line: {line!r}") from exc
            if len(dims) != ndim:
                raise FormatError(
                    f"index line for {name} declares {ndim} dims, lists {len(dims)}"
                )
            if name not in _PARAM_NAMES or name in params:
                raise FormatError(f"unexpected tensor name {name!r} in index")
            tensor = tensor_from_bytes(blob[offset:])
            if tensor.dims != dims:
                raise FormatError(
                    f"{name} dims {tensor.dims} do not match index {dims}"
                )
            params[name] = tensor.array
    missing = [n for n in _PARAM_NAMES if n not in params]
    if missing:
        raise FormatError(f"index missing tensors: {', '.join(missing)}")
    flat = params["dense_w"].shape[1]
    pooled_sq, rem = divmod(flat, 8)
    side = int(round(np.sqrt(pooled_sq)))
    if rem != 0 or side * side != pooled_sq:
        raise FormatError(f"dense width {flat} is not 8 * F * F for integer F")
    return MiniNet(side * 4, params["dense_w"].shape[0], **params)
