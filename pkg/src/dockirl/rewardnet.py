"""Two-stage convolutional reward network with hand-rolled forward/backward.

Stage 1 convolves the four environment channels (3x3, 4->16->16, ReLU).
The result is concatenated with the five kinematic channels and passed
through a second 3x3 convolution (21->16, ReLU) and a linear 1x1 head that
emits the scalar reward map. All convolutions are stride-1 with zero "same"
padding so the reward map stays pixel-aligned with the input grid.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

N_ENV = 4
N_KIN = 5
WIDTH = 16

PARAM_SHAPES = {
    "w1a": (WIDTH, N_ENV, 3, 3), "b1a": (WIDTH,),
    "w1b": (WIDTH, WIDTH, 3, 3), "b1b": (WIDTH,),
    "w2a": (WIDTH, WIDTH + N_KIN, 3, 3), "b2a": (WIDTH,),
    "wh": (1, WIDTH, 1, 1), "bh": (1,),
}
PARAM_ORDER = tuple(PARAM_SHAPES)


@dataclass
class NetParams:
    values: dict
    grads: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.grads:
            self.grads = {k: np.zeros_like(v) for k, v in self.values.items()}
        for k, shape in PARAM_SHAPES.items():
            assert self.values[k].shape == shape
            assert self.grads[k].shape == shape

    def zero_grads(self):
        for g in self.grads.values():
            g[...] = 0.0

    def copy(self):
        return NetParams(values={k: v.copy() for k, v in self.values.items()},
                         grads={k: g.copy() for k, g in self.grads.items()})


def init_params(seed=0):
    """Fan-in-scaled uniform kernels, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    values = {}
    for name, shape in PARAM_SHAPES.items():
        if name.startswith("b"):
            values[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            limit = 1.0 / np.sqrt(fan_in)
            values[name] = rng.uniform(-limit, limit, size=shape)
    return NetParams(values=values)


def conv2d(x, k, b):
    """Stride-1 3x3 (or 1x1) convolution with zero same-padding.

    x: [C, H, W]; k: [O, C, kh, kw]; returns [O, H, W].
    """
    o, c, kh, kw = k.shape
    _, h, w = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    cols = np.empty((c * kh * kw, h * w))
    idx = 0
    for ci in range(c):
        for i in range(kh):
            for j in range(kw):
                cols[idx] = xp[ci, i:i + h, j:j + w].ravel()
                idx += 1
    out = k.reshape(o, -1) @ cols + b[:, None]
    return out.reshape(o, h, w)


def _conv_backward(x, k, dy):
    """Gradients of conv2d w.r.t. kernel, bias, and input."""
    o, c, kh, kw = k.shape
    _, h, w = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    dyf = dy.reshape(o, -1)

    cols = np.empty((c * kh * kw, h * w))
    idx = 0
    for ci in range(c):
        for i in range(kh):
            for j in range(kw):
                cols[idx] = xp[ci, i:i + h, j:j + w].ravel()
                idx += 1
    dk = (dyf @ cols.T).reshape(k.shape)
    db = dyf.sum(axis=1)

    # input gradient: full correlation with the flipped, transposed kernel
    k_flip = k[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    dx = conv2d(dy, k_flip, np.zeros(c))
    return dk, db, dx


def forward(params, features):
    """Run the network; returns (reward map [H, W], activation cache)."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 3 or x.shape[0] != N_ENV + N_KIN:
        raise ValueError(f"expected [{N_ENV + N_KIN}, H, W] features, got {x.shape}")
    v = params.values
    env, kin = x[:N_ENV], x[N_ENV:]

    z1 = conv2d(env, v["w1a"], v["b1a"])
    a1 = np.maximum(z1, 0.0)
    z2 = conv2d(a1, v["w1b"], v["b1b"])
    a2 = np.maximum(z2, 0.0)
    fused = np.concatenate([a2, kin], axis=0)
    z3 = conv2d(fused, v["w2a"], v["b2a"])
    a3 = np.maximum(z3, 0.0)
    out = conv2d(a3, v["wh"], v["bh"])

    cache = {"env": env, "z1": z1, "a1": a1, "z2": z2, "fused": fused,
             "z3": z3, "a3": a3, "shape": x.shape}
    return out[0], cache


def backward(params, cache, d_reward):
    """Accumulate exact gradients of sum(d_reward * output) into the buffers."""
    d_reward = np.asarray(d_reward, dtype=float)
    if d_reward.shape != cache["shape"][1:]:
        raise ValueError("d_reward shape does not match the cached forward pass")
    v, g = params.values, params.grads
    dy = d_reward[None]

    dwh, dbh, da3 = _conv_backward(cache["a3"], v["wh"], dy)
    dz3 = da3 * (cache["z3"] > 0)
    dw2a, db2a, dfused = _conv_backward(cache["fused"], v["w2a"], dz3)
    da2 = dfused[:WIDTH]
    dz2 = da2 * (cache["z2"] > 0)
    dw1b, db1b, da1 = _conv_backward(cache["a1"], v["w1b"], dz2)
    dz1 = da1 * (cache["z1"] > 0)
    dw1a, db1a, _ = _conv_backward(cache["env"], v["w1a"], dz1)

    for name, d in (("w1a", dw1a), ("b1a", db1a), ("w1b", dw1b), ("b1b", db1b),
                    ("w2a", dw2a), ("b2a", db2a), ("wh", dwh), ("bh", dbh)):
        g[name] += d


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def apply_update(params, adam, l2_lambda=0.0):
    """Adam descent step on the gradient buffers with decoupled weight decay.

    The buffers are treated as the gradient of the objective to minimize;
    callers ascending a likelihood accumulate its negated gradient.
    """
    if not adam.m:
        adam.m = {k: np.zeros_like(v) for k, v in params.values.items()}
        adam.v = {k: np.zeros_like(v) for k, v in params.values.items()}
    for gr in params.grads.values():
        if not np.all(np.isfinite(gr)):
            raise FloatingPointError("non-finite gradient; aborting update")
    adam.step += 1
    t = adam.step
    for k, p in params.values.items():
        gr = params.grads[k]
        adam.m[k] = adam.beta1 * adam.m[k] + (1 - adam.beta1) * gr
        adam.v[k] = adam.beta2 * adam.v[k] + (1 - adam.beta2) * gr * gr
        m_hat = adam.m[k] / (1 - adam.beta1 ** t)
        v_hat = adam.v[k] / (1 - adam.beta2 ** t)
        p -= adam.lr * m_hat / (np.sqrt(v_hat) + adam.eps)
        p -= adam.lr * l2_lambda * p


MAGIC = b"DKRN"
VERSION = 1


def save_checkpoint(params, path):
    """Versioned header + shape table + little-endian float32 payload."""
    import os
    import tempfile
    chunks = [MAGIC, struct.pack("<II", VERSION, len(PARAM_ORDER))]
    for name in PARAM_ORDER:
        arr = params.values[name]
        nb = name.encode()
        chunks.append(struct.pack("<H", len(nb)) + nb)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    for name in PARAM_ORDER:
        chunks.append(params.values[name].astype("<f4").tobytes())
    data = b"".join(chunks)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise ValueError("not a reward-network checkpoint")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off = 12
    shapes = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off:off + nlen].decode()
        off += nlen
        (ndim,) = struct.unpack_from("<B", data, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        shapes.append((name, shape))
    values = {}
    for name, shape in shapes:
        n = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=off)
        off += 4 * n
        values[name] = arr.astype(float).reshape(shape)
    return NetParams(values=values)
