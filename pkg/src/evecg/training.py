"""Surrogate-gradient training of the spiking network, and the matched
conventional CNN baseline.

The backward pass unrolls the simulation over all time steps
(backpropagation through time). The spike nonlinearity's derivative is
replaced by a surrogate pseudo-derivative; the fire-and-reset branch is
gradient-detached. A ``relaxed`` mode swaps the hard threshold for the
surrogate's smooth primitive with full gradient flow -- that mode exists
solely so analytic gradients can be validated against finite differences.

Loss is cross-entropy over spike counts scaled by 1/T, plus a firing-rate
band penalty that pushes every LIF layer's mean rate into a target band
(the self-modulation regularizer).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .network import (
    LifParams,
    NetworkSpec,
    SpikingConv1d,
    SpikingFC,
    _im2col,
    _layer_from_header,
    _layer_header,
    conv1d_spiking_forward,
    fc_forward,
    init_states,
    maxpool_forward,
)

CKPT_MAGIC = b"EVECGCKPT1\n"


class NumericalError(ArithmeticError):
    """Non-finite loss or gradient; carries epoch/batch context when known."""


@dataclass(frozen=True)
class SurrogateSpec:
    kind: str = "rectangular"  # rectangular | fast_sigmoid | arctan
    width: float = 0.5  # half-width (rectangular) or steepness k (others)

    def __post_init__(self):
        if self.kind not in ("rectangular", "fast_sigmoid", "arctan"):
            raise ValueError(f"unknown surrogate {self.kind!r}")
        if self.width <= 0:
            raise ValueError("width/steepness must be positive")


def surrogate_grad(v: np.ndarray, params: LifParams, spec: SurrogateSpec) -> np.ndarray:
    """Pseudo-derivative of the spike nonlinearity at membrane potential v.

    All three kinds are nonnegative, peak at the threshold and integrate
    to 1 over v. Peak values: rectangular 1/(2*width), fast-sigmoid k/4,
    arctan k/2.
    """
    x = np.asarray(v, dtype=np.float64) - params.v_threshold
    k = spec.width
    if spec.kind == "rectangular":
        return np.where(np.abs(x) < k, 1.0 / (2.0 * k), 0.0)
    if spec.kind == "fast_sigmoid":
        return (k / 4.0) / (1.0 + np.abs(k * x / 2.0)) ** 2
    u = np.pi * k * x / 2.0
    return (k / 2.0) / (1.0 + u * u)


def smooth_spike(v: np.ndarray, params: LifParams, spec: SurrogateSpec) -> np.ndarray:
    """The surrogate's smooth primitive: a soft step from 0 to 1 around the
    threshold whose exact derivative is :func:`surrogate_grad`."""
    x = np.asarray(v, dtype=np.float64) - params.v_threshold
    k = spec.width
    if spec.kind == "rectangular":
        return np.clip(0.5 + x / (2.0 * k), 0.0, 1.0)
    if spec.kind == "fast_sigmoid":
        u = k * x / 2.0
        return 0.5 * (1.0 + u / (1.0 + np.abs(u)))
    return 0.5 + np.arctan(np.pi * k * x / 2.0) / np.pi


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 2e-3
    optimizer: str = "adam"  # adam | sgd
    seed: int = 0
    # fast-sigmoid k=4 by default: its tails reach quiet units that the
    # finite-support rectangular window cannot, which matters at the low
    # firing rates a ternary input produces
    surrogate: SurrogateSpec = field(
        default_factory=lambda: SurrogateSpec("fast_sigmoid", 4.0))
    self_mod_weight: float = 0.1
    target_rate_range: tuple[float, float] = (0.05, 0.7)

    def __post_init__(self):
        lo, hi = self.target_rate_range
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("target rate band must satisfy 0 < lo < hi < 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.self_mod_weight < 0:
            raise ValueError("self_mod_weight must be >= 0")


def self_modulation_penalty(firing_rates: np.ndarray, config: TrainConfig) -> float:
    """Quadratic band penalty on per-layer mean firing rates: zero inside
    [r_lo, r_hi], growing quadratically outside."""
    r = np.asarray(firing_rates, dtype=np.float64)
    lo, hi = config.target_rate_range
    under = np.maximum(0.0, lo - r)
    over = np.maximum(0.0, r - hi)
    return float(config.self_mod_weight * np.sum(under ** 2 + over ** 2))


def _penalty_rate_grad(rates: np.ndarray, config: TrainConfig) -> np.ndarray:
    lo, hi = config.target_rate_range
    r = np.asarray(rates, dtype=np.float64)
    return config.self_mod_weight * (
        -2.0 * np.maximum(0.0, lo - r) + 2.0 * np.maximum(0.0, r - hi))


def _col2im(dcols: np.ndarray, in_shape: tuple[int, int, int], kernel: int,
            stride: int, padding: str) -> np.ndarray:
    """Adjoint of :func:`_im2col`: scatter patch gradients back to (B, C, L)."""
    b, c, n = in_shape
    if padding == "same":
        lo = (kernel - 1) // 2
        padded = n + kernel - 1
    else:
        lo = 0
        padded = n
    p = dcols.shape[2]
    dx = np.zeros((b, c, padded))
    d = dcols.reshape(b, c, kernel, p)
    for k in range(kernel):
        # windows start at stride*j; tap k lands at stride*j + k
        dx[:, :, k:k + stride * p:stride] += d[:, :, k, :]
    return dx[:, :, lo:lo + n]


class _Adam:
    def __init__(self, shapes: list[tuple], lr: float):
        self.lr = lr
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, weights: list[np.ndarray], grads: list[np.ndarray],
             beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.t += 1
        for i, (w, g) in enumerate(zip(weights, grads)):
            self.m[i] = beta1 * self.m[i] + (1 - beta1) * g
            self.v[i] = beta2 * self.v[i] + (1 - beta2) * g * g
            mhat = self.m[i] / (1 - beta1 ** self.t)
            vhat = self.v[i] / (1 - beta2 ** self.t)
            w -= self.lr * mhat / (np.sqrt(vhat) + eps)


class _Sgd:
    def __init__(self, shapes: list[tuple], lr: float):
        self.lr = lr
        self.m: list[np.ndarray] = []
        self.v: list[np.ndarray] = []

    def step(self, weights, grads) -> None:
        for w, g in zip(weights, grads):
            w -= self.lr * g


# ---------------------------------------------------------------------------
# SCNN forward/backward over time


def scnn_forward(net: NetworkSpec, frames: np.ndarray, surrogate: SurrogateSpec,
                 mode: str = "hard", record: bool = False):
    """Simulate ``net`` on static input frames (B, C, L) over all time steps.

    Returns (counts, per-layer mean firing rates, cache). ``mode='relaxed'``
    replaces the threshold with the surrogate's smooth primitive, skips the
    reset-potential clamp, and produces real-valued "spikes".
    """
    b = frames.shape[0]
    states = init_states(net, b)
    counts = np.zeros((b, net.num_classes))
    lif = net.lif
    spike_sums = {li: 0.0 for li, l in enumerate(net.layers)
                  if l.kind in ("SpikingConv1d", "SpikingFC")}
    cache: list[list] = []
    # the input frame is static across steps, so the first weighted layer's
    # sums never change; hoist them out of the time loop
    z_first = None
    if net.layers[0].kind == "SpikingConv1d":
        z_first = conv1d_spiking_forward(frames, net.layers[0])
    for _ in range(net.time_steps):
        x = frames
        step_cache = []
        for li, layer in enumerate(net.layers):
            if layer.kind in ("SpikingConv1d", "SpikingFC"):
                flattened_from = None
                if layer.kind == "SpikingFC" and x.ndim == 3:
                    flattened_from = x.shape
                    x = x.reshape(b, -1)
                a = x
                if li == 0 and z_first is not None:
                    z = z_first
                else:
                    z = (conv1d_spiking_forward(x, layer)
                         if layer.kind == "SpikingConv1d" else fc_forward(x, layer))
                if lif.leak_mode == "silent":
                    leak = np.where(z == 0, lif.delta_v, 0.0)
                else:
                    leak = lif.delta_v
                pre = states[li] + z - leak
                if mode == "relaxed":
                    u = pre
                    cm = None
                    s = smooth_spike(u, lif, surrogate)
                    states[li] = u - s * (u - lif.v_reset)
                else:
                    u = np.maximum(pre, lif.v_reset)
                    cm = pre > lif.v_reset
                    s = (u >= lif.v_threshold).astype(np.float64)
                    states[li] = np.where(s == 1.0, lif.v_reset, u)
                spike_sums[li] += float(s.sum())
                if record:
                    step_cache.append({"a": a, "u": u, "s": s, "cm": cm,
                                       "flat": flattened_from})
                x = s
            elif layer.kind == "MaxPool1d":
                in_shape = x.shape
                x, arg = maxpool_forward(x, layer)
                if record:
                    step_cache.append({"arg": arg, "in_shape": in_shape})
            else:
                counts += x
                if record:
                    step_cache.append(None)
        if record:
            cache.append(step_cache)
    t = net.time_steps
    rates = {li: spike_sums[li] / (t * states[li].size if states[li] is not None else 1)
             for li in spike_sums}
    return counts, rates, cache


def scnn_backward(net: NetworkSpec, frames: np.ndarray, labels: np.ndarray,
                  config: TrainConfig, mode: str = "hard"):
    """Loss and weight gradients for one batch via BPTT.

    Returns (loss, grads, counts, rates); ``grads`` aligns with
    ``net.weighted_layers()`` order.
    """
    b = frames.shape[0]
    t_steps = net.time_steps
    lif = net.lif
    for l in net.weighted_layers():
        # NaN weights would be masked by the hard threshold (NaN >= th is
        # False), silently yielding zero spikes; fail loudly instead
        if not np.all(np.isfinite(l.weights)):
            raise NumericalError("non-finite weights")
    counts, rates, cache = scnn_forward(net, frames, config.surrogate,
                                        mode=mode, record=True)
    logits = counts / t_steps
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    probs = expz / expz.sum(axis=1, keepdims=True)
    ce = float(-np.mean(np.log(probs[np.arange(b), labels] + 1e-300)))
    rate_vec = np.array([rates[li] for li in sorted(rates)])
    loss = ce + self_modulation_penalty(rate_vec, config)
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss}")

    onehot = np.zeros_like(probs)
    onehot[np.arange(b), labels] = 1.0
    dcounts = (probs - onehot) / (b * t_steps)

    pen_g = {li: g for li, g in zip(sorted(rates),
                                    _penalty_rate_grad(rate_vec, config))}
    # d(pen)/d(one spike) = pen_g / (#neurons * B * T)
    lif_sizes = {}
    states0 = init_states(net, b)
    for li in rates:
        lif_sizes[li] = states0[li].size * t_steps

    wl = net.weighted_layers()
    grads = [np.zeros_like(l.weights) for l in wl]
    gidx = {id(l): i for i, l in enumerate(wl)}
    carry = {li: 0.0 for li in rates}

    # the input frame is static, so the first conv layer sees the same
    # patch matrix at every step; build it once
    cols0 = None
    if net.layers[0].kind == "SpikingConv1d":
        l0 = net.layers[0]
        cols0 = _im2col(np.asarray(frames, dtype=np.float64), l0.kernel,
                        l0.stride, l0.padding)

    for t in reversed(range(t_steps)):
        delta = dcounts
        for li in reversed(range(len(net.layers))):
            layer = net.layers[li]
            c = cache[t][li]
            if layer.kind == "SpikeCounter":
                continue
            if layer.kind == "MaxPool1d":
                # route gradient to the selected (first-max) element
                arg = c["arg"]
                b_, ch, p = arg.shape
                dx = np.zeros(c["in_shape"])
                base = np.arange(p) * layer.stride
                pos = base[None, None, :] + arg
                bi = np.arange(b_)[:, None, None]
                ci = np.arange(ch)[None, :, None]
                np.add.at(dx, (bi, ci, pos), delta)
                delta = dx
                continue
            u, s, cm = c["u"], c["s"], c["cm"]
            g = surrogate_grad(u, lif, config.surrogate)
            ds = delta + pen_g[li] / lif_sizes[li]
            if mode == "relaxed":
                dvdu = 1.0 - s - g * (u - lif.v_reset)
                du = ds * g + carry[li] * dvdu
                dpre = du
            else:
                dvdu = 1.0 - s
                du = ds * g + carry[li] * dvdu
                dpre = du * cm
            carry[li] = dpre
            a = c["a"]
            if layer.kind == "SpikingFC":
                grads[gidx[id(layer)]] += dpre.T @ a.astype(np.float64)
                delta = dpre @ layer.weights
                if c["flat"] is not None:
                    delta = delta.reshape(c["flat"])
            else:
                if li == 0 and cols0 is not None:
                    cols = cols0
                else:
                    cols = _im2col(np.asarray(a, dtype=np.float64),
                                   layer.kernel, layer.stride, layer.padding)
                w = layer.weights.reshape(layer.out_channels, -1)
                grads[gidx[id(layer)]] += (
                    dpre @ cols.transpose(0, 2, 1)).sum(axis=0).reshape(
                        layer.weights.shape)
                if li > 0:
                    dcols = w.T[None] @ dpre
                    delta = _col2im(dcols, (a.shape[0], layer.in_channels,
                                            a.shape[2]), layer.kernel,
                                    layer.stride, layer.padding)
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient")
    return loss, grads, counts, rates


# ---------------------------------------------------------------------------
# training loops


@dataclass
class Checkpoint:
    network: NetworkSpec
    epoch: int
    train_accuracy: list[float]
    test_accuracy: list[float]
    loss_history: list[float]
    config: TrainConfig
    best_test_accuracy: float
    mean_firing_rates: dict[int, float] = field(default_factory=dict)


def evaluate(net: NetworkSpec, frames: np.ndarray, labels: np.ndarray,
             batch_size: int = 256, kind: str = "scnn",
             surrogate: SurrogateSpec | None = None):
    """Accuracy and 4x4 confusion matrix of a trained model on a dataset."""
    if frames.shape[0] == 0:
        raise ValueError("empty evaluation set")
    preds = []
    for lo in range(0, frames.shape[0], batch_size):
        x = frames[lo:lo + batch_size]
        if kind == "scnn":
            counts, _, _ = scnn_forward(net, x, surrogate or SurrogateSpec())
            preds.append(np.argmax(counts, axis=1))
        else:
            logits = cnn_forward(net, x)
            preds.append(np.argmax(logits, axis=1))
    pred = np.concatenate(preds)
    k = net.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (labels, pred), 1)
    accuracy = float(np.trace(confusion) / confusion.sum())
    return accuracy, confusion


def train(net: NetworkSpec, x_train: np.ndarray, y_train: np.ndarray,
          x_test: np.ndarray, y_test: np.ndarray, config: TrainConfig,
          kind: str = "scnn", verbose: bool = False) -> Checkpoint:
    """Deterministic mini-batch training; returns the best-test checkpoint.

    ``kind`` selects the spiking network (BPTT) or the conventional CNN
    baseline (same layer shapes, ReLU units, linear readout). The per-epoch
    shuffle PRNG is derived from (seed, epoch), so runs are reproducible
    and resumable.
    """
    net = replace(net, layers=[replace(l, weights=l.weights.copy())
                               if l.kind in ("SpikingConv1d", "SpikingFC") else l
                               for l in net.layers])
    wl = net.weighted_layers()
    weights = [l.weights for l in wl]
    opt_cls = _Adam if config.optimizer == "adam" else _Sgd
    opt = opt_cls([w.shape for w in weights], config.learning_rate)

    best_acc, best_net = -1.0, None
    train_hist: list[float] = []
    test_hist: list[float] = []
    loss_hist: list[float] = []
    last_rates: dict[int, float] = {}
    n = x_train.shape[0]
    for epoch in range(config.epochs):
        order = np.random.default_rng((config.seed, epoch)).permutation(n)
        epoch_loss = 0.0
        nb = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            try:
                if kind == "scnn":
                    loss, grads, _, last_rates = scnn_backward(
                        net, x_train[idx], y_train[idx], config)
                else:
                    loss, grads = cnn_backward(net, x_train[idx], y_train[idx])
            except NumericalError as exc:
                raise NumericalError(
                    f"epoch {epoch} batch {lo // config.batch_size}: {exc}") from exc
            opt.step(weights, grads)
            epoch_loss += loss
            nb += 1
        # per-epoch train accuracy on a fixed 512-sample prefix: it is a
        # progress signal, not a reported metric, and full-train evaluation
        # would roughly double the epoch cost of the spiking net
        n_tr = min(n, 512)
        train_acc, _ = evaluate(net, x_train[:n_tr], y_train[:n_tr], kind=kind,
                                surrogate=config.surrogate)
        test_acc, _ = evaluate(net, x_test, y_test, kind=kind,
                               surrogate=config.surrogate)
        train_hist.append(train_acc)
        test_hist.append(test_acc)
        loss_hist.append(epoch_loss / max(nb, 1))
        if verbose:
            print(f"epoch {epoch:3d} loss {loss_hist[-1]:.4f} "
                  f"train {train_acc:.4f} test {test_acc:.4f}")
        if test_acc > best_acc:
            best_acc = test_acc
            best_net = replace(net, layers=[
                replace(l, weights=l.weights.copy())
                if l.kind in ("SpikingConv1d", "SpikingFC") else l
                for l in net.layers])
    return Checkpoint(best_net, config.epochs, train_hist, test_hist,
                      loss_hist, config, best_acc,
                      {k: float(v) for k, v in last_rates.items()})


# ---------------------------------------------------------------------------
# conventional CNN baseline (identical layer shapes, ReLU, linear readout)


def cnn_forward(net: NetworkSpec, x: np.ndarray, record: bool = False):
    """Forward pass of the CNN twin: conv+ReLU / max-pool / FC+ReLU layers
    with the final FC read out linearly (no counter, no time loop)."""
    x = np.asarray(x, dtype=np.float64)
    cache = []
    fcs = [l for l in net.layers if l.kind == "SpikingFC"]
    last_fc = fcs[-1]
    for layer in net.layers:
        if layer.kind == "SpikingConv1d":
            a = x
            z = conv1d_spiking_forward(x, layer)
            x = np.maximum(z, 0.0)
            if record:
                cache.append({"a": a, "z": z})
        elif layer.kind == "MaxPool1d":
            in_shape = x.shape
            x, arg = maxpool_forward(x, layer)
            if record:
                cache.append({"arg": arg, "in_shape": in_shape})
        elif layer.kind == "SpikingFC":
            flat = x.shape if x.ndim == 3 else None
            if flat:
                x = x.reshape(x.shape[0], -1)
            a = x
            z = fc_forward(x, layer)
            x = z if layer is last_fc else np.maximum(z, 0.0)
            if record:
                cache.append({"a": a, "z": z, "flat": flat})
        else:
            if record:
                cache.append(None)
    return (x, cache) if record else x


def cnn_backward(net: NetworkSpec, x: np.ndarray, labels: np.ndarray):
    """Cross-entropy loss and gradients for the CNN baseline."""
    b = x.shape[0]
    logits, cache = cnn_forward(net, x, record=True)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    probs = expz / expz.sum(axis=1, keepdims=True)
    loss = float(-np.mean(np.log(probs[np.arange(b), labels] + 1e-300)))
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss}")
    onehot = np.zeros_like(probs)
    onehot[np.arange(b), labels] = 1.0
    delta = (probs - onehot) / b

    wl = net.weighted_layers()
    grads = [np.zeros_like(l.weights) for l in wl]
    gidx = {id(l): i for i, l in enumerate(wl)}
    fcs = [l for l in net.layers if l.kind == "SpikingFC"]
    last_fc = fcs[-1]
    for li in reversed(range(len(net.layers))):
        layer = net.layers[li]
        c = cache[li]
        if layer.kind == "SpikeCounter":
            continue
        if layer.kind == "MaxPool1d":
            arg = c["arg"]
            b_, ch, p = arg.shape
            dx = np.zeros(c["in_shape"])
            pos = (np.arange(p) * layer.stride)[None, None, :] + arg
            bi = np.arange(b_)[:, None, None]
            ci = np.arange(ch)[None, :, None]
            np.add.at(dx, (bi, ci, pos), delta)
            delta = dx
            continue
        if layer.kind == "SpikingFC":
            dz = delta if layer is last_fc else delta * (c["z"] > 0)
            grads[gidx[id(layer)]] += dz.T @ c["a"]
            delta = dz @ layer.weights
            if c["flat"] is not None:
                delta = delta.reshape(c["flat"])
        else:
            dz = delta * (c["z"] > 0)
            a = np.asarray(c["a"], dtype=np.float64)
            cols = _im2col(a, layer.kernel, layer.stride, layer.padding)
            w = layer.weights.reshape(layer.out_channels, -1)
            grads[gidx[id(layer)]] += (
                dz @ cols.transpose(0, 2, 1)).sum(axis=0).reshape(
                    layer.weights.shape)
            dcols = w.T[None] @ dz
            delta = _col2im(dcols, (a.shape[0], layer.in_channels, a.shape[2]),
                            layer.kernel, layer.stride, layer.padding)
    return loss, grads


# ---------------------------------------------------------------------------
# checkpoint files: JSON header + float32 LE blob (weights, then optimizer
# moments when present)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    net = ckpt.network
    header = {
        "format": "evecg-checkpoint",
        "version": 1,
        "epoch": ckpt.epoch,
        "train_accuracy": ckpt.train_accuracy,
        "test_accuracy": ckpt.test_accuracy,
        "loss_history": ckpt.loss_history,
        "best_test_accuracy": ckpt.best_test_accuracy,
        "mean_firing_rates": {str(k): v for k, v in ckpt.mean_firing_rates.items()},
        "config": {
            "epochs": ckpt.config.epochs,
            "batch_size": ckpt.config.batch_size,
            "learning_rate": ckpt.config.learning_rate,
            "optimizer": ckpt.config.optimizer,
            "seed": ckpt.config.seed,
            "surrogate": {"kind": ckpt.config.surrogate.kind,
                          "width": ckpt.config.surrogate.width},
            "self_mod_weight": ckpt.config.self_mod_weight,
            "target_rate_range": list(ckpt.config.target_rate_range),
        },
        "net": {
            "input_length": net.input_length,
            "time_steps": net.time_steps,
            "num_classes": net.num_classes,
            "lif": {"v_threshold": net.lif.v_threshold,
                    "v_reset": net.lif.v_reset,
                    "delta_v": net.lif.delta_v,
                    "leak_mode": net.lif.leak_mode},
            "layers": [_layer_header(l) for l in net.layers],
        },
    }
    blob = b"".join(l.weights.astype("<f4").tobytes() for l in net.weighted_layers())
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(struct.pack("<I", len(raw)))
        f.write(raw)
        f.write(blob)


def load_checkpoint(path: str | Path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if not raw.startswith(CKPT_MAGIC):
        raise ValueError("not an evecg checkpoint file")
    off = len(CKPT_MAGIC)
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    h = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    nh = h["net"]
    layers = []
    for d in nh["layers"]:
        layer = _layer_from_header(d)
        if layer.kind == "SpikingConv1d":
            shape = (layer.out_channels, layer.in_channels, layer.kernel)
        elif layer.kind == "SpikingFC":
            shape = (layer.out_features, layer.in_features)
        else:
            layers.append(layer)
            continue
        nbytes = 4 * int(np.prod(shape))
        w = np.frombuffer(raw[off:off + nbytes], dtype="<f4").reshape(shape)
        off += nbytes
        layers.append(replace(layer, weights=w.astype(np.float64)))
    net = NetworkSpec(layers, LifParams(**nh["lif"]), nh["time_steps"],
                      nh["input_length"], nh["num_classes"])
    cfg = h["config"]
    config = TrainConfig(
        epochs=cfg["epochs"], batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"], optimizer=cfg["optimizer"],
        seed=cfg["seed"],
        surrogate=SurrogateSpec(cfg["surrogate"]["kind"], cfg["surrogate"]["width"]),
        self_mod_weight=cfg["self_mod_weight"],
        target_rate_range=tuple(cfg["target_rate_range"]))
    return Checkpoint(net, h["epoch"], h["train_accuracy"], h["test_accuracy"],
                      h["loss_history"], config, h["best_test_accuracy"],
                      {int(k): v for k, v in h["mean_firing_rates"].items()})
