"""Spiking CNN forward engine: LIF dynamics, spiking conv/pool/FC layers,
and spike-counter classification.

Layers carry their weights; a single shared :class:`LifParams` drives every
LIF activation. The network input is a ternary {-1, 0, +1} frame (the merged
LC-ADC train laid out along the spatial axis) presented at each of the
``time_steps`` simulation steps; all deeper dataflow is strictly binary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"EVECGNET1\n"


class ShapeError(ValueError):
    """Input tensor shape does not match the layer declaration."""


@dataclass(frozen=True)
class LifParams:
    v_threshold: float = 1.0
    v_reset: float = 0.0
    delta_v: float = 0.01
    # 'always': leak applied unconditionally every step (equation-literal);
    # 'silent': leak applied only to neurons receiving zero weighted input
    leak_mode: str = "always"

    def __post_init__(self):
        if self.v_threshold <= self.v_reset:
            raise ValueError("v_threshold must exceed v_reset")
        if self.delta_v < 0:
            raise ValueError("delta_v must be nonnegative")
        if self.leak_mode not in ("always", "silent"):
            raise ValueError(f"unknown leak_mode {self.leak_mode!r}")


@dataclass
class SpikingConv1d:
    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1
    padding: str = "same"  # 'same' (zero pad, stride 1) or 'valid'
    weights: np.ndarray | None = None  # (out_channels, in_channels, kernel)

    kind = "SpikingConv1d"

    def __post_init__(self):
        if self.weights is not None:
            expect = (self.out_channels, self.in_channels, self.kernel)
            if self.weights.shape != expect:
                raise ShapeError(f"conv weights {self.weights.shape} != {expect}")

    def out_length(self, n: int) -> int:
        if self.padding == "same":
            return -(-n // self.stride)
        return (n - self.kernel) // self.stride + 1


@dataclass
class MaxPool1d:
    kernel: int = 2
    stride: int = 2

    kind = "MaxPool1d"

    def out_length(self, n: int) -> int:
        return (n - self.kernel) // self.stride + 1


@dataclass
class SpikingFC:
    in_features: int
    out_features: int
    weights: np.ndarray | None = None  # (out_features, in_features)

    kind = "SpikingFC"

    def __post_init__(self):
        if self.weights is not None:
            expect = (self.out_features, self.in_features)
            if self.weights.shape != expect:
                raise ShapeError(f"fc weights {self.weights.shape} != {expect}")


@dataclass
class SpikeCounter:
    num_classes: int = 4

    kind = "SpikeCounter"


Layer = SpikingConv1d | MaxPool1d | SpikingFC | SpikeCounter


@dataclass
class NetworkSpec:
    layers: list[Layer]
    lif: LifParams
    time_steps: int
    input_length: int
    num_classes: int = 4

    def __post_init__(self):
        if not self.layers or self.layers[-1].kind != "SpikeCounter":
            raise ValueError("final layer must be a SpikeCounter")
        if self.layers[-1].num_classes != self.num_classes:
            raise ValueError("counter width != num_classes")
        if self.time_steps < 1:
            raise ValueError("time_steps must be positive")

    def weighted_layers(self) -> list[SpikingConv1d | SpikingFC]:
        return [l for l in self.layers if l.kind in ("SpikingConv1d", "SpikingFC")]


def default_network(input_length: int, time_steps: int | None = None,
                    lif: LifParams | None = None,
                    conv_channels: tuple[int, ...] = (8, 16, 16, 32, 32),
                    kernel: int = 3, pool_after: tuple[int, ...] = (2, 4),
                    fc_hidden: int = 64, num_classes: int = 4) -> NetworkSpec:
    """Build the default topology: 5 conv (+LIF) with pools after conv 2 and
    conv 4, then FC-hidden (+LIF), FC-out (+LIF) and a spike counter."""
    layers: list[Layer] = []
    n, ch = input_length, 1
    for i, out_ch in enumerate(conv_channels, start=1):
        conv = SpikingConv1d(ch, out_ch, kernel)
        layers.append(conv)
        n, ch = conv.out_length(n), out_ch
        if i in pool_after:
            pool = MaxPool1d()
            layers.append(pool)
            n = pool.out_length(n)
    flat = n * ch
    layers.append(SpikingFC(flat, fc_hidden))
    layers.append(SpikingFC(fc_hidden, num_classes))
    layers.append(SpikeCounter(num_classes))
    return NetworkSpec(layers, lif or LifParams(),
                       time_steps or input_length, input_length, num_classes)


def init_weights(net: NetworkSpec, seed: int, scale: float = 3.0) -> NetworkSpec:
    """Fill every weighted layer with scale * U(-sqrt(1/fan_in), +sqrt(1/fan_in)).

    The default supra-unit scale matters for the spiking network: at the
    classical bound the weighted sums of sparse spike input rarely reach
    the firing threshold and deep layers are born silent (no gradient ever
    revives them under a local surrogate). 3x puts every layer inside the
    active band at initialization; the ReLU baseline is insensitive to it.
    """
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    for layer in net.layers:
        if layer.kind == "SpikingConv1d":
            fan_in = layer.in_channels * layer.kernel
            w = rng.uniform(-1, 1, (layer.out_channels, layer.in_channels,
                                    layer.kernel)) * (scale * np.sqrt(1.0 / fan_in))
            layers.append(replace(layer, weights=w))
        elif layer.kind == "SpikingFC":
            w = rng.uniform(-1, 1, (layer.out_features, layer.in_features)) \
                * (scale * np.sqrt(1.0 / layer.in_features))
            layers.append(replace(layer, weights=w))
        else:
            layers.append(layer)
    return replace(net, layers=layers)


# ---------------------------------------------------------------------------
# layer forward passes


def _im2col(x: np.ndarray, kernel: int, stride: int, padding: str) -> np.ndarray:
    """(B, C, L) -> (B, C*kernel, P) patch matrix."""
    b, c, n = x.shape
    if padding == "same":
        if stride != 1:
            raise ShapeError("'same' padding implemented for stride 1 only")
        lo = (kernel - 1) // 2
        x = np.pad(x, ((0, 0), (0, 0), (lo, kernel - 1 - lo)))
        n = x.shape[2]
    p = (n - kernel) // stride + 1
    strided = np.lib.stride_tricks.sliding_window_view(x, kernel, axis=2)
    cols = strided[:, :, ::stride, :]  # (B, C, P, K)
    return cols.transpose(0, 1, 3, 2).reshape(b, c * kernel, p)


def conv1d_spiking_forward(x: np.ndarray, layer: SpikingConv1d) -> np.ndarray:
    """Weighted input sums of a spiking conv layer; x is (B, C, L).

    For ternary input the sums are formed by conditional accumulation:
    weights are gathered (added where the spike is +1, subtracted where -1)
    with no multiplications by data values. Real-valued input (the Nyquist
    baseline variant) falls back to a dense multiply-accumulate.
    """
    if x.ndim != 3 or x.shape[1] != layer.in_channels:
        raise ShapeError(f"expected (B, {layer.in_channels}, L), got {x.shape}")
    w = layer.weights.reshape(layer.out_channels, -1)
    if x.dtype.kind in "iub":
        pos = _im2col((x == 1).astype(np.float64), layer.kernel, layer.stride,
                      layer.padding)
        out = w @ pos
        if (x == -1).any():
            neg = _im2col((x == -1).astype(np.float64), layer.kernel,
                          layer.stride, layer.padding)
            out -= w @ neg
        return out
    cols = _im2col(x.astype(np.float64), layer.kernel, layer.stride, layer.padding)
    return w @ cols


def maxpool_forward(x: np.ndarray, layer: MaxPool1d) -> np.ndarray:
    """Max over each pooling window; on binary spikes this is a logical OR.

    Returns (pooled, argmax) where argmax holds the within-window offset of
    the selected element (first maximum), used for gradient routing.
    """
    b, c, n = x.shape
    if n < layer.kernel:
        raise ShapeError(f"length {n} shorter than pool kernel {layer.kernel}")
    p = layer.out_length(n)
    strided = np.lib.stride_tricks.sliding_window_view(x, layer.kernel, axis=2)
    win = strided[:, :, ::layer.stride, :][:, :, :p, :]
    arg = win.argmax(axis=3)
    pooled = np.take_along_axis(win, arg[..., None], axis=3)[..., 0]
    return pooled, arg


def fc_forward(x: np.ndarray, layer: SpikingFC) -> np.ndarray:
    """Weighted input sums of a spiking FC layer; x is (B, in_features)."""
    if x.ndim != 2 or x.shape[1] != layer.in_features:
        raise ShapeError(f"expected (B, {layer.in_features}), got {x.shape}")
    return x.astype(np.float64) @ layer.weights.T


def lif_step(v_mem: np.ndarray, weighted_input: np.ndarray, params: LifParams,
             ) -> tuple[np.ndarray, np.ndarray]:
    """One membrane update: integrate, leak, clamp at reset, fire-and-reset.

    Returns (new membrane potential, binary spike array).
    """
    if params.leak_mode == "silent":
        leak = np.where(weighted_input == 0, params.delta_v, 0.0)
    else:
        leak = params.delta_v
    u = np.maximum(v_mem + weighted_input - leak, params.v_reset)
    spikes = (u >= params.v_threshold).astype(np.float64)
    v_new = np.where(spikes == 1.0, params.v_reset, u)
    return v_new, spikes


def init_states(net: NetworkSpec, batch: int) -> list[np.ndarray | None]:
    """Fresh membrane state (at v_reset) for every LIF activation, indexed by
    layer position; non-LIF layers hold None."""
    states: list[np.ndarray | None] = []
    n = net.input_length
    ch = 1
    for layer in net.layers:
        if layer.kind == "SpikingConv1d":
            n, ch = layer.out_length(n), layer.out_channels
            states.append(np.full((batch, ch, n), net.lif.v_reset))
        elif layer.kind == "MaxPool1d":
            n = layer.out_length(n)
            states.append(None)
        elif layer.kind == "SpikingFC":
            states.append(np.full((batch, layer.out_features), net.lif.v_reset))
        else:
            states.append(None)
    return states


def network_forward(input_frames: np.ndarray, net: NetworkSpec,
                    check_binary: bool = False) -> np.ndarray:
    """Run the full simulation and return per-class spike counts.

    ``input_frames`` is (B, 1, L) — a static frame presented at every time
    step — or (T, B, 1, L) for per-step frames. States start at v_reset and
    the counter accumulates output-layer spikes over all steps.
    """
    static = input_frames.ndim == 3
    if static:
        b = input_frames.shape[0]
    elif input_frames.ndim == 4:
        if input_frames.shape[0] != net.time_steps:
            raise ShapeError("per-step input must have time_steps frames")
        b = input_frames.shape[1]
    else:
        raise ShapeError(f"expected 3- or 4-d input, got shape {input_frames.shape}")
    states = init_states(net, b)
    counts = np.zeros((b, net.num_classes))
    for t in range(net.time_steps):
        x = input_frames if static else input_frames[t]
        for li, layer in enumerate(net.layers):
            if layer.kind == "SpikingConv1d":
                z = conv1d_spiking_forward(x, layer)
                states[li], s = lif_step(states[li], z, net.lif)
                x = s.astype(np.int8)  # binary spikes onward
            elif layer.kind == "MaxPool1d":
                x, _ = maxpool_forward(x, layer)
            elif layer.kind == "SpikingFC":
                if x.ndim == 3:
                    x = x.reshape(x.shape[0], -1)
                z = fc_forward(x, layer)
                states[li], s = lif_step(states[li], z, net.lif)
                x = s.astype(np.int8)
            else:
                counts += x
            if check_binary and layer.kind != "SpikeCounter":
                assert np.isin(np.unique(x), (0.0, 1.0)).all(), \
                    "non-binary inter-layer dataflow"
    return counts.astype(np.int64)


def spike_counter_classify(counts: np.ndarray) -> int | np.ndarray:
    """Argmax over per-class spike counts; ties go to the lowest index."""
    counts = np.asarray(counts)
    if counts.ndim == 1:
        return int(np.argmax(counts))
    return np.argmax(counts, axis=-1)


# ---------------------------------------------------------------------------
# checkpoint serialization: versioned JSON header + float32 LE weight blob


def _layer_header(layer: Layer) -> dict:
    d = {"kind": layer.kind}
    if layer.kind == "SpikingConv1d":
        d.update(in_channels=layer.in_channels, out_channels=layer.out_channels,
                 kernel=layer.kernel, stride=layer.stride, padding=layer.padding)
    elif layer.kind == "MaxPool1d":
        d.update(kernel=layer.kernel, stride=layer.stride)
    elif layer.kind == "SpikingFC":
        d.update(in_features=layer.in_features, out_features=layer.out_features)
    else:
        d.update(num_classes=layer.num_classes)
    return d


def _layer_from_header(d: dict) -> Layer:
    kind = d["kind"]
    if kind == "SpikingConv1d":
        return SpikingConv1d(d["in_channels"], d["out_channels"], d["kernel"],
                             d["stride"], d["padding"])
    if kind == "MaxPool1d":
        return MaxPool1d(d["kernel"], d["stride"])
    if kind == "SpikingFC":
        return SpikingFC(d["in_features"], d["out_features"])
    if kind == "SpikeCounter":
        return SpikeCounter(d["num_classes"])
    raise ValueError(f"unknown layer kind {kind!r}")


def save_network(path: str | Path, net: NetworkSpec, extra: dict | None = None) -> None:
    """Write magic, LE uint32 header length, UTF-8 JSON header, then all
    weight arrays concatenated as little-endian float32 in layer order."""
    header = {
        "format": "evecg-network",
        "version": 1,
        "input_length": net.input_length,
        "time_steps": net.time_steps,
        "num_classes": net.num_classes,
        "lif": {"v_threshold": net.lif.v_threshold, "v_reset": net.lif.v_reset,
                "delta_v": net.lif.delta_v, "leak_mode": net.lif.leak_mode},
        "layers": [_layer_header(l) for l in net.layers],
    }
    if extra:
        header["extra"] = extra
    blob = b"".join(l.weights.astype("<f4").tobytes()
                    for l in net.weighted_layers())
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(raw)))
        f.write(raw)
        f.write(blob)


def load_network(path: str | Path) -> tuple[NetworkSpec, dict]:
    """Inverse of :func:`save_network`; returns (net, extra-header dict)."""
    raw = Path(path).read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ValueError("not an evecg network file")
    off = len(CHECKPOINT_MAGIC)
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    if header.get("version") != 1:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    lif = LifParams(**header["lif"])
    layers = [_layer_from_header(d) for d in header["layers"]]
    filled: list[Layer] = []
    for layer in layers:
        if layer.kind == "SpikingConv1d":
            shape = (layer.out_channels, layer.in_channels, layer.kernel)
        elif layer.kind == "SpikingFC":
            shape = (layer.out_features, layer.in_features)
        else:
            filled.append(layer)
            continue
        nbytes = 4 * int(np.prod(shape))
        w = np.frombuffer(raw[off:off + nbytes], dtype="<f4").reshape(shape)
        off += nbytes
        filled.append(replace(layer, weights=w.astype(np.float64)))
    net = NetworkSpec(filled, lif, header["time_steps"], header["input_length"],
                      header["num_classes"])
    return net, header.get("extra", {})
