"""Behavioral model of a clocked level-crossing ADC.

The converter walks the Nyquist-sampled waveform keeping a reference
value; whenever the current sample differs from the reference by at least
one LSB it emits a REQ spike (with DIR marking upward movement) and moves
the reference. REQ/DIR streams merge into a ternary {-1, 0, +1} train,
one slot per Nyquist tick.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class EmptyInput(ValueError):
    """Raised when the sampler is handed a zero-length signal."""


@dataclass(frozen=True)
class LcAdcConfig:
    a_fs_mv: float = 10.0
    resolution_bits: int = 5
    clock_hz: int = 360
    multi_spike: bool = False
    # 'sample': reference moves to the present sample value (default);
    # 'level': reference advances by whole LSB multiples only
    ref_mode: str = "sample"

    def __post_init__(self):
        if not 1 <= self.resolution_bits <= 16:
            raise ValueError(f"resolution_bits {self.resolution_bits} outside [1, 16]")
        if self.a_fs_mv <= 0:
            raise ValueError("a_fs_mv must be positive")
        if self.ref_mode not in ("sample", "level"):
            raise ValueError(f"unknown ref_mode {self.ref_mode!r}")

    @property
    def lsb_mv(self) -> float:
        return compute_lsb(self)


def compute_lsb(config: LcAdcConfig) -> float:
    """LSB in mV: full-scale range divided by the 2^M quantization levels."""
    return config.a_fs_mv / (2 ** config.resolution_bits)


@dataclass
class SpikeStreams:
    req: np.ndarray  # bool, one slot per Nyquist tick
    dir: np.ndarray  # bool, meaningful only where req is set
    magnitudes: np.ndarray | None = None  # crossing counts, multi_spike only


@dataclass
class TernarySpikeTrain:
    values: np.ndarray  # int8 over {-1, 0, +1}; wider ints when multi_spike

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass
class CompressionStats:
    nyquist_points: int
    spike_points: int

    @property
    def normalized_points(self) -> float:
        return self.spike_points / self.nyquist_points

    @property
    def reduction(self) -> float:
        return 1.0 - self.normalized_points


def sample(signal_mv: np.ndarray, config: LcAdcConfig) -> SpikeStreams:
    """Run the level-crossing comparison over one signal.

    The first sample seeds the reference and never fires. A tick fires when
    |sample - reference| >= LSB (exact comparison, no epsilon); the
    reference then moves per ``config.ref_mode``.
    """
    sig = np.asarray(signal_mv, dtype=np.float64)
    if sig.size == 0:
        raise EmptyInput("cannot sample an empty signal")
    lsb = compute_lsb(config)
    n = sig.shape[0]
    req = np.zeros(n, dtype=bool)
    dirs = np.zeros(n, dtype=bool)
    mags = np.zeros(n, dtype=np.int32) if config.multi_spike else None
    snap = config.ref_mode == "level"
    ref = sig[0]
    vals = sig.tolist()  # plain floats: the tick loop is serial anyway
    for i in range(1, n):
        delta = vals[i] - ref
        if delta >= lsb or -delta >= lsb:
            req[i] = True
            dirs[i] = delta > 0
            k = int(abs(delta) // lsb)
            if mags is not None:
                mags[i] = k
            ref = ref + (k * lsb if delta > 0 else -k * lsb) if snap else vals[i]
    return SpikeStreams(req, dirs, mags)


def merge_req_dir(streams: SpikeStreams, config: LcAdcConfig) -> TernarySpikeTrain:
    """Fold REQ/DIR (and magnitudes, in multi-spike mode) into one signed row."""
    if streams.req.shape != streams.dir.shape:
        raise ValueError("req/dir length mismatch")
    sign = np.where(streams.dir, 1, -1)
    if config.multi_spike:
        if streams.magnitudes is None:
            raise ValueError("multi_spike merge needs magnitudes from sampling")
        values = np.where(streams.req, sign * streams.magnitudes, 0).astype(np.int32)
    else:
        values = np.where(streams.req, sign, 0).astype(np.int8)
    return TernarySpikeTrain(values)


def encode(signal_mv: np.ndarray, config: LcAdcConfig) -> TernarySpikeTrain:
    return merge_req_dir(sample(signal_mv, config), config)


def batch_encode(signals_mv: np.ndarray, config: LcAdcConfig) -> np.ndarray:
    """Vectorized single-spike encoding of equal-length windows.

    ``signals_mv`` is (n_windows, length); each row is encoded independently
    with its first sample as the reference. Matches :func:`encode` row by row
    (asserted in the test suite). Not available in multi-spike mode.
    """
    if config.multi_spike:
        raise ValueError("batch_encode supports single-spike mode only")
    sig = np.asarray(signals_mv, dtype=np.float64)
    if sig.ndim != 2 or sig.shape[1] == 0:
        raise EmptyInput("need a (n_windows, length>0) array")
    lsb = compute_lsb(config)
    snap = config.ref_mode == "level"
    out = np.zeros(sig.shape, dtype=np.int8)
    ref = sig[:, 0].copy()
    for i in range(1, sig.shape[1]):
        delta = sig[:, i] - ref
        fired = np.abs(delta) >= lsb
        sign = np.where(delta > 0, 1, -1)
        out[fired, i] = sign[fired]
        if snap:
            step = sign * (np.abs(delta) // lsb) * lsb
            ref = np.where(fired, ref + step, ref)
        else:
            ref = np.where(fired, sig[:, i], ref)
    return out


def compression_stats(train: TernarySpikeTrain) -> CompressionStats:
    n = len(train)
    if n == 0:
        raise EmptyInput("cannot compute stats of an empty train")
    return CompressionStats(n, int(np.count_nonzero(train.values)))


def bin_train(values: np.ndarray, factor: int) -> np.ndarray:
    """Merge ``factor`` consecutive ticks by the sign of their net movement.

    Trailing ticks that do not fill a bin are dropped. factor 1 is identity.
    """
    if factor < 1:
        raise ValueError("bin factor must be >= 1")
    if factor == 1:
        return values
    n = (values.shape[-1] // factor) * factor
    sums = values[..., :n].reshape(*values.shape[:-1], -1, factor).sum(axis=-1)
    return np.sign(sums).astype(np.int8)


def to_rle_json(train: TernarySpikeTrain) -> str:
    """Run-length JSON: total length plus the (index, sign) event list."""
    idx = np.flatnonzero(train.values)
    events = [{"index": int(i), "sign": int(train.values[i])} for i in idx]
    return json.dumps({"length": len(train), "events": events}, sort_keys=True)


def from_rle_json(text: str) -> TernarySpikeTrain:
    obj = json.loads(text)
    values = np.zeros(obj["length"], dtype=np.int32)
    for ev in obj["events"]:
        values[ev["index"]] = ev["sign"]
    if np.all(np.abs(values) <= 1):
        values = values.astype(np.int8)
    return TernarySpikeTrain(values)
