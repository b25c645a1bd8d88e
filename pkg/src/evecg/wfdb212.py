"""WFDB format-212 signal and MIT annotation file codecs.

Only the subset of WFDB needed for two-channel MIT-BIH style records is
supported: ASCII headers declaring two format-212 signals, the packed
12-bit signal encoding (two samples per 3 bytes), and the 2-byte-word
annotation stream with SKIP/NUM/SUB/CHN/AUX escapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    """Malformed header, signal, or annotation bytes."""


class UnsupportedFormat(ParseError):
    """Header declares a signal format other than 212."""


# Annotation type codes from the WFDB library's annot.c / ecgcodes.h.
# Only the printable beat/non-beat symbols; escape codes 59-63 are handled
# structurally by the parser.
ANN_CODE_TO_SYMBOL = {
    1: "N", 2: "L", 3: "R", 4: "a", 5: "V", 6: "F", 7: "J", 8: "A",
    9: "S", 10: "E", 11: "j", 12: "/", 13: "Q", 14: "~", 16: "|",
    18: "s", 19: "T", 20: "*", 21: "D", 22: '"', 23: "=", 24: "p",
    25: "B", 26: "^", 27: "t", 28: "+", 29: "u", 30: "?", 31: "!",
    32: "[", 33: "]", 34: "e", 35: "n", 36: "@", 37: "x", 38: "f",
    39: "(", 40: ")", 41: "r",
}
ANN_SYMBOL_TO_CODE = {s: c for c, s in ANN_CODE_TO_SYMBOL.items()}

_SKIP, _NUM, _SUB, _CHN, _AUX = 59, 60, 61, 62, 63


@dataclass
class HeaderInfo:
    """Fields read from a .hea file (two-signal format-212 records only)."""

    record_id: str
    n_signals: int
    sampling_rate_hz: int
    n_samples: int
    adc_gain: float
    adc_zero: int
    adc_resolution_bits: int


def parse_header(header_bytes: bytes) -> HeaderInfo:
    """Parse an ASCII WFDB header declaring exactly two format-212 signals."""
    try:
        text = header_bytes.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"header is not ASCII: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty header")
    rec = lines[0].split()
    if len(rec) < 4:
        raise ParseError(f"record line needs >=4 fields, got {rec!r}")
    record_id = rec[0].split("/")[0]
    try:
        n_signals = int(rec[1])
        fs = int(float(rec[2].split("/")[0]))
        n_samples = int(rec[3])
    except ValueError as exc:
        raise ParseError(f"bad record line {lines[0]!r}") from exc
    if n_signals != 2:
        raise ParseError(f"expected 2 signals, header declares {n_signals}")
    if len(lines) < 1 + n_signals:
        raise ParseError("missing signal specification lines")

    gain = adc_zero = res = None
    for ln in lines[1:1 + n_signals]:
        f = ln.split()
        if len(f) < 3:
            raise ParseError(f"bad signal line {ln!r}")
        fmt = f[1]
        if fmt.split("x")[0].split(":")[0].split("+")[0] != "212":
            raise UnsupportedFormat(f"signal format {fmt!r} is not 212")
        # gain field may look like "200", "200/mV" or "200(1024)/mV"
        gain_field = f[2].split("/")[0]
        baseline = None
        if "(" in gain_field:
            gain_field, rest = gain_field.split("(")
            baseline = int(rest.rstrip(")"))
        g = float(gain_field) if gain_field else 200.0
        if g == 0:
            g = 200.0  # WFDB convention: 0 means unspecified, default 200
        r = int(f[3]) if len(f) > 3 else 12
        z = int(f[4]) if len(f) > 4 else (baseline if baseline is not None else 0)
        if gain is None:
            gain, adc_zero, res = g, z, r
    return HeaderInfo(record_id, n_signals, fs, n_samples, gain, adc_zero, res)


def decode_212(signal_bytes: bytes, n_samples: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Decode packed format-212 bytes into two int arrays of ADC counts.

    Each 3-byte group (b0, b1, b2) holds two 12-bit two's-complement
    samples: s0 = ((b1 & 0x0F) << 8) | b0 and s1 = ((b1 & 0xF0) << 4) | b2.
    ``n_samples`` trims per-channel length (files are padded to whole
    3-byte groups).
    """
    if len(signal_bytes) % 3 != 0:
        raise ParseError(f"signal byte count {len(signal_bytes)} is not a multiple of 3")
    b = np.frombuffer(signal_bytes, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
    s0 = ((b[:, 1] & 0x0F) << 8) | b[:, 0]
    s1 = ((b[:, 1] & 0xF0) << 4) | b[:, 2]
    s0 = np.where(s0 >= 2048, s0 - 4096, s0)
    s1 = np.where(s1 >= 2048, s1 - 4096, s1)
    if n_samples is not None:
        if n_samples > s0.shape[0]:
            raise ParseError(
                f"header declares {n_samples} samples but file holds {s0.shape[0]}")
        s0, s1 = s0[:n_samples], s1[:n_samples]
    return s0, s1


def encode_212(ch0: np.ndarray, ch1: np.ndarray) -> bytes:
    """Inverse of :func:`decode_212`; channels must have equal length."""
    ch0 = np.asarray(ch0, dtype=np.int64)
    ch1 = np.asarray(ch1, dtype=np.int64)
    if ch0.shape != ch1.shape:
        raise ValueError("channel length mismatch")
    if ch0.size and (min(ch0.min(), ch1.min()) < -2048 or max(ch0.max(), ch1.max()) > 2047):
        raise ValueError("sample out of 12-bit range")
    u0 = np.where(ch0 < 0, ch0 + 4096, ch0)
    u1 = np.where(ch1 < 0, ch1 + 4096, ch1)
    out = np.empty((ch0.size, 3), dtype=np.uint8)
    out[:, 0] = u0 & 0xFF
    out[:, 1] = ((u0 >> 8) & 0x0F) | (((u1 >> 8) & 0x0F) << 4)
    out[:, 2] = u1 & 0xFF
    return out.tobytes()


def parse_annotation_bytes(annotation_bytes: bytes) -> list[tuple[int, str]]:
    """Decode a MIT annotation stream into (sample_index, symbol) pairs.

    Words are 2 bytes: low 10 bits of the pair are a time increment, high
    6 bits of the second byte the type code. SKIP carries a 4-byte long
    increment; NUM/SUB/CHN modify the previous annotation and AUX carries
    a padded string -- all three are skipped here.
    """
    raw = annotation_bytes
    if len(raw) % 2 != 0:
        raise ParseError("annotation stream has odd byte count")
    out: list[tuple[int, str]] = []
    t = 0
    i = 0
    n = len(raw)
    while i + 1 < n:
        b0, b1 = raw[i], raw[i + 1]
        code = b1 >> 2
        dt = ((b1 & 0x03) << 8) | b0
        if code == 0 and dt == 0:
            break  # end-of-stream word
        if code == _SKIP:
            if i + 6 > n:
                raise ParseError("dangling SKIP escape at end of stream")
            t += (raw[i + 3] << 24) | (raw[i + 2] << 16) | (raw[i + 5] << 8) | raw[i + 4]
            i += 6
            continue
        if code == _AUX:
            skip = dt + (dt & 1)  # aux strings are padded to even length
            if i + 2 + skip > n:
                raise ParseError("dangling AUX escape at end of stream")
            i += 2 + skip
            continue
        if code in (_NUM, _SUB, _CHN):
            i += 2
            continue
        t += dt
        out.append((t, ANN_CODE_TO_SYMBOL.get(code, "?")))
        i += 2
    return out


def encode_annotation_bytes(annotations: list[tuple[int, str]]) -> bytes:
    """Encode (sample_index, symbol) pairs as a MIT annotation stream.

    Increments above 1023 are emitted as a SKIP escape followed by a
    zero-increment typed word.
    """
    out = bytearray()
    prev = 0
    for idx, sym in annotations:
        code = ANN_SYMBOL_TO_CODE.get(sym)
        if code is None:
            raise ValueError(f"symbol {sym!r} has no annotation code")
        dt = idx - prev
        if dt < 0:
            raise ValueError("annotation indices must be nondecreasing")
        if dt > 1023:
            out += bytes([0, _SKIP << 2,
                          (dt >> 16) & 0xFF, (dt >> 24) & 0xFF,
                          dt & 0xFF, (dt >> 8) & 0xFF])
            dt = 0
        out += bytes([dt & 0xFF, (code << 2) | ((dt >> 8) & 0x03)])
        prev = idx
    out += bytes([0, 0])
    return bytes(out)
