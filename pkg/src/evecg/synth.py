"""Synthetic two-channel ECG corpus written in WFDB format 212.

Beats are sums of Gaussian waves (P/Q/R/S/T) with class-dependent
morphology and timing, on top of baseline wander, a per-record DC offset
and additive noise. Used when the MIT-BIH corpus is not available: the
four generated beat types are morphologically separable stand-ins for the
AAMI N / SVEB / VEB / F classes, annotated with the matching MIT-BIH
symbols ('N'/'L', 'A', 'V', 'F').
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import wfdb212

FS = 360
ADC_GAIN = 200.0
ADC_ZERO = 1024

_CLASSES = ("N", "SVEB", "VEB", "F")
# mean RR interval in seconds preceding a beat of this class
_RR_MEAN = {"N": 0.82, "SVEB": 0.58, "VEB": 0.62, "F": 0.72}


def _sample_waves(label: str, rng: np.random.Generator,
                  ) -> list[tuple[float, float, float]]:
    """Per-beat (amplitude mV, center offset s, width s) Gaussian components.

    Amplitude distributions deliberately overlap between classes (P waves are
    fractions of a coarse quantization step; R amplitudes share a common
    spread) so that class identity rides on wave widths and timing — the
    morphology that survives a slope-sensitive encoding — rather than on
    fine amplitude detail.
    """
    if label == "N":
        return [(rng.uniform(0.06, 0.26), -0.18, 0.025),
                (rng.normal(-0.19, 0.04), -0.035, 0.012),
                (rng.normal(2.0, 0.34), 0.0, 0.016),
                (rng.normal(-0.42, 0.09), 0.035, 0.013),
                (rng.uniform(0.35, 0.75), 0.22, 0.050)]
    if label == "SVEB":
        # aberrant supraventricular: small/absent P, slightly broadened
        # QRS and earlier T; R amplitude drawn from the same spread as N
        return [(rng.uniform(0.0, 0.19), -0.16, 0.025),
                (rng.normal(-0.19, 0.04), -0.035, 0.012),
                (rng.normal(2.0, 0.34), 0.0, 0.023),
                (rng.normal(-0.42, 0.09), 0.045, 0.018),
                (rng.uniform(0.30, 0.68), 0.19, 0.042)]
    if label == "VEB":
        # ventricular ectopic: no P, wide tall R, deep slurred S,
        # discordant T
        return [(rng.normal(2.75, 0.38), 0.0, 0.055),
                (rng.normal(-1.05, 0.19), 0.075, 0.040),
                (rng.normal(-0.72, 0.13), 0.26, 0.060)]
    # fusion: a convex mixture of a normal and a ventricular complex with
    # a per-beat mixing degree, overlapping both parents at the extremes
    a = rng.uniform(0.30, 0.55)
    n_waves = _sample_waves("N", rng)
    v_waves = _sample_waves("VEB", rng)
    return ([(amp * (1.0 - a), mu, s) for amp, mu, s in n_waves]
            + [(amp * a, mu, 0.8 * s) for amp, mu, s in v_waves])

# symbol written into the annotation file per class (some N beats are
# emitted as 'L' so the AAMI mapping sees more than one source symbol)
_SYMBOLS = {"N": ("N", "N", "N", "L"), "SVEB": ("A",), "VEB": ("V",), "F": ("F",)}


def synth_beat_mv(label: str, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One beat's waveform on time axis ``t`` (seconds, 0 = R peak)."""
    amp_scale = 1.0 + 0.15 * rng.standard_normal()
    width_scale = 1.0 + 0.08 * rng.standard_normal()
    out = np.zeros_like(t)
    for amp, mu, sigma in _sample_waves(label, rng):
        out += amp * amp_scale * np.exp(-0.5 * ((t - mu) / (sigma * width_scale)) ** 2)
    return out


def synth_record(record_id: str, n_beats: int, seed: int,
                 class_mix: dict[str, float] | None = None,
                 ) -> tuple[np.ndarray, np.ndarray, list[tuple[int, str]]]:
    """Generate two channels of ADC counts plus (index, symbol) annotations."""
    rng = np.random.default_rng(seed)
    labels = list(_CLASSES)
    probs = np.array([(class_mix or {}).get(c, 0.25) for c in labels], dtype=float)
    probs /= probs.sum()

    beat_labels = [labels[i] for i in rng.choice(len(labels), size=n_beats, p=probs)]
    rr = np.array([_RR_MEAN[c] * (1.0 + 0.08 * rng.standard_normal())
                   for c in beat_labels])
    centers_s = 0.6 + np.cumsum(rr)
    n = int((centers_s[-1] + 0.8) * FS)
    tt = np.arange(n) / FS

    mv = np.zeros(n)
    anns: list[tuple[int, str]] = []
    for label, c in zip(beat_labels, centers_s):
        idx = int(round(c * FS))
        lo = max(0, idx - int(0.35 * FS))
        hi = min(n, idx + int(0.45 * FS))
        mv[lo:hi] += synth_beat_mv(label, tt[lo:hi] - c, rng)
        syms = _SYMBOLS[label]
        anns.append((idx, syms[rng.integers(len(syms))]))

    # baseline wander (respiration-band, frequencies randomized per record so
    # it cannot be learned as a fixed pattern) + per-record DC offset; the
    # level-crossing front end is insensitive to both, an amplitude-domain
    # classifier is not
    wander = (rng.uniform(0.25, 0.45)
              * np.sin(2 * np.pi * rng.uniform(0.15, 0.35) * tt
                       + rng.uniform(0, 2 * np.pi))
              + rng.uniform(0.12, 0.25)
              * np.sin(2 * np.pi * rng.uniform(0.05, 0.12) * tt
                       + rng.uniform(0, 2 * np.pi)))
    offset = rng.uniform(-1.2, 1.2)
    ch0_mv = mv + wander + offset + 0.03 * rng.standard_normal(n)
    ch1_mv = 0.6 * mv - 0.5 * wander + offset + 0.03 * rng.standard_normal(n)

    def to_counts(x):
        return np.clip(np.round(x * ADC_GAIN + ADC_ZERO), -2048, 2047).astype(np.int32)

    # sprinkle rhythm-change marks to exercise non-beat filtering
    by_index = {int(rng.integers(0, n)): "+" for _ in range(3)}
    by_index.update({idx: sym for idx, sym in anns})  # beats win collisions
    all_anns = sorted(by_index.items())
    return to_counts(ch0_mv), to_counts(ch1_mv), all_anns


def write_record(corpus_dir: str | Path, record_id: str, ch0: np.ndarray,
                 ch1: np.ndarray, anns: list[tuple[int, str]]) -> None:
    d = Path(corpus_dir)
    d.mkdir(parents=True, exist_ok=True)
    n = ch0.shape[0]
    header = (f"{record_id} 2 {FS} {n}\n"
              f"{record_id}.dat 212 {ADC_GAIN:g} 11 {ADC_ZERO} 0 0 0 ch0\n"
              f"{record_id}.dat 212 {ADC_GAIN:g} 11 {ADC_ZERO} 0 0 0 ch1\n")
    (d / f"{record_id}.hea").write_text(header)
    (d / f"{record_id}.dat").write_bytes(wfdb212.encode_212(ch0, ch1))
    (d / f"{record_id}.atr").write_bytes(wfdb212.encode_annotation_bytes(anns))


def make_corpus(corpus_dir: str | Path, n_records: int = 6,
                beats_per_record: int = 700, seed: int = 2024) -> list[str]:
    """Write a balanced synthetic corpus; returns the record ids."""
    ids = []
    for k in range(n_records):
        rid = f"s{100 + k}"
        ch0, ch1, anns = synth_record(rid, beats_per_record, seed=seed * 1000 + k)
        write_record(corpus_dir, rid, ch0, ch1, anns)
        ids.append(rid)
    return ids
