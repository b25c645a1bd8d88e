"""MIT-BIH ingestion: record loading, AAMI labeling, beat segmentation, splits.

Records are read either from the binary WFDB distribution files
(.hea/.dat/.atr, format 212) or from a plain-text fallback
(``<id>.csv`` with one ``ch0,ch1`` count pair per row and
``<id>.ann.csv`` with ``sample_index,symbol`` rows).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import wfdb212
from .wfdb212 import ParseError

# AAMI beat classes used throughout; Q and NonBeat never reach a dataset.
AAMI_CLASSES = ("N", "SVEB", "VEB", "F")
CLASS_TO_INDEX = {c: i for i, c in enumerate(AAMI_CLASSES)}

_AAMI_MAP = {
    "N": "N", "L": "N", "R": "N", "e": "N", "j": "N",
    "A": "SVEB", "a": "SVEB", "J": "SVEB", "S": "SVEB",
    "V": "VEB", "E": "VEB",
    "F": "F",
    "Q": "Q", "/": "Q", "f": "Q",
}


class InsufficientData(ValueError):
    def __init__(self, aami_class: str, available: int):
        super().__init__(f"class {aami_class} has only {available} windows")
        self.aami_class = aami_class
        self.available = available


def map_to_aami(symbol: str) -> str:
    """Total mapping from a MIT-BIH beat code to an AAMI class name.

    Returns one of N, SVEB, VEB, F, Q or "NonBeat" for every other symbol.
    """
    return _AAMI_MAP.get(symbol, "NonBeat")


@dataclass
class BeatAnnotation:
    sample_index: int
    symbol: str
    aami_class: str = field(init=False)

    def __post_init__(self):
        self.aami_class = map_to_aami(self.symbol)


@dataclass
class EcgRecord:
    """A digitized two-channel recording plus beat annotations."""

    record_id: str
    sampling_rate_hz: int
    adc_resolution_bits: int
    adc_gain: float
    adc_zero: int
    channels: tuple[np.ndarray, np.ndarray]
    annotations: list[BeatAnnotation]

    def __post_init__(self):
        if self.channels[0].shape != self.channels[1].shape:
            raise ValueError("channel length mismatch")
        n = self.channels[0].shape[0]
        for ann in self.annotations:
            if not 0 <= ann.sample_index < n:
                raise ValueError(
                    f"annotation index {ann.sample_index} outside [0, {n})")

    def __len__(self) -> int:
        return self.channels[0].shape[0]


@dataclass
class BeatWindow:
    record_id: str
    center_index: int
    samples_mv: np.ndarray
    label: str  # one of AAMI_CLASSES


@dataclass
class DatasetSplit:
    train: list[BeatWindow]
    test: list[BeatWindow]
    seed: int


def parse_wfdb_212(header_bytes: bytes, signal_bytes: bytes) -> EcgRecord:
    """Build an (annotation-free) EcgRecord from raw .hea and .dat bytes."""
    hdr = wfdb212.parse_header(header_bytes)
    ch0, ch1 = wfdb212.decode_212(signal_bytes, hdr.n_samples)
    return EcgRecord(
        record_id=hdr.record_id,
        sampling_rate_hz=hdr.sampling_rate_hz,
        adc_resolution_bits=hdr.adc_resolution_bits,
        adc_gain=hdr.adc_gain,
        adc_zero=hdr.adc_zero,
        channels=(ch0, ch1),
        annotations=[],
    )


def parse_annotations(annotation_bytes: bytes) -> list[BeatAnnotation]:
    anns = [BeatAnnotation(i, s) for i, s in wfdb212.parse_annotation_bytes(annotation_bytes)]
    for a, b in zip(anns, anns[1:]):
        if b.sample_index <= a.sample_index:
            raise ParseError("annotation indices are not strictly increasing")
    return anns


def load_record(corpus_dir: str | Path, record_id: str) -> EcgRecord:
    """Load one record from WFDB files, falling back to the CSV format."""
    d = Path(corpus_dir)
    hea = d / f"{record_id}.hea"
    if hea.exists():
        rec = parse_wfdb_212(hea.read_bytes(), (d / f"{record_id}.dat").read_bytes())
        atr = d / f"{record_id}.atr"
        if atr.exists():
            anns = parse_annotations(atr.read_bytes())
            rec = EcgRecord(rec.record_id, rec.sampling_rate_hz,
                            rec.adc_resolution_bits, rec.adc_gain, rec.adc_zero,
                            rec.channels, anns)
        return rec
    csv_path = d / f"{record_id}.csv"
    if csv_path.exists():
        return _load_csv_record(d, record_id)
    raise FileNotFoundError(f"no .hea or .csv file for record {record_id} in {d}")


def _load_csv_record(d: Path, record_id: str) -> EcgRecord:
    counts = np.loadtxt(d / f"{record_id}.csv", delimiter=",", dtype=np.int32, ndmin=2)
    if counts.shape[1] != 2:
        raise ParseError(f"{record_id}.csv must have two columns")
    anns = []
    ann_path = d / f"{record_id}.ann.csv"
    if ann_path.exists():
        with open(ann_path, newline="") as f:
            for row in csv.reader(f):
                if row:
                    anns.append(BeatAnnotation(int(row[0]), row[1]))
    return EcgRecord(record_id, 360, 11, 200.0, 1024,
                     (counts[:, 0].copy(), counts[:, 1].copy()), anns)


def list_records(corpus_dir: str | Path) -> list[str]:
    d = Path(corpus_dir)
    ids = {p.stem for p in d.glob("*.hea")}
    ids |= {p.stem for p in d.glob("*.csv") if not p.name.endswith(".ann.csv")}
    return sorted(ids)


def counts_to_mv(counts: np.ndarray, record: EcgRecord) -> np.ndarray:
    return (counts.astype(np.float64) - record.adc_zero) / record.adc_gain


def segment_beats(record: EcgRecord, pre: int = 128, post: int = 192,
                  channel: int = 0) -> tuple[list[BeatWindow], int]:
    """Cut one fixed-length mV window per beat annotation.

    Windows span [center - pre, center + post); beats whose window does not
    fit inside the record, and Q / non-beat annotations, are skipped. Returns
    (windows, skipped_beat_count) where the skip count covers boundary skips
    of includable beats only.
    """
    sig = record.channels[channel]
    n = sig.shape[0]
    windows: list[BeatWindow] = []
    skipped = 0
    for ann in record.annotations:
        if ann.aami_class not in CLASS_TO_INDEX:
            continue
        lo, hi = ann.sample_index - pre, ann.sample_index + post
        if lo < 0 or hi > n:
            skipped += 1
            continue
        windows.append(BeatWindow(record.record_id, ann.sample_index,
                                  counts_to_mv(sig[lo:hi], record), ann.aami_class))
    return windows, skipped


class SplitMix64:
    """Tiny deterministic 64-bit PRNG (splitmix64), used for dataset
    selection so that splits are portable across implementations."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        # rejection sampling keeps the draw unbiased
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def balance_and_split(windows: list[BeatWindow], per_class: int = 800,
                      train_ratio: int = 4, seed: int = 0) -> DatasetSplit:
    """Pick ``per_class`` windows per AAMI class and split train:test = 4:1.

    Selection and split are driven by a splitmix64 Fisher-Yates shuffle of
    each class pool (pools pre-sorted by (record_id, center_index)), so the
    result depends only on the window set and the seed.
    """
    pools: dict[str, list[BeatWindow]] = {c: [] for c in AAMI_CLASSES}
    for w in windows:
        pools[w.label].append(w)
    for c in AAMI_CLASSES:
        if len(pools[c]) < per_class:
            raise InsufficientData(c, len(pools[c]))
    rng = SplitMix64(seed)
    train: list[BeatWindow] = []
    test: list[BeatWindow] = []
    n_train = (per_class * train_ratio) // (train_ratio + 1)
    for c in AAMI_CLASSES:
        pool = sorted(pools[c], key=lambda w: (w.record_id, w.center_index))
        rng.shuffle(pool)
        chosen = pool[:per_class]
        train.extend(chosen[:n_train])
        test.extend(chosen[n_train:])
    return DatasetSplit(train, test, seed)


def split_arrays(split: DatasetSplit) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stack a DatasetSplit into (X_train, y_train, X_test, y_test) arrays."""
    xtr = np.stack([w.samples_mv for w in split.train])
    ytr = np.array([CLASS_TO_INDEX[w.label] for w in split.train])
    xte = np.stack([w.samples_mv for w in split.test])
    yte = np.array([CLASS_TO_INDEX[w.label] for w in split.test])
    return xtr, ytr, xte, yte


def build_manifest(corpus_dir: str | Path, record_ids: list[str],
                   seed: int, pre: int, post: int, channel: int,
                   class_counts: dict[str, int], skipped: int,
                   version: str) -> dict:
    return {
        "format": "evecg-manifest-v1",
        "version": version,
        "corpus_dir": str(corpus_dir),
        "records": record_ids,
        "seed": seed,
        "window": {"pre": pre, "post": post, "length": pre + post},
        "channel": channel,
        "class_counts": class_counts,
        "boundary_skips": skipped,
    }


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
