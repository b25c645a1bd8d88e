"""High-level experiment plumbing shared by the CLI and the test suite:
dataset preparation, spike encoding of splits, compression reports,
training runs and the sensitivity sweep."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, ingest, lcadc
from .ingest import AAMI_CLASSES, DatasetSplit
from .lcadc import LcAdcConfig
from .network import NetworkSpec, default_network, init_weights
from .training import Checkpoint, TrainConfig, evaluate, train


@dataclass
class DatasetParams:
    per_class: int = 800
    seed: int = 0
    pre: int = 128
    post: int = 192
    channel: int = 0

    @property
    def window(self) -> int:
        return self.pre + self.post


def prepare_dataset(corpus_dir: str | Path, params: DatasetParams,
                    allow_partial: bool = False,
                    ) -> tuple[DatasetSplit, dict]:
    """Load every record in the corpus, segment beats, balance and split."""
    record_ids = ingest.list_records(corpus_dir)
    if not record_ids:
        raise FileNotFoundError(f"no records found in {corpus_dir}")
    windows = []
    skipped = 0
    failed = []
    for rid in record_ids:
        try:
            rec = ingest.load_record(corpus_dir, rid)
        except (OSError, ValueError) as exc:
            failed.append(f"{rid}: {exc}")
            continue
        w, s = ingest.segment_beats(rec, params.pre, params.post, params.channel)
        windows.extend(w)
        skipped += s
    if failed and not allow_partial:
        raise RuntimeError("failed records: " + "; ".join(failed))
    counts = {c: 0 for c in AAMI_CLASSES}
    for w in windows:
        counts[w.label] += 1
    per_class = params.per_class
    if allow_partial and counts:
        # cap at the scarcest class instead of refusing the corpus
        per_class = min(per_class, min(counts.values()))
    split = ingest.balance_and_split(windows, per_class, seed=params.seed)
    manifest = ingest.build_manifest(corpus_dir, record_ids, params.seed,
                                     params.pre, params.post, params.channel,
                                     counts, skipped, __version__)
    manifest["per_class"] = per_class
    manifest["train_size"] = len(split.train)
    manifest["test_size"] = len(split.test)
    if failed:
        manifest["failed_records"] = failed
    return split, manifest


def encode_split(split: DatasetSplit, lc: LcAdcConfig, bin_factor: int = 1):
    """Encode both halves of a split to static ternary input frames.

    Each beat window is level-crossing encoded (its first sample seeds the
    reference), temporally binned, and returned as (N, 1, L) int8 frames
    together with integer class labels.
    """
    xtr, ytr, xte, yte = ingest.split_arrays(split)
    ftr = lcadc.bin_train(lcadc.batch_encode(xtr, lc), bin_factor)
    fte = lcadc.bin_train(lcadc.batch_encode(xte, lc), bin_factor)
    return ftr[:, None, :], ytr, fte[:, None, :], yte


def nyquist_split(split: DatasetSplit, a_fs_mv: float = 10.0,
                  bin_factor: int = 1):
    """Amplitude-domain input frames for the Nyquist baseline: windows are
    mean-binned and scaled by the full-scale range (no spike encoding)."""
    xtr, ytr, xte, yte = ingest.split_arrays(split)

    def prep(x):
        if bin_factor > 1:
            n = (x.shape[1] // bin_factor) * bin_factor
            x = x[:, :n].reshape(x.shape[0], -1, bin_factor).mean(axis=2)
        return (x / a_fs_mv)[:, None, :]

    return prep(xtr), ytr, prep(xte), yte


def compression_report(corpus_dir: str | Path, bits: list[int],
                       channel: int = 0, a_fs_mv: float = 10.0,
                       ref_mode: str = "sample") -> dict:
    """Per-record and corpus-aggregate LC-ADC data-point reduction."""
    rows = []
    totals = {m: [0, 0] for m in bits}  # m -> [spike_points, nyquist_points]
    for rid in ingest.list_records(corpus_dir):
        rec = ingest.load_record(corpus_dir, rid)
        mv = ingest.counts_to_mv(rec.channels[channel], rec)
        for m in bits:
            cfg = LcAdcConfig(a_fs_mv=a_fs_mv, resolution_bits=m,
                              ref_mode=ref_mode)
            stats = lcadc.compression_stats(lcadc.encode(mv, cfg))
            rows.append({"record_id": rid, "resolution_bits": m,
                         "nyquist_points": stats.nyquist_points,
                         "spike_points": stats.spike_points,
                         "reduction": stats.reduction})
            totals[m][0] += stats.spike_points
            totals[m][1] += stats.nyquist_points
    aggregate = [{"resolution_bits": m,
                  "spike_points": sp,
                  "nyquist_points": ny,
                  "reduction": 1.0 - sp / ny}
                 for m, (sp, ny) in sorted(totals.items())]
    return {"version": __version__, "a_fs_mv": a_fs_mv, "channel": channel,
            "ref_mode": ref_mode, "records": rows, "aggregate": aggregate}


@dataclass
class RunResult:
    model: str  # scnn | cnn | scnn-nyquist
    resolution_bits: int | None
    bin_factor: int
    seed: int
    checkpoint: Checkpoint
    test_accuracy: float
    confusion: np.ndarray


def run_model(split: DatasetSplit, model: str, train_config: TrainConfig,
              resolution_bits: int = 5, bin_factor: int = 2,
              time_steps: int = 48, a_fs_mv: float = 10.0,
              net: NetworkSpec | None = None,
              verbose: bool = False) -> RunResult:
    """Train and evaluate one model variant on an already-prepared split.

    ``time_steps`` is independent of the binned train length: the frame is
    static, so extra steps only refine the spike-count readout while the
    spatial axis carries the waveform. (The CNN baseline has no time loop
    and ignores it.)
    """
    if model == "scnn":
        lc = LcAdcConfig(a_fs_mv=a_fs_mv, resolution_bits=resolution_bits)
        xtr, ytr, xte, yte = encode_split(split, lc, bin_factor)
    elif model in ("cnn", "scnn-nyquist"):
        xtr, ytr, xte, yte = nyquist_split(split, a_fs_mv, bin_factor)
    else:
        raise ValueError(f"unknown model {model!r}")
    length = xtr.shape[2]
    if net is None:
        net = default_network(length, time_steps=time_steps)
    kind = "cnn" if model == "cnn" else "scnn"
    net = init_weights(net, seed=train_config.seed)
    ckpt = train(net, xtr, ytr, xte, yte, train_config, kind=kind,
                 verbose=verbose)
    acc, conf = evaluate(ckpt.network, xte, yte, kind=kind,
                         surrogate=train_config.surrogate)
    bits = resolution_bits if model == "scnn" else None
    return RunResult(model, bits, bin_factor, train_config.seed, ckpt, acc, conf)


def sweep(split: DatasetSplit, bits: list[int], bin_factors: list[int],
          seeds: list[int], base_config: TrainConfig,
          include_nyquist: bool = False, time_steps: int = 48,
          verbose: bool = False) -> list[dict]:
    """Grid over resolution bits x bin factor x seed; failures are recorded
    per cell and the grid continues."""
    rows = []
    variants = [("scnn", m) for m in bits]
    if include_nyquist:
        variants.append(("scnn-nyquist", None))
    for model, m in variants:
        for bf in bin_factors:
            for seed in seeds:
                cfg = TrainConfig(**{**base_config.__dict__, "seed": seed})
                row = {"model": model, "resolution_bits": m, "bin_factor": bf,
                       "time_steps": time_steps, "seed": seed}
                try:
                    res = run_model(split, model, cfg,
                                    resolution_bits=m or 0, bin_factor=bf,
                                    time_steps=time_steps, verbose=verbose)
                    row["test_accuracy"] = res.test_accuracy
                    row["status"] = "ok"
                except Exception as exc:  # grid keeps going per spec
                    row["test_accuracy"] = float("nan")
                    row["status"] = f"failed: {exc}"
                rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# deterministic report serialization


def write_csv(path: str | Path, rows: list[dict], meta: dict | None = None) -> None:
    """Write rows to CSV with '# key=value' metadata comment lines on top.

    Output depends only on the data (no timestamps), so identical runs give
    byte-identical files.
    """
    buf = io.StringIO()
    header = {"version": __version__}
    header.update(meta or {})
    for k in sorted(header):
        buf.write(f"# {k}={header[k]}\n")
    if rows:
        fields = list(rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    Path(path).write_text(buf.getvalue())


def read_csv(path: str | Path) -> tuple[list[dict], dict]:
    meta: dict = {}
    lines = Path(path).read_text().splitlines()
    body = []
    for ln in lines:
        if ln.startswith("# ") and "=" in ln:
            k, v = ln[2:].split("=", 1)
            meta[k] = v
        else:
            body.append(ln)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return rows, meta


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_json(path: str | Path, obj: dict) -> None:
    payload = {"version": __version__}
    payload.update(obj)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
