"""Command-line entry point.

Subcommands: synth, ingest, compress, train, eval, sweep, complexity,
report. Every command is deterministic under a fixed config+seed, archives
the effective configuration beside its outputs, and exits nonzero if any
requested computation failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, synth
from .complexity import ComplexityParams, interpretation_table
from .experiments import (
    DatasetParams,
    compression_report,
    prepare_dataset,
    run_model,
    sweep,
    write_csv,
    write_json,
)
from .network import default_network, load_network, save_network
from .training import (
    SurrogateSpec,
    TrainConfig,
    evaluate,
    load_checkpoint,
    save_checkpoint,
)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file with defaults for this command's flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("out"))


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--per-class", type=int, default=800)
    p.add_argument("--pre", type=int, default=128)
    p.add_argument("--post", type=int, default=192)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--allow-partial", action="store_true")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bin", type=_int_list, default=[2],
                   help="temporal bin factor(s)")
    p.add_argument("--time-steps", type=int, default=48)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--surrogate", choices=["rectangular", "fast_sigmoid", "arctan"],
                   default="fast_sigmoid")
    p.add_argument("--surrogate-width", type=float, default=4.0)
    p.add_argument("--self-mod-weight", type=float, default=0.1)
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evecg")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic WFDB-212 corpus")
    _add_common(p)
    p.add_argument("--records", type=int, default=6)
    p.add_argument("--beats", type=int, default=700)

    p = sub.add_parser("ingest", help="segment, balance and split a corpus")
    _add_common(p)
    _add_dataset_args(p)

    p = sub.add_parser("compress", help="LC-ADC compression report")
    _add_common(p)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--bits", type=_int_list, default=[5, 6, 7])
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--a-fs", type=float, default=10.0)
    p.add_argument("--ref-mode", choices=["sample", "level"], default="sample")

    p = sub.add_parser("train", help="train a model on the balanced split")
    _add_common(p)
    _add_dataset_args(p)
    _add_train_args(p)
    p.add_argument("--bits", type=_int_list, default=[5])
    p.add_argument("--model", choices=["scnn", "cnn", "scnn-nyquist"],
                   default="scnn")

    p = sub.add_parser("eval", help="re-evaluate a checkpoint")
    _add_common(p)
    _add_dataset_args(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--bits", type=_int_list, default=[5])
    p.add_argument("--bin", type=_int_list, default=[16])
    p.add_argument("--model", choices=["scnn", "cnn", "scnn-nyquist"],
                   default="scnn")

    p = sub.add_parser("sweep", help="resolution-bits x bin-factor sensitivity grid")
    _add_common(p)
    _add_dataset_args(p)
    _add_train_args(p)
    p.add_argument("--bits", type=_int_list, default=[5, 6, 7])
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    p.add_argument("--include-nyquist", action="store_true")

    p = sub.add_parser("complexity", help="CNN vs SCNN operation-cost report")
    _add_common(p)
    p.add_argument("--spec", type=Path, default=None,
                   help="network file; defaults to the stock architecture")
    p.add_argument("--input-length", type=int, default=320)
    p.add_argument("--t-max", type=int, default=40)

    p = sub.add_parser("report", help="summarize report files under --out")
    _add_common(p)
    return ap


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        overrides = json.loads(Path(args.config).read_text())
        for k, v in overrides.items():
            key = k.replace("-", "_")
            if not hasattr(args, key):
                raise SystemExit(f"unknown config key {k!r}")
            setattr(args, key, type(getattr(args, key))(v)
                    if getattr(args, key) is not None else v)


def _archive_config(args: argparse.Namespace) -> None:
    args.out.mkdir(parents=True, exist_ok=True)
    echo = {k: str(v) if isinstance(v, Path) else v
            for k, v in vars(args).items() if k != "func"}
    write_json(args.out / f"{args.command}_config.json", {"args": echo})


def _train_config(args: argparse.Namespace, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
        optimizer=args.optimizer, seed=seed,
        surrogate=SurrogateSpec(args.surrogate, args.surrogate_width),
        self_mod_weight=args.self_mod_weight)


def cmd_synth(args) -> int:
    ids = synth.make_corpus(args.out / "corpus", args.records, args.beats,
                            seed=args.seed)
    write_json(args.out / "synth_manifest.json",
               {"records": ids, "seed": args.seed, "beats": args.beats})
    print(f"wrote {len(ids)} synthetic records to {args.out / 'corpus'}")
    return 0


def cmd_ingest(args) -> int:
    params = DatasetParams(args.per_class, args.seed, args.pre, args.post,
                           args.channel)
    split, manifest = prepare_dataset(args.corpus, params,
                                      allow_partial=args.allow_partial)
    write_json(args.out / "manifest.json", manifest)
    rows = [{"aami_class": c, "available": manifest["class_counts"][c],
             "train": sum(w.label == c for w in split.train),
             "test": sum(w.label == c for w in split.test)}
            for c in manifest["class_counts"]]
    write_csv(args.out / "class_counts.csv", rows, {"seed": args.seed})
    print(f"{len(split.train)} train / {len(split.test)} test windows")
    return 0


def cmd_compress(args) -> int:
    report = compression_report(args.corpus, args.bits, args.channel,
                                args.a_fs, args.ref_mode)
    meta = {"a_fs_mv": args.a_fs, "channel": args.channel,
            "ref_mode": args.ref_mode}
    write_csv(args.out / "compression.csv", report["records"], meta)
    write_csv(args.out / "compression_aggregate.csv", report["aggregate"], meta)
    write_json(args.out / "compression.json", report)
    for row in report["aggregate"]:
        print(f"M={row['resolution_bits']}: reduction "
              f"{100 * row['reduction']:.2f}%")
    return 0


def cmd_train(args) -> int:
    params = DatasetParams(args.per_class, args.seed, args.pre, args.post,
                           args.channel)
    split, manifest = prepare_dataset(args.corpus, params,
                                      allow_partial=args.allow_partial)
    write_json(args.out / "manifest.json", manifest)
    cfg = _train_config(args, args.seed)
    res = run_model(split, args.model, cfg, resolution_bits=args.bits[0],
                    bin_factor=args.bin[0], time_steps=args.time_steps,
                    verbose=args.verbose)
    ckpt_path = args.out / f"{args.model}_checkpoint.bin"
    save_checkpoint(ckpt_path, res.checkpoint)
    log_rows = [{"epoch": e, "loss": l, "train_accuracy": tr, "test_accuracy": te}
                for e, (l, tr, te) in enumerate(zip(
                    res.checkpoint.loss_history, res.checkpoint.train_accuracy,
                    res.checkpoint.test_accuracy))]
    write_csv(args.out / f"{args.model}_training_log.csv", log_rows,
              {"model": args.model, "bits": args.bits[0], "bin": args.bin[0],
               "seed": args.seed, "optimizer": args.optimizer, "lr": args.lr})
    write_json(args.out / f"{args.model}_metrics.json", {
        "model": args.model, "resolution_bits": res.resolution_bits,
        "bin_factor": res.bin_factor, "seed": args.seed,
        "test_accuracy": res.test_accuracy,
        "confusion": res.confusion.tolist(),
        "best_test_accuracy": res.checkpoint.best_test_accuracy,
    })
    print(f"{args.model} test accuracy {res.test_accuracy:.4f} "
          f"(checkpoint: {ckpt_path})")
    return 0


def cmd_eval(args) -> int:
    from .experiments import encode_split, nyquist_split
    from .lcadc import LcAdcConfig

    ckpt = load_checkpoint(args.checkpoint)
    params = DatasetParams(args.per_class, args.seed, args.pre, args.post,
                           args.channel)
    split, _ = prepare_dataset(args.corpus, params,
                               allow_partial=args.allow_partial)
    if args.model == "scnn":
        _, _, xte, yte = encode_split(split, LcAdcConfig(
            resolution_bits=args.bits[0]), args.bin[0])
        kind = "scnn"
    else:
        _, _, xte, yte = nyquist_split(split, bin_factor=args.bin[0])
        kind = "cnn" if args.model == "cnn" else "scnn"
    acc, conf = evaluate(ckpt.network, xte, yte, kind=kind,
                         surrogate=ckpt.config.surrogate)
    write_json(args.out / "eval_metrics.json", {
        "checkpoint": str(args.checkpoint), "model": args.model,
        "test_accuracy": acc, "confusion": conf.tolist()})
    print(f"test accuracy {acc:.4f}")
    return 0


def cmd_sweep(args) -> int:
    params = DatasetParams(args.per_class, args.seed, args.pre, args.post,
                           args.channel)
    split, manifest = prepare_dataset(args.corpus, params,
                                      allow_partial=args.allow_partial)
    write_json(args.out / "manifest.json", manifest)
    rows = sweep(split, args.bits, args.bin, args.seeds,
                 _train_config(args, args.seed),
                 include_nyquist=args.include_nyquist,
                 time_steps=args.time_steps, verbose=args.verbose)
    write_csv(args.out / "sweep.csv", rows,
              {"bits": ",".join(map(str, args.bits)),
               "bin": ",".join(map(str, args.bin)),
               "seeds": ",".join(map(str, args.seeds))})
    ok = [r for r in rows if r["status"] == "ok"]
    by_bits: dict = {}
    for r in ok:
        by_bits.setdefault((r["model"], r["resolution_bits"]), []).append(
            r["test_accuracy"])
    summary = [{"model": m, "resolution_bits": bits,
                "median_accuracy": float(np.median(accs)),
                "mean_accuracy": float(np.mean(accs)), "runs": len(accs)}
               for (m, bits), accs in sorted(
                   by_bits.items(), key=lambda kv: (kv[0][0], str(kv[0][1])))]
    write_csv(args.out / "sweep_summary.csv", summary, {})
    for row in summary:
        print(f"{row['model']} M={row['resolution_bits']}: "
              f"median accuracy {row['median_accuracy']:.4f}")
    return 0 if len(ok) == len(rows) else 1


def cmd_complexity(args) -> int:
    if args.spec:
        net, _ = load_network(args.spec)
    else:
        net = default_network(args.input_length)
        from .network import init_weights
        net = init_weights(net, seed=0)
    params = ComplexityParams.from_network(net)
    rows = interpretation_table(params, tuple(range(1, args.t_max + 1)))
    write_csv(args.out / "complexity.csv", rows,
              {"input_length": net.input_length})
    best = min(rows, key=lambda r: abs(r["reduction"] - 0.968))
    write_json(args.out / "complexity_summary.json", {
        "closest_to_968": best,
        "modes": sorted({r["mode"] for r in rows})})
    print(f"closest to 96.8%: mode={best['mode']} t={best['t']} "
          f"reduction {100 * best['reduction']:.2f}%")
    return 0


def cmd_report(args) -> int:
    found = sorted(p.name for p in args.out.glob("*.json")
                   if p.name != "report.json")
    found += sorted(p.name for p in args.out.glob("*.csv"))
    write_json(args.out / "report.json", {"artifacts": found})
    print(f"indexed {len(found)} artifacts in {args.out}")
    return 0


_COMMANDS = {
    "synth": cmd_synth, "ingest": cmd_ingest, "compress": cmd_compress,
    "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep,
    "complexity": cmd_complexity, "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _apply_config_file(args)
    _archive_config(args)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
