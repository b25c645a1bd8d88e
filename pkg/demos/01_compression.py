"""Level-crossing compression walkthrough.

Generates a small synthetic corpus, encodes one record at several
resolutions, and prints the data-point reduction the event-driven front end
achieves over plain Nyquist sampling.

Run:  python3 demos/01_compression.py
"""

import tempfile
from pathlib import Path

import numpy as np

from evecg import ingest, lcadc, synth
from evecg.experiments import compression_report

workdir = Path(tempfile.mkdtemp(prefix="evecg-demo-"))
corpus = workdir / "corpus"
synth.make_corpus(corpus, n_records=3, beats_per_record=300, seed=1)
print(f"synthetic corpus: {corpus}\n")

# --- a close look at one record -------------------------------------------
rec = ingest.load_record(corpus, "s100")
mv = ingest.counts_to_mv(rec.channels[0], rec)
print(f"record s100: {mv.size} samples at {rec.sampling_rate_hz} Hz")

for bits in (5, 6, 7):
    cfg = lcadc.LcAdcConfig(a_fs_mv=10.0, resolution_bits=bits)
    train = lcadc.encode(mv, cfg)
    stats = lcadc.compression_stats(train)
    print(f"  M={bits}  LSB={cfg.lsb_mv:.4f} mV  "
          f"spikes={stats.spike_points:7d}  "
          f"reduction={100 * stats.reduction:5.2f}%")

# the encoding only sees differences: shifting the signal changes nothing
shifted = lcadc.encode(mv + 3.3, lcadc.LcAdcConfig(resolution_bits=5))
base = lcadc.encode(mv, lcadc.LcAdcConfig(resolution_bits=5))
assert np.array_equal(shifted.values, base.values)
print("\namplitude-shift invariance: encode(x + 3.3 mV) == encode(x)")

# --- corpus-level report (what `evecg compress` emits) --------------------
report = compression_report(corpus, bits=[5, 6, 7])
print("\ncorpus aggregate:")
for row in report["aggregate"]:
    print(f"  M={row['resolution_bits']}: {row['spike_points']} of "
          f"{row['nyquist_points']} points kept "
          f"({100 * row['reduction']:.2f}% reduction)")
