"""Train the spiking classifier end to end on a small synthetic dataset.

Deliberately scaled down (few records, few epochs) so it finishes in about
a minute on a laptop; the full-size equivalent is `evecg train` /
`evecg sweep`.

Run:  python3 demos/02_training.py
"""

import tempfile
from pathlib import Path

from evecg import network, synth
from evecg.experiments import DatasetParams, prepare_dataset, run_model
from evecg.training import SurrogateSpec, TrainConfig

workdir = Path(tempfile.mkdtemp(prefix="evecg-demo-"))
corpus = workdir / "corpus"
synth.make_corpus(corpus, n_records=3, beats_per_record=400, seed=3)

split, manifest = prepare_dataset(corpus, DatasetParams(per_class=120, seed=0))
print(f"{manifest['train_size']} train / {manifest['test_size']} test windows")
print(f"class counts: {manifest['class_counts']}\n")

cfg = TrainConfig(epochs=4, batch_size=32, learning_rate=2e-3, seed=0,
                  surrogate=SurrogateSpec("fast_sigmoid", 4.0))

print("spiking network on 5-bit level-crossing input:")
res = run_model(split, "scnn", cfg, resolution_bits=5, bin_factor=2,
                time_steps=24, verbose=True)
print(f"  -> test accuracy {res.test_accuracy:.3f}")
print(f"  confusion (rows true, cols predicted):\n{res.confusion}\n")

print("conventional CNN on Nyquist amplitude input (same topology):")
res_cnn = run_model(split, "cnn", cfg, bin_factor=2, verbose=True)
print(f"  -> test accuracy {res_cnn.test_accuracy:.3f}")

layers = network.default_network(320 // 2).layers
print(f"\nshared topology: {[l.kind for l in layers]}")
