"""Event-driven ECG recording and spiking-network arrhythmia detection toolkit.

Pipeline: WFDB format-212 ECG records -> level-crossing ADC spike encoding
-> spiking 1-D convolutional network classification, plus an operation-count
complexity model and a reproducible experiment CLI.
"""

__version__ = "0.1.0"

from .lcadc import LcAdcConfig, TernarySpikeTrain, compression_stats, compute_lsb, merge_req_dir, sample
from .network import LifParams, NetworkSpec, network_forward, spike_counter_classify

__all__ = [
    "LcAdcConfig",
    "TernarySpikeTrain",
    "LifParams",
    "NetworkSpec",
    "compression_stats",
    "compute_lsb",
    "merge_req_dir",
    "network_forward",
    "sample",
    "spike_counter_classify",
    "__version__",
]
