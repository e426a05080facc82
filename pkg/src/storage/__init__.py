"""Circuit, dataset and report files"""

from .circuits import load_circuit, save_circuit
from .datasets import load_csv, load_dataset, pad_sequences, save_csv
from .reports import param_histogram, write_manifest

__all__ = [
    "load_circuit",
    "save_circuit",
    "load_csv",
    "load_dataset",
    "pad_sequences",
    "save_csv",
    "param_histogram",
    "write_manifest",
]
