"""Synthetic MODA-like recordings, label post-processing and dataset utilities."""
from .dataset import SequenceDataset, oversample_batches, prepare_inputs, split_subjects
from .generator import Recording, SpindleAnnotation, SyntheticConfig, generate_dataset, generate_recording
from .io import export_csv, load_recording, save_recording
from .labels import PHASE_THRESHOLDS, binary_to_intervals, runs, score_to_binary

__all__ = [
    "SyntheticConfig", "SpindleAnnotation", "Recording", "generate_recording", "generate_dataset",
    "score_to_binary", "binary_to_intervals", "runs", "PHASE_THRESHOLDS",
    "split_subjects", "prepare_inputs", "SequenceDataset", "oversample_batches",
    "save_recording", "load_recording", "export_csv",
]
