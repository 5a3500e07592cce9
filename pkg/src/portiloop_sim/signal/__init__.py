"""Streaming EEG preprocessing."""
from .fir import FirFilter, design_fir, fir_step, frequency_response, impulse_response
from .io import read_raw_signal, write_raw_signal
from .pipeline import (
    CleanBranch,
    Decimator,
    EnvelopeBranch,
    PipelineConfig,
    PreprocessPipeline,
    downsample,
    envelope_step,
    pipeline_step,
)
from .standardize import ExponentialMovingAverage, OnlineStandardizer, standardize_step

__all__ = [
    "FirFilter", "design_fir", "fir_step", "frequency_response", "impulse_response",
    "OnlineStandardizer", "ExponentialMovingAverage", "standardize_step",
    "PipelineConfig", "PreprocessPipeline", "CleanBranch", "EnvelopeBranch",
    "Decimator", "downsample", "envelope_step", "pipeline_step",
    "read_raw_signal", "write_raw_signal",
]
