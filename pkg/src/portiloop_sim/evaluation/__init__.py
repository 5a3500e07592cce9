"""Detection metrics, threshold sweeps, reports and the shuffle protocol."""
from .metrics import (
    SampleMetrics,
    StimulationMetrics,
    delay_distribution,
    f1_from_pr,
    samplewise_prf,
    stimulation_prf,
)
from .protocol import ProtocolResult, protocol_evaluate
from .report import build_report, to_jsonable, write_csv, write_json
from .sweep import SweepResult, default_thresholds, detections_at, threshold_sweep

__all__ = [
    "ProtocolResult",
    "SampleMetrics",
    "StimulationMetrics",
    "SweepResult",
    "build_report",
    "default_thresholds",
    "delay_distribution",
    "detections_at",
    "f1_from_pr",
    "protocol_evaluate",
    "samplewise_prf",
    "stimulation_prf",
    "threshold_sweep",
    "to_jsonable",
    "write_csv",
    "write_json",
]
