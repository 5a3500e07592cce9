"""Real-time detection: interleaved hidden states and the stimulation policy."""
from .policy import StimulationPolicy, StimulusEvent, stimulation_policy_step
from .stream import (
    DetectorConfig,
    StreamingDetector,
    StreamResult,
    VirtualHiddenFifo,
    fifo_step,
    run_stream,
)

__all__ = [
    "DetectorConfig",
    "StimulationPolicy",
    "StimulusEvent",
    "StreamResult",
    "StreamingDetector",
    "VirtualHiddenFifo",
    "fifo_step",
    "run_stream",
    "stimulation_policy_step",
]
