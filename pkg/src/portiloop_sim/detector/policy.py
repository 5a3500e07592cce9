"""One-stimulus-per-spindle stimulation policy."""
from __future__ import annotations

from dataclasses import dataclass

from ..exceptions import ContractError, ParameterError

__all__ = ["StimulusEvent", "StimulationPolicy", "stimulation_policy_step"]


@dataclass(frozen=True)
class StimulusEvent:
    """A stimulus, timed on the input clock.

    ``trigger_time_s`` is the detecting window's end plus the constant delay;
    ``detection_time_s`` is the window end itself.
    """

    trigger_time_s: float
    detection_time_s: float


class StimulationPolicy:
    """Emit a stimulus on the first detection of a spindle, then stay quiet.

    A detection fires a stimulus only if no stimulus is playing and the
    refractory deadline has passed. Every detection, fired or not, moves the
    deadline to ``now + refractory_s``, so a spindle that keeps being detected
    never gets a second stimulus.

    Parameters
    ----------
    refractory_s : float
        Quiet time after the last detection (0.4 s).
    stimulus_s : float
        Stimulus duration (0.1 s).
    constant_delay_s : float
        Added to the detection time to obtain the trigger time.
    """

    def __init__(self, refractory_s: float = 0.4, stimulus_s: float = 0.1, constant_delay_s: float = 0.064):
        if refractory_s < 0 or stimulus_s < 0 or constant_delay_s < 0:
            raise ParameterError("policy durations must be non-negative")
        self.refractory_s = refractory_s
        self.stimulus_s = stimulus_s
        self.constant_delay_s = constant_delay_s
        self.reset()

    def reset(self) -> None:
        self.stimulus_end_s = float("-inf")
        self.refractory_deadline_s = float("-inf")
        self.last_detection_end_s = float("-inf")
        self.last_time_s = float("-inf")

    @property
    def in_stimulus(self) -> bool:
        return self.last_time_s < self.stimulus_end_s

    def step(self, detected: bool, now_s: float) -> StimulusEvent | None:
        if now_s < self.last_time_s:
            raise ContractError(f"time went backwards: {now_s} < {self.last_time_s}")
        self.last_time_s = now_s
        if not detected:
            return None
        fire = now_s >= self.stimulus_end_s and now_s >= self.refractory_deadline_s
        self.last_detection_end_s = now_s
        self.refractory_deadline_s = now_s + self.refractory_s
        if not fire:
            return None
        self.stimulus_end_s = now_s + self.stimulus_s
        return StimulusEvent(now_s + self.constant_delay_s, now_s)

    def run(self, detections, times) -> list[StimulusEvent]:
        """Apply :meth:`step` over a whole detection trace."""
        events = []
        for d, t in zip(detections, times):
            ev = self.step(bool(d), float(t))
            if ev is not None:
                events.append(ev)
        return events


def stimulation_policy_step(state: StimulationPolicy, detected: bool, now_s: float) -> StimulusEvent | None:
    """Functional alias of :meth:`StimulationPolicy.step`."""
    return state.step(detected, now_s)
