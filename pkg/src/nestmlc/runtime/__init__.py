"""Reference interpreter: instances, stepping, stimuli and traces."""

from .engine import (EvaluationError, GuardViolation, NeuronInstance, Program, SimulationConfig,
                     SimulationError, UnsupportedFeature, instantiate, run, step)
from .io import (CurrentStep, Event, StimulusError, StimulusProgram, Trace, read_trace_csv,
                 snap)
from .ringbuffer import RingBuffer, sign_filter

__all__ = ["EvaluationError", "GuardViolation", "NeuronInstance", "Program", "SimulationConfig",
           "SimulationError", "UnsupportedFeature", "instantiate", "run", "step",
           "CurrentStep", "Event", "StimulusError", "StimulusProgram", "Trace",
           "read_trace_csv", "snap", "RingBuffer", "sign_filter"]
