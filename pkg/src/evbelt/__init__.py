"""Event-camera seatbelt-state pipeline.

Simulates DVS event streams from frame sequences, renders them into 2D
frames with duration-, count-, and ROI-gated accumulation, builds labeled
frame-window datasets from procedural cabin scenes, and trains/evaluates a
recurrent convolutional classifier with spatial self-attention.
"""

__version__ = "0.1.0"

from evbelt.events import Event, EventStream, Polarity
from evbelt.errors import DataError, EvbeltError

__all__ = ["Event", "EventStream", "Polarity", "DataError", "EvbeltError", "__version__"]
