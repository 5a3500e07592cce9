"""Closed-loop sleep spindle stimulation simulator."""
__version__ = "0.1.0"
