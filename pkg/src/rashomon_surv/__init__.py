"""Rashomon survival sets and survival-curve envelopes for time-to-event models."""

__version__ = "0.1.0"
