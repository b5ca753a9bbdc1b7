"""Emotion-cause pair extraction with task heads that refine each other over a clause graph."""

__version__ = "0.1.0"
