"""Simulation toolkit for context-aware voice-assistant invasion studies."""

__version__ = "0.1.0"
