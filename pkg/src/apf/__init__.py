"""Executable agentic problem frames: typed job contracts, a simulated workplace, and the Act-Verify-Refine loop."""

from __future__ import annotations

__version__ = "0.1.0"
