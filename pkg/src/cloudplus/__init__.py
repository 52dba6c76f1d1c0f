"""Traceable, revocable, time-limited CP-ABE over a pluggable bilinear group,
with a simulated cloud store, auditor panel, CLI and benchmark harness."""

__version__ = "0.1.0"
