"""Fit Lindbladian noise models to tomography snapshots.

A library + CLI that decides whether a tomographic channel snapshot is
consistent with time-independent Markovian (Lindbladian) dynamics and, when
it is not, computes the minimal amount of white noise whose addition would
make it so.
"""

from __future__ import annotations

__version__ = "0.1.0"
