"""Synthesis of entangled N-qubit states as multi-control gate networks,
lowered to Cirac-Zoller trapped-ion pulse programs."""
from __future__ import annotations

__version__ = "0.1.0"
