"""Chirp-jammer direction finding on a moving four-element array.

Simulation (geometry, RF, IMU), classical and synthetic-aperture direction
finding, a from-scratch multimodal fusion regressor, dataset persistence
and evaluation.
"""
from .errors import JamdfError

__version__ = "0.1.0"
__all__ = ["JamdfError", "__version__"]
