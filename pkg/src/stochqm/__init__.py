"""Spectral tools for the stochastic-fluid picture of quantum mechanics.

Wavefunctions on periodic grids, split-step and Madelung propagation,
velocity-fluctuation moments, Wigner functions and Moyal brackets.
"""

from .errors import (CheckFailure, ConfigError, DimensionMismatch, DimensionTooLow, GridError, GridMismatch,
                     NodeFormation, SnapshotMismatch, StochQMError, UnstableStep, ZeroState)
from .grid import Grid
from .propagators import EvolutionSpec, PotentialSpec, evolve, evolve_linear, evolve_log_nls
from .state import PhysicalConstants, WaveFunction

__version__ = "0.1.0"
