"""Pseudo-spectral Nernst-Planck-Boussinesq simulator with Gaussian mollification."""

from npb.spectral import Grid
from npb.state import ICSpec, PhysParams, SimState, make_initial_state
from npb.timestepper import StepControl, run, step

__all__ = ["Grid", "ICSpec", "PhysParams", "SimState", "StepControl", "make_initial_state",
           "run", "step"]
__version__ = "0.1.0"
