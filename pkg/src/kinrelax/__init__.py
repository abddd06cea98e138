"""Relaxation to equilibrium of a collisionless gas, or grey radiation, in a ball with a
thermalizing wall, through the renewal equation for the wall flux."""

from .errors import KinrelaxError
from .kernels import GAS, MONOKINETIC, Kernel, KernelVariant, get_kernel
from .renewal import RenewalSolution, solve

__version__ = "0.1.0"

__all__ = ["GAS", "MONOKINETIC", "Kernel", "KernelVariant", "KinrelaxError", "RenewalSolution", "get_kernel", "solve"]
