"""Uniform random walk on a triangular lattice as an approximation of
reflected Brownian motion in a wedge, with exact discrete checks and the
closed-form hull laws it is compared against."""

from .geometry import GeometryError, WedgeGeometry, make_geometry
from .kernel import KernelError, WalkKernel, build_kernel

__version__ = "0.1.0"

__all__ = ["GeometryError", "KernelError", "WalkKernel", "WedgeGeometry", "build_kernel",
           "make_geometry", "__version__"]
