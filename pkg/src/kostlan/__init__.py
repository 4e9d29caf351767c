"""Numerical laboratory for the logarithmic energy of random elliptic
polynomial zeros on the sphere: sampling, root finding, energy
decomposition, zero-intensity functions, limiting-variance constants,
Monte Carlo statistics, and a gradient-descent refiner toward low-energy
spherical configurations."""

__version__ = "0.1.0"

from . import (  # noqa: F401
    constants,
    energy,
    kacrice,
    minimizer,
    polymodel,
    roots,
    sphere,
    stats,
)
