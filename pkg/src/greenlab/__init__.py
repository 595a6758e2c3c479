"""Green's functions, level-set monotone quantities and their checks on rotationally symmetric manifolds."""

__version__ = "0.1.0"
