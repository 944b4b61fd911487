"""Return sets of real analytic orbits to algebraic varieties."""

from .errors import *
