"""Harmonic unit vector fields on Euclidean and hyperbolic 3-space.

Field catalogs, finite-difference harmonicity checks, the radial pendulum
reduction, second-variation stability of the H-parallel field and
streamline diagnostics.
"""

__version__ = "0.1.0"
