"""Simulation and numerical-verification toolkit for disordered pinning models.

Subpackages cover heavy-tailed renewal processes, closed subsets of the real
line, exact discrete pinning partition functions, the continuum
partition-function field driven by a Brownian environment, and the statistical
experiment suite built on top of them.
"""

from pinning_lab.rng import stream

__all__ = ["stream"]
__version__ = "0.1.0"
