"""Simulation and exact checks for the bipartite degree-driven random graph process."""

from .graph import BipartiteMultigraph, ComponentSummary, Params, Side, Trace
from .samplers import (
    BiDegreeSequence,
    sample_bcm,
    sample_birth_embedding,
    sample_multigraph_process,
    sample_simple_process,
)
from .theory import NegBin, giant_fraction, giant_threshold, connectivity_threshold

__version__ = "0.1.0"
