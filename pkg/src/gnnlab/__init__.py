"""Desk-scale laboratory for full-graph vs mini-batch training of one-layer GNNs."""

from gnnlab.errors import DivergenceError, InputError, NotDerivableError, ParseError
from gnnlab.graph import AdjRows, DegreeInfo, Graph

__version__ = "0.1.0"

__all__ = [
    "AdjRows",
    "DegreeInfo",
    "DivergenceError",
    "Graph",
    "InputError",
    "NotDerivableError",
    "ParseError",
    "__version__",
]
