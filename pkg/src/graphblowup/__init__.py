"""Semilinear heat equations on weighted graphs: calculus, hypothesis checks, simulation."""

from .builders import (LatticeSpec, ProductSpec, cyclic_power, cycle, from_edge_list,
                       lattice, product, to_edge_list)
from .graph import Graph, GraphError, SupportError, difference, integration_by_parts_residual, \
    laplacian, laplacian_field
from .metrics import (Ball, EuclideanLatticeMetric, NaturalMetric, ProductMetric, PseudoMetric,
                      TableMetric, WindowTooSmall, ball, jump_size, natural_distance, volume)
from .potential import Potential, SpaceProfile, TimeProfile

__version__ = "0.1.0"

__all__ = [
    "Ball", "EuclideanLatticeMetric", "Graph", "GraphError", "LatticeSpec", "NaturalMetric",
    "Potential", "ProductMetric", "ProductSpec", "PseudoMetric", "SpaceProfile", "SupportError",
    "TableMetric", "TimeProfile", "WindowTooSmall", "ball", "cycle", "cyclic_power", "difference",
    "from_edge_list", "integration_by_parts_residual", "jump_size", "laplacian", "laplacian_field",
    "lattice", "natural_distance", "product", "to_edge_list", "volume",
]
