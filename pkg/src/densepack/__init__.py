"""Discrete network energies and class-wise optimal packings of equal balls on a torus."""

__version__ = "0.1.0"

from .analysis import BoundReport, PercolationReport, densify_hint, detect_percolation, lower_bound
from .energy import EnergyReport, PotentialField, edge_difference, energy, minimize_potentials
from .errors import DensepackError, InvalidInputError, NumericalError
from .flux import FluxModel, edge_weight_function, g0_hypergeometric, g0_main, g0_quadrature
from .graph import PeriodicEdge, PeriodicGraph, build_delaunay, graph_class_signature
from .lattices import LatticeSpec, generate, layered_potential
from .optimizer import (
    CenterSolution,
    GraphClass,
    maximize_spread,
    pack_in_class,
    solve_centers,
    solve_centers_symbolic,
)
from .torus import Basis, Configuration, TorusPoint, cell_volume, torus_distance

__all__ = [
    "Basis",
    "BoundReport",
    "CenterSolution",
    "Configuration",
    "DensepackError",
    "EnergyReport",
    "FluxModel",
    "GraphClass",
    "InvalidInputError",
    "LatticeSpec",
    "NumericalError",
    "PercolationReport",
    "PeriodicEdge",
    "PeriodicGraph",
    "PotentialField",
    "TorusPoint",
    "build_delaunay",
    "cell_volume",
    "densify_hint",
    "detect_percolation",
    "edge_difference",
    "edge_weight_function",
    "energy",
    "g0_hypergeometric",
    "g0_main",
    "g0_quadrature",
    "generate",
    "graph_class_signature",
    "layered_potential",
    "lower_bound",
    "maximize_spread",
    "minimize_potentials",
    "pack_in_class",
    "solve_centers",
    "solve_centers_symbolic",
    "torus_distance",
]
