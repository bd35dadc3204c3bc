"""Reference lattices and their graph classes.

All generated packings have touching nearest neighbours at distance 1
(fcc: lattice constant 1, nearest-neighbour distance 1/sqrt(2)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .energy import PotentialField
from .errors import InvalidInputError
from .graph import PeriodicGraph, build_delaunay
from .optimizer import GraphClass
from .torus import Basis, Configuration, canonical_frac

Family = Literal["Z_d", "A2", "FCC", "HCP"]

_ALIASES = {"zd": "Z_d", "z_d": "Z_d", "z": "Z_d", "a2": "A2", "fcc": "FCC", "a3": "FCC", "hcp": "HCP"}

HCP_C = math.sqrt(8.0 / 3.0)


@dataclass(frozen=True)
class LatticeSpec:
    family: Family
    m: int = 1
    d: int | None = None

    def __post_init__(self):
        fam = _ALIASES.get(str(self.family).lower(), self.family)
        if fam not in ("Z_d", "A2", "FCC", "HCP"):
            raise InvalidInputError(f"unknown lattice family {self.family!r}")
        d = self.d
        if fam == "A2":
            d = 2 if d is None else d
            if d != 2:
                raise InvalidInputError("A2 lives in d = 2")
        elif fam in ("FCC", "HCP"):
            d = 3 if d is None else d
            if d != 3:
                raise InvalidInputError(f"{fam} lives in d = 3")
        elif d is None:
            d = 2
        if d < 1 or d > 6:
            raise InvalidInputError("Z_d supports 1 <= d <= 6")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidInputError("m must be a positive integer")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True, eq=False)
class Lattice:
    spec: LatticeSpec
    basis: Basis
    centers: np.ndarray
    graph: PeriodicGraph
    graph_class: GraphClass
    r_touch: float

    @property
    def config(self) -> Configuration:
        return Configuration(self.basis, self.centers, self.r_touch)


def _motif_cells(motif, m: int, d: int) -> np.ndarray:
    pts = []
    for cell in itertools.product(range(m), repeat=d):
        for site in motif:
            pts.append((np.array(cell) + np.array(site)) / m)
    return canonical_frac(np.array(pts))


def lattice_basis(spec: LatticeSpec) -> Basis:
    m = spec.m
    if spec.family == "Z_d":
        return Basis(m * np.eye(spec.d))
    if spec.family == "A2":
        return Basis([[m, 0.0], [m * math.cos(math.pi / 3), m * math.sin(math.pi / 3)]])
    if spec.family == "FCC":
        return Basis(m * np.eye(3))
    return Basis([[m, 0.0, 0.0], [m / 2, m * math.sqrt(3) / 2, 0.0], [0.0, 0.0, m * HCP_C]])


def generate(spec: LatticeSpec, facet_tol: float = 1e-9) -> Lattice:
    """Basis, centers, Delaunay graph class and touching radius of a lattice."""
    basis = lattice_basis(spec)
    d = spec.d
    if spec.family in ("Z_d", "A2"):
        motif = [np.zeros(d)]
        r = 0.5
    elif spec.family == "FCC":
        motif = [(0, 0, 0), (0.5, 0.5, 0), (0.5, 0, 0.5), (0, 0.5, 0.5)]
        r = math.sqrt(2) / 4
    else:
        motif = [(0, 0, 0), (1 / 3, 1 / 3, 0.5)]
        r = 0.5
    centers = _motif_cells(motif, spec.m, d)
    graph = build_delaunay(basis, centers, r, facet_tol)
    return Lattice(spec, basis, centers, graph, GraphClass.from_graph(graph, d), r)


def layer_direction(spec: LatticeSpec) -> tuple[np.ndarray, float]:
    """Unit flux direction normal to the layers and the layer spacing."""
    if spec.family == "A2":
        return np.array([0.0, 1.0]), math.sqrt(3) / 2
    if spec.family == "Z_d":
        return np.eye(spec.d)[-1], 1.0
    if spec.family == "FCC":
        return np.ones(3) / math.sqrt(3), 1 / math.sqrt(3)
    return np.array([0.0, 0.0, 1.0]), HCP_C / 2


def layered_potential(spec: LatticeSpec, basis: Basis, centers) -> PotentialField:
    """Potential equal to the layer index on every ball.

    The external field strength is the inverse layer spacing, so the jump
    across one layer is exactly 1 and the jump across the cell is an integer.
    """
    xi, spacing = layer_direction(spec)
    x = basis.cartesian(canonical_frac(np.atleast_2d(centers)))
    q = np.rint(x @ xi / spacing)
    if np.abs(x @ xi / spacing - q).max() > 1e-9:
        raise InvalidInputError("centers are not arranged in layers normal to the flux")
    return PotentialField(xi, q, strength=1.0 / spacing)


def affine_potential(basis: Basis, centers, xi, strength: float = 1.0) -> PotentialField:
    """``t_k = strength * xi . a_k``: the external potential sampled at the centers."""
    x = basis.cartesian(canonical_frac(np.atleast_2d(centers)))
    xi = np.asarray(xi, dtype=float) / np.linalg.norm(xi)
    return PotentialField(xi, strength * (x @ xi), strength)
