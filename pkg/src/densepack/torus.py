"""Geometry of a periodicity cell with glued opposite faces.

Points live in fractional coordinates with respect to a :class:`Basis`;
Cartesian positions are ``frac @ basis.vectors`` (one basis vector per row).
Minimal images are searched in the window ``{-1, 0, 1}^d`` of lattice
shifts. A basis whose shape makes that window insufficient is rejected at
construction time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import CellTooSkewedError, InvalidBasisError, DegenerateConfigurationError

_TIE_RTOL = 1e-12


@lru_cache(maxsize=None)
def shift_window(d: int) -> np.ndarray:
    """All shifts in {-1, 0, 1}^d, lexicographically ordered."""
    w = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)
    w.setflags(write=False)
    return w


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def canonical_frac(frac) -> np.ndarray:
    """Reduce fractional coordinates into [0, 1)."""
    f = np.mod(np.asarray(frac, dtype=float), 1.0)
    # np.mod(-1e-18, 1.0) == 1.0 in floating point
    f[f >= 1.0] = 0.0
    return f


@lru_cache(maxsize=256)
def _skew_defect(vectors: tuple[tuple[float, ...], ...]) -> tuple[int, ...] | None:
    """Return a lattice shift outside {-1,0,1}^d that is strictly the nearest
    image for some fractional difference in (-1, 1)^d, or None if the window
    always suffices."""
    V = np.array(vectors, dtype=float)
    d = V.shape[0]
    W = shift_window(d)
    WB = W @ V
    norms = np.linalg.norm(V, axis=1)
    # any x = yV with |y|_inf <= 1 is within `reach` of some window point
    reach = 0.5 * norms.sum()
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    rp = np.linalg.norm(signs @ V, axis=1).max()
    bound = rp + reach
    inv = np.linalg.inv(V)
    K = int(np.ceil(bound * np.linalg.norm(inv, axis=0).max())) + 1
    if (2 * K + 1) ** d > 200_000:
        return tuple([K] + [0] * (d - 1))
    cand = np.array(list(itertools.product(range(-K, K + 1), repeat=d)), dtype=np.int64)
    cand = cand[np.abs(cand).max(axis=1) >= 2]
    cand = cand[np.linalg.norm(cand @ V, axis=1) <= bound * (1 + 1e-12)]
    scale = float(norms.max()) ** 2
    for m in cand:
        mB = m @ V
        # maximise slack s: |x - mB|^2 + s <= |x - w|^2 for every window point w
        A = np.hstack([2.0 * ((WB - mB) @ V.T), np.ones((len(W), 1))])
        b = (WB**2).sum(axis=1) - mB @ mB
        res = linprog(
            c=np.r_[np.zeros(d), -1.0],
            A_ub=A,
            b_ub=b,
            bounds=[(-1.0, 1.0)] * d + [(None, scale)],
            method="highs",
        )
        if res.status == 0 and -res.fun > 1e-9 * scale:
            return tuple(int(v) for v in m)
    return None


@dataclass(frozen=True, eq=False)
class Basis:
    """Fundamental translation vectors of the periodicity cell.

    ``vectors[i]`` is the i-th basis vector. Construction validates linear
    independence and that minimal images lie in the {-1, 0, 1}^d window.
    """

    vectors: np.ndarray
    d: int = field(init=False)
    volume: float = field(init=False)

    def __post_init__(self):
        V = np.atleast_2d(np.array(self.vectors, dtype=float))
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise InvalidBasisError(f"basis must be d x d, got shape {V.shape}")
        if not np.all(np.isfinite(V)):
            raise InvalidBasisError("basis has non-finite entries")
        vol = abs(float(np.linalg.det(V)))
        scale = float(np.prod(np.linalg.norm(V, axis=1)))
        if scale == 0.0 or vol <= 1e-12 * scale:
            raise InvalidBasisError("basis vectors are linearly dependent")
        defect = _skew_defect(tuple(map(tuple, V.tolist())))
        if defect is not None:
            raise CellTooSkewedError(
                f"cell too skewed: shift {list(defect)} is needed for minimal images; "
                "reduce the basis first"
            )
        object.__setattr__(self, "vectors", _frozen(V))
        object.__setattr__(self, "d", V.shape[0])
        object.__setattr__(self, "volume", vol)

    @classmethod
    def identity(cls, d: int, scale: float = 1.0) -> Basis:
        return cls(scale * np.eye(d))

    def cartesian(self, frac) -> np.ndarray:
        return np.asarray(frac, dtype=float) @ self.vectors

    def to_frac(self, x) -> np.ndarray:
        return np.linalg.solve(self.vectors.T, np.asarray(x, dtype=float).T).T

    def offset(self, shift) -> np.ndarray:
        """Cartesian offset of an integer shift."""
        return np.asarray(shift, dtype=float) @ self.vectors

    def scaled(self, c: float) -> Basis:
        return Basis(c * self.vectors)

    def __eq__(self, other):
        return isinstance(other, Basis) and np.array_equal(self.vectors, other.vectors)

    def __hash__(self):
        return hash(self.vectors.tobytes())

    def __repr__(self):
        return f"Basis({self.vectors.tolist()})"


def cell_volume(basis: Basis) -> float:
    return basis.volume


@dataclass(frozen=True)
class TorusPoint:
    frac: tuple[float, ...]

    def __init__(self, frac: Sequence[float]):
        object.__setattr__(self, "frac", tuple(float(v) for v in canonical_frac(np.atleast_1d(frac))))

    def cartesian(self, basis: Basis) -> np.ndarray:
        return basis.cartesian(self.frac)


def _as_frac(p) -> np.ndarray:
    if isinstance(p, TorusPoint):
        return np.array(p.frac)
    return np.asarray(p, dtype=float)


def torus_distance(basis: Basis, a, b) -> tuple[float, tuple[int, ...]]:
    """Minimal-image distance between two points of the torus.

    Returns ``(dist, m)`` where ``m`` in {-1,0,1}^d minimises
    ``|a - b + m @ basis.vectors|``; the image of ``b`` nearest to ``a`` is
    ``b - m``. Near-ties go to the lexicographically smallest ``m``.
    """
    y = canonical_frac(_as_frac(a)) - canonical_frac(_as_frac(b))
    W = shift_window(basis.d)
    dist = np.linalg.norm((y + W) @ basis.vectors, axis=1)
    best = dist.min()
    i = int(np.flatnonzero(dist <= best * (1 + _TIE_RTOL) + 1e-300)[0])
    return float(dist[i]), tuple(int(v) for v in W[i])


def pairwise_images(basis: Basis, frac: np.ndarray):
    """Distances from every center k to every image ``frac[j] + s``.

    Returns ``(dist, W)`` with ``dist[k, j, w] = |frac[j] + W[w] - frac[k]|``
    in Cartesian units. The self term (k == j, zero shift) is set to inf.
    """
    frac = canonical_frac(frac)
    W = shift_window(basis.d)
    diff = frac[None, :, None, :] + W[None, None, :, :] - frac[:, None, None, :]
    dist = np.linalg.norm(diff @ basis.vectors, axis=-1)
    zero = int(np.flatnonzero(~W.any(axis=1))[0])
    idx = np.arange(len(frac))
    dist[idx, idx, zero] = np.inf
    return dist, W


def min_separation(basis: Basis, frac: np.ndarray) -> float:
    """Smallest distance between distinct balls or a ball and its own image."""
    dist, _ = pairwise_images(basis, frac)
    return float(dist.min())


@dataclass(frozen=True, eq=False)
class Configuration:
    """Ball centers (fractional, canonicalised) plus a common radius."""

    basis: Basis
    centers: np.ndarray
    radius: float = 0.0

    def __post_init__(self):
        c = np.atleast_2d(np.array(self.centers, dtype=float))
        if c.shape[1] != self.basis.d:
            raise DegenerateConfigurationError(
                f"centers have dimension {c.shape[1]}, basis has {self.basis.d}"
            )
        if self.radius < 0:
            raise DegenerateConfigurationError("radius must be non-negative")
        object.__setattr__(self, "centers", _frozen(canonical_frac(c)))

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def d(self) -> int:
        return self.basis.d

    def cartesian(self) -> np.ndarray:
        return self.basis.cartesian(self.centers)

    def with_radius(self, r: float) -> Configuration:
        return Configuration(self.basis, self.centers, r)

    def density(self) -> float:
        return packing_density(self.n, self.radius, self.basis)


def ball_volume(d: int, r: float = 1.0) -> float:
    from math import gamma, pi

    return pi ** (d / 2) / gamma(d / 2 + 1) * r**d


def packing_density(n: int, r: float, basis: Basis) -> float:
    return n * ball_volume(basis.d, r) / basis.volume
