"""Optimal center placement inside a fixed periodic graph class.

Stationarity of ``g(a) = sum_k sum_{(j,s) in J_k} |a_j + s.nu - a_k|^2`` gives
one linear system per Cartesian coordinate:

    N_k x_k - sum_{(j,s) in J_k} x_j = sum_{(j,s) in J_k} (s @ basis)[coord]

The matrix is the graph Laplacian of the class (rank n - 1 when connected),
so solutions are unique up to a common translation; we pin the mean of the
fractional coordinates to zero.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import cg

from .errors import (
    DegenerateConfigurationError,
    InfeasibleClassError,
    InvalidBasisError,
    InvalidInputError,
    RankDeficiencyError,
)
from .graph import PeriodicGraph, build_delaunay, connected_components, graph_class_signature
from .torus import Basis, Configuration, canonical_frac, min_separation, packing_density

Shift = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class GraphClass:
    """Adjacency of a periodic graph: ``adjacency[k]`` lists ``(j, shift)``."""

    n: int
    adjacency: tuple[tuple[tuple[int, Shift], ...], ...]
    d: int

    def __init__(self, adjacency, d: int | None = None):
        adj = tuple(
            tuple((int(j), tuple(int(v) for v in s)) for j, s in Jk) for Jk in adjacency
        )
        if d is None:
            d = next((len(s) for Jk in adj for _, s in Jk), 0)
        object.__setattr__(self, "n", len(adj))
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "d", int(d))
        for Jk in adj:
            for j, s in Jk:
                if not 0 <= j < len(adj):
                    raise InvalidInputError(f"neighbour index {j} out of range")
                if len(s) != self.d:
                    raise InvalidInputError("shifts of inconsistent dimension")

    @classmethod
    def from_graph(cls, g: PeriodicGraph, d: int | None = None) -> GraphClass:
        return cls(g.neighbors, d)

    @property
    def degrees(self) -> list[int]:
        return [len(Jk) for Jk in self.adjacency]

    def is_symmetric(self) -> bool:
        fwd = Counter((k, j, s) for k, Jk in enumerate(self.adjacency) for j, s in Jk)
        back = Counter((j, k, tuple(-v for v in s)) for k, Jk in enumerate(self.adjacency) for j, s in Jk)
        return fwd == back

    def is_connected(self) -> bool:
        pairs = [(k, j) for k, Jk in enumerate(self.adjacency) for j, _ in Jk]
        return len(connected_components(self.n, pairs)) == 1

    def to_graph(self) -> PeriodicGraph:
        return PeriodicGraph.from_adjacency(self.n, self.adjacency)

    def signature(self):
        return graph_class_signature(self.to_graph())

    def laplacian(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        for k, Jk in enumerate(self.adjacency):
            L[k, k] += len(Jk)
            for j, _ in Jk:
                L[k, j] -= 1.0
        return L

    def shift_sums(self) -> np.ndarray:
        """``b[k, l] = sum over J_k of s_l``: right-hand sides per basis index."""
        b = np.zeros((self.n, self.d))
        for k, Jk in enumerate(self.adjacency):
            for _, s in Jk:
                b[k] += s
        return b

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "adjacency": [[{"j": j, "shift": list(s)} for j, s in Jk] for Jk in self.adjacency],
        }

    @classmethod
    def from_dict(cls, data: dict) -> GraphClass:
        adj = [[(e["j"], tuple(e["shift"])) for e in Jk] for Jk in data["adjacency"]]
        if "n" in data and data["n"] != len(adj):
            raise InvalidInputError(f"class declares n={data['n']} but lists {len(adj)} vertices")
        return cls(adj, data.get("d"))


def _check_class(cls: GraphClass) -> None:
    if cls.n < 1:
        raise InvalidInputError("empty class")
    if not cls.is_symmetric():
        raise InfeasibleClassError(
            "adjacency is not symmetric: (j, s) in J_k requires (k, -s) in J_j"
        )
    if not cls.is_connected():
        raise RankDeficiencyError(
            "class is disconnected: the center system has rank below n - 1"
        )
    if any(len(Jk) == 0 for Jk in cls.adjacency):
        raise RankDeficiencyError("vertex without neighbours")


def _solve_gauged(L: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``L x = rhs`` (columns independent) with ``sum(x) = 0``."""
    n = L.shape[0]
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = L
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    rhs = np.atleast_2d(rhs.T).T
    x = np.linalg.solve(A, np.vstack([rhs, np.zeros((1, rhs.shape[1]))]))
    return x[:n]


def stationarity_residual(cls: GraphClass, basis: Basis, positions) -> float:
    """Max |a_k - mean over J_k of (a_j + s @ basis)| for Cartesian positions."""
    a = np.atleast_2d(np.asarray(positions, dtype=float))
    worst = 0.0
    for k, Jk in enumerate(cls.adjacency):
        if not Jk:
            continue
        target = np.mean([a[j] + basis.offset(s) for j, s in Jk], axis=0)
        worst = max(worst, float(np.abs(a[k] - target).max()))
    return worst


@dataclass
class CenterSolution:
    coeffs: np.ndarray  # (n, d): a_k = sum_l coeffs[k, l] * nu_l
    positions: np.ndarray  # Cartesian, unreduced
    centers: np.ndarray  # fractional, reduced to [0, 1)
    residual: float

    def to_dict(self) -> dict:
        return {
            "coeffs": self.coeffs.tolist(),
            "positions": self.positions.tolist(),
            "centers": self.centers.tolist(),
            "residual": self.residual,
        }


def solve_centers_symbolic(cls: GraphClass, tol: float = 1e-10) -> np.ndarray:
    """Coefficient table ``x[k, l]`` with ``a_k = sum_l x[k, l] nu_l`` for any basis.

    One Laplacian solve per basis index with right-hand side ``sum s_l``.
    """
    _check_class(cls)
    L = cls.laplacian()
    b = cls.shift_sums()
    x = _solve_gauged(L, b)
    if np.abs(L @ x - b).max() > max(tol, 1e-12) * max(1.0, np.abs(b).max()):
        raise InfeasibleClassError("center system has no solution")
    return x


def solve_centers(cls: GraphClass, basis: Basis, tol: float = 1e-10) -> CenterSolution:
    """Stationary centers of the class for a concrete basis.

    Solves the decoupled per-coordinate systems in Cartesian coordinates.
    """
    _check_class(cls)
    if basis.d != cls.d:
        raise InvalidInputError(f"class dimension {cls.d} != basis dimension {basis.d}")
    L = cls.laplacian()
    if np.linalg.matrix_rank(L) != cls.n - 1:
        raise RankDeficiencyError("Laplacian rank differs from n - 1")
    rhs = cls.shift_sums() @ basis.vectors  # (n, d) Cartesian right-hand sides
    pos = _solve_gauged(L, rhs)
    coeffs = basis.to_frac(pos)
    res = stationarity_residual(cls, basis, pos)
    scale = max(1.0, float(np.abs(basis.vectors).max()))
    if res > max(tol, 1e-12) * scale:
        raise InfeasibleClassError(f"stationarity residual {res:.3g} exceeds tolerance")
    return CenterSolution(coeffs, pos, canonical_frac(coeffs), res)


def relax_centers(cls: GraphClass, basis: Basis, start, tol: float = 1e-14) -> np.ndarray:
    """Iterate from Cartesian ``start`` to a stationary configuration.

    Conjugate gradients on the per-coordinate systems; the translation
    component of the start is kept.
    """
    _check_class(cls)
    L = cls.laplacian()
    rhs = cls.shift_sums() @ basis.vectors
    start = np.asarray(start, dtype=float)
    out = np.empty_like(start)
    for c in range(basis.d):
        x, info = cg(L, rhs[:, c], x0=start[:, c], rtol=tol, atol=0.0, maxiter=10 * cls.n + 100)
        out[:, c] = x
    return out


def spread(cls: GraphClass, basis: Basis, positions) -> float:
    """``g(a)``: sum over directed neighbour pairs of squared edge lengths."""
    a = np.atleast_2d(np.asarray(positions, dtype=float))
    total = 0.0
    for k, Jk in enumerate(cls.adjacency):
        for j, s in Jk:
            v = a[j] + basis.offset(s) - a[k]
            total += float(v @ v)
    return total


def _spread_grad(cls: GraphClass, basis: Basis, a: np.ndarray) -> np.ndarray:
    g = np.zeros_like(a)
    for k, Jk in enumerate(cls.adjacency):
        for j, s in Jk:
            v = a[j] + basis.offset(s) - a[k]
            g[j] += 2 * v
            g[k] -= 2 * v
    return g


@dataclass
class SpreadResult:
    value: float
    positions: np.ndarray
    restarts: list[float] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(math.isclose(v, self.value, rel_tol=1e-8, abs_tol=1e-12) for v in self.restarts)


def maximize_spread(cls: GraphClass, basis: Basis, restarts: int = 0, seed: int = 0,
                    jitter: float = 0.1) -> SpreadResult:
    """``g`` at the stationary centers, optionally re-derived from perturbed starts.

    Each restart perturbs the solution by ``jitter`` (Cartesian, relative to
    the cell scale) and runs BFGS on ``g`` with the class shifts held fixed;
    with fixed shifts ``g`` is a convex quadratic, so the local search
    settles on the same stationary value.
    """
    sol = solve_centers(cls, basis)
    value = spread(cls, basis, sol.positions)
    rng = np.random.default_rng(seed)
    scale = basis.volume ** (1 / basis.d)
    vals = []
    shape = sol.positions.shape
    for _ in range(restarts):
        x0 = sol.positions + jitter * scale * rng.standard_normal(shape)
        res = minimize(
            lambda z: spread(cls, basis, z.reshape(shape)),
            x0.ravel(),
            jac=lambda z: _spread_grad(cls, basis, z.reshape(shape)).ravel(),
            method="BFGS",
            options={"gtol": 1e-11, "maxiter": 10_000},
        )
        vals.append(float(res.fun))
    return SpreadResult(value, sol.positions, vals)


@dataclass
class PackReport:
    radius: float
    density: float
    class_violation: bool
    class_signature: str
    realized_signature: str
    residual: float
    min_separation: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pack_in_class(cls: GraphClass, basis: Basis, facet_tol: float = 1e-9,
                  tol: float = 1e-10) -> tuple[Configuration, PackReport]:
    """Realise the class optimum in ``basis`` with the largest common radius."""
    sol = solve_centers(cls, basis, tol)
    sep = min_separation(basis, sol.centers)
    if not sep > 1e-9 * basis.volume ** (1 / basis.d):
        raise DegenerateConfigurationError("solved centers coincide; class is degenerate in this basis")
    r = sep / 2
    config = Configuration(basis, sol.centers, r)
    realized = build_delaunay(basis, sol.centers, r, facet_tol)
    want = cls.signature()
    got = graph_class_signature(realized)
    violation = want != got
    if violation:
        warnings.warn(
            "realised Delaunay graph differs from the requested class (flip)",
            RuntimeWarning,
            stacklevel=2,
        )
    rep = PackReport(
        radius=r,
        density=packing_density(cls.n, r, basis),
        class_violation=violation,
        class_signature=want.digest(),
        realized_signature=got.digest(),
        residual=sol.residual,
        min_separation=sep,
    )
    return config, rep


@dataclass
class ScanEntry:
    basis: Basis
    density: float | None
    isotropy_necessary: bool
    class_violation: bool
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.vectors.tolist() if self.basis is not None else None,
            "density": self.density,
            "isotropy_necessary": self.isotropy_necessary,
            "class_violation": self.class_violation,
            "error": self.error,
        }


def _scan_one(cls, basis, facet_tol, touch_tol):
    from .analysis import detect_percolation

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            config, rep = pack_in_class(cls, basis, facet_tol)
    except (DegenerateConfigurationError, InfeasibleClassError) as exc:
        return ScanEntry(basis, None, False, False, str(exc))
    perc = detect_percolation(config, touch_tol)
    return ScanEntry(basis, rep.density, perc.isotropy_necessary, rep.class_violation)


def scan_bases(cls: GraphClass, bases, facet_tol: float = 1e-9, touch_tol: float = 1e-8,
               max_workers: int | None = None):
    """Pack the class in every candidate basis; the best entry is the densest
    one whose touching balls wrap around every cell direction."""
    from concurrent.futures import ThreadPoolExecutor

    bases = list(bases)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as ex:
            entries = list(ex.map(lambda b: _scan_one(cls, b, facet_tol, touch_tol), bases))
    else:
        entries = [_scan_one(cls, b, facet_tol, touch_tol) for b in bases]
    ok = [e for e in entries if e.density is not None and e.isotropy_necessary]
    best = max(ok, key=lambda e: e.density) if ok else None
    return entries, best


def refine_basis(cls: GraphClass, basis0: Basis, max_iter: int = 200, facet_tol: float = 1e-9,
                 touch_tol: float = 1e-8):
    """Nelder-Mead over basis shapes at fixed cell volume, maximising the
    realised density among percolating configurations. No global guarantee.

    Non-percolating shapes score ``1 - density``, which keeps a slope
    towards denser (and typically percolating) shapes. Returns the best
    basis and its density, or ``None`` for the density when no percolating
    shape was reached.
    """
    d = basis0.d
    vol = basis0.volume

    def make(z):
        V = z.reshape(d, d)
        det = abs(np.linalg.det(V))
        if det <= 1e-12:
            return None
        try:
            return Basis(V * (vol / det) ** (1 / d))
        except InvalidBasisError:
            return None

    def objective(z):
        b = make(z)
        if b is None:
            return 2.0
        e = _scan_one(cls, b, facet_tol, touch_tol)
        if e.density is None:
            return 2.0
        return -e.density + (0.0 if e.isotropy_necessary else 1.0)

    res = minimize(objective, basis0.vectors.ravel(), method="Nelder-Mead",
                   options={"maxiter": max_iter, "xatol": 1e-10, "fatol": 1e-12})
    best = make(res.x)
    if best is None or res.fun >= 0.0:
        return best, None
    return best, -float(res.fun)
