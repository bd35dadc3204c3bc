"""Lower bounds on the discrete energy and percolation diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import PotentialField, edge_drops, energy
from .errors import UnsupportedRegimeError
from .flux import FluxModel, edge_weight_function
from .graph import PeriodicGraph, _lex_positive
from .torus import Basis, Configuration, pairwise_images

DROP_RTOL = 1e-8
TOUCH_TOL = 1e-8


@dataclass
class BoundReport:
    T: float
    mean_arg: float
    bound: float
    energy: float
    equality_gap: float
    equal_drop_edges_equal_gap: bool
    support: int = 0

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "mean_arg": self.mean_arg,
            "bound": self.bound,
            "energy": self.energy,
            "equality_gap": self.equality_gap,
            "equal_drop_edges_equal_gap": self.equal_drop_edges_equal_gap,
            "support_edges": self.support,
        }


def _all_close(x: np.ndarray, rtol: float = 1e-9) -> bool:
    if len(x) == 0:
        return True
    return bool(np.ptp(x) <= rtol * np.abs(x).max())


def jensen_holder_bound(drops, lengths, f, p: int, volume: float, drop_rtol: float = DROP_RTOL):
    """Jensen then Cauchy-Schwarz lower bound for ``(1/|Q0|) sum_e f(x_e)|d_e|^p``.

    Sums run over the directed edge list restricted to edges with a nonzero
    drop (the Jensen weights must be positive). Returns None when every drop
    vanishes.
    """
    drops = np.abs(np.asarray(drops, dtype=float))
    lengths = np.asarray(lengths, dtype=float)
    top = drops.max() if len(drops) else 0.0
    if top == 0.0:
        return None
    on = drops > drop_rtol * top
    dp = np.repeat(drops[on] ** p, 2)
    x = np.repeat(lengths[on], 2)
    T = float(dp.sum())
    mean_arg = math.sqrt(float((dp**2).sum())) * math.sqrt(float((x**2).sum())) / T
    bound = T * float(f(mean_arg)) / (2.0 * volume)
    equal = _all_close(drops[on]) and _all_close(lengths[on])
    return BoundReport(T, mean_arg, bound, math.nan, math.nan, equal, int(on.sum()))


def lower_bound(graph: PeriodicGraph, model: FluxModel, field: PotentialField, basis: Basis) -> BoundReport:
    """Compare the energy of ``field`` with its Jensen/Hölder lower bound.

    The report's ``T`` is 0 and ``bound`` NaN when all drops vanish.
    """
    if model.regime != "power":
        raise UnsupportedRegimeError("the bound needs a convex decreasing power-law coefficient")
    drops = edge_drops(graph, field, basis)
    _, _, _, lengths = graph.arrays()
    E = energy(graph, model, field, basis)
    rep = jensen_holder_bound(drops, lengths, edge_weight_function(model), model.p, basis.volume)
    if rep is None:
        return BoundReport(0.0, math.nan, math.nan, E, math.nan, False, 0)
    rep.energy = E
    rep.equality_gap = (E - rep.bound) / E if E > 0 else 0.0
    return rep


# ---------------------------------------------------------------------------
# percolation


class _OffsetUnionFind:
    """Union-find whose nodes carry integer lifts relative to their root."""

    def __init__(self, n: int, d: int):
        self.parent = list(range(n))
        self.off = [np.zeros(d, dtype=np.int64) for _ in range(n)]
        self.cycles: list[tuple[int, np.ndarray]] = []

    def find(self, x: int) -> tuple[int, np.ndarray]:
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root = x
        # compress: re-express every node on the path relative to the root
        acc = np.zeros_like(self.off[root])
        for v in reversed(path):
            acc = acc + self.off[v]
            self.off[v] = acc.copy()
            self.parent[v] = root
        return root, (self.off[path[0]] if path else np.zeros_like(self.off[root]))

    def union(self, k: int, j: int, s) -> None:
        """Record that the image ``j + s`` touches ``k``."""
        s = np.asarray(s, dtype=np.int64)
        rk, ok = self.find(k)
        rj, oj = self.find(j)
        if rk == rj:
            w = ok + s - oj
            if w.any():
                self.cycles.append((k, w))
            return
        self.parent[rj] = rk
        self.off[rj] = ok + s - oj

    def windings(self) -> dict[int, list[np.ndarray]]:
        out: dict[int, list[np.ndarray]] = {}
        for v, w in self.cycles:
            out.setdefault(self.find(v)[0], []).append(w)
        return out


def touching_pairs(config: Configuration, touch_tol: float = TOUCH_TOL):
    """All ``(k, j, shift, gap)`` with gap <= touch_tol * r, each contact once."""
    dist, W = pairwise_images(config.basis, config.centers)
    gaps = dist - 2 * config.radius
    out = []
    for k, j, w in zip(*np.nonzero(gaps <= touch_tol * config.radius)):
        s = tuple(int(v) for v in W[w])
        if k > j or (k == j and not _lex_positive(s)):
            continue
        out.append((int(k), int(j), s, float(gaps[k, j, w])))
    return out


@dataclass
class PercolationReport:
    winding: tuple[bool, ...]
    touching_edges: int
    isotropy_necessary: bool
    components: list[list[int]] = field(default_factory=list)
    component_windings: list[tuple[bool, ...]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "winding": list(self.winding),
            "touching_edges": self.touching_edges,
            "isotropy_necessary": self.isotropy_necessary,
            "components": self.components,
            "component_windings": [list(w) for w in self.component_windings],
        }


def _percolate(config: Configuration, touch_tol: float):
    d, n = config.d, config.n
    pairs = touching_pairs(config, touch_tol)
    uf = _OffsetUnionFind(n, d)
    for k, j, s, _ in pairs:
        uf.union(k, j, s)
    roots: dict[int, list[int]] = {}
    for v in range(n):
        roots.setdefault(uf.find(v)[0], []).append(v)
    wind = uf.windings()
    comps, cw = [], []
    for r in sorted(roots, key=lambda r: roots[r][0]):
        comps.append(roots[r])
        ws = wind.get(r, [])
        cw.append(tuple(bool(any(w[l] != 0 for w in ws)) for l in range(d)))
    return pairs, comps, cw


def detect_percolation(config: Configuration, touch_tol: float = TOUCH_TOL) -> PercolationReport:
    """Directions along which chains of touching balls wrap around the torus."""
    pairs, comps, cw = _percolate(config, touch_tol)
    winding = tuple(any(c[l] for c in cw) for l in range(config.d))
    return PercolationReport(winding, len(pairs), all(winding), comps, cw)


def densify_hint(config: Configuration, touch_tol: float = TOUCH_TOL) -> list[dict]:
    """Rigid translations that would bring non-spanning touching groups into contact.

    For each component whose touching chains do not wrap in every direction,
    the smallest gap to any ball it does not already touch.
    """
    pairs, comps, cw = _percolate(config, touch_tol)
    dist, W = pairwise_images(config.basis, config.centers)
    gaps = dist - 2 * config.radius
    x = config.cartesian()
    hints = []
    for members, wind in zip(comps, cw):
        if all(wind):
            continue
        sub = gaps[members]
        sub = np.where(sub > touch_tol * config.radius, sub, np.inf)
        if not np.isfinite(sub).any():
            continue
        a, j, w = np.unravel_index(int(np.argmin(sub)), sub.shape)
        k = members[a]
        target = x[j] + config.basis.offset(W[w])
        direction = (target - x[k]) / np.linalg.norm(target - x[k])
        hints.append(
            {
                "component": list(members),
                "translation": float(sub[a, j, w]),
                "k": int(k),
                "j": int(j),
                "shift": [int(v) for v in W[w]],
                "direction": direction.tolist(),
            }
        )
    return hints
