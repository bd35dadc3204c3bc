"""Discrete network energy and its minimisation over ball potentials.

Each edge carries a weight ``w_e`` (the flux coefficient of its gap) and a
potential drop ``t_k - t_j - strength * xi . (shift @ basis)``; the second
term is the jump of the quasi-periodic external potential across the cell.
The scaled energy is ``(1/(2|Q0|)) * sum over directed edges of w |drop|^p``,
i.e. ``(1/|Q0|) * sum over undirected edges``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InvalidInputError, OverlapError
from .flux import FluxModel, g0_main
from .graph import PeriodicEdge, PeriodicGraph, connected_components
from .torus import Basis

NORMALIZATION = "sigma = (1/(2|Q0|)) * sum_k sum_{j in J_k} g0_kj |drop_kj|^p"


def _unit(xi) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    nrm = np.linalg.norm(xi)
    if not nrm > 0:
        raise InvalidInputError("external flux direction must be nonzero")
    return xi / nrm


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Unit flux direction ``xi``, external strength, and ball potentials ``t``.

    ``t`` is stored in the mean-zero gauge. The external potential is
    ``strength * xi . x``.
    """

    xi: np.ndarray
    t: np.ndarray
    strength: float = 1.0
    gauge: str = "mean-zero"

    def __post_init__(self):
        xi = _unit(self.xi)
        t = np.atleast_1d(np.array(self.t, dtype=float))
        t = t - t.mean() if len(t) else t
        xi.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "t", t)

    def jump(self, shift, basis: Basis) -> float:
        return float(self.strength * self.xi @ basis.offset(shift))


def edge_difference(field: PotentialField, e: PeriodicEdge, basis: Basis) -> float:
    """Potential drop across an edge including the wrap jump."""
    return float(field.t[e.k] - field.t[e.j] - field.jump(e.shift, basis))


def edge_jumps(graph: PeriodicGraph, basis: Basis, xi, strength: float = 1.0) -> np.ndarray:
    _, _, s, _ = graph.arrays()
    if len(graph.edges) == 0:
        return np.zeros(0)
    return strength * (s @ basis.vectors) @ _unit(xi)


def edge_drops(graph: PeriodicGraph, field: PotentialField, basis: Basis) -> np.ndarray:
    k, j, _, _ = graph.arrays()
    return field.t[k] - field.t[j] - edge_jumps(graph, basis, field.xi, field.strength)


def edge_weights(graph: PeriodicGraph, model: FluxModel) -> np.ndarray:
    """Flux coefficient of each edge; a closed gap gives +inf."""
    gaps = np.array([e.gap for e in graph.edges], dtype=float)
    if np.any(np.isnan(gaps)):
        raise InvalidInputError("graph edges carry no geometry (gap is NaN)")
    tol = 1e-12 * max(model.r, 1.0)
    for e, gap in zip(graph.edges, gaps):
        if gap < -tol:
            raise OverlapError(e.k, e.j, e.shift, gap)
    w = np.full(len(gaps), np.inf)
    open_ = gaps > tol
    if open_.any():
        w[open_] = np.atleast_1d(g0_main(model, gaps[open_]))
    if np.any(w < 0):
        raise InvalidInputError("logarithmic coefficient is negative for gaps larger than r")
    return w


def _contributions(weights: np.ndarray, drops: np.ndarray, p: int) -> np.ndarray:
    mag = np.abs(drops) ** p
    with np.errstate(invalid="ignore"):
        out = weights * mag
    out[mag == 0] = 0.0
    return out


def energy(graph: PeriodicGraph, model: FluxModel, field: PotentialField, basis: Basis) -> float:
    """Scaled discrete energy of a given potential field (inf if a closed gap carries a drop)."""
    w = edge_weights(graph, model)
    c = _contributions(w, edge_drops(graph, field, basis), model.p)
    return float(c.sum() / basis.volume)


def _laplacian(n, k, j, w):
    L = np.zeros((n, n))
    np.add.at(L, (k, k), w)
    np.add.at(L, (j, j), w)
    np.add.at(L, (k, j), -w)
    np.add.at(L, (j, k), -w)
    return L


def _constraint(n, comps):
    C = np.zeros((n, len(comps)))
    for c, members in enumerate(comps):
        C[members, c] = 1.0
    return C


def _solve_gauged(M, rhs, C):
    m = C.shape[1]
    A = np.block([[M, C], [C.T, np.zeros((m, m))]])
    x = np.linalg.solve(A, np.r_[rhs, np.zeros(m)])
    return x[: M.shape[0]]


@dataclass
class SolveInfo:
    iterations: int
    grad_norm: float
    grad_scale: float
    components: int
    method: str


def solve_potentials(
    n: int,
    k: np.ndarray,
    j: np.ndarray,
    jumps: np.ndarray,
    weights: np.ndarray,
    p: int,
    tol: float = 1e-10,
    max_iter: int = 500,
    method: str = "auto",
) -> tuple[np.ndarray, SolveInfo]:
    """Minimise ``sum_e w_e |t_k - t_j - jump_e|^p`` over t.

    p = 2 is a weighted graph-Laplacian solve; larger p uses damped Newton
    with backtracking, started from the p = 2 solution. Each connected
    component is gauged to mean zero.
    """
    k = np.asarray(k, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    jumps = np.asarray(jumps, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(weights)):
        raise InvalidInputError("infinite edge weight (closed gap) in minimisation")
    comps = connected_components(n, zip(k.tolist(), j.tolist()))
    C = _constraint(n, comps)
    loop = k == j
    kk, jj, ww, JJ = k[~loop], j[~loop], weights[~loop], jumps[~loop]

    def rhs_p2():
        b = np.zeros(n)
        np.add.at(b, kk, ww * JJ)
        np.add.at(b, jj, -ww * JJ)
        return b

    L = _laplacian(n, kk, jj, ww)
    t = _solve_gauged(L, rhs_p2(), C)
    if p == 2 and method != "newton":
        return t, SolveInfo(0, 0.0, 0.0, len(comps), "laplacian")

    def objective(t):
        d = t[k] - t[j] - jumps
        return float(np.sum(weights * np.abs(d) ** p))

    def grad_hess(t):
        d = t[kk] - t[jj] - JJ
        a = np.abs(d)
        ge = p * ww * a ** (p - 1) * np.sign(d)
        g = np.zeros(n)
        np.add.at(g, kk, ge)
        np.add.at(g, jj, -ge)
        H = _laplacian(n, kk, jj, p * (p - 1) * ww * a ** (p - 2))
        scale = float(np.sum(p * ww * a ** (p - 1)))
        return g, H, scale

    if method == "newton" and p == 2:
        t = np.zeros(n)
    # gradient scale of the jumps alone; floors the relative test when the
    # optimal drops vanish (tree-like graphs) and the scale shrinks with them
    ref = float(np.sum(p * ww * np.abs(JJ) ** (p - 1)))
    floor = 1e-6 * ref
    # below this the gradient is rounding noise of the jump terms
    noise = 64 * np.finfo(float).eps * ref
    F = objective(t)
    for it in range(1, max_iter + 1):
        g, H, scale = grad_hess(t)
        gnorm = float(np.abs(g).max()) if n else 0.0
        if max(scale, floor) == 0.0 or gnorm <= max(tol * max(scale, floor), noise):
            return t, SolveInfo(it - 1, gnorm, scale, len(comps), "newton")
        mu = 1e-12 * max(float(np.diag(H).max()), 1e-300)
        try:
            step = _solve_gauged(H + mu * np.eye(n), -g, C)
        except np.linalg.LinAlgError:
            step = -g
        if not step @ g < 0:
            step = -g
        if -(step @ g) <= 1e-14 * max(F, 1e-300):
            # predicted decrease below the rounding level of the objective
            return t, SolveInfo(it - 1, gnorm, scale, len(comps), "newton")
        lam = 1.0
        while lam > 1e-12:
            t_new = t + lam * step
            F_new = objective(t_new)
            if F_new <= F + 1e-4 * lam * (step @ g):
                break
            lam *= 0.5
        else:
            raise ConvergenceError("line search failed", best=t)
        t = t_new - C @ (C.T @ t_new / C.sum(axis=0))
        F = objective(t)
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations", best=t)


@dataclass
class EnergyReport:
    sigma: float
    t_opt: np.ndarray
    xi: np.ndarray
    strength: float
    p: int
    per_edge: list[tuple[PeriodicEdge, float]]
    bound: float | None
    equality_gap: float | None
    info: SolveInfo
    normalization: str = NORMALIZATION

    @property
    def field(self) -> PotentialField:
        return PotentialField(self.xi, self.t_opt, self.strength)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "p": self.p,
            "xi": self.xi.tolist(),
            "strength": self.strength,
            "t_opt": self.t_opt.tolist(),
            "per_edge": [
                {"k": e.k, "j": e.j, "shift": list(e.shift), "contribution": c}
                for e, c in self.per_edge
            ],
            "bound": self.bound,
            "equality_gap": self.equality_gap,
            "iterations": self.info.iterations,
            "components": self.info.components,
            "solver": self.info.method,
            "normalization": self.normalization,
        }


def minimize_potentials(
    graph: PeriodicGraph,
    model: FluxModel,
    xi,
    basis: Basis,
    tol: float = 1e-10,
    strength: float = 1.0,
    weights: np.ndarray | None = None,
    method: str = "auto",
) -> EnergyReport:
    """Minimal scaled energy over potentials for the external field ``strength * xi``."""
    from .analysis import jensen_holder_bound

    xi = _unit(xi)
    if len(xi) != basis.d:
        raise InvalidInputError(f"xi has {len(xi)} components, basis has dimension {basis.d}")
    w = edge_weights(graph, model) if weights is None else np.asarray(weights, dtype=float)
    k, j, _, length = graph.arrays()
    jumps = edge_jumps(graph, basis, xi, strength)
    t, info = solve_potentials(graph.n, k, j, jumps, w, model.p, tol=tol, method=method)
    drops = t[k] - t[j] - jumps
    contrib = 2.0 * _contributions(w, drops, model.p)
    sigma = float(contrib.sum() / (2.0 * basis.volume))
    bound = gap = None
    if model.regime == "power" and weights is None and np.any(drops != 0):
        from .flux import edge_weight_function

        b = jensen_holder_bound(drops, length, edge_weight_function(model), model.p, basis.volume)
        if b is not None:
            bound = b.bound
            gap = (sigma - bound) / sigma if sigma > 0 else 0.0
    per_edge = list(zip(graph.edges, contrib.tolist()))
    return EnergyReport(sigma, t, xi, strength, model.p, per_edge, bound, gap, info)
