"""Self-check suite over the reference examples: flux identities, lattice
fixed points, densities, layered potentials, bound equalities, percolation.

Every check returns ``(name, passed, detail)``; details are formatted with a
fixed number of digits so repeated runs print identical tables.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .analysis import detect_percolation, lower_bound
from .energy import minimize_potentials
from .flux import (
    FluxModel,
    g0_hypergeometric,
    g0_main,
    g0_quadrature,
    main_constant,
    main_constant_odd,
)
from .lattices import LatticeSpec, generate, layered_potential
from .optimizer import GraphClass, pack_in_class, solve_centers
from .torus import Basis

Check = tuple[str, bool, str]


def check_flux() -> list[Check]:
    out = []
    worst = 0.0
    for d, p in [(2, 2), (3, 2), (2, 3), (3, 4), (5, 4)]:
        m = FluxModel(d, p, 1.0)
        for delta in (1.0, 0.1, 0.01):
            worst = max(worst, abs(g0_hypergeometric(m, delta) / g0_quadrature(m, delta) - 1))
    out.append(("flux: 2F1 closed form vs quadrature", worst <= 1e-8, f"max rel err {worst:.2e}"))
    ratios = []
    for d, p in [(2, 2), (2, 3), (3, 4), (5, 4)]:
        m = FluxModel(d, p, 1.0)
        ratios.append(g0_quadrature(m, 1e-8) / g0_main(m, 1e-8))
    ok = all(0.98 <= x <= 1.02 for x in ratios)
    out.append(("flux: main term at delta=1e-8", ok, f"ratios in [{min(ratios):.6f}, {max(ratios):.6f}]"))
    m = FluxModel(3, 2, 1.0)
    x = g0_quadrature(m, 1e-12) / g0_main(m, 1e-12)
    out.append(("flux: logarithmic main term at delta=1e-12", 0.9 <= x <= 1.1, f"ratio {x:.6f}"))
    e1 = abs(g0_quadrature(FluxModel(2, 2, 1.0), 0.5) / (2 * math.sqrt(2) * math.atan(math.sqrt(2))) - 1)
    e2 = abs(g0_quadrature(FluxModel(3, 2, 1.0), 0.5) / (math.pi * math.log(3)) - 1)
    out.append(("flux: closed antiderivatives", max(e1, e2) <= 1e-10, f"rel err {max(e1, e2):.2e}"))
    worst = 0.0
    for d in (3, 5):
        for p in range(3, 9):
            if 2 * p > d + 1:
                worst = max(worst, abs(main_constant(d, p, 1.0) / main_constant_odd(d, p, 1.0) - 1))
    out.append(("flux: odd-d factorial form", worst <= 1e-12, f"max rel err {worst:.2e}"))
    return out


def check_lattices() -> list[Check]:
    out = []
    targets = {"A2": math.pi / (2 * math.sqrt(3)), "Z_d": math.pi / 4, "FCC": math.pi / math.sqrt(18)}
    cases = [("A2", 1), ("A2", 2), ("A2", 3), ("Z_d", 1), ("Z_d", 2), ("FCC", 1)]
    for fam, m in cases:
        lat = generate(LatticeSpec(fam, m))
        sol = solve_centers(lat.graph_class, lat.basis)
        pos = lat.basis.cartesian(lat.centers)
        # compare up to translation
        dev = np.abs((sol.positions - sol.positions.mean(0)) - (pos - pos.mean(0))).max()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, rep = pack_in_class(lat.graph_class, lat.basis)
        ok_fp = sol.residual < 1e-12 and dev < 1e-8
        out.append((f"fixed point: {fam} m={m}", ok_fp, f"residual {sol.residual:.1e}, deviation {dev:.1e}"))
        err = abs(rep.density - targets[fam])
        out.append((f"density: {fam} m={m}", err <= 1e-12, f"phi {rep.density:.12f}"))
    return out


def check_layers_and_bounds(delta: float = 1e-4) -> list[Check]:
    out = []
    for fam, m in [("A2", 3), ("Z_d", 2), ("FCC", 1)]:
        lat = generate(LatticeSpec(fam, m))
        r = lat.r_touch - delta / 2
        g = lat.graph.with_geometry(lat.basis, lat.centers, r)
        model = FluxModel(lat.spec.d, 2 if fam != "FCC" else 3, r)
        field = layered_potential(lat.spec, lat.basis, lat.centers)
        rep = minimize_potentials(g, model, field.xi, lat.basis, strength=field.strength)
        dev = np.abs(rep.t_opt - field.t).max()
        out.append((f"layered potential: {fam} m={m}", dev <= 1e-8, f"max deviation {dev:.1e}"))
        b = lower_bound(g, model, rep.field, lat.basis)
        out.append((f"bound equality: {fam} m={m}", abs(b.equality_gap) <= 1e-9,
                    f"equality gap {abs(b.equality_gap):.1e}"))
    return out


def check_percolation() -> list[Check]:
    lat = generate(LatticeSpec("A2", 2))
    touching = detect_percolation(lat.config)
    shrunk = detect_percolation(lat.config.with_radius(0.99 * lat.r_touch))
    ok = all(touching.winding) and not any(shrunk.winding)
    return [("percolation: hexagonal touching / shrunk", ok,
             f"touching {list(touching.winding)}, shrunk {list(shrunk.winding)}")]


def check_chain() -> list[Check]:
    worst = 0.0
    for n in range(2, 9):
        adj = [[((k - 1) % n, (-1,) if k == 0 else (0,)), ((k + 1) % n, (1,) if k == n - 1 else (0,))]
               for k in range(n)]
        sol = solve_centers(GraphClass(adj, 1), Basis([[float(n)]]))
        x = np.sort(sol.centers[:, 0] * n)
        worst = max(worst, np.abs(np.diff(x) - 1).max())
    return [("1D chain: equal spacing", worst <= 1e-12, f"max spacing error {worst:.1e}")]


def run_all() -> list[Check]:
    return check_flux() + check_lattices() + check_layers_and_bounds() + check_percolation() + check_chain()


def format_table(checks: list[Check]) -> str:
    width = max(len(name) for name, _, _ in checks)
    lines = [f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}" for name, ok, detail in checks]
    passed = sum(ok for _, ok, _ in checks)
    lines.append(f"{passed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"
