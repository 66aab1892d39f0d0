"""Damped-Newton minimization of the discrete anisotropic graph area.

The discrete energy of a piecewise-linear graph is

    E(u) = sum_cells |cell| * f(Du|_cell),

which is exact quadrature because Du is constant per cell.  Dirichlet values
are imposed on the truncation boundary only; the wall ``{x1 = 0}`` is left
unconstrained, so stationarity of E encodes the natural boundary condition
``<Df(Du), e1> = 0`` weakly with no boundary assembly at all.  Since the
Lagrangian Hessian is SPD for bounded gradients, the energy is convex and a
backtracking Newton iteration converges globally with a nonincreasing energy
trace.  Per-cell assembly uses a deterministic reduction (scipy's COO
duplicate summation), and solves on different meshes are independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve

from .domain import Mesh, Tag
from .integrand import EllipticIntegrand

__all__ = [
    "GraphFunction",
    "SolveConfig",
    "SolveReport",
    "energy",
    "energy_gradient",
    "solve",
    "amse_residual",
    "wall_flux_residuals",
]


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """Per-vertex heights of a graph over a mesh."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.mesh.num_vertices,):
            raise ValueError("value vector length must match the vertex count")
        if not np.all(np.isfinite(vals)):
            raise ValueError("graph values must be finite")
        object.__setattr__(self, "values", vals)

    def cell_gradients(self) -> np.ndarray:
        return self.mesh.cell_gradients(self.values)


@dataclass(frozen=True)
class SolveConfig:
    tol_residual: float = 1e-10
    max_iter: int = 50
    ls_shrink: float = 0.5
    ls_decrease: float = 1e-4
    linear_solver_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.tol_residual <= 0.0:
            raise ValueError("tol_residual must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not (0.0 < self.ls_shrink < 1.0):
            raise ValueError("line-search shrink factor must lie in (0, 1)")


@dataclass
class SolveReport:
    iterations: int
    final_residual_norm: float
    energy_trace: list[float] = field(default_factory=list)
    free_bc_residual: float = 0.0
    converged: bool = False


def energy(integrand: EllipticIntegrand, u: GraphFunction) -> float:
    """Discrete anisotropic area of the graph (exact for PL interpolants)."""
    grads = u.cell_gradients()
    return float(np.dot(u.mesh.cell_measures, integrand.eval_f(grads)))


def _raw_gradient(integrand: EllipticIntegrand, mesh: Mesh, values: np.ndarray) -> np.ndarray:
    grads = mesh.cell_gradients(values)
    df = integrand.grad_f(grads)
    contrib = np.einsum("c,cn,cin->ci", mesh.cell_measures, df, mesh.grad_lambda)
    out = np.zeros(mesh.num_vertices)
    np.add.at(out, mesh.cells, contrib)
    return out


def energy_gradient(integrand: EllipticIntegrand, u: GraphFunction) -> np.ndarray:
    """Exact gradient of the discrete energy; zero on DIRICHLET vertices.

    Entries at FREE (wall) vertices carry the weak natural boundary
    condition: no flux term is ever added for them.
    """
    g = _raw_gradient(integrand, u.mesh, u.values)
    g[u.mesh.vertex_tags == Tag.DIRICHLET] = 0.0
    return g


def _assemble_hessian(
    integrand: EllipticIntegrand, mesh: Mesh, values: np.ndarray, free_pos: np.ndarray
) -> sps.csc_matrix:
    grads = mesh.cell_gradients(values)
    d2f = integrand.hess_f(grads)
    hc = np.einsum("c,cim,cmn,cjn->cij", mesh.cell_measures, mesh.grad_lambda, d2f,
                   mesh.grad_lambda)
    m = mesh.n + 1
    rows = free_pos[np.repeat(mesh.cells, m, axis=1).ravel()]
    cols = free_pos[np.tile(mesh.cells, (1, m)).ravel()]
    vals = hc.reshape(-1)
    keep = (rows >= 0) & (cols >= 0)
    nfree = int(free_pos.max()) + 1
    mat = sps.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(nfree, nfree))
    return mat.tocsc()


def wall_flux_residuals(integrand: EllipticIntegrand, u: GraphFunction) -> np.ndarray:
    """Per-wall-facet average of <Df(Du), e1> (the pointwise flux residual).

    The natural boundary condition holds only weakly, so this is O(h) at
    convergence on curved solutions and exactly zero for flat ones.
    """
    mesh = u.mesh
    wall = mesh.wall_facets
    if wall.size == 0:
        return np.zeros(0)
    grads = u.cell_gradients()[mesh.facet_cells[wall]]
    return integrand.grad_f(grads)[:, 0]


def solve(
    integrand: EllipticIntegrand,
    mesh: Mesh,
    dirichlet: np.ndarray,
    config: SolveConfig = SolveConfig(),
    u0: Optional[np.ndarray] = None,
) -> tuple[GraphFunction, SolveReport]:
    """Minimize the discrete graph area subject to Dirichlet data.

    ``dirichlet`` is a full-length vertex vector; only its entries at
    DIRICHLET vertices are used.  Returns the solution and a report; running
    out of iterations yields ``converged=False`` rather than an exception,
    while a singular Newton system (impossible for a uniformly elliptic
    Lagrangian with bounded gradients) raises.
    """
    if integrand.dim != mesh.n + 1:
        raise ValueError("integrand ambient dimension must be mesh dimension + 1")
    dirichlet = np.asarray(dirichlet, dtype=float)
    if dirichlet.shape != (mesh.num_vertices,):
        raise ValueError("dirichlet data must be a full vertex vector")
    is_dir = mesh.vertex_tags == Tag.DIRICHLET
    if not np.all(np.isfinite(dirichlet[is_dir])):
        raise ValueError("dirichlet data must be finite")

    values = np.zeros(mesh.num_vertices) if u0 is None else np.asarray(u0, dtype=float).copy()
    values[is_dir] = dirichlet[is_dir]

    free_idx = np.flatnonzero(~is_dir)
    free_pos = np.full(mesh.num_vertices, -1, dtype=np.int64)
    free_pos[free_idx] = np.arange(free_idx.size)

    def total_energy(vals: np.ndarray) -> float:
        return float(np.dot(mesh.cell_measures, integrand.eval_f(mesh.cell_gradients(vals))))

    e_cur = total_energy(values)
    trace = [e_cur]
    converged = False
    res_norm = np.inf
    iterations = 0

    for _ in range(config.max_iter):
        g = _raw_gradient(integrand, mesh, values)
        res = g[free_idx]
        res_norm = float(np.linalg.norm(res))
        if res_norm <= config.tol_residual:
            converged = True
            break
        hess = _assemble_hessian(integrand, mesh, values, free_pos)
        step = spsolve(hess, -res)
        if not np.all(np.isfinite(step)):
            raise RuntimeError("Newton system is singular or badly scaled")
        lin_res = np.linalg.norm(hess @ step + res) / max(res_norm, 1e-300)
        if lin_res > config.linear_solver_tol:
            raise RuntimeError(f"linear solve missed its tolerance ({lin_res:.3e})")
        slope = float(res @ step)  # negative: step is a descent direction
        t = 1.0
        accepted = False
        for _bt in range(60):
            trial = values.copy()
            trial[free_idx] += t * step
            e_trial = total_energy(trial)
            if e_trial <= e_cur + config.ls_decrease * t * slope:
                accepted = True
                break
            t *= config.ls_shrink
        if not accepted and e_trial >= e_cur:
            # rounding floor: no step can lower the energy any further
            break
        values = trial
        e_cur = min(e_trial, e_cur)
        trace.append(e_cur)
        iterations += 1
    else:
        g = _raw_gradient(integrand, mesh, values)
        res_norm = float(np.linalg.norm(g[free_idx]))
        converged = res_norm <= config.tol_residual

    solution = GraphFunction(mesh, values)
    flux = wall_flux_residuals(integrand, solution)
    report = SolveReport(
        iterations=iterations,
        final_residual_norm=res_norm,
        energy_trace=trace,
        free_bc_residual=float(np.abs(flux).max()) if flux.size else 0.0,
        converged=converged,
    )
    return solution, report


def amse_residual(integrand: EllipticIntegrand, u: GraphFunction) -> np.ndarray:
    """Weak equation residual per interior vertex, normalized by vertex mass.

    Entries at FREE and DIRICHLET vertices are zero; interior entries vanish
    (up to the solver tolerance over the vertex mass) at a converged solve,
    and exactly for affine graphs.
    """
    mesh = u.mesh
    g = _raw_gradient(integrand, mesh, u.values)
    out = np.zeros(mesh.num_vertices)
    interior = mesh.vertex_tags == Tag.INTERIOR
    out[interior] = g[interior] / mesh.vertex_masses[interior]
    return out
