"""Discrete anisotropic geometry of a piecewise-linear graph.

Per-cell quantities (gradient, normal, area elements, integrand Hessians)
are exact for the PL interpolant.  Curvature lives at vertices: second
derivatives come from a weighted quadratic least-squares fit over the
two-ring, which is exact for quadratics and O(h)-consistent on structured
grids.  Wall facets carry the co-normal frame (mu inside the surface,
nubar inside the wall, and the anisotropic co-normal mu_F).

Two coordinate identities do most of the work here.  Writing ``B`` for the
Lagrangian Hessian ``D^2 f(Du)`` and ``G = I + Du Du^T``:

* the tangential pairing of surface gradients reduces to
  ``g(grad_S psi, A_F grad_S phi) = W * Dpsi^T B Dphi``;
* the anisotropic shape form in graph coordinates is ``(D^2 u) B G``, whose
  G-trace is ``tr(D^2 u * B)`` -- exactly the divergence-form equation
  residual, so anisotropic minimality means this trace vanishes.

Everything is a pure function of (integrand, graph); results are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import NamedTuple, Optional

import numpy as np

from .domain import Mesh, Tag, vertex_stencils
from .integrand import EllipticIntegrand
from .solver import GraphFunction

__all__ = [
    "GraphGeometry",
    "WallFrame",
    "compute_geometry",
    "wall_frame",
    "surface_gradient",
    "weighted_divergence_form",
    "integrate_pl_power",
    "integrate_pl_product",
]


# -- exact quadrature of piecewise-linear fields over simplices ---------------


def _pl_power_cellwise(mesh: Mesh, phi: np.ndarray, k: int) -> np.ndarray:
    """Exact per-cell integrals of phi^k for a PL field phi (integer k >= 1)."""
    vals = np.asarray(phi, dtype=float)[mesh.cells]
    m = mesh.n + 1
    hk = np.zeros(mesh.num_cells)
    for combo in combinations_with_replacement(range(m), k):
        term = np.ones(mesh.num_cells)
        for idx in combo:
            term = term * vals[:, idx]
        hk += term
    coef = math.factorial(mesh.n) * math.factorial(k) / math.factorial(mesh.n + k)
    return mesh.cell_measures * coef * hk


def integrate_pl_power(
    mesh: Mesh, phi: np.ndarray, k: int, cell_weight: Optional[np.ndarray] = None
) -> float:
    """Integral of phi^k (phi piecewise linear) with an optional cell weight."""
    per_cell = _pl_power_cellwise(mesh, phi, k)
    if cell_weight is not None:
        per_cell = per_cell * cell_weight
    return float(per_cell.sum())


def integrate_pl_product(
    mesh: Mesh, phi: np.ndarray, psi: np.ndarray, cell_weight: Optional[np.ndarray] = None
) -> float:
    """Exact integral of the product of two PL fields, optionally weighted."""
    a = np.asarray(phi, dtype=float)[mesh.cells]
    b = np.asarray(psi, dtype=float)[mesh.cells]
    dot = np.einsum("ci,ci->c", a, b)
    per_cell = mesh.cell_measures * (dot + a.sum(axis=1) * b.sum(axis=1)) / (
        (mesh.n + 1) * (mesh.n + 2)
    )
    if cell_weight is not None:
        per_cell = per_cell * cell_weight
    return float(per_cell.sum())


# -- geometry bundle -----------------------------------------------------------


class WallFrame(NamedTuple):
    mu: np.ndarray
    nubar: np.ndarray
    mu_F: np.ndarray


@dataclass(frozen=True, eq=False)
class GraphGeometry:
    """All geometric fields of a solved graph, per cell / vertex / wall facet."""

    u: GraphFunction
    integrand: EllipticIntegrand
    f_min: float  # sphere minimum of F, used to normalize log area elements

    # per cell
    cell_gradient: np.ndarray      # Du
    cell_W: np.ndarray             # sqrt(1 + |Du|^2)
    cell_normal: np.ndarray        # upward unit normal
    cell_aniso_normal: np.ndarray  # DF(normal), the Cahn-Hoffman vector
    cell_F_normal: np.ndarray      # F(normal)
    cell_Wf: np.ndarray            # f(Du) = F(normal) * W
    cell_hess_f: np.ndarray        # D^2 f(Du)
    cell_AF: np.ndarray            # ambient D^2 F(normal)
    cell_log_Wf: np.ndarray        # log(Wf / f_min)

    # per vertex (quadratic two-ring fit)
    vertex_gradient: np.ndarray
    vertex_hessian: np.ndarray
    fit_ok: np.ndarray
    vertex_W: np.ndarray
    vertex_Wf: np.ndarray
    vertex_log_Wf: np.ndarray
    mean_curvature_aniso: np.ndarray  # trace_g of the anisotropic shape form
    h_sq: np.ndarray                  # |second fundamental form|^2
    aniso_h_sq: np.ndarray            # trace_g(A_F h^2)
    collar: np.ndarray                # vertices near the truncation boundary

    # per wall facet
    wall_facets: np.ndarray
    wall_cells: np.ndarray
    wall_mu: np.ndarray
    wall_nubar: np.ndarray
    wall_mu_F: np.ndarray
    wall_nuF_e1: np.ndarray      # <nu_F, e1>, the geometric wall condition
    wall_muF_e1: np.ndarray      # <mu_F, -e1>
    wall_measure: np.ndarray     # boundary-curve measure of each wall facet
    wall_slope: np.ndarray       # tangential slope of u along the wall
    wall_hF_mu_tau: np.ndarray   # anisotropic shape form paired (tangent, mu)

    @property
    def mesh(self) -> Mesh:
        return self.u.mesh

    def graph_measure(self) -> np.ndarray:
        """Per-cell surface measure |cell| * W of the graph."""
        return self.mesh.cell_measures * self.cell_W

    def cell_metric(self) -> np.ndarray:
        """Induced metric g_ij = delta_ij + u_i u_j per cell."""
        du = self.cell_gradient
        return np.eye(self.mesh.n)[None, :, :] + np.einsum("ci,cj->cij", du, du)

    def cell_graph_barycenters(self) -> np.ndarray:
        """Ambient barycenter of each cell's image on the graph."""
        mesh = self.mesh
        xy = mesh.cell_barycenters()
        uz = self.u.values[mesh.cells].mean(axis=1)
        return np.concatenate([xy, uz[:, None]], axis=1)


def _fit_vertex_quadratics(mesh: Mesh, values: np.ndarray):
    """Weighted quadratic LS fit on the two-ring of every vertex."""
    n = mesh.n
    ncoef = 1 + n + n * (n + 1) // 2
    stencils = vertex_stencils(mesh)
    nv = mesh.num_vertices
    grad = np.zeros((nv, n))
    hess = np.zeros((nv, n, n))
    ok = np.zeros(nv, dtype=bool)
    sigma = 2.0 * mesh.h
    for v in range(nv):
        idx = stencils[v]
        if idx.size < ncoef:
            continue
        dx = mesh.vertices[idx] - mesh.vertices[v]
        if n == 1:
            cols = np.stack([np.ones(idx.size), dx[:, 0], 0.5 * dx[:, 0] ** 2], axis=1)
        else:
            cols = np.stack(
                [
                    np.ones(idx.size),
                    dx[:, 0],
                    dx[:, 1],
                    0.5 * dx[:, 0] ** 2,
                    dx[:, 0] * dx[:, 1],
                    0.5 * dx[:, 1] ** 2,
                ],
                axis=1,
            )
        w = np.exp(-np.sum(dx * dx, axis=1) / (sigma * sigma))
        coef, _, rank, sv = np.linalg.lstsq(cols * w[:, None], values[idx] * w, rcond=None)
        if rank < ncoef or sv[-1] <= 1e-10 * sv[0]:
            continue
        ok[v] = True
        grad[v] = coef[1 : 1 + n]
        if n == 1:
            hess[v, 0, 0] = coef[2]
        else:
            hess[v] = [[coef[3], coef[4]], [coef[4], coef[5]]]
    return grad, hess, ok


def _collar_mask(mesh: Mesh, width: float) -> np.ndarray:
    dom = mesh.domain
    x = mesh.vertices
    tol = 1e-12
    mask = x[:, 0] > dom.depth - width - tol
    if mesh.n == 2:
        mask |= np.abs(x[:, 1]) > dom.width - width - tol
    return mask


def compute_geometry(
    integrand: EllipticIntegrand, u: GraphFunction, collar_factor: float = 2.0
) -> GraphGeometry:
    """Compute every geometric field of the graph of ``u``.

    Requires at least two layers of interior vertices so the curvature fits
    have usable stencils.  Vertices whose fit is rank-deficient are flagged
    and excluded from curvature-based checks; a ``collar_factor * h`` band
    along the truncation boundary is marked for the same reason.
    """
    mesh = u.mesh
    if integrand.dim != mesh.n + 1:
        raise ValueError("integrand ambient dimension must be mesh dimension + 1")
    if any(d < 3 for d in mesh.divisions):
        raise ValueError("geometry needs at least two interior vertex layers per axis")

    du = u.cell_gradients()
    w = np.sqrt(1.0 + np.einsum("ci,ci->c", du, du))
    normal = np.concatenate([-du, np.ones((mesh.num_cells, 1))], axis=1) / w[:, None]
    nu_f = integrand.grad_F(normal)
    f_normal = integrand.eval_F(normal)
    wf = integrand.eval_f(du)
    hess_f = integrand.hess_f(du)
    af = integrand.hess_F(normal)

    f_min = integrand.sphere_range()[0]
    cell_log_wf = np.log(wf / f_min)

    grad_v, hess_v, ok = _fit_vertex_quadratics(mesh, u.values)
    w_v = np.sqrt(1.0 + np.einsum("vi,vi->v", grad_v, grad_v))
    wf_v = integrand.eval_f(grad_v)
    # fallback for flagged vertices: plain average of incident-cell values
    if not ok.all():
        acc = np.zeros(mesh.num_vertices)
        cnt = np.zeros(mesh.num_vertices)
        np.add.at(acc, mesh.cells, wf[:, None].repeat(mesh.n + 1, axis=1))
        np.add.at(cnt, mesh.cells, 1.0)
        bad = ~ok
        wf_v[bad] = acc[bad] / np.maximum(cnt[bad], 1.0)
        w_acc = np.zeros(mesh.num_vertices)
        np.add.at(w_acc, mesh.cells, w[:, None].repeat(mesh.n + 1, axis=1))
        w_v[bad] = w_acc[bad] / np.maximum(cnt[bad], 1.0)
    log_wf_v = np.log(wf_v / f_min)

    b_v = integrand.hess_f(grad_v)
    h_f_trace = np.einsum("vij,vji->v", hess_v, b_v)
    gm = np.einsum("vi,vij->vj", grad_v, hess_v)
    p = hess_v - np.einsum("vi,vj->vij", grad_v, gm) / (w_v ** 2)[:, None, None]
    h_sq = np.einsum("vij,vji->v", p, p) / w_v ** 2
    # trace_g(A_F h^2) = tr(D2f(Du) . D2u . G^-1 . D2u) / W in graph coordinates
    aniso_h_sq = np.einsum("vij,vjk,vki->v", b_v, hess_v, p) / w_v

    bad = ~ok
    h_f_trace[bad] = np.nan
    h_sq[bad] = np.nan
    aniso_h_sq[bad] = np.nan

    collar = _collar_mask(mesh, collar_factor * mesh.h)

    wall = mesh.wall_facets
    wall_cells = mesh.facet_cells[wall]
    nu_w = normal[wall_cells]
    nuf_w = nu_f[wall_cells]
    d = mesh.n + 1
    e1 = np.zeros(d)
    e1[0] = 1.0
    t = -e1 + nu_w[:, 0][:, None] * nu_w
    t_norm = np.linalg.norm(t, axis=1)
    if np.any(t_norm < 1e-14):
        raise ValueError("degenerate wall facet: surface tangent to the wall")
    mu = t / t_norm[:, None]

    if mesh.n == 2:
        fa = mesh.boundary_facets[wall]
        xa = mesh.vertices[fa[:, 0], 1]
        xb = mesh.vertices[fa[:, 1], 1]
        ua = u.values[fa[:, 0]]
        ub = u.values[fa[:, 1]]
        dx2 = xb - xa
        if np.any(np.abs(dx2) < 1e-14):
            raise ValueError("degenerate wall facet of zero length")
        slope = (ub - ua) / dx2
        nubar = np.stack([np.zeros_like(slope), -slope, np.ones_like(slope)], axis=1)
        nubar /= np.sqrt(1.0 + slope * slope)[:, None]
        wall_measure = np.abs(dx2) * np.sqrt(1.0 + slope * slope)
    else:
        slope = np.zeros(wall.size)
        nubar = np.tile(np.array([0.0, 1.0]), (wall.size, 1))
        wall_measure = np.ones(wall.size)

    nuf_nu = np.einsum("fi,fi->f", nuf_w, nu_w)
    nuf_mu = np.einsum("fi,fi->f", nuf_w, mu)
    mu_f = nuf_nu[:, None] * mu - nuf_mu[:, None] * nu_w
    nuf_e1 = nuf_w[:, 0]
    muf_e1 = -mu_f[:, 0]

    hf_mu_tau = np.zeros(wall.size)
    if mesh.n == 2 and wall.size:
        fa = mesh.boundary_facets[wall]
        m_f = 0.5 * (hess_v[fa[:, 0]] + hess_v[fa[:, 1]])
        fit_pair_ok = ok[fa[:, 0]] & ok[fa[:, 1]]
        du_w = du[wall_cells]
        b_w = hess_f[wall_cells]
        g_w = np.eye(2)[None, :, :] + np.einsum("fi,fj->fij", du_w, du_w)
        form = np.einsum("fij,fjk,fkl->fil", m_f, b_w, g_w)
        tau = np.stack([np.zeros(wall.size), 1.0 / np.sqrt(1.0 + slope * slope)], axis=1)
        mu_coord = mu[:, :2]
        hf_mu_tau = np.einsum("fi,fij,fj->f", tau, form, mu_coord)
        hf_mu_tau[~fit_pair_ok] = np.nan

    return GraphGeometry(
        u=u,
        integrand=integrand,
        f_min=f_min,
        cell_gradient=du,
        cell_W=w,
        cell_normal=normal,
        cell_aniso_normal=nu_f,
        cell_F_normal=f_normal,
        cell_Wf=wf,
        cell_hess_f=hess_f,
        cell_AF=af,
        cell_log_Wf=cell_log_wf,
        vertex_gradient=grad_v,
        vertex_hessian=hess_v,
        fit_ok=ok,
        vertex_W=w_v,
        vertex_Wf=wf_v,
        vertex_log_Wf=log_wf_v,
        mean_curvature_aniso=h_f_trace,
        h_sq=h_sq,
        aniso_h_sq=aniso_h_sq,
        collar=collar,
        wall_facets=wall,
        wall_cells=wall_cells,
        wall_mu=mu,
        wall_nubar=nubar,
        wall_mu_F=mu_f,
        wall_nuF_e1=nuf_e1,
        wall_muF_e1=muf_e1,
        wall_measure=wall_measure,
        wall_slope=slope,
        wall_hF_mu_tau=hf_mu_tau,
    )


def wall_frame(geom: GraphGeometry) -> WallFrame:
    """Per-wall-facet frame (mu, nubar, mu_F); mu_F spans {mu, normal}."""
    return WallFrame(geom.wall_mu, geom.wall_nubar, geom.wall_mu_F)


def surface_gradient(geom: GraphGeometry, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell surface gradient of a PL vertex field and its A_F image.

    Returns ambient (n+1)-vectors ``(grad, grad_F)``, both tangent to the
    graph; ``grad_F`` applies the integrand Hessian at the cell normal.
    """
    phi = np.asarray(phi, dtype=float)
    mesh = geom.mesh
    if phi.shape != (mesh.num_vertices,):
        raise ValueError("phi must be a per-vertex field")
    dphi = mesh.cell_gradients(phi)
    du = geom.cell_gradient
    coef = np.einsum("ci,ci->c", du, dphi) / geom.cell_W ** 2
    q = dphi - du * coef[:, None]
    grad = np.concatenate([q, np.einsum("ci,ci->c", du, q)[:, None]], axis=1)
    grad_f = np.einsum("cij,cj->ci", geom.cell_AF, grad)
    return grad, grad_f


def weighted_divergence_form(geom: GraphGeometry, phi: np.ndarray, psi: np.ndarray) -> float:
    """Weak pairing ``-int_S F(nu)^2 g(grad psi, A_F grad phi)`` over the graph.

    This is the weak form of the weighted operator div_S(F^2 A_F grad phi)
    tested against psi, with no wall term: psi must be nonnegative and vanish
    on the DIRICHLET boundary (it may touch the FREE wall).
    """
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    mesh = geom.mesh
    if psi.min() < -1e-13:
        raise ValueError("test function psi must be nonnegative")
    on_dir = mesh.vertex_tags == Tag.DIRICHLET
    if np.any(np.abs(psi[on_dir]) > 1e-13):
        raise ValueError("test function psi must vanish on the DIRICHLET boundary")
    dphi = mesh.cell_gradients(phi)
    dpsi = mesh.cell_gradients(psi)
    pairing = np.einsum("ci,cij,cj->c", dpsi, geom.cell_hess_f, dphi)
    weight = mesh.cell_measures * geom.cell_W ** 2 * geom.cell_F_normal ** 2
    return float(-(weight * pairing).sum())
