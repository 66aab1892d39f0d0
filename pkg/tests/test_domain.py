import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisograph import HalfDomain, Tag, build_mesh, half_ball_vertices, refine, write_mesh_csv


def unit_square_mesh(resolution=0.25):
    return build_mesh(HalfDomain(2, depth=1.0, width=0.5, resolution=resolution))


def test_1d_counting_example():
    mesh = build_mesh(HalfDomain(1, depth=1.0, resolution=0.25))
    assert mesh.num_vertices == 5
    assert mesh.num_cells == 4
    assert mesh.vertex_tags[0] == Tag.FREE
    assert mesh.vertex_tags[-1] == Tag.DIRICHLET
    assert set(mesh.vertex_tags[1:-1]) == {Tag.INTERIOR}


def test_2d_counting_example():
    mesh = build_mesh(HalfDomain(2, depth=1.0, width=1.0, resolution=0.5))
    assert mesh.num_vertices == 15  # 3 x 5 grid
    assert mesh.num_cells == 16


def test_refine_quadruples_cells_and_nests_vertices():
    mesh = unit_square_mesh(0.25)
    fine = refine(mesh)
    assert fine.num_cells == 4 * mesh.num_cells
    # vertex coordinates of the parent appear in the child
    coarse = {tuple(np.round(v, 12)) for v in mesh.vertices}
    fine_set = {tuple(np.round(v, 12)) for v in fine.vertices}
    assert coarse <= fine_set


def test_refine_inherits_wall_tags():
    mesh = refine(unit_square_mesh(0.25))
    wall = mesh.boundary_facets[mesh.facet_tags == Tag.FREE]
    assert np.abs(mesh.vertices[wall][:, :, 0]).max() <= 1e-12


def test_cell_measures_cover_domain_exactly():
    for dom in (HalfDomain(1, depth=1.3, resolution=0.1),
                HalfDomain(2, depth=1.7, width=0.4, resolution=0.05)):
        mesh = build_mesh(dom)
        expect = dom.depth * (2.0 * dom.width if dom.n == 2 else 1.0)
        assert mesh.cell_measures.sum() == pytest.approx(expect, abs=1e-12)


def test_wall_vertices_never_interior():
    mesh = unit_square_mesh(0.125)
    on_wall = np.abs(mesh.vertices[:, 0]) <= 1e-12
    assert np.all(mesh.vertex_tags[on_wall] != Tag.INTERIOR)
    # corners of the wall belong to the truncation boundary
    corners = on_wall & (np.abs(np.abs(mesh.vertices[:, 1]) - 0.5) <= 1e-12)
    assert np.all(mesh.vertex_tags[corners] == Tag.DIRICHLET)


def test_boundary_facets_partition_topological_boundary():
    mesh = unit_square_mesh(0.25)
    edge_count = {}
    for cell in mesh.cells:
        for k in range(3):
            e = tuple(sorted((cell[k], cell[(k + 1) % 3])))
            edge_count[e] = edge_count.get(e, 0) + 1
    boundary_edges = {e for e, c in edge_count.items() if c == 1}
    facet_edges = {tuple(sorted(f)) for f in mesh.boundary_facets}
    assert facet_edges == boundary_edges
    # each facet knows its unique incident cell
    for facet, cell_id in zip(mesh.boundary_facets, mesh.facet_cells):
        assert set(facet) <= set(mesh.cells[cell_id])


def test_cells_positively_oriented_with_good_angles():
    mesh = unit_square_mesh(0.25)
    v = mesh.vertices[mesh.cells]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert cross.min() > 0.0
    for tri in v:
        for k in range(3):
            a = tri[(k + 1) % 3] - tri[k]
            b = tri[(k + 2) % 3] - tri[k]
            angle = np.degrees(
                np.arccos(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
            )
            assert angle >= 30.0 - 1e-9


def test_too_coarse_resolution_rejected():
    with pytest.raises(ValueError):
        build_mesh(HalfDomain(2, depth=1.0, width=0.5, resolution=0.9))


def test_domain_validation():
    with pytest.raises(ValueError):
        HalfDomain(3, depth=1.0, width=1.0, resolution=0.1)
    with pytest.raises(ValueError):
        HalfDomain(2, depth=1.0, resolution=0.1)  # missing width
    with pytest.raises(ValueError):
        HalfDomain(1, depth=-1.0, resolution=0.1)


def test_half_ball_small_radius_hits_only_origin():
    mesh = unit_square_mesh(0.25)
    idx = half_ball_vertices(mesh, [0.0, 0.0], 0.1)
    assert idx.tolist() == [np.argmin(np.linalg.norm(mesh.vertices, axis=1))]


def test_half_ball_large_radius_hits_everything():
    mesh = unit_square_mesh(0.25)
    idx = half_ball_vertices(mesh, [0.0, 0.0], 10.0)
    assert idx.size == mesh.num_vertices


def test_half_ball_empty_is_flagged_not_fatal():
    mesh = unit_square_mesh(0.25)
    with pytest.warns(UserWarning):
        idx = half_ball_vertices(mesh, [0.43, 0.11], 1e-6)
    assert idx.size == 0


@given(
    r1=st.floats(min_value=0.2, max_value=2.0),
    r2=st.floats(min_value=0.2, max_value=2.0),
)
def test_half_ball_monotone_in_radius(r1, r2):
    mesh = unit_square_mesh(0.25)
    lo, hi = sorted((r1, r2))
    inner = set(half_ball_vertices(mesh, [0.3, 0.1], lo).tolist())
    outer = set(half_ball_vertices(mesh, [0.3, 0.1], hi).tolist())
    assert inner <= outer


def test_mesh_csv_export(tmp_path):
    mesh = unit_square_mesh(0.25)
    vp, cp = tmp_path / "verts.csv", tmp_path / "cells.csv"
    write_mesh_csv(mesh, vp, cp)
    lines = vp.read_text().strip().splitlines()
    assert lines[0] == "id,x1,x2,tag"
    assert len(lines) == mesh.num_vertices + 1
    assert len(cp.read_text().strip().splitlines()) == mesh.num_cells + 1
