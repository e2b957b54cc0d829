import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmfem.errors import GeometryError, ParameterError, TopologyError
from rmfem.mesh import (
    LOCAL_EDGES,
    QUAD,
    TRI,
    Mesh2D,
    build_edge_topology,
    gen_annulus,
    gen_rectangle,
    global_tangent,
    read_mesh,
    write_mesh,
)

from _helpers import jitter, mixed_mesh


class TestEdgeTopology:
    def test_two_triangles(self):
        topo = build_edge_topology([TRI, TRI], [[0, 1, 2], [0, 2, 3]])
        assert len(topo.edge_nodes) == 5
        assert np.sum(topo.edge_cells[:, 1] >= 0) == 1

    def test_single_quad(self):
        topo = build_edge_topology([QUAD], [[0, 1, 2, 3]])
        assert len(topo.edge_nodes) == 4
        assert np.all(topo.edge_cells[:, 1] < 0)

    def test_two_by_two_grid(self):
        m = gen_rectangle(2.0, 2.0, 2, 2, QUAD)
        assert m.n_edges == 12
        assert np.sum(~m.is_boundary_edge()) == 4

    def test_edge_ids_sorted(self):
        m = gen_rectangle(2.0, 1.0, 3, 2, TRI)
        keys = [tuple(p) for p in m.edge_nodes.tolist()]
        assert keys == sorted(keys)
        assert np.all(m.edge_nodes[:, 0] < m.edge_nodes[:, 1])

    def test_non_manifold(self):
        with pytest.raises(TopologyError):
            build_edge_topology([TRI] * 3, [[0, 1, 2], [1, 0, 3], [0, 1, 4]])

    def test_duplicate_cell(self):
        with pytest.raises(TopologyError):
            build_edge_topology([TRI, TRI], [[0, 1, 2], [1, 2, 0]])

    def test_clockwise_rejected(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(GeometryError):
            Mesh2D.from_cells(nodes, [(TRI, [0, 2, 1], 1)])


class TestRectangle:
    def test_bimaterial(self):
        m = gen_rectangle(2.0, 1.0, 2, 1, QUAD, interface_x=1.0)
        assert m.n_cells == 2
        assert set(m.cell_regions.tolist()) == {1, 2}

    def test_unit_quad(self):
        m = gen_rectangle(1.0, 1.0, 1, 1, QUAD)
        assert m.n_cells == 1 and set(m.cell_regions.tolist()) == {1}
        assert m.tags == ["bottom", "left", "right", "top"]

    def test_split_triangles(self):
        m = gen_rectangle(2.0, 1.0, 4, 2, TRI, interface_x=1.0)
        assert m.n_cells == 16
        assert np.sum(m.cell_regions == 1) == 8 and np.sum(m.cell_regions == 2) == 8

    def test_interface_unresolved(self):
        with pytest.raises(ParameterError):
            gen_rectangle(2.0, 1.0, 3, 1, QUAD, interface_x=1.0)

    @pytest.mark.parametrize("nx,ny", [(0, 1), (1, 0)])
    def test_bad_counts(self, nx, ny):
        with pytest.raises(ParameterError):
            gen_rectangle(1.0, 1.0, nx, ny)

    def test_region_zones(self):
        m = gen_rectangle(2.0, 1.0, 8, 4, TRI, interface_x=1.0)
        c = m.centroids()
        assert np.all((c[:, 0] < 1.0) == (m.cell_regions == 1))


class TestAnnulus:
    def test_counts(self):
        m = gen_annulus(25.0, 2.0, 2, 4, QUAD)
        assert m.n_cells == 8
        assert len(m.tagged_edges("inner")) == 4 and len(m.tagged_edges("outer")) == 4

    def test_coarse_ring(self):
        m = gen_annulus(2.0, 1.0, 1, 3, QUAD)
        assert m.n_cells == 3

    def test_case_b_regions(self):
        m = gen_annulus(25.0, 2.0, 4, 8, TRI, r_m=10.0)
        r = np.linalg.norm(m.centroids(), axis=1)
        assert set(m.cell_regions.tolist()) == {1, 2}
        assert np.all(r[m.cell_regions == 2] < 10.0) and np.all(r[m.cell_regions == 1] > 10.0 * np.cos(np.pi / 8))
        radii = np.unique(np.round(np.linalg.norm(m.nodes, axis=1), 12))
        assert np.any(np.isclose(radii, 10.0))

    @pytest.mark.parametrize("r_o,r_i,r_m", [(2.0, 2.0, None), (2.0, 3.0, None), (25.0, 2.0, 30.0), (25.0, -1.0, None)])
    def test_degenerate(self, r_o, r_i, r_m):
        with pytest.raises(ParameterError):
            gen_annulus(r_o, r_i, 4, 8, QUAD, r_m=r_m)

    @pytest.mark.parametrize("kind", [TRI, QUAD])
    @pytest.mark.parametrize("spacing", ["uniform", "geometric"])
    def test_area_is_polygonal(self, kind, spacing):
        n_t = 12
        m = gen_annulus(3.0, 1.0, 3, n_t, kind, spacing=spacing)
        ring = lambda r: 0.5 * n_t * r**2 * np.sin(2 * np.pi / n_t)  # noqa: E731
        assert np.isclose(m.cell_areas().sum(), ring(3.0) - ring(1.0), rtol=1e-12)


@pytest.mark.parametrize("kind", [TRI, QUAD])
def test_rectangle_area(kind):
    m = gen_rectangle(2.0, 1.0, 5, 3, kind, interface_x=0.8)
    assert np.isclose(m.cell_areas().sum(), 2.0, rtol=1e-12)


def check_orientation(m):
    for c in range(m.n_cells):
        vs = m.cell_vertices(c)
        for i, (a, b) in enumerate(LOCAL_EDGES[m.cell_kinds[c]]):
            e = m.cell_edges[c, i]
            local = m.nodes[vs[b]] - m.nodes[vs[a]]
            local /= np.linalg.norm(local)
            assert np.allclose(m.cell_edge_sense[c, i] * local, m.edge_tangent[e], atol=1e-14)
    assert np.allclose(np.linalg.norm(m.edge_tangent, axis=1), 1.0)
    assert np.all(m.edge_length > 0)
    np.testing.assert_allclose(global_tangent(m.edge_tangent), m.edge_tangent, rtol=0, atol=1e-15)


@given(
    nx=st.integers(1, 5),
    ny=st.integers(1, 5),
    kind=st.sampled_from([TRI, QUAD]),
    seed=st.integers(0, 2**16),
)
def test_orientation_consistent_on_random_meshes(nx, ny, kind, seed):
    m = jitter(gen_rectangle(1.0, 1.0, nx, ny, kind), np.random.default_rng(seed), 0.25)
    check_orientation(m)
    counts = np.bincount(m.edge_cells[m.edge_cells >= 0].ravel(), minlength=m.n_cells)
    assert np.all(counts == [3 if k == TRI else 4 for k in m.cell_kinds])


def test_mixed_mesh_orientation():
    check_orientation(mixed_mesh())


def test_edge_record():
    m = gen_rectangle(1.0, 1.0, 1, 1, TRI)
    interior = np.flatnonzero(~m.is_boundary_edge())[0]
    rec = m.edge(interior)
    assert len(rec.adjacency) == 2 and rec.tag is None
    assert rec.length == pytest.approx(np.sqrt(2.0))


@pytest.mark.parametrize("kind", [TRI, QUAD])
def test_text_roundtrip(tmp_path, kind):
    m = gen_annulus(3.0, 1.0, 2, 6, kind, r_m=2.0)
    write_mesh(m, tmp_path / "m.txt")
    assert (tmp_path / "m.txt").read_text().splitlines()[0] == "mm-mesh v1"
    r = read_mesh(tmp_path / "m.txt")
    assert np.array_equal(r.nodes, m.nodes)
    assert np.array_equal(r.cell_nodes, m.cell_nodes)
    assert np.array_equal(r.cell_regions, m.cell_regions)
    assert r.boundary_tags == m.boundary_tags


def test_read_rejects_bad_header(tmp_path):
    (tmp_path / "x.txt").write_text("something else\n")
    with pytest.raises(ParameterError):
        read_mesh(tmp_path / "x.txt")
