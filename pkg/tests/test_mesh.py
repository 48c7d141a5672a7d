import math

import numpy as np
import pytest

from fevec.errors import MeshError, ParseError
from fevec.mesh import (Element, ElementKind, Mesh, Node, find_interface_nodes,
                        generate_plate_with_hole, generate_quarter_annulus,
                        generate_split_square, generate_structured_quads,
                        load_mesh, polygon_geometry, polygon_geometry_from_coords,
                        save_mesh, shoelace_area, validate_mesh)
from conftest import polygon_family

FE = ElementKind.FE_QUAD
VE = ElementKind.VE_POLY


class TestPolygonGeometry:
    def test_unit_square(self):
        g = polygon_geometry_from_coords(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
        assert g.area == pytest.approx(1.0)
        assert g.centroid == pytest.approx((0.5, 0.5))
        assert g.h == pytest.approx(math.sqrt(2.0))

    def test_triangle(self):
        g = polygon_geometry_from_coords(np.array([[0, 0], [1, 0], [0, 1]], float))
        assert g.area == pytest.approx(0.5)
        assert g.centroid == pytest.approx((1 / 3, 1 / 3))

    def test_regular_hexagon_area(self):
        # shoelace evaluated by hand on the six vertices as the oracle
        angles = [math.pi / 3 * k for k in range(6)]
        pts = [(math.cos(a), math.sin(a)) for a in angles]
        hand = 0.0
        for i in range(6):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % 6]
            hand += x0 * y1 - x1 * y0
        hand *= 0.5
        assert hand == pytest.approx(3.0 * math.sqrt(3.0) / 2.0, rel=1e-12)
        g = polygon_geometry_from_coords(np.array(pts))
        assert g.area == pytest.approx(hand, rel=1e-12)
        assert g.area == pytest.approx(2.598076, abs=1e-6)

    def test_outward_normals_unit_length(self):
        rng = np.random.default_rng(3)
        for poly in polygon_family(seed=9, count=25):
            g = polygon_geometry_from_coords(poly)
            assert np.hypot(g.edge_normals[:, 0], g.edge_normals[:, 1]) == pytest.approx(
                np.ones(len(poly)), abs=1e-12)

    def test_closed_polygon_normal_sum(self):
        for poly in polygon_family(seed=10, count=25):
            g = polygon_geometry_from_coords(poly)
            resid = (g.edge_normals * g.edge_lengths[:, None]).sum(axis=0)
            assert np.abs(resid).max() < 1e-10 * g.edge_lengths.sum()

    def test_reversed_order_negates_shoelace(self):
        for poly in polygon_family(seed=11, count=25):
            assert shoelace_area(poly[::-1]) == pytest.approx(-shoelace_area(poly), rel=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(MeshError, match="area"):
            polygon_geometry_from_coords(np.array([[0, 0], [0, 1], [1, 1], [1, 0]], float))
        with pytest.raises(MeshError, match="zero-length"):
            polygon_geometry_from_coords(np.array([[0, 0], [0, 0], [1, 1]], float))

    def test_element_wrapper_names_element(self):
        nodes = [Node(0, 0, 0), Node(1, 0, 1), Node(2, 1, 1), Node(3, 1, 0)]
        elem = Element(7, (0, 1, 2, 3), VE, 0)  # clockwise
        with pytest.raises(MeshError, match="element 7"):
            polygon_geometry(elem, nodes)


class TestValidation:
    def test_valid_structured_mesh(self):
        assert validate_mesh(generate_structured_quads(2, 2, 2, 2)) == []

    def test_clockwise_quad_flagged(self):
        mesh = generate_structured_quads(1, 1, 1, 1)
        bad = Element(0, tuple(reversed(mesh.elements[0].vertices)), FE, 0)
        report = validate_mesh(Mesh(mesh.nodes, [bad], mesh.boundary_edges))
        assert any(v.code == "orientation" for v in report)

    def test_five_vertex_fe_flagged(self):
        nodes = [Node(i, *xy) for i, xy in enumerate(
            [(0, 0), (1, 0), (1.5, 0.5), (1, 1), (0, 1)])]
        report = validate_mesh(Mesh(nodes, [Element(0, (0, 1, 2, 3, 4), FE, 0)]))
        assert any(v.code == "fe-quad-arity" for v in report)

    def test_self_intersection_flagged(self):
        nodes = [Node(i, *xy) for i, xy in enumerate([(0, 0), (1, 1), (1, 0), (0, 1)])]
        report = validate_mesh(Mesh(nodes, [Element(0, (0, 1, 2, 3), VE, 0)]))
        assert any(v.code in ("self-intersection", "orientation") for v in report)

    def test_hanging_node_across_interface(self):
        # Left FE quad (0,1), (1,1) column shared with a VE block whose edge
        # is split at the midpoint (node 6): coincidence violation.
        nodes = [Node(0, 0, 0), Node(1, 1, 0), Node(2, 1, 1), Node(3, 0, 1),
                 Node(4, 2, 0), Node(5, 2, 1), Node(6, 1, 0.5)]
        elems = [Element(0, (0, 1, 2, 3), FE, 0),
                 Element(1, (1, 4, 5, 2, 6), VE, 0)]
        report = validate_mesh(Mesh(nodes, elems))
        assert any(v.code == "interface-coincidence" for v in report)

    def test_hanging_node_ve_to_ve_allowed(self):
        nodes = [Node(0, 0, 0), Node(1, 1, 0), Node(2, 1, 1), Node(3, 0, 1),
                 Node(4, 2, 0), Node(5, 2, 1), Node(6, 1, 0.5)]
        elems = [Element(0, (0, 1, 6, 2, 3), VE, 0),
                 Element(1, (1, 4, 5, 2, 6), VE, 0)]
        assert validate_mesh(Mesh(nodes, elems)) == []

    def test_orphan_bedge_flagged(self):
        mesh = generate_structured_quads(1, 1, 1, 1)
        report = validate_mesh(Mesh(mesh.nodes, mesh.elements, {(0, 3): "diag"}))
        assert any(v.code == "bedge-orphan" for v in report)

    def test_bedge_missing_node_flagged(self):
        mesh = generate_structured_quads(1, 1, 1, 1)
        report = validate_mesh(Mesh(mesh.nodes, mesh.elements, {(0, 99): "x"}))
        assert any(v.code == "bedge-nodes" for v in report)

    def test_edge_shared_three_times_flagged(self):
        nodes = [Node(0, 0, 0), Node(1, 1, 0), Node(2, 1, 1), Node(3, 0, 1),
                 Node(4, 2, 0.5), Node(5, -1, 0.5)]
        elems = [Element(0, (0, 1, 2, 3), VE, 0),
                 Element(1, (1, 4, 2), VE, 0),
                 Element(2, (1, 2, 5), VE, 0)]   # edge (1,2) used thrice
        report = validate_mesh(Mesh(nodes, elems))
        assert any(v.code == "edge-sharing" for v in report)


class TestInterfaceNodes:
    def test_all_fe_empty(self):
        mesh = generate_structured_quads(2, 2, 2, 2, kind=FE)
        assert find_interface_nodes(mesh) == set()

    def test_split_square_column(self):
        mesh = generate_split_square(2.0, 1.0, 2, 1)
        assert mesh.interface_nodes == {1, 4}

    def test_symmetric_under_kind_swap(self):
        mesh = generate_split_square(2.0, 1.0, 4, 2)
        swapped = Mesh(mesh.nodes,
                       [Element(e.id, e.vertices, FE if e.kind == VE else VE, e.region)
                        for e in mesh.elements],
                       mesh.boundary_edges)
        assert mesh.interface_nodes == swapped.interface_nodes

    def test_subset_of_both_kinds(self):
        mesh = generate_quarter_annulus(20, 60, 6, 8, 40)
        fe_nodes, ve_nodes = set(), set()
        for e in mesh.elements:
            (fe_nodes if e.kind == FE else ve_nodes).update(e.vertices)
        assert mesh.interface_nodes <= (fe_nodes & ve_nodes)
        assert mesh.interface_nodes


class TestGenerators:
    def test_structured_counts(self):
        mesh = generate_structured_quads(1, 1, 1, 1)
        assert mesh.n_nodes == 4 and mesh.n_elements == 1
        mesh = generate_structured_quads(2, 1, 2, 1, kind=VE)
        assert mesh.n_nodes == 6 and mesh.n_elements == 2
        assert all(len(e.vertices) == 4 for e in mesh.elements)
        assert generate_structured_quads(3, 3, 3, 3).n_nodes == 16

    def test_structured_rejects_zero(self):
        with pytest.raises(MeshError):
            generate_structured_quads(1, 1, 0, 1)

    def test_annulus_radii(self):
        mesh = generate_quarter_annulus(20, 60, 4, 6, 40)
        r = np.hypot(mesh.coords[:, 0], mesh.coords[:, 1])
        inner = [n for (a, b) in mesh.edges_with_label("inner") for n in (a, b)]
        outer = [n for (a, b) in mesh.edges_with_label("outer") for n in (a, b)]
        assert np.abs(r[inner] - 20).max() < 1e-12 * 20
        assert np.abs(r[outer] - 60).max() < 1e-12 * 60
        assert mesh.n_elements == 4 * 6
        assert validate_mesh(mesh) == []

    def test_annulus_all_fe_at_inner_split(self):
        mesh = generate_quarter_annulus(20, 60, 3, 4, 20)
        assert all(e.kind == FE for e in mesh.elements)
        assert mesh.interface_nodes == set()

    def test_annulus_split_interface_on_circle(self):
        mesh = generate_quarter_annulus(20, 60, 4, 4, 40)
        r = np.hypot(mesh.coords[:, 0], mesh.coords[:, 1])
        iface = sorted(mesh.interface_nodes)
        assert iface and np.abs(r[iface] - 40).max() < 1e-12 * 40

    def test_annulus_bad_inputs(self):
        with pytest.raises(MeshError):
            generate_quarter_annulus(60, 20, 3, 3, 40)
        with pytest.raises(MeshError):
            generate_quarter_annulus(20, 60, 3, 3, 10)

    def test_plate_with_hole_valid_and_tagged(self):
        mesh = generate_plate_with_hole(5, 20, 8, 4, 8, 10)
        assert validate_mesh(mesh) == []
        r = np.hypot(mesh.coords[:, 0], mesh.coords[:, 1])
        hole = [n for (a, b) in mesh.edges_with_label("hole") for n in (a, b)]
        assert np.abs(r[hole] - 5).max() < 1e-12 * 5
        assert {"hole", "bottom", "left", "right", "top"} <= mesh.labels()
        iface = sorted(mesh.interface_nodes)
        assert np.abs(r[iface] - 10).max() < 1e-9

    def test_plate_split_ring_is_simplicial(self):
        mesh = generate_plate_with_hole(5, 20, 8, 4, 8, 10, split_ring=True)
        assert validate_mesh(mesh) == []
        tri = [e for e in mesh.elements if len(e.vertices) == 3]
        assert len(tri) == 2 * 4 * 8
        assert all(e.kind == VE for e in tri)


class TestMeshIO:
    def test_round_trip_identity(self, tmp_path):
        from fevec.mesh import generate_fcbga, generate_igbt, generate_sandwich
        for mesh in (generate_structured_quads(2, 2, 2, 2),
                     generate_split_square(2, 1, 4, 2),
                     generate_quarter_annulus(20, 60, 3, 5, 40),
                     generate_plate_with_hole(5, 20, 8, 4, 8, 10, split_ring=True),
                     generate_sandwich(0), generate_fcbga(0), generate_igbt(0)):
            path = tmp_path / "m.txt"
            save_mesh(mesh, str(path))
            back = load_mesh(str(path))
            assert [(n.id, n.x, n.y) for n in back.nodes] == \
                   [(n.id, n.x, n.y) for n in mesh.nodes]
            assert back.elements == mesh.elements
            assert back.boundary_edges == mesh.boundary_edges

    def test_duplicate_node_id_parse_error(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text("mesh 2d v1\nnode 0 0 0\nnode 0 1 0\n")
        with pytest.raises(ParseError, match="duplicate node id"):
            load_mesh(str(path))

    def test_five_vertex_fe_is_validation_error(self, tmp_path):
        path = tmp_path / "fe5.txt"
        path.write_text("mesh 2d v1\n"
                        "node 0 0 0\nnode 1 1 0\nnode 2 1.5 0.5\nnode 3 1 1\nnode 4 0 1\n"
                        "elem 0 FE 0 5 0 1 2 3 4\n")
        with pytest.raises(MeshError, match="FE_QUAD"):
            load_mesh(str(path))

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("mesh 2d v1\nnode 0 0 0\nnode 1 zzz 0\n")
        with pytest.raises(ParseError) as err:
            load_mesh(str(path))
        assert err.value.line == 3

    def test_missing_header(self, tmp_path):
        path = tmp_path / "hdr.txt"
        path.write_text("node 0 0 0\n")
        with pytest.raises(ParseError, match="header"):
            load_mesh(str(path))

    def test_non_dense_ids(self, tmp_path):
        path = tmp_path / "gap.txt"
        path.write_text("mesh 2d v1\nnode 0 0 0\nnode 2 1 0\n")
        with pytest.raises(ParseError, match="dense"):
            load_mesh(str(path))

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("# leading comment\nmesh 2d v1\n\nnode 0 0 0  # trailing\n"
                        "node 1 1 0\nnode 2 1 1\nnode 3 0 1\nelem 0 VE 0 4 0 1 2 3\n")
        mesh = load_mesh(str(path))
        assert mesh.n_nodes == 4 and mesh.n_elements == 1
