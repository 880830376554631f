import itertools

import numpy as np
import pytest

from twincheck.chambers import (
    MINUS,
    PLUS,
    Building,
    Residue,
    building_from_geometry,
    flag_building_rank3,
    is_opposite_residues,
    self_twin,
    thin_building,
    verify_twin_axioms,
)
from twincheck.coxeter import IDENTITY, CoxeterSystem
from twincheck.errors import InvalidGeometry, InvalidPolygon, NonSpherical
from twincheck.geometry import IncidenceGeometry, projective_plane, symplectic_quadrangle
from twincheck.models import get_model
from twincheck.symmetry import lift_to_building, standard_correlation


@pytest.fixture(scope="module")
def fano():
    return building_from_geometry(projective_plane(2))


@pytest.fixture(scope="module")
def fano_twin(fano):
    return self_twin(fano)


class TestConstruction:
    def test_fano(self, fano):
        assert fano.n_chambers == 21
        assert fano.panel_sizes == (3, 3)
        assert fano.thick

    def test_quadrangle(self):
        b = building_from_geometry(symplectic_quadrangle())
        assert b.n_chambers == 45
        assert b.system.matrix.m(0, 1) == 4
        assert b.panel_sizes == (3, 3)

    def test_rank3(self):
        b = flag_building_rank3(2)
        assert b.n_chambers == 315
        types = b.vertex_types
        assert [int((types == k).sum()) for k in range(3)] == [15, 35, 15]
        assert b.table.length[b.table.w0] == 6
        assert b.residue_of(0, {0, 1, 2}).chambers == tuple(range(315))
        with pytest.raises(InvalidGeometry):
            flag_building_rank3(3)

    def test_thin(self):
        assert thin_building(CoxeterSystem.named("A2")).n_chambers == 6
        assert thin_building(CoxeterSystem.named("B2")).n_chambers == 8
        with pytest.raises(NonSpherical):
            thin_building(CoxeterSystem.named("A~2"))

    def test_not_a_polygon(self):
        broken = IncidenceGeometry(4, [[0, 1], [2, 3]], name="two lines")
        with pytest.raises(InvalidPolygon):
            building_from_geometry(broken)

    def test_unequal_panels(self):
        system = CoxeterSystem.named("A1")
        with pytest.raises(Exception):
            Building(system, [np.array([0, 0, 1])])


class TestDistance:
    @pytest.mark.parametrize("name", ["A2", "B2", "A3", "B3"])
    def test_thin_distance_is_quotient(self, name):
        # oracle: in the Coxeter complex delta(u, v) = u^-1 v
        system = CoxeterSystem.named(name)
        b = thin_building(system)
        t = system.table
        expected = t.mul[t.inverse[:, None], np.arange(t.order)[None, :]]
        assert (b.distances == expected).all()
        assert all(b.weyl_distance(u, u) == IDENTITY for u in range(t.order))

    def test_adjacent_flags(self, fano):
        p, j = fano.chamber_vertices[0]
        other = [C for C in fano.panel(0, 0) if C != 0][0]
        assert fano.chamber_vertices[other][1] == j
        assert fano.weyl_distance(0, other).word == (0,)

    def test_opposite_counts(self, fano):
        w0 = fano.table.elements[fano.table.w0]
        assert w0.length == 3
        assert (fano.opposite.sum(axis=1) == 8).all()
        # brute force: flags (p, L), (p', L') are opposite iff p not on L' and p' not on L
        plane = projective_plane(2)
        flags = plane.flags
        for a, (p, L) in enumerate(flags):
            for b, (p2, L2) in enumerate(flags):
                expect = not plane.incident(p, L2) and not plane.incident(p2, L)
                assert fano.opposite[a, b] == expect

    @pytest.mark.parametrize("q,count", [(3, 27), (4, 64)])
    def test_opposite_counts_q(self, q, count):
        b = building_from_geometry(projective_plane(q))
        assert (b.opposite.sum(axis=1) == count).all()

    def test_quadrangle_and_rank3_opposite(self):
        assert (get_model("gq").building.opposite.sum(axis=1) == 16).all()
        assert (get_model("a3").building.opposite.sum(axis=1) == 64).all()

    def test_distance_is_symmetric_up_to_inverse(self, fano):
        t = fano.table
        assert (t.inverse[fano.distances] == fano.distances.T).all()


class TestResidues:
    def test_empty_type(self, fano):
        assert fano.residue_of(5, ()).chambers == (5,)

    def test_panel(self, fano):
        R = fano.residue_of(0, {0})
        assert len(R) == 3
        lines = {int(fano.chamber_vertices[C][1]) for C in R.chambers}
        assert len(lines) == 1

    @pytest.mark.parametrize("kind", ["pg", "gq", "a3"])
    def test_gate_property(self, kind):
        assert get_model(kind).building.check_gate_property().passed

    @pytest.mark.parametrize("name", ["A2", "B2", "A3"])
    def test_gate_property_thin(self, name):
        assert thin_building(CoxeterSystem.named(name)).check_gate_property().passed

    def test_residue_members_shape(self):
        b = get_model("a3").building
        assert b.residue_members({0, 1}).shape == (315, 21)
        assert b.residue_members({0, 2}).shape == (315, 9)


class TestTwin:
    def test_self_codistance(self, fano_twin):
        w0 = fano_twin.table.elements[fano_twin.table.w0]
        for C in range(21):
            assert fano_twin.codistance((PLUS, C), (MINUS, C)) == w0

    def test_opposite_codistance(self, fano, fano_twin):
        for C, D in zip(*np.nonzero(fano.opposite)):
            assert fano_twin.codistance((PLUS, int(C)), (MINUS, int(D))) == IDENTITY

    def test_same_half_rejected(self, fano_twin):
        with pytest.raises(ValueError):
            fano_twin.codistance((PLUS, 0), (PLUS, 1))

    @pytest.mark.parametrize("args", [("pg", 2), ("pg", 3), ("gq", 2), ("a3", 2), ("thin", 2, "A2"), ("thin", 2, "B2")])
    def test_axioms(self, args):
        report = verify_twin_axioms(get_model(*args).twin)
        assert report.passed, report.failures[:3]

    def test_corrupted_codistance(self, fano_twin):
        bad = fano_twin.codist_pm.copy()
        bad[0, 0] = 0
        broken = fano_twin.with_codistance(bad, fano_twin.codist_mp)
        report = verify_twin_axioms(broken)
        assert not report.passed
        assert report.failure_count >= 1

    def test_plain_left_rule_fails(self, fano):
        # codist = w0 delta without relabelling the minus half breaks Tw2/Tw3
        twin = self_twin(fano)
        t = fano.table
        alt = twin.with_codistance(t.mul[t.w0, fano.distances], t.mul[fano.distances, t.w0])
        assert not verify_twin_axioms(alt).passed

    def test_thin_opposition_map(self):
        from twincheck.models import opposition_map

        system = CoxeterSystem.named("A2")
        twin = get_model("thin", 2, "A2").twin
        chambers, _ = opposition_map(system)
        assert twin.opposite[np.arange(6), chambers].all()


class TestOppositeResidues:
    def test_chambers(self, fano, fano_twin):
        C, D = map(int, np.argwhere(fano.opposite)[0])
        assert is_opposite_residues(fano_twin, Residue(frozenset(), (C,), PLUS), Residue(frozenset(), (D,), MINUS))

    def test_whole_buildings(self, fano_twin):
        everything = tuple(range(21))
        S = frozenset({0, 1})
        assert is_opposite_residues(fano_twin, Residue(S, everything, PLUS), Residue(S, everything, MINUS))

    def test_fixed_flag_panel(self, fano, fano_twin):
        plane = projective_plane(2)
        theta = lift_to_building(standard_correlation(plane), fano)
        fixed = [C for C in range(21) if theta.chambers[C] == C]
        assert fixed
        C = fixed[0]
        R = fano_twin.residue(PLUS, C, {0})
        image = Residue(R.J, tuple(sorted(int(theta.chambers[x]) for x in R.chambers)), MINUS)
        assert not is_opposite_residues(fano_twin, R, image)

    def test_same_half(self, fano_twin):
        R = Residue(frozenset(), (0,), PLUS)
        with pytest.raises(ValueError):
            is_opposite_residues(fano_twin, R, R)
