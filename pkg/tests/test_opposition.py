import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twincheck.chambers import BuildingAutomorphism
from twincheck.coxeter import IDENTITY, CoxeterSystem, DiagramAutomorphism
from twincheck.errors import NotInvolution, PreconditionViolated, WitnessValidationFailed
from twincheck.geometry import projective_plane, symplectic_quadrangle
from twincheck.models import get_model, opposition_map
from twincheck.opposition import (
    absolute_point_trace,
    baer_polarity_checks,
    beukje_condition,
    displacement_spectrum,
    find_opposite_residue,
    fixed_simplex_search,
    is_J_opposite,
    j_opposite_table,
    local_descent_minimum,
    min_point_displacement,
    verify_absolute_point_theorem,
    verify_fixed_simplices,
    verify_main0_scan,
    verify_main2,
    verify_main2_scan,
    verify_no_opposite_automorphism,
    verify_point_displacement,
)
from twincheck.symmetry import (
    Elation,
    GeometryMap,
    absolute_points,
    all_dualities,
    classify_involutory_collineation,
    lift_batch,
    lift_to_building,
    map_order,
    quadrangle_collineations,
    standard_correlation,
)


def theta_of(model, i):
    for offset, maps, sigmas in model.batches(batch=1, start=i, stop=i + 1):
        return BuildingAutomorphism(maps[0], DiagramAutomorphism(tuple(int(x) for x in sigmas[0])))


@pytest.fixture(scope="module")
def fano():
    return get_model("pg", 2)


@pytest.fixture(scope="module")
def polarity(fano):
    return lift_to_building(standard_correlation(projective_plane(2)), fano.building)


@pytest.fixture(scope="module")
def thin_a2():
    model = get_model("thin", 2, "A2")
    chambers, sigma = opposition_map(CoxeterSystem.named("A2"))
    return model, BuildingAutomorphism(chambers, sigma)


def naive_j_opposite(twin, g, J):
    rank = twin.system.rank
    K = frozenset(range(rank)) - frozenset(J)
    for C in range(twin.n_chambers):
        R = twin.plus.residue_of(C, K).chambers
        image = [int(g[x]) for x in R]
        block = twin.opposite[np.ix_(R, image)]
        if not (block.any(axis=1).all() and block.any(axis=0).all()):
            return False
    return True


class TestSpectrum:
    def test_thin_opposition_map(self, thin_a2):
        model, theta = thin_a2
        spec = displacement_spectrum(model.twin, theta)
        assert spec.counts == {IDENTITY: 6}
        assert spec.min_length == 0

    def test_polarity(self, fano, polarity):
        twin = fano.twin
        spec = displacement_spectrum(twin, polarity)
        w0 = twin.table.elements[twin.table.w0]
        fixed = np.nonzero(polarity.chambers == np.arange(21))[0]
        assert len(fixed) == 3
        assert spec[w0] >= len(fixed)
        assert spec[IDENTITY] > 0
        assert spec.total == 21
        assert spec.witness == spec.witnesses[0]

    def test_requires_swapping(self, fano, polarity):
        theta = BuildingAutomorphism(polarity.chambers, polarity.sigma, half_swapping=False)
        with pytest.raises(PreconditionViolated):
            displacement_spectrum(fano.twin, theta)


class TestWitness:
    def test_thin(self, thin_a2):
        model, theta = thin_a2
        wit = find_opposite_residue(model.twin, theta)
        assert wit.J == frozenset() and len(wit.residue) == 1

    def test_polarity(self, fano, polarity):
        wit = find_opposite_residue(fano.twin, polarity)
        assert wit.J == frozenset() and wit.w == IDENTITY
        assert fano.twin.opposite[wit.chamber, polarity.chambers[wit.chamber]]

    @pytest.mark.parametrize("q", [2, 3])
    def test_all_dualities(self, q):
        model = get_model("pg", q)
        plane = projective_plane(q)
        maps = np.array([m.perm for m in all_dualities(plane)])
        chambers, sigmas = lift_batch(model.building, maps)
        for g, sig in zip(chambers, sigmas):
            theta = BuildingAutomorphism(g, DiagramAutomorphism(tuple(int(x) for x in sig)))
            wit = find_opposite_residue(model.twin, theta)
            assert model.twin.system.longest_element(wit.J) == wit.w

    def test_local_mode_validates(self, fano):
        for i in range(0, 336, 7):
            theta = theta_of(fano, i)
            local = find_opposite_residue(fano.twin, theta, mode="local")
            assert local.w.length >= find_opposite_residue(fano.twin, theta).w.length

    def test_local_descent_can_stall(self, fano):
        theta = theta_of(fano, 6)
        assert local_descent_minimum(fano.twin, theta) == 3
        assert displacement_spectrum(fano.twin, theta).min_length == 0

    def test_bad_mode(self, fano, polarity):
        with pytest.raises(ValueError):
            find_opposite_residue(fano.twin, polarity, mode="sideways")

    def test_corrupted_codistance(self, fano, polarity):
        twin = fano.twin
        t = twin.table
        bad = twin.codist_pm.copy()
        # every chamber at codistance st from its image: st is not a longest parabolic element
        bad[np.arange(21), polarity.chambers] = t.idx((0, 1))
        with pytest.raises(WitnessValidationFailed, match="longest"):
            find_opposite_residue(twin.with_codistance(bad, twin.codist_mp), polarity)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 11231))
    def test_spectrum_and_witness_agree(self, i):
        model = get_model("pg", 3)
        theta = theta_of(model, i)
        spec = displacement_spectrum(model.twin, theta)
        wit = find_opposite_residue(model.twin, theta)
        assert wit.w.length == spec.min_length
        assert wit.chamber == spec.witness


class TestJOpposite:
    def test_thin(self, thin_a2):
        model, theta = thin_a2
        assert is_J_opposite(model.twin, theta, {0})
        assert is_J_opposite(model.twin, theta, {1})
        assert is_J_opposite(model.twin, theta, {0, 1})

    def test_polarity(self, fano, polarity):
        assert not is_J_opposite(fano.twin, polarity, {0})
        assert is_J_opposite(fano.twin, polarity, ())

    def test_kernel_matches_naive(self, fano):
        twin = fano.twin
        subsets = [frozenset(J) for r in range(3) for J in itertools.combinations(range(2), r)]
        for offset, maps, _ in fano.batches(batch=64):
            table = j_opposite_table(twin, maps, subsets)
            for b in range(0, len(maps), 5):
                for k, J in enumerate(subsets):
                    assert table[b, k] == naive_j_opposite(twin, maps[b], J)

    def test_thin_controls_naive(self):
        for ctype in ("A2", "B2"):
            model = get_model("thin", 2, ctype)
            subsets = [frozenset({0}), frozenset({1}), frozenset({0, 1})]
            table = j_opposite_table(model.twin, model.chamber_maps, subsets)
            for b, g in enumerate(model.chamber_maps):
                assert list(table[b]) == [naive_j_opposite(model.twin, g, J) for J in subsets]
            assert table.all(axis=1).sum() == 1


class TestMain2:
    def test_thin_control(self, thin_a2):
        model, theta = thin_a2
        report = verify_main2(model.twin, theta)
        assert report.passed and report.details["opposite_maps"] == 1

    def test_polarity(self, fano, polarity):
        report = verify_main2(fano.twin, polarity)
        assert report.passed and report.details["opposite_maps"] == 0

    @pytest.mark.parametrize("args", [("pg", 2), ("pg", 3), ("gq", 2), ("thin", 2, "A2"), ("thin", 2, "B2")])
    def test_scan(self, args):
        report = verify_main2_scan(get_model(*args))
        assert report.passed

    def test_no_opposite(self, fano):
        report = verify_no_opposite_automorphism(fano)
        assert report.passed and report.total == 336

    def test_thin_has_opposite(self):
        report = verify_no_opposite_automorphism(get_model("thin", 2, "B2"))
        assert report.failure_count == 1


class TestMain0:
    @pytest.mark.parametrize("args", [("pg", 2), ("gq", 2)])
    def test_scan(self, args):
        report = verify_main0_scan(get_model(*args))
        assert report.passed
        assert sum(report.details["witness_types"].values()) == report.total


class TestDisplacement:
    def test_identity(self):
        gq = symplectic_quadrangle()
        assert min_point_displacement(gq, np.arange(30)) == 0

    def test_quadrangle(self):
        gq = symplectic_quadrangle()
        cols = quadrangle_collineations().elements
        values = [min_point_displacement(gq, g) for g in cols]
        assert max(values) == 2
        report = verify_point_displacement(gq, cols)
        assert report.passed and report.details["max_min_displacement"] == 2

    def test_fixed_point_free_witness(self):
        gq = symplectic_quadrangle()
        cols = quadrangle_collineations().elements
        free = [g for g in cols if not (g[:15] == np.arange(15)).any()]
        assert free
        g = free[0]
        p = next(p for p in range(15) if gq.distance_matrix[p, g[p]] == 2)
        assert any(set(l) >= {p, int(g[p])} for l in gq.line_points)

    def test_rejects_duality(self):
        plane = projective_plane(2)
        with pytest.raises(ValueError):
            min_point_displacement(plane, standard_correlation(plane))


class TestBeukje:
    @pytest.mark.parametrize("q,n,label", [(2, 2, "ii"), (3, 4, "i"), (9, 6, "i"), (2, 8, None), (3, 6, "iii"), (3, 12, None),
                                           (3, 2, "i"), (7, 14, "iii"), (7, 28, None), (5, 10, None), (2, 16, None)])
    def test_examples(self, q, n, label):
        assert beukje_condition(q, n) == label

    @given(st.sampled_from([4, 9, 16, 25, 49]), st.integers(1, 500))
    def test_square_always_i(self, q, n):
        assert beukje_condition(q, n) == "i"

    @given(st.sampled_from([2, 3, 5, 7, 8, 11, 27]), st.integers(1, 500))
    def test_labels_match_definition(self, q, n):
        qp = {2: 2, 3: 3, 5: 5, 7: 7, 8: 2, 11: 11, 27: 3}[q]
        label = beukje_condition(q, n)
        if n % qp:
            assert label == "i"
        elif qp % 2 == 0 and n % 8:
            assert label == "ii"
        elif qp % 4 == 3 and n % 4:
            assert label == "iii"
        else:
            assert label is None


class TestAbsolutePoints:
    def test_q2(self):
        report = verify_absolute_point_theorem(projective_plane(2))
        assert report.passed and report.total == 168
        assert report.details["polarity_min_absolute"] == 3
        assert sum(report.details["histogram"].values()) == 168

    @pytest.mark.parametrize("q,cases", [(2, {1}), (3, {2})])
    def test_traces(self, q, cases):
        plane = projective_plane(q)
        seen = set()
        for m in all_dualities(plane):
            if beukje_condition(q, map_order(m)) is not None:
                continue
            trace = absolute_point_trace(plane, m)
            assert trace.absolute
            seen.add(trace.case)
        assert seen == cases

    def test_range(self):
        plane = projective_plane(3)
        full = verify_absolute_point_theorem(plane)
        left = verify_absolute_point_theorem(plane, 0, 3000)
        right = verify_absolute_point_theorem(plane, 3000, None)
        left.merge(right)
        assert left.total == full.total == 5616
        assert left.details["histogram"] == full.details["histogram"]


class TestBaer:
    @pytest.mark.parametrize("q,count,per_line", [(2, 3, 3), (3, 4, 2), (5, 6, 2), (7, 8, 2), (8, 9, 9)])
    def test_standard(self, q, count, per_line):
        report = baer_polarity_checks(projective_plane(q))
        assert report.passed
        assert len(report.details["absolute_points"]) == count
        assert report.details["max_per_line"] == per_line

    def test_square_rejected(self):
        with pytest.raises(PreconditionViolated):
            baer_polarity_checks(projective_plane(4))


class TestFixedSimplex:
    def test_elation_fixes_flag(self, fano):
        plane = projective_plane(2)
        m = GeometryMap(plane.collineation_images(np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]])), 7)
        cls = classify_involutory_collineation(plane, m)
        assert isinstance(cls, Elation)
        theta = lift_to_building(m, fano.building)
        R = fixed_simplex_search(fano.building, theta)
        assert R is not None and R.J == frozenset()
        flag = fano.building.chamber_lookup[(cls.center, 7 + cls.axis)]
        assert theta.chambers[flag] == flag

    def test_identity(self, fano):
        theta = BuildingAutomorphism(np.arange(21), DiagramAutomorphism((0, 1)))
        R = fixed_simplex_search(fano.building, theta)
        assert R is not None and R.chambers == (0,)

    def test_not_involution(self, fano):
        theta = BuildingAutomorphism(np.roll(np.arange(21), 1), DiagramAutomorphism((0, 1)))
        with pytest.raises(NotInvolution):
            fixed_simplex_search(fano.building, theta)

    def test_thin_opposition_map(self, thin_a2):
        model, theta = thin_a2
        assert fixed_simplex_search(model.building, theta) is None

    @pytest.mark.parametrize("q", [2, 3])
    def test_polarities_fix_flags_iff_absolute(self, q):
        plane = projective_plane(q)
        model = get_model("pg", q)
        for m in all_dualities(plane):
            if not m.then(m).is_identity():
                continue
            R = fixed_simplex_search(model.building, lift_to_building(m, model.building))
            assert (R is not None and R.J == frozenset()) == bool(absolute_points(plane, m))

    def test_scan_pg(self, fano):
        report = verify_fixed_simplices(fano)
        assert report.passed and "opposite" not in report.details["fixed_types"]
