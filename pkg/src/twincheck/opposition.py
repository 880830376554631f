"""Displacement, opposite residues, J-opposition and the absolute point checks."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .chambers import MINUS, PLUS, Building, BuildingAutomorphism, Residue, TwinModel, is_opposite_residues
from .coxeter import CanonicalElement, DiagramAutomorphism
from .errors import NotInvolution, PreconditionViolated, WitnessValidationFailed
from .geometry import IncidenceGeometry, ProjectivePlane, square_free_part
from .reports import CheckReport
from .symmetry import (
    COLLINEATION,
    DUALITY,
    Elation,
    GeometryMap,
    Homology,
    absolute_points,
    classify_involutory_collineation,
    collineation_group,
    duality_batches,
    fixed_flags,
    fixed_substructure,
    map_order,
    order_decomposition,
    standard_correlation,
)


def _subsets(rank: int, nonempty: bool = True) -> list[frozenset[int]]:
    start = 1 if nonempty else 0
    return [frozenset(J) for r in range(start, rank + 1) for J in itertools.combinations(range(rank), r)]


def _fmt(J: Iterable[int]) -> str:
    return "{" + ",".join(str(s) for s in sorted(J)) + "}"


def _require_swapping(theta: BuildingAutomorphism) -> None:
    if not theta.half_swapping:
        raise PreconditionViolated("the map must swap the two halves")


def displacement(twin: TwinModel, theta: BuildingAutomorphism) -> np.ndarray:
    """Table index of codist(C+, (C theta)-) for every chamber C."""
    _require_swapping(theta)
    g = np.asarray(theta.chambers)
    return twin.codist_pm[np.arange(len(g)), g]


@dataclass
class DisplacementSpectrum:
    counts: dict[CanonicalElement, int]
    min_length: int
    witness: int
    witnesses: tuple[int, ...] = ()

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, w: CanonicalElement) -> int:
        return self.counts.get(w, 0)


def displacement_spectrum(twin: TwinModel, theta: BuildingAutomorphism) -> DisplacementSpectrum:
    disp = displacement(twin, theta)
    t = twin.table
    lengths = t.length[disp]
    best = int(lengths.min())
    at_min = np.nonzero(lengths == best)[0]
    counts = Counter(disp.tolist())
    ordered = {t.elements[i]: counts[i] for i in sorted(counts)}
    return DisplacementSpectrum(ordered, best, int(at_min[0]), tuple(int(c) for c in at_min))


@dataclass(frozen=True)
class OppositeResidueWitness:
    chamber: int
    J: frozenset[int]
    w: CanonicalElement
    residue: Residue
    image: Residue


def _validate_witness(twin: TwinModel, theta: BuildingAutomorphism, C: int, w_idx: int) -> OppositeResidueWitness:
    system, t = twin.system, twin.table
    w = t.elements[w_idx]
    J = system.descents(w, "left")
    if not system.is_spherical(J):
        raise WitnessValidationFailed(f"descent set {_fmt(J)} of {w} is not spherical")
    if system.longest_element(J) != w:
        raise WitnessValidationFailed(f"{w} is not the longest element of W_{_fmt(J)}")
    sigma = theta.twin_sigma(twin)
    if sigma.image(J) != J:
        raise WitnessValidationFailed(f"twin type map does not stabilize {_fmt(J)}")
    for s in J:
        conj = t.mul[t.mul[t.generator_index[s], w_idx], t.generator_index[sigma(s)]]
        if conj != w_idx:
            raise WitnessValidationFailed(f"s w sigma(s) != w for s={s}")
    R = twin.residue(PLUS, C, J)
    image = Residue(frozenset(sigma.image(J)), tuple(sorted(int(theta.chambers[c]) for c in R.chambers)), MINUS)
    if not is_opposite_residues(twin, R, image):
        raise WitnessValidationFailed(f"residue of type {_fmt(J)} at chamber {C} is not opposite its image")
    return OppositeResidueWitness(C, J, w, R, image)


def _neighbors(building: Building) -> np.ndarray:
    cached = building.__dict__.get("_all_neighbors")
    if cached is None:
        n = building.n_chambers
        cols = []
        for s in range(building.rank):
            p = building.partners[s]
            keep = p != np.arange(n)[:, None]
            cols.append(p[keep].reshape(n, -1))
        cached = np.concatenate(cols, axis=1).astype(np.int64)
        building.__dict__["_all_neighbors"] = cached
    return cached


def local_descent_minimum(twin: TwinModel, theta: BuildingAutomorphism, start: int = 0) -> int:
    """Length reached by walking to adjacent chambers while the displacement shortens."""
    lengths = twin.table.length[displacement(twin, theta)]
    end = int(kernels.local_descent(lengths[None, :], _neighbors(twin.plus), start)[0])
    return int(lengths[end])


def find_opposite_residue(twin: TwinModel, theta: BuildingAutomorphism, mode: str = "global",
                          start: int = 0) -> OppositeResidueWitness:
    """Chamber of minimal displacement, its descent set, and a validated witness.

    ``mode="local"`` starts at ``start`` and descends through adjacent
    chambers; the result is validated the same way, so a plateau shows up
    as :class:`WitnessValidationFailed`.
    """
    disp = displacement(twin, theta)
    lengths = twin.table.length[disp]
    if mode == "global":
        C = int(np.argmin(lengths))
    elif mode == "local":
        C = int(kernels.local_descent(lengths[None, :], _neighbors(twin.plus), start)[0])
    else:
        raise ValueError(f"mode must be 'global' or 'local', not {mode!r}")
    return _validate_witness(twin, theta, C, int(disp[C]))


def is_J_opposite(twin: TwinModel, theta: BuildingAutomorphism, J: Iterable[int]) -> bool:
    _require_swapping(theta)
    J = frozenset(J)
    K = frozenset(range(twin.system.rank)) - J
    members = twin.plus.residue_members(K)
    g = np.asarray(theta.chambers, dtype=np.int32)[None, :]
    return bool(kernels.j_opposite(g, twin.opposite, members)[0])


def j_opposite_table(twin: TwinModel, maps: np.ndarray, subsets: Sequence[frozenset[int]]) -> np.ndarray:
    """(B, len(subsets)) booleans: map b is J-opposite."""
    rank = twin.system.rank
    out = np.empty((len(maps), len(subsets)), dtype=bool)
    maps = np.ascontiguousarray(maps, dtype=np.int32)
    for k, J in enumerate(subsets):
        members = np.ascontiguousarray(twin.plus.residue_members(frozenset(range(rank)) - J), dtype=np.int32)
        out[:, k] = kernels.j_opposite(maps, twin.opposite, members).astype(bool)
    return out


def _main2_batch(twin: TwinModel, offset: int, maps: np.ndarray, sigmas: np.ndarray, report: CheckReport) -> int:
    rank = twin.system.rank
    S = frozenset(range(rank))
    subsets = _subsets(rank)
    table = j_opposite_table(twin, maps, subsets)
    full = table[:, subsets.index(S)]
    positives = 0
    n = twin.n_chambers
    t = twin.table
    for b in range(len(maps)):
        report.total += 1
        row = table[b]
        if not (row == full[b]).all():
            bad = [_fmt(J) for J, v in zip(subsets, row) if v != full[b]]
            report.fail(offset + b, f"J-opposite differs from S-opposite ({bool(full[b])}) for J in {' '.join(bad)}")
            continue
        if not row.any():
            continue
        positives += 1
        disp = twin.codist_pm[np.arange(n), maps[b]]
        for J, v in zip(subsets, row):
            if v and not t.in_parabolic(S - J)[disp].all():
                report.fail(offset + b, f"J={_fmt(J)}-opposite but some displacement leaves W_(S-J)")
        twin_sigma = [twin.kappa[int(sigmas[b][s])] for s in range(rank)]
        if twin_sigma != list(range(rank)):
            report.fail(offset + b, f"opposite map with twin type permutation {twin_sigma}")
    return positives


def verify_main2(twin: TwinModel, theta: BuildingAutomorphism) -> CheckReport:
    _require_swapping(theta)
    report = CheckReport(twin.name, "main2")
    with report.timed():
        maps = np.asarray(theta.chambers, dtype=np.int32)[None, :]
        sigmas = np.asarray(theta.sigma.perm, dtype=np.int32)[None, :]
        report.details["opposite_maps"] = _main2_batch(twin, 0, maps, sigmas, report)
    return report


def verify_main2_scan(model, start: int = 0, stop: int | None = None, batch: int = 2048) -> CheckReport:
    """Equivalence of J-opposition and S-opposition over every map of a model."""
    twin = model.twin
    report = CheckReport(model.name, "main2")
    positives = 0
    with report.timed():
        for offset, maps, sigmas in model.batches(batch, start, stop):
            positives += _main2_batch(twin, offset, maps, sigmas, report)
    report.details["opposite_maps"] = positives
    return report


def verify_no_opposite_automorphism(model, start: int = 0, stop: int | None = None, batch: int = 2048) -> CheckReport:
    """No map of the model is J-opposite for a nonempty J."""
    twin = model.twin
    subsets = _subsets(twin.system.rank)
    report = CheckReport(model.name, "no-opposite")
    with report.timed():
        for offset, maps, _ in model.batches(batch, start, stop):
            table = j_opposite_table(twin, maps, subsets)
            report.total += len(maps)
            for b in np.nonzero(table.any(axis=1))[0]:
                hit = [_fmt(J) for J, v in zip(subsets, table[b]) if v]
                report.fail(offset + int(b), f"J-opposite for J in {' '.join(hit)}")
    return report


def verify_main0_scan(model, start: int = 0, stop: int | None = None, batch: int = 2048,
                      local_start: int = 0) -> CheckReport:
    """A validated opposite residue for every map.

    Local descent from ``local_start`` is run alongside; maps where it
    stalls above the global minimum are counted in the details rather than
    failed, since its stopping point is itself a valid witness.
    """
    twin = model.twin
    t = twin.table
    nbrs = _neighbors(twin.plus)
    report = CheckReport(model.name, "main0")
    types: Counter = Counter()
    mismatches, first_mismatch = 0, None
    with report.timed():
        for offset, maps, sigmas in model.batches(batch, start, stop):
            n = maps.shape[1]
            disp = twin.codist_pm[np.arange(n)[None, :], maps]
            lengths = t.length[disp]
            C = lengths.argmin(axis=1)
            best = lengths[np.arange(len(maps)), C]
            ends = kernels.local_descent(np.ascontiguousarray(lengths), nbrs, local_start)
            local = lengths[np.arange(len(maps)), ends]
            for b in range(len(maps)):
                report.total += 1
                theta = BuildingAutomorphism(maps[b], DiagramAutomorphism(tuple(int(x) for x in sigmas[b])))
                try:
                    wit = _validate_witness(twin, theta, int(C[b]), int(disp[b, C[b]]))
                except WitnessValidationFailed as exc:
                    report.fail(offset + b, str(exc))
                    continue
                types[_fmt(wit.J)] += 1
                if local[b] != best[b]:
                    try:
                        _validate_witness(twin, theta, int(ends[b]), int(disp[b, ends[b]]))
                    except WitnessValidationFailed as exc:
                        report.fail(offset + b, f"local descent: {exc}")
                    mismatches += 1
                    if first_mismatch is None:
                        first_mismatch = [offset + b, int(local[b]), int(best[b])]
    report.details["witness_types"] = dict(sorted(types.items()))
    report.details["local_descent_mismatches"] = mismatches
    if first_mismatch is not None:
        report.details["first_local_mismatch"] = first_mismatch
    return report


# generalized polygons

def min_point_displacement(geometry: IncidenceGeometry, collineation: GeometryMap | np.ndarray) -> int:
    perm = collineation.perm if isinstance(collineation, GeometryMap) else np.asarray(collineation)
    P = geometry.n_points
    if (perm[:P] >= P).any():
        raise ValueError("need a collineation")
    return int(geometry.distance_matrix[np.arange(P), perm[:P]].min())


def verify_point_displacement(geometry: IncidenceGeometry, collineations: np.ndarray, bound: int = 2) -> CheckReport:
    report = CheckReport(geometry.name, "beukjeeven")
    with report.timed():
        P = geometry.n_points
        cols = np.asarray(collineations)
        dist = geometry.distance_matrix[np.arange(P)[None, :], cols[:, :P]].min(axis=1)
        report.total = len(cols)
        for b in np.nonzero(dist > bound)[0]:
            report.fail(int(b), f"every point moves to distance >= {int(dist[b])}")
        report.details["max_min_displacement"] = int(dist.max()) if len(dist) else 0
        report.details["histogram"] = {str(k): int(v) for k, v in sorted(Counter(dist.tolist()).items())}
    return report


def beukje_condition(q: int, n: int) -> str | None:
    qp = square_free_part(q)

    def divides(a: int, b: int) -> bool:
        return b == 0 if a == 0 else b % a == 0

    if not divides(qp, n):
        return "i"
    if qp % 2 == 0 and qp and n % 8:
        return "ii"
    if qp % 4 == 3 and n % 4:
        return "iii"
    return None


@dataclass
class AbsolutePointTrace:
    """The route through the minimal counterexample argument for one duality."""

    case: int
    absolute: tuple[int, ...]
    notes: list[str] = field(default_factory=list)


def absolute_point_trace(plane: ProjectivePlane, duality: GeometryMap) -> AbsolutePointTrace:
    """Replay the case analysis on a concrete duality and check each claimed step.

    Raises ``AssertionError`` if a step does not hold for this map.
    """
    q = plane.q
    P = plane.n_points
    absolute = absolute_points(plane, duality)
    dec = order_decomposition(duality, q)
    inv = dec.involution
    trace = AbsolutePointTrace(dec.case, absolute)
    if dec.case in (1, 2):
        assert inv.kind == COLLINEATION, "tau' should be a collineation"
        cls = classify_involutory_collineation(plane, inv)
        if dec.case == 1:
            assert isinstance(cls, Elation), f"expected an elation, got {type(cls).__name__}"
            x, L = cls.center, cls.axis
            assert duality.perm[x] == P + L and duality.perm[P + L] == x, "tau does not fix the flag {x, L}"
            assert x in absolute
            trace.notes.append(f"elation flag ({x},{L}) fixed")
            return trace
        assert isinstance(cls, Homology), f"expected a homology, got {type(cls).__name__}"
        x, L = cls.center, cls.axis
        assert duality.perm[x] == P + L and duality.perm[P + L] == x, "tau does not swap centre and axis"
        flags = [(int(y), int(plane.join[x, y])) for y in plane.line_points[L]]
    else:
        assert inv.kind == DUALITY and map_order(inv) == 2, "tau' should be a polarity"
        flags = fixed_flags(plane, inv)
        assert len(flags) == q + 1, f"polarity fixes {len(flags)} flags"
    if dec.p is None:
        return trace
    tpp = dec.p_part
    assert tpp.kind == COLLINEATION
    img = {(int(tpp.perm[y]), int(tpp.perm[P + M]) - P) for y, M in flags}
    assert img == set(flags), "tau'' does not preserve the flag set"
    fixed = [(y, M) for y, M in flags if tpp.perm[y] == y and tpp.perm[P + M] == P + M]
    assert len(fixed) % dec.p == (q + 1) % dec.p and fixed, "fixed flag count is wrong mod p"
    if len(fixed) == 1:
        assert fixed[0][0] in absolute, "the unique fixed flag should give an absolute point"
        trace.notes.append("unique fixed flag")
    else:
        assert len(fixed) >= dec.p + 1
        sub = fixed_substructure(plane, tpp)
        assert sub.is_plane and len(sub.points) < P, "fixed points of tau'' do not form a proper subplane"
        trace.notes.append(f"subplane on {len(sub.points)} points")
    return trace


def verify_absolute_point_theorem(plane: ProjectivePlane, start: int = 0, stop: int | None = None,
                                  batch: int = 8192) -> CheckReport:
    """Every duality in the coset of the collineation group has an absolute point."""
    q = plane.q
    P = plane.n_points
    group = collineation_group(q)
    stop = group.order if stop is None else min(stop, group.order)
    report = CheckReport(f"PG(2,{q})", "absolute-points")
    hist: Counter = Counter()
    beukje: Counter = Counter()
    cases: Counter = Counter()
    pol_counts: Counter = Counter()
    incidence = np.ascontiguousarray(plane.incidence, dtype=np.uint8)
    with report.timed():
        for offset, chunk in duality_batches(plane, group, batch):
            if offset + len(chunk) <= start or offset >= stop:
                continue
            lo, hi = max(start - offset, 0), min(stop - offset, len(chunk))
            chunk = np.ascontiguousarray(chunk[lo:hi])
            offset += lo
            counts = kernels.absolute_counts(chunk, incidence, P)
            orders = kernels.perm_orders(chunk)
            report.total += len(chunk)
            hist.update(counts.tolist())
            for b, (c, n) in enumerate(zip(counts.tolist(), orders.tolist())):
                label = beukje_condition(q, n)
                beukje[label or "none"] += 1
                if n == 2:
                    pol_counts[c] += 1
                if c == 0:
                    why = f"guaranteed by condition ({label})" if label else "no guarantee"
                    report.fail(offset + b, f"no absolute point; order {n}, {why}")
                elif label is None:
                    try:
                        trace = absolute_point_trace(plane, GeometryMap(chunk[b], P))
                        cases[trace.case] += 1
                    except AssertionError as exc:
                        report.fail(offset + b, f"proof step failed: {exc}")
    report.details["histogram"] = {str(k): int(v) for k, v in sorted(hist.items())}
    report.details["beukje"] = dict(sorted(beukje.items()))
    report.details["traced_cases"] = {str(k): int(v) for k, v in sorted(cases.items())}
    if pol_counts:
        report.details["polarity_min_absolute"] = int(min(pol_counts))
    return report


def baer_polarity_checks(plane: ProjectivePlane, polarity: GeometryMap | None = None) -> CheckReport:
    q = plane.q
    if polarity is None:
        polarity = standard_correlation(plane)
    report = CheckReport(f"PG(2,{q})", "baer")
    with report.timed():
        if polarity.kind != DUALITY or map_order(polarity) != 2:
            raise PreconditionViolated("need a polarity")
        if square_free_part(q) == 0:
            raise PreconditionViolated(f"q={q} is a square")
        pts = absolute_points(plane, polarity)
        report.total = 1
        report.details["absolute_points"] = list(pts)
        if len(pts) != q + 1:
            report.fail(0, f"{len(pts)} absolute points, expected {q + 1}")
        on_line = plane.incidence[list(pts)].sum(axis=0) if pts else np.zeros(plane.n_lines, dtype=int)
        report.details["max_per_line"] = int(on_line.max())
        report.total += 1
        if q % 2 == 0:
            if on_line.max() != len(pts):
                report.fail(0, "absolute points are not collinear")
        elif on_line.max() > 2:
            j = int(on_line.argmax())
            report.fail(0, f"line {j} carries {int(on_line[j])} absolute points")
    return report


# fixed simplices

def fixed_simplex_search(building: Building, involution: BuildingAutomorphism) -> Residue | None:
    """A proper residue stabilized by the involution, smallest type first."""
    g = np.asarray(involution.chambers)
    n = len(g)
    if not np.array_equal(g[g], np.arange(n)):
        raise NotInvolution("map has order greater than 2")
    rank = building.rank
    for J in _subsets(rank, nonempty=False):
        if len(J) == rank:
            break
        labels = building.residue_labels(J)
        moved = np.zeros(n, dtype=bool)
        moved[labels[labels[g] != labels]] = True
        keep = np.nonzero(~moved[labels] & (labels == np.arange(n)))[0]
        if len(keep):
            base = int(keep[0])
            return Residue(J, tuple(int(c) for c in np.nonzero(labels == base)[0]))
    return None


def verify_fixed_simplices(model, start: int = 0, stop: int | None = None, batch: int = 4096) -> CheckReport:
    """Every involution fixes a proper residue unless it maps every chamber to an opposite."""
    building = model.building
    opp = model.twin.opposite
    report = CheckReport(model.name, "main3")
    types: Counter = Counter()
    involutions = 0
    with report.timed():
        for offset, maps, sigmas in model.batches(batch, start, stop):
            idx = np.arange(maps.shape[1])
            inv = (np.take_along_axis(maps, maps, axis=1) == idx).all(axis=1)
            for b in np.nonzero(inv)[0]:
                involutions += 1
                report.total += 1
                theta = BuildingAutomorphism(maps[b], DiagramAutomorphism(tuple(int(x) for x in sigmas[b])))
                R = fixed_simplex_search(building, theta)
                if R is None:
                    if not opp[idx, maps[b]].all():
                        report.fail(offset + int(b), "no fixed residue, yet some chamber is not mapped to an opposite")
                    else:
                        types["opposite"] += 1
                    continue
                types[_fmt(R.J)] += 1
    report.details["involutions"] = involutions
    report.details["fixed_types"] = dict(sorted(types.items()))
    return report
