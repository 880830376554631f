"""Buildings as chamber systems, and self-twinned spherical buildings.

Codistance convention: a move in the second argument multiplies on the
right, i.e. if ``delta(D, E) = s`` and ``l(w s) < l(w)`` for
``w = codist(C, D)`` then ``codist(C, E) = w s``.

A spherical building is twinned with itself as follows.  The minus half is
a copy whose ``s``-panels are the base ``w0 s w0``-panels, and

    codist(C+, D-) = delta(C, D) w0,    codist(D-, C+) = w0 delta(D, C),

so ``C+`` and ``D-`` are opposite exactly when ``delta(C, D) = w0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .coxeter import CanonicalElement, CoxeterMatrix, CoxeterSystem, DiagramAutomorphism, named_matrix
from .errors import (
    AxiomValidationFailed,
    DisconnectedChamberGraph,
    IncompatibleBuilding,
    InvalidBuilding,
    InvalidGeometry,
    InvalidPolygon,
    NonSpherical,
)
from .geometry import IncidenceGeometry, ProjectiveSpace, validate_generalized_polygon
from .reports import CheckReport

PLUS, MINUS = 1, -1


def _compact(labels: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(labels, return_inverse=True)
    return inverse.astype(np.int32)


@dataclass(frozen=True)
class Residue:
    J: frozenset[int]
    chambers: tuple[int, ...]
    half: int = PLUS

    def __contains__(self, c: int) -> bool:
        return c in self.chambers

    def __len__(self) -> int:
        return len(self.chambers)


class Building:
    """A spherical building given by its panel partitions.

    ``panel_of[s][C]`` labels the ``s``-panel of chamber ``C``.  Optional
    ``chamber_vertices`` (one vertex id per type) lets geometric maps be
    lifted to chamber permutations.
    """

    def __init__(
        self,
        system: CoxeterSystem,
        panel_of: Sequence[np.ndarray],
        name: str = "building",
        chamber_vertices: np.ndarray | None = None,
        vertex_types: np.ndarray | None = None,
    ):
        if not system.is_spherical(range(system.rank)):
            raise NonSpherical("only spherical buildings are supported")
        if len(panel_of) != system.rank:
            raise InvalidBuilding("need one panel partition per generator")
        self.system = system
        self.table = system.table
        self.name = name
        self.panel_of = [_compact(np.asarray(p)) for p in panel_of]
        self.n_chambers = len(self.panel_of[0])
        self.members = []
        for s, labels in enumerate(self.panel_of):
            counts = np.bincount(labels)
            if counts.min() != counts.max():
                raise InvalidBuilding(f"panels of type {s} have unequal sizes")
            order = np.argsort(labels, kind="stable")
            self.members.append(order.reshape(len(counts), counts[0]).astype(np.int32))
        self.partners = [m[p] for m, p in zip(self.members, self.panel_of)]
        self.chamber_vertices = chamber_vertices
        self.vertex_types = vertex_types
        if chamber_vertices is not None:
            self.chamber_lookup = {tuple(int(x) for x in row): i for i, row in enumerate(chamber_vertices)}
        self._rows: dict[int, np.ndarray] = {}
        self._residues: dict[frozenset, np.ndarray] = {}

    def __repr__(self) -> str:
        return f"<Building {self.name}: {self.n_chambers} chambers, rank {self.system.rank}>"

    @property
    def rank(self) -> int:
        return self.system.rank

    @cached_property
    def panel_sizes(self) -> tuple[int, ...]:
        return tuple(m.shape[1] for m in self.members)

    @property
    def thick(self) -> bool:
        return min(self.panel_sizes) >= 3

    def panel(self, C: int, s: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.partners[s][C])

    # Weyl distance

    def _bfs_row(self, C: int, generator_order: Sequence[int] | None = None) -> np.ndarray:
        t = self.table
        order = list(range(self.rank)) if generator_order is None else list(generator_order)
        label = np.full(self.n_chambers, -1, dtype=np.int32)
        label[C] = 0
        frontier = np.array([C], dtype=np.int32)
        while len(frontier):
            targets, values = [], []
            for s in order:
                P = self.partners[s][frontier]
                cand = np.broadcast_to(t.rmul[label[frontier], s][:, None], P.shape)
                fresh = label[P] < 0
                targets.append(P[fresh])
                values.append(cand[fresh])
            targets = np.concatenate(targets)
            values = np.concatenate(values)
            if not len(targets):
                break
            uniq, first = np.unique(targets, return_index=True)
            chosen = values[first]
            back = np.searchsorted(uniq, targets)
            if (chosen[back] != values).any():
                raise InvalidBuilding(f"BFS labels from chamber {C} depend on the gallery")
            step = t.length[chosen] - t.length[label[frontier]].max()
            if (step != 1).any():
                raise InvalidBuilding(f"a BFS step from chamber {C} does not increase length")
            label[uniq] = chosen
            frontier = uniq.astype(np.int32)
        if (label < 0).any():
            raise DisconnectedChamberGraph(f"chamber graph disconnected from chamber {C}")
        return label

    def distance_row(self, C: int) -> np.ndarray:
        row = self._rows.get(C)
        if row is None:
            row = self._bfs_row(C)
            row.setflags(write=False)
            self._rows[C] = row
        return row

    @cached_property
    def distances(self) -> np.ndarray:
        """``distances[C, D]`` is the table index of delta(C, D)."""
        out = np.stack([self.distance_row(C) for C in range(self.n_chambers)])
        out.setflags(write=False)
        return out

    def weyl_distance(self, C: int, D: int) -> CanonicalElement:
        return self.table.elements[int(self.distance_row(C)[D])]

    @cached_property
    def opposite(self) -> np.ndarray:
        return self.distances == self.table.w0

    # residues

    def residue_labels(self, J: Iterable[int]) -> np.ndarray:
        """Label each chamber by the least chamber index of its J-residue."""
        J = frozenset(J)
        cached = self._residues.get(J)
        if cached is not None:
            return cached
        labels = np.arange(self.n_chambers, dtype=np.int32)
        changed = True
        while changed:
            changed = False
            for s in sorted(J):
                mins = labels[self.members[s]].min(axis=1)
                new = mins[self.panel_of[s]]
                if (new != labels).any():
                    labels = np.minimum(labels, new)
                    changed = True
        labels.setflags(write=False)
        self._residues[J] = labels
        return labels

    def residue_members(self, J: Iterable[int]) -> np.ndarray:
        """(n_chambers, size) array: the chambers of each chamber's J-residue."""
        labels = self.residue_labels(J)
        compact = _compact(labels)
        counts = np.bincount(compact)
        if counts.min() != counts.max():
            raise InvalidBuilding("J-residues have unequal sizes")
        order = np.argsort(compact, kind="stable")
        blocks = order.reshape(len(counts), counts[0]).astype(np.int32)
        return blocks[compact]

    def residue_of(self, C: int, J: Iterable[int], half: int = PLUS) -> Residue:
        J = frozenset(J)
        labels = self.residue_labels(J)
        members = tuple(int(x) for x in np.nonzero(labels == labels[C])[0])
        return Residue(J, members, half)

    def check_gate_property(self) -> CheckReport:
        report = CheckReport(self.name, "gate")
        t = self.table
        with report.timed():
            dist = self.distances
            for s in range(self.rank):
                members = self.members[s]
                d = dist[:, members]
                lens = t.length[d]
                gate_pos = lens.argmin(axis=2)
                minlen = lens.min(axis=2)
                unique = (lens == minlen[..., None]).sum(axis=2) == 1
                gate_label = np.take_along_axis(d, gate_pos[..., None], axis=2)[..., 0]
                expect = t.rmul[gate_label, s]
                is_gate = np.arange(members.shape[1])[None, None, :] == gate_pos[..., None]
                ok_others = (is_gate | (d == expect[..., None])).all(axis=2)
                ok = unique & ok_others
                report.total += ok.size
                for C, P in zip(*np.nonzero(~ok)):
                    report.fail(int(C), f"chamber {C} has no proper gate in {s}-panel {P}")
        return report


def building_from_geometry(geometry: IncidenceGeometry) -> Building:
    """Chambers are flags; generator 0 changes the point, generator 1 the line."""
    try:
        m = geometry.gonality
    except Exception:  # pragma: no cover - defensive
        m = None
    if m is None or not validate_generalized_polygon(geometry, m):
        raise InvalidPolygon(f"{geometry.name} is not a generalized polygon")
    flags = np.array(geometry.flags, dtype=np.int32)
    system = CoxeterSystem(CoxeterMatrix.from_rows([[1, m], [m, 1]]))
    vertices = np.stack([flags[:, 0], geometry.n_points + flags[:, 1]], axis=1)
    types = np.array([0] * geometry.n_points + [1] * geometry.n_lines, dtype=np.int8)
    b = Building(system, [flags[:, 1], flags[:, 0]], name=geometry.name,
                 chamber_vertices=vertices, vertex_types=types)
    b.geometry = geometry
    return b


class FlagComplex:
    """Points, lines and planes of PG(3, q)."""

    def __init__(self, q: int = 2):
        space = ProjectiveSpace(4, q)
        self.space = space
        self.q = q
        n = space.n_points
        lines = set()
        for a, b in itertools.combinations(range(n), 2):
            lines.add(tuple(sorted(space.span([a, b]))))
        self.lines = sorted(lines)
        self.planes = [space.hyperplane(v) for v in space.coords]
        self.n_points, self.n_lines, self.n_planes = n, len(self.lines), len(self.planes)
        self.line_index = {frozenset(l): i for i, l in enumerate(self.lines)}
        self.plane_index = {frozenset(p): i for i, p in enumerate(self.planes)}
        self.offsets = (0, n, n + self.n_lines)
        self.n_vertices = n + self.n_lines + self.n_planes
        chambers = []
        for j, line in enumerate(self.lines):
            for k, plane in enumerate(self.planes):
                if set(line) <= set(plane):
                    for p in line:
                        chambers.append((p, j, k))
        chambers.sort()
        self.chambers = chambers

    def vertex_sets(self) -> list[frozenset[int]]:
        out = [frozenset([p]) for p in range(self.n_points)]
        out += [frozenset(l) for l in self.lines]
        out += [frozenset(p) for p in self.planes]
        return out


def flag_building_rank3(q: int = 2) -> Building:
    if q != 2:
        raise InvalidGeometry("only q=2 is supported for the rank 3 flag building")
    fc = FlagComplex(q)
    ch = np.array(fc.chambers, dtype=np.int64)
    n_l, n_pl = fc.n_lines, fc.n_planes
    panel_of = [
        ch[:, 1] * n_pl + ch[:, 2],
        ch[:, 0] * n_pl + ch[:, 2],
        ch[:, 0] * n_l + ch[:, 1],
    ]
    vertices = np.stack([ch[:, 0], fc.offsets[1] + ch[:, 1], fc.offsets[2] + ch[:, 2]], axis=1).astype(np.int32)
    types = np.repeat(np.arange(3, dtype=np.int8), [fc.n_points, fc.n_lines, fc.n_planes])
    b = Building(CoxeterSystem(named_matrix("A3")), panel_of, name=f"A3({q})",
                 chamber_vertices=vertices, vertex_types=types)
    b.flag_complex = fc
    return b


def thin_building(system: CoxeterSystem) -> Building:
    """The Coxeter complex: chambers are group elements, delta(u, v) = u^-1 v."""
    if not system.is_spherical(range(system.rank)):
        raise NonSpherical("thin building needs a finite Coxeter group")
    t = system.table
    idx = np.arange(t.order)
    panel_of = [np.minimum(idx, t.rmul[:, s]) for s in range(system.rank)]
    return Building(system, panel_of, name="thin")


@dataclass
class BuildingAutomorphism:
    """A chamber permutation with its induced diagram automorphism.

    ``sigma`` acts on the types of the single building.  When
    ``half_swapping`` is set the map is read on a self-twin as
    ``C+ -> chambers[C]-`` and ``D- -> chambers[D]+``.
    """

    chambers: np.ndarray
    sigma: DiagramAutomorphism
    half_swapping: bool = True
    label: str = ""

    def twin_sigma(self, twin: "TwinModel") -> DiagramAutomorphism:
        kappa = twin.kappa
        return DiagramAutomorphism(tuple(kappa[self.sigma(s)] for s in range(len(kappa))))

    def is_involution(self) -> bool:
        c = self.chambers
        return bool(np.array_equal(c[c], np.arange(len(c))))


class TwinModel:
    """Two halves with an explicit codistance table.

    ``codist_pm[C, D]`` is the table index of codist(C+, D-), and
    ``codist_mp[D, C]`` that of codist(D-, C+).
    """

    def __init__(self, plus: Building, minus: Building, codist_pm: np.ndarray, codist_mp: np.ndarray,
                 kappa: Sequence[int], name: str = "twin"):
        self.plus, self.minus = plus, minus
        self.codist_pm = codist_pm
        self.codist_mp = codist_mp
        self.kappa = tuple(kappa)
        self.table = plus.table
        self.system = plus.system
        self.name = name

    def half(self, sign: int) -> Building:
        return self.plus if sign == PLUS else self.minus

    @property
    def n_chambers(self) -> int:
        return self.plus.n_chambers

    @cached_property
    def opposite(self) -> np.ndarray:
        """``opposite[C, D]``: C+ and D- are opposite."""
        return self.codist_pm == 0

    def codistance(self, x: tuple[int, int], y: tuple[int, int]) -> CanonicalElement:
        (hx, cx), (hy, cy) = x, y
        if hx == hy:
            raise ValueError("codistance needs chambers in opposite halves")
        idx = self.codist_pm[cx, cy] if hx == PLUS else self.codist_mp[cx, cy]
        return self.table.elements[int(idx)]

    def residue(self, sign: int, C: int, J: Iterable[int]) -> Residue:
        return self.half(sign).residue_of(C, J, half=sign)

    def with_codistance(self, codist_pm: np.ndarray, codist_mp: np.ndarray) -> "TwinModel":
        return TwinModel(self.plus, self.minus, codist_pm, codist_mp, self.kappa, self.name + "*")


def self_twin(building: Building, validate: bool = True) -> TwinModel:
    t = building.table
    kappa = [t.conjugate_by_w0(s) for s in range(building.rank)]
    minus = Building(building.system, [building.panel_of[kappa[s]] for s in range(building.rank)],
                     name=building.name + "-", chamber_vertices=building.chamber_vertices,
                     vertex_types=building.vertex_types)
    conj = t.mul[t.mul[t.w0, :], t.w0]
    minus.__dict__["distances"] = conj[building.distances]
    dist = building.distances
    codist_pm = t.mul[dist, t.w0]
    codist_mp = t.mul[t.w0, dist]
    twin = TwinModel(building, minus, codist_pm, codist_mp, kappa, name=building.name)
    if validate:
        report = verify_twin_axioms(twin)
        if not report.passed:
            raise AxiomValidationFailed(report.failures[0].witness)
    return twin


def is_opposite_residues(twin: TwinModel, R: Residue, Q: Residue) -> bool:
    if R.half == Q.half:
        raise ValueError("residues must lie in opposite halves")
    if R.half == MINUS:
        R, Q = Q, R
    block = twin.opposite[np.ix_(R.chambers, Q.chambers)]
    return bool(block.any(axis=1).all() and block.any(axis=0).all())


def _others(partners: np.ndarray) -> np.ndarray:
    """Panel partners of each chamber with the chamber itself removed."""
    n, k = partners.shape
    keep = partners != np.arange(n)[:, None]
    return partners[keep].reshape(n, k - 1)


def verify_twin_axioms(twin: TwinModel) -> CheckReport:
    """Exhaustive Tw1-Tw3 in the right-multiplication convention, plus
    equal twin types of opposite residues."""
    t = twin.table
    report = CheckReport(twin.name, "axioms")
    n = twin.n_chambers
    with report.timed():
        bad = t.inverse[twin.codist_pm] != twin.codist_mp.T
        report.total += n * n
        for C, D in zip(*np.nonzero(bad)):
            report.fail(int(C), f"Tw1: codist(C+{C}, D-{D}) inverse mismatch")
        for sign, cod, target in ((PLUS, twin.codist_pm, twin.minus), (MINUS, twin.codist_mp, twin.plus)):
            tag = "+" if sign == PLUS else "-"
            for s in range(twin.system.rank):
                others = _others(target.partners[s])
                ws = t.rmul[cod, s]
                shorter = t.length[ws] < t.length[cod]
                hits = np.zeros((n, n), dtype=bool)
                tw2 = np.ones((n, n), dtype=bool)
                for j in range(others.shape[1]):
                    got = cod[:, others[:, j]]
                    eq = got == ws
                    hits |= eq
                    tw2 &= eq | ~shorter
                report.total += 2 * n * n
                for C, D in zip(*np.nonzero(~tw2)):
                    report.fail(int(C), f"Tw2 eps={tag} C={C} D={D} s={s}")
                for C, D in zip(*np.nonzero(~hits)):
                    report.fail(int(C), f"Tw3 eps={tag} C={C} D={D} s={s}")
        opp = twin.opposite
        subsets = [frozenset(J) for r in range(twin.system.rank + 1)
                   for J in itertools.combinations(range(twin.system.rank), r)]
        for C in range(n):
            row = np.nonzero(opp[C])[0]
            if not len(row):
                report.fail(C, f"chamber {C}+ has no opposite chamber")
                continue
            D = int(row[0])
            for J in subsets:
                report.total += 1
                R = twin.residue(PLUS, C, J)
                Q = twin.residue(MINUS, D, J)
                if not is_opposite_residues(twin, R, Q):
                    report.fail(C, f"residue type {sorted(J)} of C+{C} not opposite the same type at D-{D}")
    return report


def lift_chamber_map(building: Building, vertex_map: np.ndarray) -> tuple[np.ndarray, DiagramAutomorphism]:
    """Chamber permutation and type permutation induced by a vertex permutation."""
    if building.chamber_vertices is None:
        raise IncompatibleBuilding(f"{building.name} has no vertex data")
    types = building.vertex_types
    vertex_map = np.asarray(vertex_map)
    if len(vertex_map) != len(types):
        raise IncompatibleBuilding("vertex map has the wrong degree")
    cv = building.chamber_vertices
    images = vertex_map[cv]
    sigma = []
    for s in range(building.rank):
        img_types = set(types[images[:, s]].tolist())
        if len(img_types) != 1:
            raise IncompatibleBuilding("map does not act on vertex types")
        sigma.append(img_types.pop())
    if sorted(sigma) != list(range(building.rank)):
        raise IncompatibleBuilding("map does not permute the types")
    reordered = np.empty_like(images)
    for s in range(building.rank):
        reordered[:, sigma[s]] = images[:, s]
    try:
        chambers = np.array([building.chamber_lookup[tuple(row)] for row in reordered.tolist()], dtype=np.int32)
    except KeyError:
        raise IncompatibleBuilding("map does not send chambers to chambers") from None
    return chambers, DiagramAutomorphism(tuple(int(x) for x in sigma))
