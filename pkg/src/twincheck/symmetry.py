"""Collineation and duality groups of the small geometries, absolute points,
order decompositions and the classification of involutory collineations.

Maps are permutations of the incidence-graph vertices (points then lines,
or points, lines, planes for PG(3,2)).  A permutation ``a`` is composed with
``b`` as "a then b", i.e. ``b[a]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .chambers import Building, BuildingAutomorphism, FlagComplex, lift_chamber_map
from .coxeter import DiagramAutomorphism
from .errors import ClassificationFailed, IncompatibleBuilding, NotApplicable, NotInvolution
from .geometry import (
    IncidenceGeometry,
    ProjectivePlane,
    is_projective_plane,
    projective_plane,
    square_free_part,
    symplectic_form,
    symplectic_quadrangle,
)

COLLINEATION, DUALITY = "collineation", "duality"


def _dtype(degree: int):
    return np.uint8 if degree <= 256 else np.int16


@dataclass(frozen=True, eq=False)
class GeometryMap:
    """A collineation or duality of a point-line geometry."""

    perm: np.ndarray
    n_points: int

    def __post_init__(self):
        object.__setattr__(self, "perm", np.asarray(self.perm, dtype=np.int32))

    def __eq__(self, other) -> bool:
        return isinstance(other, GeometryMap) and np.array_equal(self.perm, other.perm)

    def __hash__(self) -> int:
        return hash(self.perm.tobytes())

    @property
    def kind(self) -> str:
        return DUALITY if self.perm[0] >= self.n_points else COLLINEATION

    @property
    def point_images(self) -> np.ndarray:
        return self.perm[: self.n_points]

    @property
    def line_images(self) -> np.ndarray:
        return self.perm[self.n_points:]

    def then(self, other: "GeometryMap") -> "GeometryMap":
        return GeometryMap(other.perm[self.perm], self.n_points)

    def power(self, e: int) -> "GeometryMap":
        result = np.arange(len(self.perm))
        base = self.perm
        while e:
            if e & 1:
                result = base[result]
            base = base[base]
            e >>= 1
        return GeometryMap(result, self.n_points)

    def inverse(self) -> "GeometryMap":
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(len(self.perm))
        return GeometryMap(inv, self.n_points)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(len(self.perm))))

    def respects(self, geometry: IncidenceGeometry) -> bool:
        """Incidence preserved (collineation) or exchanged (duality)."""
        P = geometry.n_points
        if len(self.perm) != geometry.n_vertices or sorted(self.perm.tolist()) != list(range(geometry.n_vertices)):
            return False
        kind = self.kind
        for p, j in geometry.flags:
            a, b = int(self.perm[p]), int(self.perm[P + j])
            if kind == COLLINEATION:
                if a >= P or b < P or not geometry.incident(a, b - P):
                    return False
            elif a < P or b >= P or not geometry.incident(b, a - P):
                return False
        return True


@dataclass
class GeneratedGroup:
    elements: np.ndarray
    generators: list[np.ndarray]

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def degree(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def _index(self) -> dict[bytes, int]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            width = self.elements.shape[1] * self.elements.itemsize
            buf = np.ascontiguousarray(self.elements).tobytes()
            idx = {buf[i * width:(i + 1) * width]: i for i in range(len(self.elements))}
            self.__dict__["_idx"] = idx
        return idx

    def index_of(self, perm: np.ndarray) -> int | None:
        return self._index.get(np.asarray(perm, dtype=self.elements.dtype).tobytes())

    def __contains__(self, perm) -> bool:
        return self.index_of(perm) is not None

    def to_lines(self) -> list[str]:
        """One element per line as a space separated image array."""
        return [" ".join(str(int(x)) for x in row) for row in self.elements]

    def export(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.to_lines()) + "\n")


def close_group(generators: Sequence[np.ndarray], degree: int | None = None) -> GeneratedGroup:
    """Breadth-first closure of permutation generators; identity first."""
    gens = [np.asarray(g) for g in generators]
    degree = len(gens[0]) if degree is None else degree
    dtype = _dtype(degree)
    gens = [g.astype(dtype) for g in gens]
    identity = np.arange(degree, dtype=dtype)
    width = degree * np.dtype(dtype).itemsize
    seen = {identity.tobytes()}
    chunks = [identity[None, :]]
    frontier = identity[None, :]
    while len(frontier):
        cand = np.concatenate([g[frontier] for g in gens])
        buf = cand.tobytes()
        fresh = []
        for i in range(len(cand)):
            key = buf[i * width:(i + 1) * width]
            if key not in seen:
                seen.add(key)
                fresh.append(i)
        frontier = cand[fresh]
        if len(frontier):
            chunks.append(frontier)
    return GeneratedGroup(np.concatenate(chunks), gens)


def conjugacy_class(x: np.ndarray, generators: Sequence[np.ndarray]) -> np.ndarray:
    """All conjugates g^-1 x g of ``x`` under the group generated by ``generators``."""
    x = np.asarray(x)
    dtype = x.dtype
    pairs = []
    for g in generators:
        g = np.asarray(g).astype(dtype)
        ginv = np.empty_like(g)
        ginv[g] = np.arange(len(g), dtype=dtype)
        pairs.append((g, ginv))
    width = x.size * x.itemsize
    seen = {x.tobytes()}
    chunks = [x[None, :]]
    frontier = x[None, :]
    while len(frontier):
        cand = np.concatenate([g[frontier[:, ginv]] for g, ginv in pairs])
        buf = cand.tobytes()
        fresh = []
        for i in range(len(cand)):
            key = buf[i * width:(i + 1) * width]
            if key not in seen:
                seen.add(key)
                fresh.append(i)
        frontier = cand[fresh]
        if len(frontier):
            chunks.append(frontier)
    return np.concatenate(chunks)


# projective planes

def plane_generators(plane: ProjectivePlane) -> list[np.ndarray]:
    """Elementary transvections, a primitive diagonal map and the frobenius."""
    F = plane.field
    gens = []
    for i in range(3):
        for j in range(3):
            if i != j:
                M = np.eye(3, dtype=np.int16)
                M[i, j] = 1
                gens.append(plane.collineation_images(M))
    if F.q > 2:
        gens.append(plane.collineation_images(np.diag([F.primitive, 1, 1])))
    if F.k > 1:
        gens.append(plane.collineation_images(np.eye(3, dtype=np.int16), frobenius=1))
    return gens


@lru_cache(maxsize=None)
def collineation_group(q: int) -> GeneratedGroup:
    """PGammaL(3, q) acting on points and lines of PG(2, q)."""
    return close_group(plane_generators(projective_plane(q)))


def expected_collineation_order(q: int) -> int:
    plane = projective_plane(q)
    return (q**3 - 1) * (q**3 - q) * (q**3 - q**2) // (q - 1) * plane.field.k


def standard_correlation(plane: IncidenceGeometry) -> GeometryMap:
    """Point <v> to the line {x : x.v = 0}, and back."""
    if not isinstance(plane, ProjectivePlane):
        raise IncompatibleBuilding("standard correlation needs a coordinatized plane")
    P = plane.n_points
    perm = np.concatenate([P + np.arange(P), np.arange(P)])
    return GeometryMap(perm, P)


def duality_batches(plane: ProjectivePlane, group: GeneratedGroup | None = None,
                    batch: int = 8192) -> Iterator[tuple[int, np.ndarray]]:
    """(offset, array) chunks of the coset group * correlation."""
    group = collineation_group(plane.q) if group is None else group
    corr = standard_correlation(plane).perm.astype(group.elements.dtype)
    for start in range(0, group.order, batch):
        yield start, corr[group.elements[start:start + batch]]


def all_dualities(plane: ProjectivePlane, group: GeneratedGroup | None = None) -> Iterator[GeometryMap]:
    for _, chunk in duality_batches(plane, group):
        for row in chunk:
            yield GeometryMap(row, plane.n_points)


def map_order(m: GeometryMap | np.ndarray) -> int:
    perm = m.perm if isinstance(m, GeometryMap) else np.asarray(m)
    return int(kernels.perm_orders(np.asarray(perm)[None, :])[0])


def absolute_points(plane: IncidenceGeometry, duality: GeometryMap) -> tuple[int, ...]:
    if duality.kind != DUALITY:
        raise ValueError("absolute points are defined for dualities")
    P = plane.n_points
    lines = duality.point_images - P
    hit = plane.incidence[np.arange(P), lines]
    return tuple(int(p) for p in np.nonzero(hit)[0])


def fixed_flags(plane: IncidenceGeometry, m: GeometryMap) -> list[tuple[int, int]]:
    """Flags {p, L} mapped to themselves as sets."""
    P = plane.n_points
    out = []
    for p, j in plane.flags:
        a, b = int(m.perm[p]), int(m.perm[P + j])
        if m.kind == COLLINEATION:
            if a == p and b == P + j:
                out.append((p, j))
        elif a == P + j and b == p:
            out.append((p, j))
    return out


# order decomposition

def _smallest_odd_prime(n: int) -> int | None:
    d = 3
    while n > 1 and n % 2 == 0:
        n //= 2
    while d * d <= n:
        if n % d == 0:
            return d
        d += 2
    return n if n > 1 else None


@dataclass
class OrderDecomposition:
    n: int
    q_prime: int
    r: int
    involution: GeometryMap
    p: int | None = None
    h: int | None = None
    cofactor: int | None = None
    p_part: GeometryMap | None = None

    @property
    def case(self) -> int:
        """1: q'r even and q even; 2: q'r even and q odd; 3: q'r odd."""
        if (self.q_prime * self.r) % 2:
            return 3
        return 1 if self.q_prime % 2 == 0 else 2


def order_decomposition(duality: GeometryMap, q: int) -> OrderDecomposition:
    n = map_order(duality)
    qp = square_free_part(q)
    if qp == 0:
        raise NotApplicable(f"q={q} is a perfect square")
    if n % qp:
        raise NotApplicable(f"q'={qp} does not divide the order {n}")
    if n % (2 * qp):
        raise NotApplicable(f"order {n} is not of the form 2 q' r")
    r = n // (2 * qp)
    inv = duality.power(qp * r)
    assert map_order(inv) == 2
    out = OrderDecomposition(n=n, q_prime=qp, r=r, involution=inv)
    p = _smallest_odd_prime(qp)
    if p is not None:
        h, cof = 0, n
        while cof % p == 0:
            cof //= p
            h += 1
        out.p, out.h, out.cofactor = p, h, cof
        out.p_part = duality.power(cof)
        assert map_order(out.p_part) == p**h
    return out


# involutions

@dataclass
class Elation:
    center: int
    axis: int


@dataclass
class Homology:
    center: int
    axis: int


@dataclass
class Baer:
    points: tuple[int, ...]


InvolutionClass = Elation | Homology | Baer


@dataclass
class FixedSubstructure:
    points: tuple[int, ...]
    lines: tuple[int, ...]
    is_plane: bool


def fixed_substructure(plane: IncidenceGeometry, collineation: GeometryMap) -> FixedSubstructure:
    """Fixed points and the lines meeting them in at least two points."""
    if collineation.kind != COLLINEATION:
        raise ValueError("fixed substructure needs a collineation")
    P = plane.n_points
    perm = collineation.perm
    order = map_order(collineation)
    seen = np.zeros(len(perm), dtype=bool)
    for v in range(len(perm)):
        if not seen[v]:
            size, x = 0, v
            while not seen[x]:
                seen[x] = True
                x = int(perm[x])
                size += 1
            if order % size:
                raise AssertionError(f"orbit of size {size} does not divide the order {order}")
    fixed = np.nonzero(perm[:P] == np.arange(P))[0]
    mask = np.zeros(P, dtype=bool)
    mask[fixed] = True
    counts = plane.incidence[mask].sum(axis=0)
    lines = np.nonzero(counts >= 2)[0]
    fixed_pts = tuple(int(p) for p in fixed)
    line_sets = [[p for p in plane.line_points[j] if mask[p]] for j in lines]
    return FixedSubstructure(fixed_pts, tuple(int(j) for j in lines), is_projective_plane(fixed_pts, line_sets))


def classify_involutory_collineation(plane: ProjectivePlane, m: GeometryMap) -> InvolutionClass:
    if m.kind != COLLINEATION or map_order(m) != 2:
        raise NotInvolution("need a collineation of order 2")
    P = plane.n_points
    q = plane.q
    fixed_pts = m.perm[:P] == np.arange(P)
    fixed_lines = m.perm[P:] == P + np.arange(plane.n_lines)
    found: list[InvolutionClass] = []
    axes = [j for j in np.nonzero(fixed_lines)[0] if fixed_pts[list(plane.line_points[j])].all()]
    centers = [p for p in np.nonzero(fixed_pts)[0] if fixed_lines[list(plane.point_lines[p])].all()]
    if len(axes) == 1 and len(centers) == 1:
        c, a = int(centers[0]), int(axes[0])
        found.append(Elation(c, a) if plane.incident(c, a) else Homology(c, a))
        expected = q + 1 if plane.incident(c, a) else q + 2
        if fixed_pts.sum() != expected:
            raise ClassificationFailed(f"central involution fixes {fixed_pts.sum()} points, expected {expected}")
    sub = fixed_substructure(plane, m)
    root = math.isqrt(q)
    if sub.is_plane and root * root == q and len(sub.points) == q + root + 1:
        found.append(Baer(sub.points))
    if len(found) != 1:
        raise ClassificationFailed(f"involution matches {len(found)} classes")
    return found[0]


def _stabilizer_generators(plane: ProjectivePlane) -> list[np.ndarray]:
    """Antiflag ((0,0,1), z=0) stabilizer for odd q; flag ((1,0,0), z=0) stabilizer for even q."""
    F = plane.field
    w = F.primitive
    if plane.q % 2:
        mats = [[[1, 1, 0], [0, 1, 0], [0, 0, 1]], [[1, 0, 0], [1, 1, 0], [0, 0, 1]], [[w, 0, 0], [0, 1, 0], [0, 0, 1]]]
    else:
        mats = [np.eye(3, dtype=int) for _ in range(5)]
        mats[0][0, 1] = mats[1][0, 2] = mats[2][1, 2] = 1
        mats[3][0, 0] = w
        mats[4][1, 1] = w
    gens = [plane.collineation_images(np.array(M)) for M in mats]
    if F.k > 1:
        gens.append(plane.collineation_images(np.eye(3, dtype=np.int16), frobenius=1))
    return gens


@lru_cache(maxsize=None)
def involutory_collineations(q: int, method: str = "auto") -> np.ndarray:
    """All collineations of order 2 of PG(2, q) as vertex permutations.

    ``method="group"`` filters the materialized group.  ``"stabilizer"``
    conjugates the involutions of a flag (q even) or antiflag (q odd)
    stabilizer: an involution fixes a point (q^2+q+1 is odd), and then a
    line through it when q is even (q+1 lines) or off it when q is odd
    (q^2 lines), so every involution is conjugate into that stabilizer.
    """
    plane = projective_plane(q)
    if method == "auto":
        method = "group" if q <= 5 else "stabilizer"
    if method == "group":
        els = collineation_group(q).elements
        square = np.take_along_axis(els, els.astype(np.int64), axis=1)
        ident = np.arange(els.shape[1])
        mask = (square == ident).all(axis=1) & ~(els == ident).all(axis=1)
        return els[mask]
    stab = close_group(_stabilizer_generators(plane))
    els = stab.elements
    ident = np.arange(els.shape[1])
    square = np.take_along_axis(els, els.astype(np.int64), axis=1)
    local = els[(square == ident).all(axis=1) & ~(els == ident).all(axis=1)]
    gens = [g.astype(els.dtype) for g in plane_generators(plane)]
    width = els.shape[1] * els.itemsize
    seen: set[bytes] = set()
    out = []
    for x in local:
        if x.tobytes() in seen:
            continue
        cls = conjugacy_class(x, gens)
        buf = cls.tobytes()
        seen.update(buf[i * width:(i + 1) * width] for i in range(len(cls)))
        out.append(cls)
    return np.concatenate(out)


# the quadrangle and PG(3,2)

@lru_cache(maxsize=None)
def quadrangle_collineations() -> GeneratedGroup:
    """Sp(4,2) acting on W(2), generated by symplectic transvections."""
    gq = symplectic_quadrangle()
    coords = [tuple(int(c) for c in v) for v in gq.space.coords]
    gens = []
    for a in coords:
        M = np.zeros((4, 4), dtype=np.int16)
        for c in range(4):
            e = [0, 0, 0, 0]
            e[c] = 1
            coef = symplectic_form(e, a)
            M[:, c] = [(e[i] + coef * a[i]) % 2 for i in range(4)]
        gens.append(gq.collineation_images(M))
    return close_group(gens)


@lru_cache(maxsize=None)
def quadrangle_duality() -> GeometryMap:
    """A duality of W(2), found as an incidence-graph isomorphism swapping the kinds."""
    import networkx as nx
    from networkx.algorithms.isomorphism import GraphMatcher

    gq = symplectic_quadrangle()
    G = nx.Graph()
    for v in range(gq.n_vertices):
        G.add_node(v, point=gq.is_point(v))
    for p, j in gq.flags:
        G.add_edge(p, gq.n_points + j)
    matcher = GraphMatcher(G, G, node_match=lambda a, b: a["point"] != b["point"])
    mapping = next(matcher.isomorphisms_iter())
    perm = np.array([mapping[v] for v in range(gq.n_vertices)], dtype=np.int32)
    return GeometryMap(perm, gq.n_points)


@lru_cache(maxsize=None)
def quadrangle_maps() -> np.ndarray:
    """The 720 collineations followed by the 720 dualities of W(2)."""
    cols = quadrangle_collineations().elements
    d = quadrangle_duality().perm.astype(cols.dtype)
    return np.concatenate([cols, d[cols]])


@lru_cache(maxsize=None)
def flag_complex(q: int = 2) -> FlagComplex:
    return FlagComplex(q)


def _solid_collineation(fc: FlagComplex, M) -> np.ndarray:
    pts = fc.space.apply(M)
    vs = fc.vertex_sets()
    out = np.empty(fc.n_vertices, dtype=np.int32)
    out[: fc.n_points] = pts
    for j, line in enumerate(fc.lines):
        out[fc.offsets[1] + j] = fc.offsets[1] + fc.line_index[frozenset(int(pts[p]) for p in line)]
    for k, plane in enumerate(fc.planes):
        out[fc.offsets[2] + k] = fc.offsets[2] + fc.plane_index[frozenset(int(pts[p]) for p in plane)]
    return out


def solid_correlation(fc: FlagComplex) -> np.ndarray:
    """U -> U^perp for the dot product on GF(q)^4."""
    out = np.empty(fc.n_vertices, dtype=np.int32)
    n = fc.n_points
    out[:n] = fc.offsets[2] + np.arange(n)
    out[fc.offsets[2]:] = np.arange(n)
    plane_sets = [set(p) for p in fc.planes]
    for j, line in enumerate(fc.lines):
        perp = set.intersection(*(plane_sets[p] for p in line))
        out[fc.offsets[1] + j] = fc.offsets[1] + fc.line_index[frozenset(perp)]
    return out


@lru_cache(maxsize=None)
def rank3_collineations(q: int = 2) -> GeneratedGroup:
    fc = flag_complex(q)
    gens = []
    for i in range(4):
        for j in range(4):
            if i != j:
                M = np.eye(4, dtype=np.int16)
                M[i, j] = 1
                gens.append(_solid_collineation(fc, M))
    return close_group(gens)


@lru_cache(maxsize=None)
def rank3_automorphisms(q: int = 2) -> np.ndarray:
    """Type-preserving maps followed by the correlation coset."""
    cols = rank3_collineations(q).elements
    d = solid_correlation(flag_complex(q)).astype(cols.dtype)
    return np.concatenate([cols, d[cols]])


# lifting to chambers

def lift_to_building(m: GeometryMap | np.ndarray, building: Building) -> BuildingAutomorphism:
    perm = m.perm if isinstance(m, GeometryMap) else np.asarray(m)
    chambers, sigma = lift_chamber_map(building, perm)
    return BuildingAutomorphism(chambers, sigma, half_swapping=True)


def lift_batch(building: Building, vertex_maps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chamber permutations and per-map type permutations for many vertex maps."""
    cv = building.chamber_vertices
    types = building.vertex_types
    if cv is None:
        raise IncompatibleBuilding(f"{building.name} has no vertex data")
    V = len(types)
    r = building.rank
    code = building.__dict__.get("_chamber_code")
    if code is None:
        code = np.full(V**r, -1, dtype=np.int32)
        keys = np.zeros(len(cv), dtype=np.int64)
        for t in range(r):
            keys = keys * V + cv[:, t]
        code[keys] = np.arange(len(cv))
        building.__dict__["_chamber_code"] = code
    maps = np.asarray(vertex_maps).astype(np.int64)
    images = maps[:, cv]  # (B, n, r)
    sig = types[images[:, 0, :]].astype(np.int64)  # sigma(t) for each map
    keys = np.zeros(images.shape[:2], dtype=np.int64)
    order = np.argsort(sig, axis=1)  # order[:, t'] = type t with sigma(t) = t'
    for tp in range(r):
        col = np.take_along_axis(images, order[:, None, tp:tp + 1].repeat(images.shape[1], axis=1), axis=2)[..., 0]
        keys = keys * V + col
    chambers = code[keys]
    if (chambers < 0).any():
        raise IncompatibleBuilding("a map does not send chambers to chambers")
    return chambers.astype(np.int32), sig.astype(np.int32)
