"""Finite point-line geometries: Desarguesian planes, the symplectic
quadrangle W(2), incidence graphs and parameter predicates.

Vertices of the incidence graph are numbered points first: point ``i`` is
vertex ``i`` and line ``j`` is vertex ``n_points + j``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidGeometry, NotPrimePower
from .fields import FiniteField, factor_prime_power, finite_field

ADMISSIBLE_GONALITIES = (2, 3, 4, 6, 8)


def _bits(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << int(i)
    return out


def _members(bits: int) -> tuple[int, ...]:
    out = []
    i = 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return tuple(out)


class IncidenceGeometry:
    """A finite point-line geometry with per-line point bit-sets."""

    def __init__(self, n_points: int, lines: Iterable[Iterable[int]], name: str = "geometry"):
        self.name = name
        self.n_points = int(n_points)
        self.line_points = tuple(tuple(sorted(int(p) for p in line)) for line in lines)
        self.lines = tuple(_bits(pts) for pts in self.line_points)
        self.n_lines = len(self.lines)
        self.n_vertices = self.n_points + self.n_lines
        for j, pts in enumerate(self.line_points):
            if any(not 0 <= p < self.n_points for p in pts):
                raise InvalidGeometry(f"line {j} has a point index out of range")
            if len(set(pts)) != len(pts):
                raise InvalidGeometry(f"line {j} repeats a point")
        if len(set(self.lines)) != self.n_lines:
            raise InvalidGeometry("repeated line")
        inc = np.zeros((self.n_points, self.n_lines), dtype=bool)
        for j, pts in enumerate(self.line_points):
            inc[list(pts), j] = True
        self.incidence = inc
        self.point_lines = tuple(tuple(int(j) for j in np.nonzero(inc[p])[0]) for p in range(self.n_points))
        self._line_by_bits = {b: j for j, b in enumerate(self.lines)}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}: {self.n_points} points, {self.n_lines} lines>"

    def line_vertex(self, j: int) -> int:
        return self.n_points + j

    def is_point(self, v: int) -> bool:
        return v < self.n_points

    def incident(self, p: int, j: int) -> bool:
        return bool(self.incidence[p, j])

    def line_index(self, points: Iterable[int]) -> int:
        return self._line_by_bits[_bits(points)]

    def neighbors(self, v: int) -> tuple[int, ...]:
        if v < self.n_points:
            return tuple(self.n_points + j for j in self.point_lines[v])
        return self.line_points[v - self.n_points]

    @cached_property
    def flags(self) -> tuple[tuple[int, int], ...]:
        return tuple((p, j) for p in range(self.n_points) for j in self.point_lines[p])

    @cached_property
    def parameters(self) -> tuple[int, int] | None:
        """(s, t): s+1 points per line and t+1 lines per point, when uniform."""
        per_line = {len(pts) for pts in self.line_points}
        per_point = {len(ls) for ls in self.point_lines}
        if len(per_line) != 1 or len(per_point) != 1:
            return None
        return per_line.pop() - 1, per_point.pop() - 1

    @property
    def thick(self) -> bool:
        params = self.parameters
        return params is not None and min(params) >= 2

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs BFS distances in the incidence graph; -1 when unreachable."""
        n = self.n_vertices
        dist = np.full((n, n), -1, dtype=np.int32)
        adj = [self.neighbors(v) for v in range(n)]
        for src in range(n):
            row = dist[src]
            row[src] = 0
            todo = deque([src])
            while todo:
                v = todo.popleft()
                for u in adj[v]:
                    if row[u] < 0:
                        row[u] = row[v] + 1
                        todo.append(u)
        return dist

    @cached_property
    def diameter(self) -> float:
        d = self.distance_matrix
        return math.inf if (d < 0).any() else int(d.max())

    @cached_property
    def girth(self) -> float:
        best = math.inf
        adj = [self.neighbors(v) for v in range(self.n_vertices)]
        for src in range(self.n_vertices):
            dist = {src: 0}
            parent = {src: -1}
            todo = deque([src])
            while todo:
                v = todo.popleft()
                for u in adj[v]:
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        parent[u] = v
                        todo.append(u)
                    elif parent[v] != u:
                        best = min(best, dist[u] + dist[v] + 1)
        return best

    @cached_property
    def gonality(self) -> int | None:
        g = self.girth
        if g == math.inf or g % 2:
            return None
        m = int(g) // 2
        return m if self.diameter == m else None

    def validate(self) -> "IncidenceGeometry":
        """Check that this is a generalized polygon with uniform parameters."""
        if self.n_points == 0 or self.n_lines == 0:
            raise InvalidGeometry("geometry has no points or no lines")
        if self.parameters is None:
            raise InvalidGeometry("non-uniform line sizes or point degrees")
        if self.diameter == math.inf:
            raise InvalidGeometry("incidence graph is disconnected")
        if self.gonality is None:
            raise InvalidGeometry(f"diameter {self.diameter} and girth {self.girth} do not match a generalized polygon")
        if self.thick and self.gonality not in ADMISSIBLE_GONALITIES:
            raise InvalidGeometry(f"thick finite generalized {self.gonality}-gon cannot exist")
        return self

    def to_dict(self) -> dict:
        return {"points": self.n_points, "lines": [list(pts) for pts in self.line_points]}


def incidence_distance(geometry: IncidenceGeometry, a: int, b: int) -> int:
    d = int(geometry.distance_matrix[a, b])
    return math.inf if d < 0 else d


def is_non_exotic(params: tuple[int, int], thick: bool, finite: bool) -> bool:
    s, t = params
    return bool(thick and finite and math.gcd(s, t) > 1)


def validate_generalized_polygon(geometry: IncidenceGeometry, m: int) -> bool:
    if geometry.diameter != m or geometry.girth != 2 * m:
        return False
    if geometry.thick and m not in ADMISSIBLE_GONALITIES:
        return False
    return True


def is_projective_plane(points: Iterable[int], lines: Iterable[Iterable[int]]) -> bool:
    """Two points on one line, two lines meet in one point, and a quadrangle exists."""
    pts = sorted(set(points))
    if len(pts) < 4:
        return False
    pos = {p: i for i, p in enumerate(pts)}
    rows = []
    for line in lines:
        line = set(line)
        if not line <= pos.keys():
            return False
        rows.append([pos[p] for p in line])
    if len(rows) < 2:
        return False
    inc = np.zeros((len(pts), len(rows)), dtype=np.int32)
    for j, members in enumerate(rows):
        inc[members, j] = 1
    pp = inc @ inc.T
    ll = inc.T @ inc
    np.fill_diagonal(pp, 1)
    np.fill_diagonal(ll, 1)
    if (pp != 1).any() or (ll != 1).any():
        return False
    line_bits = [_bits(r) for r in rows]
    join = {}
    for j, members in enumerate(rows):
        for a, b in itertools.combinations(members, 2):
            join[a, b] = join[b, a] = line_bits[j]
    everything = (1 << len(pts)) - 1
    n = len(pts)
    for a, b in itertools.combinations(range(n), 2):
        ab = join[a, b]
        for c in range(n):
            if ab >> c & 1:
                continue
            rest = everything & ~(ab | join[a, c] | join[b, c])
            if rest:
                return True
    return False


def square_free_part(q: int) -> int:
    """q' with q = a^2 q' and q' square-free; 0 when q is a perfect square."""
    if q < 1:
        raise ValueError("q must be positive")
    out, r, d = 1, q, 2
    while d * d <= r:
        e = 0
        while r % d == 0:
            r //= d
            e += 1
        if e % 2:
            out *= d
        d += 1
    if r > 1:
        out *= r
    return 0 if out == 1 else out


# Desarguesian geometry

class ProjectiveSpace:
    """Points of PG(d-1, q) as normalized vectors (last nonzero coordinate 1)."""

    def __init__(self, dim: int, q: int):
        self.dim = dim
        self.field: FiniteField = finite_field(q)
        self.q = q
        F = self.field
        vecs = []
        for v in itertools.product(range(q), repeat=dim):
            nz = [c for c in v if c]
            if nz and v[max(i for i, c in enumerate(v) if c)] == 1:
                vecs.append(v)
        vecs.sort()
        self.coords = np.array(vecs, dtype=np.int16)
        self.index = {v: i for i, v in enumerate(vecs)}
        self.n_points = len(vecs)
        self._F = F

    def normalize(self, v: Sequence[int]) -> tuple[int, ...]:
        F = self._F
        last = max((i for i, c in enumerate(v) if c), default=None)
        if last is None:
            raise ValueError("zero vector has no projective point")
        c = int(F.inv[v[last]])
        return tuple(int(F.mul[c, x]) for x in v)

    def point(self, v: Sequence[int]) -> int:
        return self.index[self.normalize(v)]

    def dot(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix of bilinear products a_i . b_j over the field."""
        F = self._F
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        out = np.zeros((a.shape[0], b.shape[0]), dtype=np.int16)
        for k in range(self.dim):
            out = F.add[out, F.mul[a[:, k][:, None], b[:, k][None, :]]]
        return out

    def apply(self, matrix: Sequence[Sequence[int]], frobenius: int = 0) -> np.ndarray:
        """Point permutation of x -> M (x^phi), phi the frobenius power."""
        F = self._F
        M = np.asarray(matrix, dtype=np.int16)
        X = self.coords.copy()
        for _ in range(frobenius):
            X = F.frobenius[X]
        images = np.zeros_like(X)
        for r in range(self.dim):
            acc = np.zeros(len(X), dtype=np.int16)
            for c in range(self.dim):
                acc = F.add[acc, F.mul[M[r, c], X[:, c]]]
            images[:, r] = acc
        perm = np.empty(self.n_points, dtype=np.int32)
        for i, v in enumerate(images):
            perm[i] = self.point(tuple(int(x) for x in v))
        if len(set(perm.tolist())) != self.n_points:
            raise ValueError("matrix is singular")
        return perm

    def hyperplane(self, a: Sequence[int]) -> tuple[int, ...]:
        vals = self.dot(self.coords, np.asarray([a], dtype=np.int16))[:, 0]
        return tuple(int(i) for i in np.nonzero(vals == 0)[0])

    def span(self, point_ids: Iterable[int]) -> frozenset[int]:
        F = self._F
        basis = [self.coords[i] for i in point_ids]
        out = set()
        for coeffs in itertools.product(range(self.q), repeat=len(basis)):
            if not any(coeffs):
                continue
            v = np.zeros(self.dim, dtype=np.int16)
            for c, b in zip(coeffs, basis):
                v = F.add[v, F.mul[c, b]]
            if v.any():
                out.add(self.point(tuple(int(x) for x in v)))
        return frozenset(out)


class ProjectivePlane(IncidenceGeometry):
    """PG(2, q); lines carry the same normalized coordinates as points."""

    def __init__(self, q: int):
        space = ProjectiveSpace(3, q)
        self.space = space
        self.q = q
        self.field = space.field
        zero = space.dot(space.coords, space.coords) == 0
        lines = [np.nonzero(zero[:, j])[0] for j in range(space.n_points)]
        super().__init__(space.n_points, lines, name=f"PG(2,{q})")
        self.order = q
        join = np.full((self.n_points, self.n_points), -1, dtype=np.int32)
        for j, pts in enumerate(self.line_points):
            idx = np.array(pts)
            join[np.ix_(idx, idx)] = j
        np.fill_diagonal(join, -1)
        self.join = join
        meet = np.full((self.n_lines, self.n_lines), -1, dtype=np.int32)
        for p, ls in enumerate(self.point_lines):
            idx = np.array(ls)
            meet[np.ix_(idx, idx)] = p
        np.fill_diagonal(meet, -1)
        self.meet = meet

    @property
    def coords(self) -> np.ndarray:
        return self.space.coords

    def collineation_images(self, matrix, frobenius: int = 0) -> np.ndarray:
        """Vertex permutation (points then lines) of the semilinear map x -> M x^phi."""
        pts = self.space.apply(matrix, frobenius)
        a = np.array([pts_[0] for pts_ in self.line_points])
        b = np.array([pts_[1] for pts_ in self.line_points])
        lines = self.join[pts[a], pts[b]]
        return np.concatenate([pts, self.n_points + lines]).astype(np.int32)


@lru_cache(maxsize=None)
def projective_plane(q: int) -> ProjectivePlane:
    factor_prime_power(q)
    return ProjectivePlane(q)


def symplectic_form(x, y) -> int:
    """x0 y1 + x1 y0 + x2 y3 + x3 y2 over GF(2)."""
    return (x[0] * y[1] + x[1] * y[0] + x[2] * y[3] + x[3] * y[2]) % 2


class SymplecticQuadrangle(IncidenceGeometry):
    """W(2): points of PG(3,2) and its totally isotropic lines."""

    def __init__(self):
        space = ProjectiveSpace(4, 2)
        self.space = space
        coords = [tuple(int(c) for c in v) for v in space.coords]
        lines = set()
        for a, b in itertools.combinations(range(space.n_points), 2):
            if symplectic_form(coords[a], coords[b]) == 0:
                lines.add(tuple(sorted(space.span([a, b]))))
        super().__init__(space.n_points, sorted(lines), name="W(2)")

    def collineation_images(self, matrix) -> np.ndarray:
        pts = self.space.apply(matrix)
        lines = [self.line_index(pts[list(line)]) for line in self.line_points]
        return np.concatenate([pts, self.n_points + np.array(lines)]).astype(np.int32)


@lru_cache(maxsize=None)
def symplectic_quadrangle() -> SymplecticQuadrangle:
    return SymplecticQuadrangle()


def load_geometry(path: str | Path) -> IncidenceGeometry:
    data = json.loads(Path(path).read_text())
    return geometry_from_dict(data)


def geometry_from_dict(data: dict, name: str = "file") -> IncidenceGeometry:
    if not isinstance(data, dict) or "points" not in data or "lines" not in data:
        raise InvalidGeometry("geometry document needs 'points' and 'lines'")
    n = data["points"]
    if not isinstance(n, int) or n < 1:
        raise InvalidGeometry("'points' must be a positive integer")
    lines = data["lines"]
    if not isinstance(lines, list) or not all(isinstance(l, list) for l in lines):
        raise InvalidGeometry("'lines' must be an array of arrays")
    for line in lines:
        if not all(isinstance(p, int) for p in line):
            raise InvalidGeometry("line entries must be integers")
    return IncidenceGeometry(n, lines, name=name).validate()


def dump_geometry(geometry: IncidenceGeometry, path: str | Path) -> None:
    Path(path).write_text(json.dumps(geometry.to_dict()))


def plane_info(q: int) -> dict:
    if not isinstance(q, int):
        raise NotPrimePower(f"{q!r} is not a prime power")
    plane = projective_plane(q)
    s, t = plane.parameters
    return {
        "q": q,
        "points": plane.n_points,
        "lines": plane.n_lines,
        "flags": len(plane.flags),
        "parameters": [s, t],
        "gonality": plane.gonality,
    }
