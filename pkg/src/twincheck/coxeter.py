"""Coxeter systems and their word problem.

Elements are stored as canonical words: the lexicographically least reduced
word of the element, with generators ordered by index.  Reduction walks the
word letter by letter and uses the braid-move closure of the current reduced
word to decide whether the next letter is a right descent (Tits).
"""

from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidCoxeterMatrix,
    InvalidWord,
    NonSphericalParabolic,
    PreconditionViolated,
    UnsupportedType,
)

INF = math.inf

Word = tuple[int, ...]

LETTERS = "stuvwxyz"


@dataclass(frozen=True)
class CoxeterMatrix:
    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n == 0:
            raise InvalidCoxeterMatrix("empty Coxeter matrix")
        for i, row in enumerate(self.entries):
            if len(row) != n:
                raise InvalidCoxeterMatrix(f"row {i} has {len(row)} entries, expected {n}")
            for j, m in enumerate(row):
                if m != INF and (m != int(m) or m < 1):
                    raise InvalidCoxeterMatrix(f"bad bond order m({i},{j})={m}")
                if i == j and m != 1:
                    raise InvalidCoxeterMatrix(f"diagonal entry m({i},{i})={m} must be 1")
                if i != j and m < 2:
                    raise InvalidCoxeterMatrix(f"off-diagonal m({i},{j})={m} must be >= 2")
                if m != self.entries[j][i]:
                    raise InvalidCoxeterMatrix(f"matrix not symmetric at ({i},{j})")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[float]]) -> "CoxeterMatrix":
        return cls(tuple(tuple(INF if m == INF else int(m) for m in row) for row in rows))

    @property
    def rank(self) -> int:
        return len(self.entries)

    def m(self, s: int, t: int) -> float:
        return self.entries[s][t]

    def to_text(self) -> str:
        lines = [str(self.rank)]
        for row in self.entries:
            lines.append(" ".join("0" if m == INF else str(int(m)) for m in row))
        return "\n".join(lines) + "\n"


def load_matrix(path: str | Path) -> CoxeterMatrix:
    """Read a matrix file: rank on the first line, then rows; 0 encodes infinity."""
    text = Path(path).read_text()
    return parse_matrix(text)


def parse_matrix(text: str) -> CoxeterMatrix:
    tokens = text.split()
    if not tokens:
        raise InvalidCoxeterMatrix("empty matrix file")
    try:
        values = [int(tok) for tok in tokens]
    except ValueError as exc:
        raise InvalidCoxeterMatrix(f"non-integer entry in matrix file: {exc}") from None
    n = values[0]
    if n < 1 or len(values) != 1 + n * n:
        raise InvalidCoxeterMatrix(f"expected {n * n} entries after rank {n}, got {len(values) - 1}")
    body = values[1:]
    rows = [[INF if v == 0 else v for v in body[i * n:(i + 1) * n]] for i in range(n)]
    return CoxeterMatrix.from_rows(rows)


def named_matrix(name: str) -> CoxeterMatrix:
    """Matrices for A_n, B_n, I2(m) and affine A~2 (written ``A~2``)."""
    name = name.strip()
    if name in ("A~2", "~A2", "At2"):
        return CoxeterMatrix.from_rows([[1, 3, 3], [3, 1, 3], [3, 3, 1]])
    m = re.fullmatch(r"I2\((\d+|inf)\)", name)
    if m:
        bond = INF if m.group(1) == "inf" else int(m.group(1))
        return CoxeterMatrix.from_rows([[1, bond], [bond, 1]])
    m = re.fullmatch(r"([AB])(\d+)", name)
    if not m:
        raise UnsupportedType(f"unknown Coxeter type {name!r}")
    kind, n = m.group(1), int(m.group(2))
    rows = [[1 if i == j else 2 for j in range(n)] for i in range(n)]
    for i in range(n - 1):
        rows[i][i + 1] = rows[i + 1][i] = 3
    if kind == "B":
        if n < 2:
            raise UnsupportedType("B_n needs n >= 2")
        rows[n - 2][n - 1] = rows[n - 1][n - 2] = 4
    return CoxeterMatrix.from_rows(rows)


@dataclass(frozen=True, order=True)
class CanonicalElement:
    word: Word = ()

    @property
    def length(self) -> int:
        return len(self.word)

    def is_identity(self) -> bool:
        return not self.word

    def __str__(self) -> str:
        return format_word(self.word)


IDENTITY = CanonicalElement(())


@dataclass(frozen=True)
class DiagramAutomorphism:
    perm: tuple[int, ...]

    def __call__(self, s: int) -> int:
        return self.perm[s]

    def image(self, J: Iterable[int]) -> frozenset[int]:
        return frozenset(self.perm[s] for s in J)

    def is_identity(self) -> bool:
        return all(i == s for i, s in enumerate(self.perm))

    def compose(self, other: "DiagramAutomorphism") -> "DiagramAutomorphism":
        """Apply ``self`` first, then ``other``."""
        return DiagramAutomorphism(tuple(other.perm[s] for s in self.perm))


@dataclass(frozen=True)
class ParabolicType:
    J: frozenset[int]
    spherical: bool


def format_word(word: Sequence[int]) -> str:
    if any(s >= len(LETTERS) for s in word):
        return ",".join(str(s) for s in word)
    return "".join(LETTERS[s] for s in word)


def parse_word(text: str, rank: int) -> Word:
    """Parse ``"stst"`` style words, or comma separated indices such as ``"0,1,0"``."""
    text = text.strip()
    if not text or text in ("1", "e"):
        return ()
    if "," in text or text.isdigit():
        try:
            word = tuple(int(tok) for tok in text.split(",") if tok.strip())
        except ValueError:
            raise InvalidWord(f"cannot parse word {text!r}") from None
    else:
        try:
            word = tuple(LETTERS.index(ch) for ch in text)
        except ValueError:
            raise InvalidWord(f"cannot parse word {text!r}; letters are {LETTERS[:rank]!r}") from None
    for s in word:
        if not 0 <= s < rank:
            raise InvalidWord(f"generator {s} out of range for rank {rank}")
    return word


def _finite_component(matrix: CoxeterMatrix, comp: list[int]) -> bool:
    """Connected diagram classification: A, B/C, D, E6-8, F4, H3, H4, I2(m)."""
    n = len(comp)
    if n == 1:
        return True
    edges = []
    for a, b in itertools.combinations(comp, 2):
        m = matrix.m(a, b)
        if m >= 3:
            edges.append((a, b, m))
    if any(m == INF for _, _, m in edges):
        return False
    if n == 2:
        return True
    if len(edges) != n - 1:
        return False  # a cycle
    labels = sorted(m for _, _, m in edges)
    if any(m > 5 for m in labels):
        return False
    degree = {v: 0 for v in comp}
    for a, b, _ in edges:
        degree[a] += 1
        degree[b] += 1
    heavy = [e for e in edges if e[2] > 3]
    if not heavy:
        branch = [v for v in comp if degree[v] >= 3]
        if not branch:
            return True  # A_n
        if len(branch) > 1 or degree[branch[0]] > 3:
            return False
        centre = branch[0]
        arms = []
        nbrs = {v: [] for v in comp}
        for a, b, _ in edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        for start in nbrs[centre]:
            length, prev, cur = 1, centre, start
            while True:
                nxt = [v for v in nbrs[cur] if v != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                length += 1
            arms.append(length)
        return sum(1.0 / (a + 1) for a in arms) > 1.0  # D_n, E6, E7, E8
    if len(heavy) > 1 or max(degree.values()) > 2:
        return False
    a, b, m = heavy[0]
    end_edge = degree[a] == 1 or degree[b] == 1
    if m == 4:
        return end_edge or n == 4  # B_n, or F4 with the 4 in the middle
    return end_edge and n <= 4  # H3, H4


class CoxeterSystem:
    """A Coxeter system with a braid-closure word engine.

    Generators are ``0..rank-1``; the index order is the alphabet order used
    for lexicographic canonical forms.
    """

    def __init__(self, matrix: CoxeterMatrix):
        self.matrix = matrix
        self.rank = matrix.rank
        self._closures: dict[Word, frozenset[Word]] = {}
        self._step: dict[tuple[Word, int], Word] = {}

    @classmethod
    def named(cls, name: str) -> "CoxeterSystem":
        return cls(named_matrix(name))

    def __repr__(self) -> str:
        return f"CoxeterSystem(rank={self.rank}, entries={self.matrix.entries})"

    def __eq__(self, other) -> bool:
        return isinstance(other, CoxeterSystem) and other.matrix == self.matrix

    def __hash__(self) -> int:
        return hash(self.matrix)

    @property
    def generators(self) -> range:
        return range(self.rank)

    @cached_property
    def irreducible(self) -> bool:
        return len(self.components(range(self.rank))) == 1

    def components(self, J: Iterable[int]) -> list[list[int]]:
        J = sorted(set(J))
        seen: set[int] = set()
        comps = []
        for s in J:
            if s in seen:
                continue
            comp, todo = [], [s]
            seen.add(s)
            while todo:
                a = todo.pop()
                comp.append(a)
                for b in J:
                    if b not in seen and self.matrix.m(a, b) >= 3:
                        seen.add(b)
                        todo.append(b)
            comps.append(sorted(comp))
        return comps

    # word engine

    def _check(self, word: Iterable[int]) -> Word:
        word = tuple(word)
        for s in word:
            if not (isinstance(s, (int, np.integer)) and 0 <= s < self.rank):
                raise InvalidWord(f"invalid generator {s!r} for rank {self.rank}")
        return tuple(int(s) for s in word)

    def braid_closure(self, word: Word) -> frozenset[Word]:
        """All words reachable from ``word`` by braid moves."""
        cached = self._closures.get(word)
        if cached is not None:
            return cached
        seen = {word}
        todo = [word]
        while todo:
            w = todo.pop()
            for i in range(len(w) - 1):
                a, b = w[i], w[i + 1]
                if a == b:
                    continue
                m = self.matrix.m(a, b)
                if m == INF or i + m > len(w):
                    continue
                m = int(m)
                pattern = tuple(a if k % 2 == 0 else b for k in range(m))
                if w[i:i + m] != pattern:
                    continue
                swapped = tuple(b if k % 2 == 0 else a for k in range(m))
                v = w[:i] + swapped + w[i + m:]
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        result = frozenset(seen)
        for v in result:
            self._closures.setdefault(v, result)
        return result

    def _times(self, canon: Word, s: int) -> Word:
        key = (canon, s)
        cached = self._step.get(key)
        if cached is not None:
            return cached
        closure = self.braid_closure(canon)
        shorter = next((w for w in closure if w and w[-1] == s), None)
        if shorter is not None:
            result = min(self.braid_closure(shorter[:-1]))
        else:
            result = min(self.braid_closure(canon + (s,)))
        self._step[key] = result
        return result

    def reduce(self, word: Iterable[int]) -> CanonicalElement:
        canon: Word = ()
        for s in self._check(word):
            canon = self._times(canon, s)
        return CanonicalElement(canon)

    def element(self, word: Iterable[int] | str) -> CanonicalElement:
        if isinstance(word, str):
            word = parse_word(word, self.rank)
        return self.reduce(word)

    def length(self, word: Iterable[int] | CanonicalElement) -> int:
        if isinstance(word, CanonicalElement):
            return word.length
        return self.reduce(word).length

    def multiply(self, *elts: CanonicalElement | Iterable[int]) -> CanonicalElement:
        letters: list[int] = []
        for e in elts:
            letters.extend(e.word if isinstance(e, CanonicalElement) else e)
        return self.reduce(letters)

    def inverse(self, elt: CanonicalElement) -> CanonicalElement:
        return self.reduce(reversed(elt.word))

    def reduced_words(self, elt: CanonicalElement) -> frozenset[Word]:
        return self.braid_closure(elt.word)

    def descents(self, elt: CanonicalElement, side: str = "left") -> frozenset[int]:
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', not {side!r}")
        words = self.braid_closure(elt.word)
        if side == "left":
            return frozenset(w[0] for w in words if w)
        return frozenset(w[-1] for w in words if w)

    def support(self, elt: CanonicalElement) -> frozenset[int]:
        return frozenset(elt.word)

    # parabolics

    def is_spherical(self, J: Iterable[int]) -> bool:
        J = frozenset(J)
        return all(_finite_component(self.matrix, comp) for comp in self.components(J))

    def parabolic(self, J: Iterable[int]) -> ParabolicType:
        J = frozenset(J)
        return ParabolicType(J, self.is_spherical(J))

    def longest_element(self, J: Iterable[int] | None = None) -> CanonicalElement:
        J = frozenset(range(self.rank) if J is None else J)
        if not self.is_spherical(J):
            raise NonSphericalParabolic(f"W_J is infinite for J={sorted(J)}")
        w: Word = ()
        while True:
            for s in sorted(J):
                nxt = self._times(w, s)
                if len(nxt) > len(w):
                    w = nxt
                    break
            else:
                return CanonicalElement(w)

    # diagram geometry

    def coxeter_graph_distance(self, s: int, t: int) -> float:
        dist = {s: 0}
        todo = deque([s])
        while todo:
            a = todo.popleft()
            if a == t:
                return dist[a]
            for b in range(self.rank):
                if b not in dist and self.matrix.m(a, b) >= 3:
                    dist[b] = dist[a] + 1
                    todo.append(b)
        return INF

    def coxeter_distance(self, u: CanonicalElement | Iterable[int], v: CanonicalElement | Iterable[int]) -> float:
        """Minimal graph distance between the supports; infinite if either is trivial."""
        u = u if isinstance(u, CanonicalElement) else self.reduce(u)
        v = v if isinstance(v, CanonicalElement) else self.reduce(v)
        su, sv = self.support(u), self.support(v)
        if not su or not sv:
            return INF
        return min(self.coxeter_graph_distance(s, t) for s in su for t in sv)

    def commutes_with_support(self, s: int, w: CanonicalElement) -> bool:
        if s in self.support(w):
            raise PreconditionViolated(f"generator {s} occurs in {w}; need w in W_(S-{{s}})")
        return self.multiply((s,), w) == self.multiply(w, (s,))

    def descent_lemma_witness(self, sigma: DiagramAutomorphism, w: CanonicalElement) -> "DescentLemmaReport":
        J = self.descents(w, "left")
        spherical = self.is_spherical(J)
        lw = w.length
        hypotheses = all(
            self.multiply(w, (sigma(s),)).length < lw
            and self.multiply((s,), w, (sigma(s),)).length == lw
            for s in J
        )
        report = DescentLemmaReport(J=J, spherical=spherical, hypotheses_hold=hypotheses)
        if hypotheses:
            report.sigma_preserves_J = sigma.image(J) == J
            report.is_longest = w == self.longest_element(J)
            report.conjugation_fixed = all(self.multiply((s,), w, (sigma(s),)) == w for s in J)
        return report

    # finite groups

    def enumerate_elements(self, limit: int = 100_000) -> list[CanonicalElement]:
        """Breadth-first list of all elements (finite W only), ordered by length then word."""
        if not self.is_spherical(range(self.rank)):
            raise NonSphericalParabolic("W is infinite")
        seen = {(): None}
        layer: list[Word] = [()]
        out: list[Word] = [()]
        while layer:
            nxt = set()
            for w in layer:
                for s in range(self.rank):
                    v = self._times(w, s)
                    if len(v) > len(w) and v not in seen:
                        seen[v] = None
                        nxt.add(v)
            layer = sorted(nxt)
            out.extend(layer)
            if len(out) > limit:
                raise NonSphericalParabolic(f"more than {limit} elements")
        return [CanonicalElement(w) for w in out]

    @cached_property
    def table(self) -> "CoxeterTable":
        return CoxeterTable(self)

    def diagram_automorphisms(self) -> list[DiagramAutomorphism]:
        return diagram_automorphisms(self.matrix)


@dataclass
class DescentLemmaReport:
    J: frozenset[int]
    spherical: bool
    hypotheses_hold: bool
    sigma_preserves_J: bool | None = None
    is_longest: bool | None = None
    conjugation_fixed: bool | None = None

    @property
    def conclusions_hold(self) -> bool:
        """Vacuously true when the hypotheses fail."""
        if not self.hypotheses_hold:
            return True
        return bool(self.sigma_preserves_J and self.is_longest and self.conjugation_fixed)


def build_system(matrix: CoxeterMatrix | Sequence[Sequence[float]]) -> CoxeterSystem:
    if not isinstance(matrix, CoxeterMatrix):
        matrix = CoxeterMatrix.from_rows(matrix)
    return CoxeterSystem(matrix)


def diagram_automorphisms(matrix: CoxeterMatrix) -> list[DiagramAutomorphism]:
    n = matrix.rank
    out = []
    for perm in itertools.permutations(range(n)):
        if all(matrix.m(perm[s], perm[t]) == matrix.m(s, t) for s in range(n) for t in range(n)):
            out.append(DiagramAutomorphism(perm))
    return out


class CoxeterTable:
    """Index tables for a finite Coxeter group.

    Elements are numbered in the order of :meth:`CoxeterSystem.enumerate_elements`,
    so index 0 is the identity.
    """

    def __init__(self, system: CoxeterSystem):
        self.system = system
        self.elements = system.enumerate_elements()
        self.index = {e.word: i for i, e in enumerate(self.elements)}
        n, r = len(self.elements), system.rank
        self.order = n
        self.length = np.array([e.length for e in self.elements], dtype=np.int16)
        self.rmul = np.empty((n, r), dtype=np.int32)
        self.lmul = np.empty((n, r), dtype=np.int32)
        for i, e in enumerate(self.elements):
            for s in range(r):
                self.rmul[i, s] = self.index[system._times(e.word, s)]
                self.lmul[i, s] = self.index[system.reduce((s,) + e.word).word]
        self.mul = np.empty((n, n), dtype=np.int32)
        for j, e in enumerate(self.elements):
            col = np.arange(n, dtype=np.int32)
            for s in e.word:
                col = self.rmul[col, s]
            self.mul[:, j] = col
        self.inverse = np.array([int(np.nonzero(self.mul[i] == 0)[0][0]) for i in range(n)], dtype=np.int32)
        self.w0 = int(np.argmax(self.length))
        self.generator_index = np.array([self.index[(s,)] for s in range(r)], dtype=np.int32)

    def __len__(self) -> int:
        return self.order

    def idx(self, elt: CanonicalElement | Iterable[int]) -> int:
        if isinstance(elt, CanonicalElement):
            return self.index[elt.word]
        return self.index[self.system.reduce(elt).word]

    def conjugate_by_w0(self, s: int) -> int:
        """The generator ``w0 s w0``."""
        i = self.mul[self.mul[self.w0, self.generator_index[s]], self.w0]
        return int(np.nonzero(self.generator_index == i)[0][0])

    def in_parabolic(self, J: Iterable[int]) -> np.ndarray:
        J = set(J)
        return np.array([set(e.word) <= J for e in self.elements])


# permutation oracle for small finite types

def _oracle_generators(matrix: CoxeterMatrix) -> tuple[list[tuple[int, ...]], int]:
    r = matrix.rank
    if r == 1:
        return [(1, 0)], 2
    if r == 2:
        m = matrix.m(0, 1)
        if m == INF:
            raise UnsupportedType("infinite dihedral group has no finite realization")
        m = int(m)
        if m == 3:
            return [(1, 0, 2), (0, 2, 1)], 3
        s = tuple((-i) % m for i in range(m))
        t = tuple((1 - i) % m for i in range(m))
        return [s, t], m
    if r == 3:
        a, b, c = matrix.m(0, 1), matrix.m(1, 2), matrix.m(0, 2)
        if c != 2:
            raise UnsupportedType("oracle supports A3 and B3 only in rank 3")
        if (a, b) == (3, 3):
            def tr(i, j):
                p = list(range(4))
                p[i], p[j] = j, i
                return tuple(p)
            return [tr(0, 1), tr(1, 2), tr(2, 3)], 4
        if (a, b) in ((3, 4), (4, 3)):
            # signed permutations of {+-1,+-2,+-3}: point 2k is +k, 2k+1 is -k
            def swap(i, j):
                p = list(range(6))
                for sgn in (0, 1):
                    p[2 * i + sgn], p[2 * j + sgn] = 2 * j + sgn, 2 * i + sgn
                return tuple(p)

            def negate(i):
                p = list(range(6))
                p[2 * i], p[2 * i + 1] = 2 * i + 1, 2 * i
                return tuple(p)
            gens = [swap(0, 1), swap(1, 2), negate(2)]
            if (a, b) == (4, 3):
                gens = gens[::-1]
            return gens, 6
    raise UnsupportedType("oracle supports A1-A3, B2, B3 and I2(m)")


def oracle_realize(system: CoxeterSystem, word: Iterable[int]) -> tuple[int, ...]:
    """Faithful permutation image of ``word`` for types A1-A3, B2, B3, I2(m)."""
    gens, n = _oracle_generators(system.matrix)
    perm = tuple(range(n))
    for s in system._check(word):
        g = gens[s]
        perm = tuple(perm[g[x]] for x in range(n))
    return perm
