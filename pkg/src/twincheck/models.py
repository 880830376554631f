"""Cached desk-scale models: a building, its self-twin and its automorphisms."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .chambers import Building, TwinModel, building_from_geometry, flag_building_rank3, self_twin, thin_building
from .coxeter import CoxeterSystem, DiagramAutomorphism
from .errors import TwincheckError
from .geometry import IncidenceGeometry, projective_plane, symplectic_quadrangle
from .symmetry import (
    collineation_group,
    lift_batch,
    quadrangle_maps,
    rank3_automorphisms,
    standard_correlation,
)

MODEL_KINDS = ("pg", "gq", "a3", "thin")


class UnknownModel(TwincheckError, ValueError):
    pass


@dataclass
class Model:
    """A building together with a list of automorphisms to scan.

    ``vertex_maps`` holds geometric maps (lifted to chambers on demand);
    thin models carry chamber permutations directly in ``chamber_maps``.
    """

    name: str
    building: Building
    geometry: IncidenceGeometry | None = None
    vertex_maps_fn: object = None
    chamber_maps: np.ndarray | None = None
    chamber_sigmas: np.ndarray | None = None

    @cached_property
    def twin(self) -> TwinModel:
        return self_twin(self.building)

    @property
    def vertex_maps(self) -> np.ndarray | None:
        return None if self.vertex_maps_fn is None else self.vertex_maps_fn()

    @property
    def n_maps(self) -> int:
        if self.chamber_maps is not None:
            return len(self.chamber_maps)
        return len(self.vertex_maps)

    def batches(self, batch: int = 4096, start: int = 0, stop: int | None = None
                ) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
        """(offset, chamber permutations, type permutations) in element order."""
        stop = self.n_maps if stop is None else min(stop, self.n_maps)
        for lo in range(start, stop, batch):
            hi = min(lo + batch, stop)
            if self.chamber_maps is not None:
                yield lo, self.chamber_maps[lo:hi], self.chamber_sigmas[lo:hi]
            else:
                ch, sig = lift_batch(self.building, self.vertex_maps[lo:hi])
                yield lo, ch, sig


def _plane_maps(q: int) -> np.ndarray:
    cols = collineation_group(q).elements
    corr = standard_correlation(projective_plane(q)).perm.astype(cols.dtype)
    return np.concatenate([cols, corr[cols]])


@lru_cache(maxsize=None)
def plane_maps(q: int) -> np.ndarray:
    return _plane_maps(q)


def thin_automorphisms(system: CoxeterSystem) -> tuple[np.ndarray, np.ndarray]:
    """All maps u -> x sigma(u) of the Coxeter complex."""
    t = system.table
    maps, sigmas = [], []
    for sigma in system.diagram_automorphisms():
        image = np.array([t.index[system.reduce([sigma(s) for s in e.word]).word] for e in t.elements])
        for x in range(t.order):
            maps.append(t.mul[x, image])
            sigmas.append(sigma.perm)
    return np.array(maps, dtype=np.int32), np.array(sigmas, dtype=np.int32)


def opposition_map(system: CoxeterSystem) -> tuple[np.ndarray, DiagramAutomorphism]:
    """u -> u w0 on the Coxeter complex: every chamber goes to an opposite one."""
    t = system.table
    return t.mul[:, t.w0].astype(np.int32), DiagramAutomorphism(tuple(t.conjugate_by_w0(s) for s in range(system.rank)))


@lru_cache(maxsize=None)
def get_model(kind: str, q: int = 2, coxeter_type: str = "A2") -> Model:
    if kind == "pg":
        plane = projective_plane(q)
        return Model(f"PG(2,{q})", building_from_geometry(plane), plane, lambda: plane_maps(q))
    if kind == "gq":
        gq = symplectic_quadrangle()
        return Model("W(2)", building_from_geometry(gq), gq, quadrangle_maps)
    if kind == "a3":
        if q != 2:
            raise UnknownModel("the rank 3 model exists for q=2 only")
        return Model("A3(2)", flag_building_rank3(2), None, lambda: rank3_automorphisms(2))
    if kind == "thin":
        if coxeter_type not in ("A2", "B2", "A3", "B3", "A1"):
            raise UnknownModel(f"unsupported thin type {coxeter_type}")
        system = CoxeterSystem.named(coxeter_type)
        maps, sigmas = thin_automorphisms(system)
        b = thin_building(system)
        b.name = f"thin {coxeter_type}"
        return Model(f"thin-{coxeter_type}", b, None, None, maps, sigmas)
    raise UnknownModel(f"unknown model {kind!r}; choose from {', '.join(MODEL_KINDS)}")
