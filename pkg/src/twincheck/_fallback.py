"""Pure numpy versions of the scan kernels."""

from __future__ import annotations

import math

import numpy as np


def perm_orders(perms: np.ndarray) -> np.ndarray:
    perms = np.asarray(perms)
    out = np.empty(len(perms), dtype=np.int64)
    for b, row in enumerate(perms.tolist()):
        seen = [False] * len(row)
        order = 1
        for v in range(len(row)):
            if not seen[v]:
                size, x = 0, v
                while not seen[x]:
                    seen[x] = True
                    x = row[x]
                    size += 1
                order = math.lcm(order, size)
        out[b] = order
    return out


def absolute_counts(dualities: np.ndarray, incidence: np.ndarray, n_points: int) -> np.ndarray:
    lines = np.asarray(dualities)[:, :n_points].astype(np.int64) - n_points
    hit = np.asarray(incidence, dtype=bool)[np.arange(n_points)[None, :], lines]
    return hit.sum(axis=1).astype(np.int32)


def j_opposite(maps: np.ndarray, opposite: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Residues given by ``members`` are all mapped to opposite residues."""
    maps = np.asarray(maps, dtype=np.int64)
    opp = np.asarray(opposite, dtype=bool)
    n = opp.shape[0]
    rows = np.arange(n)[:, None]
    # forward: each C sees an opposite among the images of its residue
    fwd = opp[rows[None], maps[:, members]].any(axis=2).all(axis=1)
    # backward: each image g(E) is opposite some chamber of E's residue
    bwd = opp[members[None], maps[:, :, None]].any(axis=2).all(axis=1)
    return (fwd & bwd).astype(np.uint8)


def local_descent(lengths: np.ndarray, neighbors: np.ndarray, start: int) -> np.ndarray:
    """Chamber where first-improvement descent from ``start`` stops."""
    lengths = np.asarray(lengths)
    out = np.empty(len(lengths), dtype=np.int64)
    nbrs = np.asarray(neighbors).tolist()
    for b, row in enumerate(lengths.tolist()):
        c = start
        while True:
            cur = row[c]
            for d in nbrs[c]:
                if row[d] < cur:
                    c = d
                    break
            else:
                break
        out[b] = c
    return out
