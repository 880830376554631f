"""Small finite fields as lookup tables.

Elements of GF(p^k) are the integers ``0..q-1``; the base-p digits of an
integer are the coefficients of a polynomial in the field generator ``x``
(lowest degree first).
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import NotPrimePower

# modulus coefficients, lowest degree first, leading 1 included
FIXED_MODULI = {
    4: (1, 1, 1),  # x^2 + x + 1
    8: (1, 1, 0, 1),  # x^3 + x + 1
    9: (2, 1, 1),  # x^2 + x + 2
}


def factor_prime_power(q: int) -> tuple[int, int]:
    if q < 2:
        raise NotPrimePower(f"{q} is not a prime power")
    p = next(d for d in itertools.count(2) if q % d == 0)
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    if r != 1:
        raise NotPrimePower(f"{q} is not a prime power")
    return p, k


def is_prime_power(q: int) -> bool:
    try:
        factor_prime_power(q)
    except NotPrimePower:
        return False
    return True


def _digits(x: int, p: int, k: int) -> list[int]:
    out = []
    for _ in range(k):
        out.append(x % p)
        x //= p
    return out


def _undigits(ds, p: int) -> int:
    return sum(int(d) * p**i for i, d in enumerate(ds))


def _times_x(ds: list[int], modulus: tuple[int, ...], p: int) -> list[int]:
    k = len(ds)
    top = ds[-1]
    shifted = [0] + ds[:-1]
    return [(shifted[i] - top * modulus[i]) % p for i in range(k)]


def _powers_of_x(modulus: tuple[int, ...], p: int) -> list[int]:
    """Successive powers of x until they cycle back to 1."""
    k = len(modulus) - 1
    cur = [1] + [0] * (k - 1)
    out = []
    for _ in range(p**k):
        out.append(_undigits(cur, p))
        cur = _times_x(cur, modulus, p)
        if _undigits(cur, p) == 1:
            break
    return out


def _find_primitive_modulus(p: int, k: int) -> tuple[int, ...]:
    for tail in itertools.product(range(p), repeat=k):
        modulus = tuple(tail) + (1,)
        if modulus[0] == 0:
            continue
        if len(_powers_of_x(modulus, p)) == p**k - 1:
            return modulus
    raise AssertionError(f"no primitive polynomial of degree {k} over GF({p})")


class FiniteField:
    def __init__(self, q: int):
        p, k = factor_prime_power(q)
        self.q, self.p, self.k = q, p, k
        elems = np.arange(q)
        if k == 1:
            self.modulus = (0, 1)
            self.add = ((elems[:, None] + elems[None, :]) % p).astype(np.int16)
            self.mul = ((elems[:, None] * elems[None, :]) % p).astype(np.int16)
            self.primitive = next(
                g for g in range(1, q) if len({pow(g, e, p) for e in range(q - 1)}) == q - 1
            ) if q > 2 else 1
        else:
            self.modulus = FIXED_MODULI.get(q) or _find_primitive_modulus(p, k)
            digits = np.array([_digits(x, p, k) for x in range(q)])
            sums = (digits[:, None, :] + digits[None, :, :]) % p
            self.add = (sums * (p ** np.arange(k))).sum(axis=2).astype(np.int16)
            powers = _powers_of_x(self.modulus, p)
            if len(powers) != q - 1:
                raise AssertionError(f"modulus {self.modulus} is not primitive")
            log = np.zeros(q, dtype=np.int64)
            log[powers] = np.arange(q - 1)
            exp = np.array(powers)
            mul = exp[(log[:, None] + log[None, :]) % (q - 1)]
            mul[0, :] = 0
            mul[:, 0] = 0
            self.mul = mul.astype(np.int16)
            self.primitive = p  # the class of x
        self.neg = np.array([int(np.nonzero(self.add[x] == 0)[0][0]) for x in range(q)], dtype=np.int16)
        self.sub = self.add[:, self.neg]
        inv = np.zeros(q, dtype=np.int16)
        for x in range(1, q):
            inv[x] = int(np.nonzero(self.mul[x] == 1)[0][0])
        self.inv = inv
        self.frobenius = np.array([self.power(x, p) for x in range(q)], dtype=np.int16)

    def __repr__(self) -> str:
        return f"GF({self.q})"

    @property
    def elements(self) -> range:
        return range(self.q)

    def power(self, x: int, e: int) -> int:
        r = 1
        for _ in range(e):
            r = int(self.mul[r, x])
        return r

    def frobenius_power(self, x: int, e: int) -> int:
        for _ in range(e):
            x = int(self.frobenius[x])
        return x

    def frobenius_order(self) -> int:
        f = np.arange(self.q)
        for n in range(1, self.k + 1):
            f = self.frobenius[f]
            if np.array_equal(f, np.arange(self.q)):
                return n
        raise AssertionError("frobenius order exceeds the degree")

    def sqrt_of_minus_one(self) -> int | None:
        m1 = int(self.neg[1])
        return next((x for x in range(self.q) if self.mul[x, x] == m1), None)


@lru_cache(maxsize=None)
def finite_field(q: int) -> FiniteField:
    return FiniteField(q)
