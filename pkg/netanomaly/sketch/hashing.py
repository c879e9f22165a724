"""
4-universal hashing: random degree-3 polynomials over the Mersenne field GF(2^61 − 1),
reduced modulo the table width.
"""
import dataclasses
from typing import Sequence

import numpy as np

MERSENNE_PRIME = 2 ** 61 - 1
KEY_MASK = 2 ** 64 - 1


@dataclasses.dataclass(frozen=True)
class PolynomialHash:
    coefficients: tuple[int, int, int, int]    # a0 .. a3
    width: int

    def __call__(self, key: int) -> int:
        x = (key & KEY_MASK) % MERSENNE_PRIME
        a0, a1, a2, a3 = self.coefficients
        value = ((a3 * x + a2) * x + a1) % MERSENNE_PRIME
        return ((value * x + a0) % MERSENNE_PRIME) % self.width


def hash_family(count: int, width: int, seed: int | np.random.Generator) -> list[PolynomialHash]:
    """`count` independent hash functions; the same seed always yields the same family."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    coefficients = rng.integers(0, MERSENNE_PRIME, size=(count, 4), dtype=np.int64)
    return [PolynomialHash(coefficients=tuple(int(c) for c in row), width=width) for row in coefficients]   # type: ignore[arg-type]


def family_from_coefficients(coefficients: Sequence[Sequence[int]], width: int) -> list[PolynomialHash]:
    return [PolynomialHash(coefficients=tuple(int(c) for c in row), width=width) for row in coefficients]   # type: ignore[arg-type]
