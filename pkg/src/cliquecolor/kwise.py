"""k-wise independent hashing by polynomial evaluation over GF(p).

A seed is a fixed-width bit string made of ``k`` chunks of
``ceil(log2 p)`` bits each; chunk ``i`` (reduced mod p) is the coefficient
of ``x^(k-1-i)``.  Outputs are field values reduced mod ``2**range_bits`` and
read most-significant-bit first, so shorter outputs are prefixes of longer
ones for the same seed and input.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from sympy import isprime, nextprime

from .errors import LenOutOfRange, ParameterOverflow, PrefixTooLong, TooLargeToEnumerate

# int64 Horner is safe while (p-1)^2 + p < 2^63
_INT64_PRIME_LIMIT = 1 << 31


@dataclass(frozen=True)
class Seed:
    value: int
    width: int

    def __post_init__(self):
        if self.value < 0 or self.value >> self.width:
            raise ValueError(f"seed {self.value} does not fit in {self.width} bits")

    @property
    def bits(self) -> str:
        return format(self.value, f"0{self.width}b") if self.width else ""

    def hex(self) -> str:
        return format(self.value, f"0{max(1, (self.width + 3) // 4)}x")

    @classmethod
    def from_bits(cls, bits: str) -> "Seed":
        return cls(int(bits, 2) if bits else 0, len(bits))


@dataclass(frozen=True)
class HashFamily:
    k: int
    domain_size: int
    range_bits: int
    field_prime: int
    chunk_bits: int = field(init=False)
    seed_bits: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "chunk_bits", (self.field_prime - 1).bit_length())
        object.__setattr__(self, "seed_bits", self.k * self.chunk_bits)

    @property
    def size(self) -> int:
        return 1 << self.seed_bits

    def seed(self, value: int) -> Seed:
        return Seed(value, self.seed_bits)

    def coefficients(self, seed: Seed | int) -> tuple[int, ...]:
        value = seed.value if isinstance(seed, Seed) else seed
        w, p = self.chunk_bits, self.field_prime
        mask = (1 << w) - 1
        return tuple(
            ((value >> (w * (self.k - 1 - i))) & mask) % p for i in range(self.k)
        )

    def field_value(self, seed: Seed | int, x: int) -> int:
        p = self.field_prime
        acc = 0
        for a in self.coefficients(seed):
            acc = (acc * x + a) % p
        return acc

    def output(self, seed: Seed | int, x: int) -> int:
        """Full ``range_bits``-bit output as an integer."""
        return self.field_value(seed, x) & ((1 << self.range_bits) - 1)

    def eval_int(self, seed: Seed | int, x: int, length: int) -> int:
        if not 0 <= length <= self.range_bits:
            raise LenOutOfRange(f"length {length} not in [0,{self.range_bits}]")
        if not 0 <= x < self.domain_size:
            raise ValueError(f"input {x} outside domain [0,{self.domain_size})")
        return self.output(seed, x) >> (self.range_bits - length)

    def eval_bits(self, seed: Seed | int, x: int, length: int) -> str:
        v = self.eval_int(seed, x, length)
        return format(v, f"0{length}b") if length else ""

    # vectorized paths -----------------------------------------------------

    def coefficient_matrix(self, seeds: Sequence[int] | np.ndarray) -> np.ndarray:
        """(S, k) coefficient matrix for many seed values."""
        if self.field_prime < _INT64_PRIME_LIMIT and self.seed_bits < 63:
            vals = np.asarray(seeds, dtype=np.int64)
            w, mask = self.chunk_bits, (1 << self.chunk_bits) - 1
            cols = [((vals >> (w * (self.k - 1 - i))) & mask) % self.field_prime for i in range(self.k)]
            return np.stack(cols, axis=1)
        rows = [self.coefficients(int(s)) for s in seeds]
        return np.array(rows, dtype=object).reshape(len(rows), self.k)

    def outputs(self, seeds: Sequence[int] | np.ndarray, xs: Sequence[int] | np.ndarray) -> np.ndarray:
        """(S, X) int64 matrix of full range_bits outputs."""
        coeffs = self.coefficient_matrix(seeds)
        p = self.field_prime
        if coeffs.dtype == object:
            x = np.asarray(list(xs), dtype=object)[None, :]
        else:
            x = np.asarray(xs, dtype=np.int64)[None, :]
        acc = coeffs[:, :1] * (x * 0)
        for i in range(self.k):
            acc = (acc * x + coeffs[:, i : i + 1]) % p
        acc = acc % (1 << self.range_bits)
        return acc.astype(np.int64)


def make_family(k: int, domain_size: int, range_bits: int, max_seed_bits: int | None = None) -> HashFamily:
    if k < 1 or domain_size < 1 or range_bits < 1:
        raise ValueError("k, domain_size and range_bits must be positive")
    if range_bits > 62:
        raise ParameterOverflow("range_bits above 62 unsupported")
    p = max(domain_size, 1 << range_bits)
    if not isprime(p):
        p = nextprime(p)
    fam = HashFamily(k=k, domain_size=domain_size, range_bits=range_bits, field_prime=int(p))
    if max_seed_bits is not None and fam.seed_bits > max_seed_bits:
        raise ParameterOverflow(f"seed of {fam.seed_bits} bits exceeds cap {max_seed_bits}")
    return fam


def seed_iter(family: HashFamily, fixed_prefix: str = "") -> Iterator[Seed]:
    free = family.seed_bits - len(fixed_prefix)
    if free < 0:
        raise PrefixTooLong(f"prefix of {len(fixed_prefix)} bits exceeds seed width {family.seed_bits}")
    base = (int(fixed_prefix, 2) if fixed_prefix else 0) << free
    for tail in range(1 << free):
        yield Seed(base | tail, family.seed_bits)


@dataclass
class IndependenceReport:
    exact: bool
    max_field_deviation: float
    tuples_checked: int
    bit_histogram: dict[int, int]
    max_bit_deviation: float


def residue_histogram(p: int, range_bits: int) -> dict[int, int]:
    """How many field elements land on each ``range_bits``-bit output value."""
    hist = Counter(v % (1 << range_bits) for v in range(p))
    return {b: hist.get(b, 0) for b in range(1 << range_bits)}


def independence_test(
    family: HashFamily,
    k: int | None = None,
    sample_domain: Sequence[int] | None = None,
    cap: int = 1 << 20,
) -> IndependenceReport:
    """Exhaustively check joint uniformity of field outputs on k-tuples of distinct inputs.

    Enumerates the family as its p**k coefficient vectors.  The bit output
    is additionally summarized by the residue histogram of Z_p mod 2^r.
    """
    k = family.k if k is None else k
    p = family.field_prime
    total = p ** family.k
    if total > cap:
        raise TooLargeToEnumerate(f"{total} functions exceeds cap {cap}")
    domain = list(range(family.domain_size)) if sample_domain is None else list(sample_domain)
    coeffs = np.array(list(itertools.product(range(p), repeat=family.k)), dtype=np.int64)
    xs = np.array(domain, dtype=np.int64)[None, :]
    vals = np.zeros((total, len(domain)), dtype=np.int64)
    for i in range(family.k):
        vals = (vals * xs + coeffs[:, i : i + 1]) % p
    cells = p ** k
    worst = 0
    checked = 0
    for idx in itertools.combinations(range(len(domain)), k):
        code = np.zeros(total, dtype=np.int64)
        for j in idx:
            code = code * p + vals[:, j]
        counts = np.bincount(code, minlength=cells)
        # compare counts scaled by p^k against total to stay in integers
        worst = max(worst, int(np.max(np.abs(counts * cells - total))))
        checked += 1
    hist = residue_histogram(p, family.range_bits)
    bit_dev = max(abs(c / p - 1 / (1 << family.range_bits)) for c in hist.values())
    return IndependenceReport(
        exact=worst == 0,
        max_field_deviation=worst / (total * cells),
        tuples_checked=checked,
        bit_histogram=hist,
        max_bit_deviation=bit_dev,
    )
