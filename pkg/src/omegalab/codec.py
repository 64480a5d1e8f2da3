"""Bit strings, Elias gamma codes, exact dyadic rationals, prefix-free checks.

Canonical bit-string form is a str of '0'/'1' characters, first-read bit
leftmost.  Dyadic rationals render as "num/2^exp" with both parts decimal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .errors import DemandMoreBits, DomainError

_BITS_RE = re.compile(r"[01]*\Z")


def ensure_bits(s: str) -> str:
    """Validate canonical bit-string text; returns it unchanged."""
    if not isinstance(s, str) or not _BITS_RE.match(s):
        raise DomainError(f"not a bit string: {s!r}")
    return s


def length_lex_key(s: str) -> tuple[int, str]:
    """Sort key for the canonical global ordering: '', '0', '1', '00', ..."""
    return (len(s), s)


def pack_bits(s: str) -> int:
    """Length-preserving integer form of a bit string: a 1 sentinel, then the bits.

    Integer order of packed values coincides with length-lex order of strings.
    """
    return int("1" + s, 2)


def unpack_bits(key: int) -> str:
    """Inverse of pack_bits."""
    if key < 1:
        raise DomainError(f"bad packed bit string: {key}")
    return format(key, "b")[1:]


def encode_gamma(n: int) -> str:
    """Elias gamma code of n >= 1: floor(log2 n) zeros, then n in binary."""
    if n < 1:
        raise DomainError(f"gamma code requires n >= 1, got {n}")
    b = format(n, "b")
    return "0" * (len(b) - 1) + b


def decode_gamma(stream: str, offset: int = 0) -> tuple[int, int]:
    """Decode a gamma code at `offset`; returns (value, bits consumed).

    Raises DemandMoreBits when the stream ends inside the code.
    """
    total = len(stream)
    if offset > total or offset < 0:
        raise DomainError(f"offset {offset} outside stream of {total} bits")
    i = offset
    while True:
        if i >= total:
            raise DemandMoreBits(i - offset)
        if stream[i] == "1":
            break
        i += 1
    z = i - offset
    end = i + 1 + z
    if end > total:
        raise DemandMoreBits(total - offset)
    return int(stream[i:end], 2), 2 * z + 1


@dataclass(frozen=True, slots=True)
class Dyadic:
    """Non-negative exact rational num / 2**exp, normalized (num odd, or 0/2^0)."""

    num: int
    exp: int

    def __post_init__(self):
        if self.num < 0 or self.exp < 0:
            raise DomainError(f"bad dyadic {self.num}/2^{self.exp}")
        if self.num == 0:
            object.__setattr__(self, "exp", 0)
        else:
            tz = (self.num & -self.num).bit_length() - 1
            shift = min(tz, self.exp)
            if shift:
                object.__setattr__(self, "num", self.num >> shift)
                object.__setattr__(self, "exp", self.exp - shift)

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """The value 2**-k."""
        return cls(1, k)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        m = re.fullmatch(r"(\d+)/2\^(\d+)", text.strip())
        if not m:
            raise DomainError(f"bad dyadic text: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def _pair(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other: "Dyadic") -> "Dyadic":
        a, b, e = self._pair(other)
        return Dyadic(a + b, e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        a, b, e = self._pair(other)
        if a < b:
            raise DomainError("dyadic subtraction below zero")
        return Dyadic(a - b, e)

    def __lt__(self, other: "Dyadic") -> bool:
        a, b, _ = self._pair(other)
        return a < b

    def __le__(self, other: "Dyadic") -> bool:
        a, b, _ = self._pair(other)
        return a <= b

    def __gt__(self, other: "Dyadic") -> bool:
        return other < self

    def __ge__(self, other: "Dyadic") -> bool:
        return other <= self

    def __bool__(self) -> bool:
        return self.num != 0

    def __str__(self) -> str:
        return f"{self.num}/2^{self.exp}"


ZERO = Dyadic(0, 0)
ONE = Dyadic(1, 0)


def compare(a: Dyadic, b: Dyadic) -> int:
    """Three-way ordering: -1, 0, or 1."""
    if a < b:
        return -1
    return 1 if b < a else 0


@dataclass(frozen=True, slots=True)
class DyadicInterval:
    """Closed interval [lo, hi] with 0 <= lo <= hi <= 1."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        if self.hi < self.lo or ONE < self.hi:
            raise DomainError(f"bad interval [{self.lo}, {self.hi}]")

    def contains(self, other: "DyadicInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


def binary_expansion(d: Dyadic, k: int) -> str:
    """First k bits of d in [0, 1] after the binary point: floor(d * 2**k) in k bits.

    d = 1 with k > 0 is rejected; the expansion there is ambiguous.
    """
    if k < 0:
        raise DomainError(f"bit count must be >= 0, got {k}")
    if ONE < d:
        raise DomainError(f"expansion needs d <= 1, got {d}")
    if k == 0:
        return ""
    if d == ONE:
        raise DomainError("binary expansion of 1 is ambiguous")
    return format((d.num << k) >> d.exp, f"0{k}b")


def kraft_sum(strings: Iterable[str]) -> Dyadic:
    """Exact sum of 2**-len over the collection."""
    items = list(strings)
    if not items:
        return ZERO
    depth = max(len(s) for s in items)
    total = sum(1 << (depth - len(s)) for s in items)
    return Dyadic(total, depth)


@dataclass(frozen=True, slots=True)
class Violation:
    """A witness that a set is not prefix-free: `prefix` is a proper prefix of `extension`."""

    prefix: str
    extension: str


def find_prefix_violation(strings: Iterable[str]) -> Violation | None:
    """First violation in length-lex scan order, or None when the set is prefix-free.

    The reported prefix is the shortest member that precedes the offender.
    """
    pool = set(strings)
    for b in sorted(pool, key=length_lex_key):
        for cut in range(len(b)):
            a = b[:cut]
            if a in pool:
                return Violation(a, b)
    return None


def is_prefix_free(strings: Iterable[str]) -> bool:
    return find_prefix_violation(strings) is None
