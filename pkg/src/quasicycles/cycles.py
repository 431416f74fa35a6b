"""Exact algebra of zero-sum tuples of Fourier vectors (the cycle group).

Entries are integer coordinate tuples.  Two cycles are equivalent when they
differ by permutations and by inserting or removing zeros and pairs {k, -k}.
The canonical representative is the sorted multiset left after removing all
zeros and cancelling all +-pairs.
"""
from __future__ import annotations

import itertools
import weakref
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import NonzeroSumError, OracleFailure
from .scheme import ModuleVector

Vec = tuple[int, ...]


def _vec(k) -> Vec:
    if isinstance(k, ModuleVector):
        return k.coords
    return tuple(int(c) for c in k)


def _neg(k: Vec) -> Vec:
    return tuple(-c for c in k)


def _add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vsum(entries, dim=None) -> Vec:
    entries = list(entries)
    if not entries:
        return (0,) * (dim or 0)
    out = [0] * len(entries[0])
    for k in entries:
        for i, c in enumerate(k):
            out[i] += c
    return tuple(out)


def canonical_form(entries: Sequence[Vec]) -> tuple[Vec, ...]:
    counts = Counter(k for k in entries if any(k))
    for k in list(counts):
        nk = _neg(k)
        if k < nk and nk in counts:
            m = min(counts[k], counts[nk])
            counts[k] -= m
            counts[nk] -= m
    return tuple(sorted(itertools.chain.from_iterable(
        [k] * c for k, c in counts.items() if c > 0)))


@dataclass(frozen=True)
class Cycle:
    """Ordered zero-sum tuple of Fourier vectors."""

    entries: tuple[Vec, ...]
    dim: int | None = None

    def __post_init__(self):
        entries = tuple(_vec(k) for k in self.entries)
        object.__setattr__(self, "entries", entries)
        if entries:
            dims = {len(k) for k in entries}
            if len(dims) != 1 or (self.dim is not None and dims != {self.dim}):
                raise NonzeroSumError("cycle entries have inconsistent dimensions")
            object.__setattr__(self, "dim", dims.pop())
            if any(vsum(entries)):
                raise NonzeroSumError(f"entries sum to {vsum(entries)}, not zero")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def canonical(self) -> tuple[Vec, ...]:
        return canonical_form(self.entries)

    def is_canonical(self):
        return self.entries == self.canonical

    def to_json(self):
        return [list(k) for k in self.entries]


def reduce(c: Cycle) -> Cycle:
    return Cycle(c.canonical, c.dim)


def concat(c1: Cycle, c2: Cycle) -> Cycle:
    return Cycle(c1.entries + c2.entries, c1.dim or c2.dim)


def inverse(c: Cycle) -> Cycle:
    return Cycle(tuple(_neg(k) for k in c.entries), c.dim)


def reduced_length(c: Cycle) -> int:
    return len(c.canonical)


SumOracle = Callable[[Vec, int], "Sequence[Vec] | None"]


def decompose_steps(c: Cycle, n: int, sum_oracle: SumOracle) -> Iterator[tuple]:
    """Yield (j, l, remainder) for each splitting step of ``decompose``.

    With c = j k where j holds the first n+1 canonical entries, the oracle
    writes sum(j) as l_1 + ... + l_n; then c ~ (j)(-l) . (l)(k) and the
    second factor, reduced, is shorter than c.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cur = c.canonical
    while len(cur) > 2 * n + 1:
        j, rest = cur[: n + 1], cur[n + 1:]
        target = vsum(j)
        found = sum_oracle(target, n)
        if found is None:
            raise OracleFailure(target, n)
        l = tuple(_vec(x) for x in found)
        if len(l) != n or vsum(l, len(target)) != target:
            raise OracleFailure(target, n, f"oracle returned {l}, which does not sum to {target}")
        cur = canonical_form(l + rest)
        yield j, l, cur


def decompose(c: Cycle, n: int, sum_oracle: SumOracle) -> list[Cycle]:
    """Factor c into cycles of reduced length <= 2n+1 whose product reduces to c.

    Every factor but the last has the shape (j)(-l) with |j| = n+1, |l| = n;
    the last is the fully reduced remainder l(k).  At most max(1, len - 2n)
    factors are produced.
    """
    if reduced_length(c) <= 2 * n + 1:
        return [c]
    factors = []
    rest: tuple = ()
    for j, l, rest in decompose_steps(c, n, sum_oracle):
        factors.append(Cycle(j + tuple(_neg(x) for x in l), c.dim))
    if rest:
        factors.append(Cycle(rest, c.dim))
    return factors


# -- sums of Bragg vectors ----------------------------------------------------

MITM_POOL = 300
_HALF_SUMS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _half_sums(table, coords, b):
    """Map from every sum of b pool vectors to its first index combination."""
    cache = _HALF_SUMS.setdefault(table, {})
    key = (len(coords), b)
    if key not in cache:
        arr = np.array(coords, dtype=np.int64)
        right: dict = {}
        for combo in itertools.combinations_with_replacement(range(len(arr)), b):
            right.setdefault(tuple(arr[list(combo)].sum(axis=0).tolist()), combo)
        cache[key] = right
    return cache[key]


def sum_as_bragg(table, target, n: int, pool: int | None = None):
    """Write ``target`` as a sum of n Bragg vectors from the table, or return None.

    Meet in the middle: sums of the second half are hashed, the first half is
    scanned in order of decreasing intensity, so strong peaks are preferred.
    For n <= 2 the whole Bragg set is searched; above that the search uses
    the ``pool`` strongest peaks (default 300).  None means the finite
    search failed, not that no decomposition exists.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    target = table.canonical(_vec(target))
    if n == 1:
        return [target] if table.is_bragg(target) else None
    coords = table.bragg_coords()
    if n > 2:
        coords = coords[: pool or MITM_POOL]
    arr = np.array(coords, dtype=np.int64)
    tgt = np.array(target, dtype=np.int64)
    a = n // 2
    b = n - a
    right = _half_sums(table, coords, b)
    for combo in itertools.combinations_with_replacement(range(len(arr)), a):
        need = tuple(int(x) for x in tgt - arr[list(combo)].sum(axis=0))
        hit = right.get(need)
        if hit is not None:
            return [coords[i] for i in combo + hit]
    return None
