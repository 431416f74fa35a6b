from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasicycles.cycles import (Cycle, canonical_form, concat, decompose, inverse, reduce,
                                reduced_length, sum_as_bragg, vsum)
from quasicycles.errors import NonzeroSumError, OracleFailure
from quasicycles.spectrum import enumerate_spectrum
from quasicycles.window import default_window

ALPHABET = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)]


def rewrite_normal_forms(entries):
    """All irreducible multisets reachable by deleting zeros and {k, -k} pairs."""
    start = tuple(sorted(entries))
    seen, stack, normal = {start}, [start], set()
    while stack:
        w = stack.pop()
        moves = []
        for i, k in enumerate(w):
            if not any(k):
                moves.append(w[:i] + w[i + 1:])
            neg = tuple(-c for c in k)
            for j in range(i + 1, len(w)):
                if w[j] == neg:
                    moves.append(tuple(x for t, x in enumerate(w) if t not in (i, j)))
        if not moves:
            normal.add(w)
        for m in moves:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return normal


def random_cycles(count, seed, alphabet=ALPHABET, max_len=8):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(0, max_len + 1))
        word = [alphabet[i] for i in rng.integers(len(alphabet), size=n)]
        if not any(vsum(word, 2)):
            out.append(Cycle(tuple(word), 2))
    return out


def test_reduction_agrees_with_rewriting_oracle():
    cycles = random_cycles(300, seed=1)
    for c in cycles:
        normal = rewrite_normal_forms(c.entries)
        assert len(normal) == 1
        (nf,) = normal
        assert reduce(c).entries == nf
        assert reduced_length(c) == len(nf)
    for c1, c2 in zip(cycles[::2], cycles[1::2]):
        (nf,) = rewrite_normal_forms(c1.entries + c2.entries)
        assert concat(c1, c2).canonical == nf


def test_nonzero_sum_is_rejected():
    with pytest.raises(NonzeroSumError):
        Cycle(((1, 0), (0, 1)))
    with pytest.raises(NonzeroSumError):
        Cycle(((1, 0), (-1, 0, 0)))


def _close(word):
    total = vsum(word, 2)
    return Cycle(tuple(word) + ((-total[0], -total[1]),), 2) if word else Cycle((), 2)


cycle_st = st.lists(st.sampled_from(ALPHABET), max_size=6).map(_close)


@settings(max_examples=200, deadline=None)
@given(a=cycle_st, b=cycle_st, c=cycle_st)
def test_group_laws(a, b, c):
    e = Cycle((), 2)
    assert reduce(concat(concat(a, b), c)) == reduce(concat(a, concat(b, c)))
    assert reduce(concat(a, e)) == reduce(a)
    assert reduce(concat(a, b)) == reduce(concat(b, a))
    assert reduced_length(concat(a, inverse(a))) == 0
    assert reduced_length(a) <= len(a)
    assert canonical_form(a.entries[::-1]) == a.canonical


@settings(max_examples=100, deadline=None)
@given(a=cycle_st, k=st.sampled_from(ALPHABET), pos=st.integers(0, 12))
def test_pair_and_zero_insertion_is_invisible(a, k, pos):
    e = list(a.entries)
    pos = min(pos, len(e))
    longer = Cycle(tuple(e[:pos] + [k, (0, 0), (-k[0], -k[1])] + e[pos:]), 2)
    assert longer.canonical == a.canonical


@pytest.fixture(scope="module")
def z2_table():
    from quasicycles.scheme import preset
    return enumerate_spectrum(preset("z-fixture"), default_window("z-fixture"), 40)


def z_oracle(table):
    return lambda target, n: sum_as_bragg(table, target, n)


def product_of(factors, dim=2):
    entries = ()
    for f in factors:
        entries += f.entries
    return Cycle(entries, dim)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_decompose_bounds_and_shapes(z2_table, n):
    rng = np.random.default_rng(n)
    for _ in range(30):
        ks = [int(x) for x in rng.integers(-5, 6, size=int(rng.integers(1, 12)))]
        c = Cycle(tuple((k, 0) for k in ks) + ((-sum(ks), 0),), 2)
        factors = decompose(c, n, z_oracle(z2_table))
        assert all(reduced_length(f) <= 2 * n + 1 for f in factors)
        assert product_of(factors).canonical == c.canonical
        assert len(factors) <= max(1, reduced_length(c) - 2 * n)
        if reduced_length(c) > 2 * n + 1:
            j = c.canonical[: n + 1]
            assert factors[0].entries[: n + 1] == j
            assert len(factors[0]) == 2 * n + 1


def test_short_cycle_is_its_own_decomposition(z2_table):
    c = Cycle(((1, 0), (2, 0), (-3, 0)), 2)
    assert decompose(c, 1, z_oracle(z2_table)) == [c]


def test_oracle_failure_is_reported():
    c = Cycle(((1, 0), (1, 0), (1, 0), (-3, 0)), 2)
    with pytest.raises(OracleFailure) as info:
        decompose(c, 1, lambda target, n: None)
    assert info.value.exit_code == 3


def test_lying_oracle_is_caught():
    c = Cycle(((1, 0), (1, 0), (1, 0), (-3, 0)), 2)
    with pytest.raises(OracleFailure):
        decompose(c, 1, lambda target, n: [(5, 5)])


def test_sum_as_bragg_matches_brute_force(fib_table):
    bragg = fib_table.bragg_coords()[:60]
    sums = Counter(tuple(a + b for a, b in zip(x, y)) for x in bragg for y in bragg)
    for target in list(sums)[:200:7]:
        got = sum_as_bragg(fib_table, target, 2)
        assert got is not None and vsum(got) == target
        assert all(fib_table.is_bragg(k) for k in got)
    assert sum_as_bragg(fib_table, (10**6, 0), 2) is None


def test_sum_as_bragg_single(fib_table):
    assert sum_as_bragg(fib_table, (1, 1), 1) == [(1, 1)]
    assert sum_as_bragg(fib_table, (1, 3), 1) is None  # extinction
