import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasicycles.errors import DimensionError, NumericContractError
from quasicycles.scheme import (PRESETS, TAU, CutProjectScheme, ModuleVector, dual_scheme,
                                fourier, phys_coords, physical, preset, star_coords)

ints = st.integers(-50, 50)

# (coords, k_phys, k_star) for the Fibonacci dual basis, from 40-digit arithmetic
FIB_DUAL = [
    ((1, 0), 0.27639320225002103036, 0.72360679774997896964),
    ((0, 1), 0.44721359549995793928, -0.44721359549995793928),
    ((1, 1), 0.72360679774997896964, 0.27639320225002103036),
    ((2, 1), 1.0, 1.0),
    ((1, 3), 1.6180339887498948482, -0.6180339887498948482),
    ((3, 5), 3.0652475842498527875, -0.065247584249852787486),
]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_have_dual_inverse_transpose(name):
    s = preset(name)
    assert np.allclose(s.basis.T @ s.dual_basis, np.eye(s.n), atol=1e-12)
    assert s.covolume == pytest.approx(abs(np.linalg.det(s.basis)))


@pytest.mark.parametrize("coords,kp,ks", FIB_DUAL)
def test_fibonacci_dual_embedding_matches_high_precision(coords, kp, ks):
    s = preset("fibonacci")
    full = s.embed(fourier(*coords))
    assert full[0] == pytest.approx(kp, abs=1e-14)
    assert full[1] == pytest.approx(ks, abs=1e-14)


def test_fibonacci_covolume():
    assert preset("fibonacci").covolume == pytest.approx(math.sqrt(5), rel=1e-15)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_dual_is_an_involution(name):
    s = preset(name)
    dd = dual_scheme(dual_scheme(s))
    assert np.allclose(dd.basis, s.basis, atol=1e-12)
    assert dd.label == s.label


@pytest.mark.parametrize("name", ["fibonacci", "silver-mean", "ammann-beenker"])
@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_pairing_is_integral(name, data):
    s = preset(name)
    m = physical(data.draw(st.lists(ints, min_size=s.n, max_size=s.n)))
    k = fourier(data.draw(st.lists(ints, min_size=s.n, max_size=s.n)))
    pairing = phys_coords(s, m) @ phys_coords(s, k) + star_coords(s, m) @ star_coords(s, k)
    assert pairing == pytest.approx(sum(a * b for a, b in zip(m.coords, k.coords)), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(a=st.tuples(ints, ints), b=st.tuples(ints, ints))
def test_embedding_is_linear(a, b):
    s = preset("fibonacci")
    ka, kb = fourier(*a), fourier(*b)
    assert np.allclose(s.embed(ka + kb), s.embed(ka) + s.embed(kb), atol=1e-12)
    assert np.allclose(s.embed(-ka), -s.embed(ka))


def test_module_vector_arithmetic_is_exact():
    k = fourier(3, -2) + fourier(-3, 2)
    assert k.is_zero() and k.coords == (0, 0)
    with pytest.raises(DimensionError):
        fourier(1, 0) + physical(1, 0)
    with pytest.raises(DimensionError):
        fourier(1, 0) + fourier(1, 0, 0)


def test_z_fixture_spectrum_is_integers():
    s = preset("z-fixture")
    assert s.canonical_coords((3, 7)) == (3, 0)
    assert s.embed(fourier(3, 0))[0] == 3.0


@pytest.mark.parametrize("basis,err", [
    ([[1.0, 2.0], [2.0, 4.0]], NumericContractError),
    ([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], DimensionError),
])
def test_invalid_bases_are_rejected(basis, err):
    with pytest.raises(err):
        CutProjectScheme(1, 1, basis)


def test_rank_deficient_internal_block():
    with pytest.raises(NumericContractError):
        CutProjectScheme(1, 1, [[1.0, 0.0], [0.0, 0.0]])


def test_json_round_trip():
    s = preset("ammann-beenker")
    t = CutProjectScheme.from_json(s.to_json())
    assert t == s and t.to_json() == s.to_json()


def test_module_vector_sides():
    assert ModuleVector((1, 2)).side == "fourier"
    with pytest.raises(ValueError):
        ModuleVector((1,), side="other")


def test_silver_mean_units():
    s = preset("silver-mean")
    # (1 + sqrt2) and its conjugate are star partners
    m = s.embed(physical(0, 1))
    assert m[0] == pytest.approx(1 + math.sqrt(2)) and m[1] == pytest.approx(1 - math.sqrt(2))
    assert TAU ** 2 == pytest.approx(TAU + 1)
