import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from quasicycles.errors import NumericContractError
from quasicycles.gaussian import GaussianTestFunction, bump_at, spec_hash

H = GaussianTestFunction((0.7,), 0.8, 1.3 - 0.4j, (0.35,))


def quad_ft(h, k):
    def part(fn):
        return integrate.quad(lambda x: fn(h(np.array([x]))[()] * np.exp(-2j * math.pi * k * x)),
                              -30, 30, limit=400, epsabs=1e-13)[0]
    return part(np.real) + 1j * part(np.imag)


@pytest.mark.parametrize("k", [-1.1, -0.2, 0.0, 0.35, 0.9])
def test_ft_matches_quadrature(k):
    assert abs(complex(H.ft(k)) - quad_ft(H, k)) < 1e-8


def test_integral_and_norm():
    assert H.integral() == pytest.approx(quad_ft(H, 0.0), abs=1e-10)
    l2 = integrate.quad(lambda x: abs(H(np.array([x]))[()]) ** 2, -30, 30, epsabs=1e-13)[0]
    assert H.l2_norm_sq() == pytest.approx(l2, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(k=st.floats(-3, 3), c=st.floats(-2, 2), q=st.floats(-1, 1), s=st.floats(0.1, 2))
def test_conjugate_transform(k, c, q, s):
    h = GaussianTestFunction((c,), s, 0.6 + 0.8j, (q,))
    assert complex(h.conjugate().ft(k)) == pytest.approx(complex(h.ft(-k)).conjugate(), abs=1e-12)


def test_bump_peak_value():
    b = bump_at((1.7,), 0.02)
    assert abs(complex(b.ft(1.7)) - 1) < 1e-12
    assert abs(b.ft(1.7 + 0.02)) == pytest.approx(math.exp(-0.5), rel=1e-12)
    b2 = bump_at((0.3, -0.4), 0.05)
    assert abs(complex(b2.ft(np.array([0.3, -0.4]))) - 1) < 1e-12


def test_two_dimensional_ft_factorizes():
    h = GaussianTestFunction((0.2, -0.1), 0.5)
    k = np.array([0.3, 0.7])
    g1 = GaussianTestFunction((0.2,), 0.5).ft(0.3)
    g2 = GaussianTestFunction((-0.1,), 0.5).ft(0.7)
    assert complex(h.ft(k)) == pytest.approx(complex(g1 * g2), abs=1e-14)


def test_tail_bounds_are_bounds():
    h = GaussianTestFunction((0.0,), 0.5)
    for r in (0.2, 0.5, 1.0):
        tail = 2 * integrate.quad(lambda k: abs(h.ft(k)) ** 2, r, np.inf)[0]
        assert h.ft_tail_l2_sq(r) >= tail * (1 - 1e-9)
        assert h.ft_sup_beyond(r) >= abs(h.ft(r)) * (1 - 1e-12)


def test_serialization_and_hash():
    d = H.to_dict()
    assert GaussianTestFunction.from_dict(d) == H
    assert spec_hash([H]) == spec_hash([GaussianTestFunction.from_dict(d)])
    assert spec_hash([H]) != spec_hash([H.conjugate()])


def test_sigma_floor():
    with pytest.raises(NumericContractError):
        GaussianTestFunction((0.0,), 0.0)
