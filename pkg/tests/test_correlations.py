import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from quasicycles.correlations import (TranslateGrid, birkhoff_moment, eval_test_sum,
                                      local_sums, npoint_correlation,
                                      verify_reduced_moment_identity)
from quasicycles.errors import MarginError, NumericContractError
from quasicycles.gaussian import GaussianTestFunction as G
from quasicycles.scheme import TAU

H1 = G((0.0,), 0.3)
H2 = G((1.0,), 0.3, 0.5 + 0.5j)


def direct_sum(points, h, shift):
    total = 0j
    for x in points[:, 0]:
        total += complex(h(np.array([x - shift])))
    return total


@pytest.mark.parametrize("shift", [0.0, 0.37, -2.5])
def test_eval_test_sum_matches_direct(fib_small_patch, shift):
    h = G((0.4,), 1.2, 0.9 - 0.2j, (0.3,))
    got = eval_test_sum(fib_small_patch, h, shift)
    assert abs(got.value - direct_sum(fib_small_patch.points, h, shift)) < 1e-10
    assert 0 <= got.truncation < 1e-100


def test_truncation_grows_near_the_boundary(fib_small_patch):
    h = G((0.0,), 5.0)
    assert eval_test_sum(fib_small_patch, h, 190.0).truncation > 1e-3


def test_local_sums_match_direct(fib_small_patch):
    h = G((0.5,), 0.7, 1j)
    q = np.array([[-3.0], [0.1], [12.25]])
    got = local_sums(fib_small_patch, h, q)
    want = [direct_sum(fib_small_patch.points, h, t) for t in q[:, 0]]
    assert np.allclose(got, want, atol=1e-12)


def test_pair_correlation_matches_pair_count(fib_small_patch):
    g = G((TAU,), 0.2)
    x = fib_small_patch.points[:, 0]
    want = np.sum(g((x[None, :] - x[:, None])[..., None])) / fib_small_patch.volume
    assert npoint_correlation(fib_small_patch, [g]).value == pytest.approx(want, abs=1e-12)


def test_z_pair_correlation_matches_pair_count(z_patch):
    g = G((1.0,), 0.1)
    x = z_patch.points[:, 0]
    # every point but the last has a neighbour at +1
    want = (len(x) - 1) * complex(g(np.array([1.0]))) / z_patch.volume
    assert npoint_correlation(z_patch, [g]).value == pytest.approx(want, rel=1e-9)


def test_three_point_correlation_matches_brute_force(fib_small_patch):
    g1, g2 = G((1.0,), 0.3), G((-TAU,), 0.3, 0.5j)
    x = fib_small_patch.points[:, 0]
    diff = (x[None, :] - x[:, None])[..., None]
    want = np.sum(np.sum(g1(diff), axis=1) * np.sum(g2(diff), axis=1)) / fib_small_patch.volume
    got = npoint_correlation(fib_small_patch, [g1, g2])
    # terms beyond 6 sigma are dropped, each below exp(-18) of the peak
    assert got.value == pytest.approx(want, abs=1e-9)
    assert got.count == len(x)


def test_z_two_point_moment_matches_period_average(z_patch):
    def n_h(h, t):
        m = np.arange(-10, 11)
        return np.sum(h((m - t)[:, None]))

    def integrand(t, part):
        return part(n_h(H1, t) * n_h(H2, t))

    want = (integrate.quad(integrand, 0, 1, args=(np.real,), epsabs=1e-13)[0]
            + 1j * integrate.quad(integrand, 0, 1, args=(np.imag,), epsabs=1e-13)[0])
    got = birkhoff_moment(z_patch, [H1, H2], TranslateGrid(0.05, 10))
    assert abs(got.value - want) < 1e-6


def test_first_moment_is_density_times_integral(fib_patch):
    h = G((0.3,), 1.0, 2.0)
    got = birkhoff_moment(fib_patch, [h], TranslateGrid.for_functions([h]))
    assert got.value == pytest.approx(h.integral() * TAU / math.sqrt(5), rel=1e-3)


@settings(max_examples=10, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2))
def test_moment_is_multilinear(fib_small_patch, re, im):
    grid = TranslateGrid(0.1, 10)
    c = complex(re, im)
    a = birkhoff_moment(fib_small_patch, [H1.scaled(c), H2], grid).value
    b = birkhoff_moment(fib_small_patch, [H1, H2], grid).value
    assert a == pytest.approx(c * b, abs=1e-10)


def test_grid_margin_is_enforced(fib_small_patch):
    with pytest.raises(MarginError):
        birkhoff_moment(fib_small_patch, [H1, H2], TranslateGrid(0.1, 0.5))


def test_reach_must_fit(fib_small_patch):
    with pytest.raises(MarginError):
        npoint_correlation(fib_small_patch, [G((0.0,), 20.0)])


def test_empty_grid(fib_small_patch):
    with pytest.raises(NumericContractError):
        birkhoff_moment(fib_small_patch, [H1], TranslateGrid(0.1, 300))


def test_grid_geometry():
    g = TranslateGrid(0.5, 1.0)
    ax = g.axis(10.0)
    assert len(ax) == 16 and ax[0] == pytest.approx(-3.75) and ax[-1] == pytest.approx(3.75)
    assert g.points(10.0, 2).shape == (256, 2)


@pytest.mark.parametrize("fixture,tol", [("z_patch", 0.02), ("fib_patch", 0.05)])
def test_reduced_identity(request, fixture, tol):
    patch = request.getfixturevalue(fixture)
    g = G((0.0,), 1.0)
    hs = [G((1.0,), 0.3), G((-1.0,), 0.3, 0.5j)]
    rep = verify_reduced_moment_identity(patch, g, hs, TranslateGrid(0.05, 10))
    assert rep.n == 3
    assert rep.discrepancy <= tol


def test_stderr_shrinks_with_R(fib_patch):
    h = G((0.0,), 1.0)
    grid = TranslateGrid(0.25, 7)
    small = birkhoff_moment(fib_patch.restrict(1000), [h, h], grid)
    big = birkhoff_moment(fib_patch, [h, h], grid)
    assert big.stderr < small.stderr
