import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import sph_harm_y

from gravidec.kinematics import (AngularQuadrature, DEFAULT_QUADRATURE, Direction, QuadratureConfigError,
                                 angular_average, direction_vector, polarization_tensor, polarization_vector,
                                 polarization_vectors, rotate_directions, unit_vectors)

angles = st.tuples(st.floats(0.0, math.pi), st.floats(0.0, 2 * math.pi), st.sampled_from([1, -1]))


@pytest.mark.parametrize("theta, phi, expected", [
    (0.0, 0.0, (0, 0, 1)),
    (math.pi / 2, 0.0, (1, 0, 0)),
    (math.pi / 2, math.pi / 2, (0, 1, 0)),
])
def test_direction_vector(theta, phi, expected):
    assert np.allclose(direction_vector(Direction(theta, phi)), expected, atol=1e-15)


@pytest.mark.parametrize("theta, phi, gamma, expected", [
    (0.0, 0.0, 1, (-1, -1j, 0)),
    (math.pi / 2, 0.0, -1, (0, 1j, 1)),
])
def test_polarization_examples(theta, phi, gamma, expected):
    assert np.allclose(polarization_vector(Direction(theta, phi), gamma), expected, atol=1e-15)


@given(angles)
def test_polarization_algebra(a):
    th, ph, g = a
    d = Direction(th, ph)
    n = direction_vector(d)
    e = polarization_vector(d, g)
    assert abs(np.linalg.norm(n) - 1) < 1e-14
    assert abs(n @ e) < 1e-14
    assert abs(e @ e) < 1e-14
    assert abs(e @ np.conj(e) - 2) < 1e-14


@given(angles)
def test_conjugate_is_opposite_helicity(a):
    th, ph, g = a
    assert np.allclose(np.conj(polarization_vectors(th, ph, g)), polarization_vectors(th, ph, -g), atol=0)


@given(angles)
def test_tensor_properties(a):
    th, ph, g = a
    d = Direction(th, ph)
    t = polarization_tensor(d, g)
    assert np.allclose(t, t.T)
    assert abs(np.trace(t)) < 1e-14
    assert np.allclose(direction_vector(d) @ t, 0, atol=1e-14)
    assert np.sum(np.abs(t) ** 2) == pytest.approx(2.0, rel=1e-14)


def test_mc_conjugate_partner_matches_paper_rule():
    # the synthesis builds ε = conj(e e)/√2; its conjugate partner is the e e/√2 tensor
    from gravidec.mc_oracle import _pol_tensors, single_mode
    re = single_mode(1e-4, 0.8, 2.1, 1, 1.0)
    eps = _pol_tensors(re)[0]
    assert np.allclose(np.conj(eps), polarization_tensor(Direction(0.8, 2.1), 1), atol=1e-15)


@pytest.mark.parametrize("f, expected", [
    (lambda t, p: np.ones_like(t), 1.0),
    (lambda t, p: np.cos(t) ** 2, 1.0 / 3.0),
])
def test_angular_average_moments(f, expected):
    assert angular_average(f) == pytest.approx(expected, abs=1e-14)


def test_five_halves_normalization():
    val = sum(angular_average(lambda t, p, g=g: np.abs(polarization_vectors(t, p, g)[..., 0]
                                                        * polarization_vectors(t, p, g)[..., 1] / math.sqrt(2)) ** 2)
              for g in (1, -1))
    assert 2.5 * val == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("l, m", [(l, m) for l in range(5) for m in range(-l, l + 1) if (l, m) != (0, 0)])
def test_harmonics_average_to_zero(l, m):
    val = angular_average(lambda t, p: sph_harm_y(l, m, t, p))
    assert abs(val) < 1e-12


@pytest.mark.parametrize("n", [2, 5, 9])
def test_gauss_legendre_exactness(n):
    q = AngularQuadrature(n_theta=n, n_phi=n)
    deg = 2 * n - 1
    # ⟨u^deg cos((n-1)φ)⟩ vanishes, ⟨u^(2n-2)⟩ = 1/(2n-1)
    assert abs(angular_average(lambda t, p: np.cos(t) ** deg * np.cos((n - 1) * p), q)) < 1e-13
    assert angular_average(lambda t, p: np.cos(t) ** (2 * n - 2), q) == pytest.approx(1 / (2 * n - 1), rel=1e-12)


def test_weights_sum_to_one():
    for q in (DEFAULT_QUADRATURE, AngularQuadrature(n_theta=3, n_phi=1, u_breaks=(0.2,)),
              AngularQuadrature("monte-carlo", n_samples=100, seed=1)):
        assert q.nodes()[2].sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("kw", [dict(n_theta=0), dict(n_phi=0), dict(kind="simpson"),
                                dict(kind="monte-carlo"), dict(u_breaks=(1.5,))])
def test_bad_quadrature(kw):
    with pytest.raises(QuadratureConfigError):
        AngularQuadrature(**kw)


@pytest.mark.parametrize("n", [10_000, 1_000_000])
def test_monte_carlo_converges(n):
    f = lambda t, p: np.cos(t) ** 2 * (1 + np.sin(p))  # exact mean 1/3
    # standard deviation of one sample: sqrt(⟨f²⟩ - 1/9) with ⟨f²⟩ = (1/5)(3/2)
    sd = math.sqrt(0.3 - 1 / 9)
    errs = [angular_average(f, AngularQuadrature("monte-carlo", n_samples=n, seed=s)) - 1 / 3 for s in range(8)]
    assert abs(np.mean(errs)) < 4 * sd / math.sqrt(8 * n)
    assert np.std(errs) == pytest.approx(sd / math.sqrt(n), rel=0.8)


def test_rotation_preserves_directions(rng):
    th, ph = np.arccos(rng.uniform(-1, 1, 50)), rng.uniform(0, 2 * math.pi, 50)
    a = rng.uniform(0, 2 * math.pi)
    rot = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
    t2, p2 = rotate_directions(rot, th, ph)
    assert np.allclose(unit_vectors(t2, p2), unit_vectors(th, ph) @ rot.T, atol=1e-14)


def test_direction_validation():
    with pytest.raises(ValueError):
        Direction(4.0, 0.0)
    assert Direction(1.0, 7.0).phi == pytest.approx(7.0 - 2 * math.pi)


def test_refined_doubles():
    q = AngularQuadrature(n_theta=8, n_phi=4).refined()
    assert (q.n_theta, q.n_phi) == (16, 8)
