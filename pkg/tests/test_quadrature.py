import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from oscikernel import H3, H3xH3, QuadratureSpec, RegionSpec
from oscikernel.quadrature import (
    compensated_sum, gk_rule, integrate_1d, integrate_radial, integrate_radial_separable, integrate_spectral,
)
from oscikernel.space_models import heat_kernel


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_panels=10)
    tight = QuadratureSpec().tightened(10.0)
    assert tight.rel_tol == pytest.approx(1e-11)


@given(st.integers(1, 20), st.floats(-3.0, 3.0), st.floats(0.1, 4.0))
def test_gk_rule_exact_on_polynomials(n, a, width):
    # GK15 integrates degree <= 22 exactly on each panel; Gauss-7 degree <= 13
    b = a + width
    x, wk, wg = gk_rule(a, b, n)
    exact = (b**14 - a**14) / 14
    assert abs(wk @ x**13 - exact) <= 1e-12 * max(1.0, abs(b) ** 14 + abs(a) ** 14)
    assert abs(wg @ x**13 - exact) <= 1e-12 * max(1.0, abs(b) ** 14 + abs(a) ** 14)


def test_integrate_1d_oscillatory_against_mpmath():
    f = lambda x: np.cos(40.0 * x) * np.exp(-x)  # noqa: E731
    res = integrate_1d(f, 0.0, 10.0, freq_hint=40.0, spec=QuadratureSpec(rel_tol=1e-13))
    ref = float(mp.quad(lambda x: mp.cos(40 * x) * mp.exp(-x), mp.linspace(0, 10, 60)))
    assert res.converged
    assert abs(res.value - ref) <= 1e-13 * abs(ref) + 1e-15


def test_integrate_1d_degenerate_interval():
    assert integrate_1d(np.sin, 1.0, 1.0).value == 0.0
    with pytest.raises(ValueError):
        integrate_1d(np.sin, 2.0, 1.0)


def test_compensated_sum_recovers_cancellation():
    terms = np.array([1e16, 1.0, -1e16, 1.0])
    assert compensated_sum(terms) == 2.0
    assert np.sum(terms) != 2.0


@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_heat_mass_both_models(model, t):
    res = integrate_radial(model, lambda x: heat_kernel(model, t, x), RegionSpec.all())
    assert res.converged
    assert abs(res.value - 1.0) <= 1e-10


def test_ball_volume_h3():
    # vol B(R) = 4 pi (sinh(2R)/4 - R/2)
    res = integrate_radial_separable(H3, lambda R: np.ones_like(R), RegionSpec.ball(1.5))
    exact = 4 * math.pi * (math.sinh(3.0) / 4 - 0.75)
    assert abs(res.value - exact) <= 1e-12 * exact


def test_annulus_volume_product_against_mpmath():
    # vol{a <= |H| <= b} on H3xH3 as a 2-D polar integral in mpmath
    q = -1
    a, b = 2 ** (q / 2), 2 ** ((q + 1) / 2)
    res = integrate_radial_separable(H3xH3, lambda R: np.ones_like(R), RegionSpec.annulus(q))
    ref = mp.quad(lambda R, th: R * (4 * mp.pi) ** 2 * mp.sinh(R * mp.cos(th)) ** 2 * mp.sinh(R * mp.sin(th)) ** 2,
                  [a, b], [0, mp.pi / 2])
    assert abs(res.value - float(ref)) <= 1e-10 * float(ref)


def test_spectral_heat_gives_heat_at_origin(model):
    # int exp(-t s(lam)) dPlancherel = p_t(0): the semigroup invariant
    for t in (0.5, 1.0):
        g = lambda lam, t=t: np.exp(-t * (np.sum(lam * lam, axis=-1) + model.rho_norm_sq))  # noqa: E731
        res = integrate_spectral(model, g, 40.0)
        ref = float(heat_kernel(model, t, np.zeros((1, model.d)))[0])
        assert abs(res.value - ref) <= 1e-8 * ref


def test_spectral_needs_finite_support():
    with pytest.raises(ValueError):
        integrate_spectral(H3, lambda lam: np.ones(len(lam)), math.inf)
