import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from oscikernel import H3, H3xH3
from oscikernel.heat_semigroup import heat_l2_norm
from oscikernel.multiplier import GammaProfile, MultiplierParams, SymbolClassParams
from oscikernel.operator import (
    apply_multiplier, global_kernel, ij_certificate, ij_summability, ks_certificate, ks_certificate_gamma, lp_norm,
    rho_p_coefficient, spherical_weight,
)
from oscikernel.space_models import heat_kernel
from oscikernel.transforms import RadialProfile

P = MultiplierParams(0.5, 2.0)

# F(R) for H3, alpha = 1/2, beta = 2: (1/(2 pi^2 R)) int_0^inf m(lam) lam sin(lam R) dlam, by mpmath quadosc
F_FROZEN = {
    0.5: 0.0147203588797160626 + 0.103947794720345432j,
    1.0: 0.0141424572858436185 + 0.0279033083482258436j,
    3.0: 9.82065609900462681e-4 + 9.62872575159189219e-4j,
}


@pytest.fixture(scope="module")
def gk_h3():
    return global_kernel(H3, P)


def _heat_profile(model, t, r_max=6.0, n=31):
    r = np.linspace(0.0, r_max, n)
    grid = (r,) if model.d == 1 else (r, r)
    return RadialProfile.from_function(model, lambda x: heat_kernel(model, t, x), grid)


@pytest.mark.parametrize("model", [H3, H3xH3], ids=["h3", "h3xh3"])
def test_apply_identity_symbol(model):
    f = _heat_profile(model, 0.5)
    out = apply_multiplier(model, lambda pts: np.ones(len(pts)), f, r_grid=np.linspace(0, 6, 31))
    assert np.max(np.abs(out.values - f.values)) <= 1e-9 * f.sup()


@pytest.mark.parametrize("model", [H3, H3xH3], ids=["h3", "h3xh3"])
def test_apply_heat_symbol_is_semigroup(model):
    t, s = 0.5, 0.25
    f = _heat_profile(model, t)
    sym = lambda pts: np.exp(-s * (np.sum(np.asarray(pts) ** 2, axis=-1) + model.rho_norm**2))
    out = apply_multiplier(model, sym, f, r_grid=np.linspace(0, 6, 31))
    ref = heat_kernel(model, t + s, out.points).reshape(out.values.shape)
    assert np.max(np.abs(out.values - ref)) <= 1e-9 * np.max(ref)


def test_apply_multiplier_output_finite_and_exact_evaluator():
    f = _heat_profile(H3, 0.5)
    out = apply_multiplier(H3, P, f, r_grid=np.linspace(0, 4, 9))
    assert np.all(np.isfinite(out.values))
    assert np.allclose(out.func(out.points), out.values.ravel(), atol=1e-14)


def test_apply_rejects_bad_symbol():
    with pytest.raises(TypeError):
        apply_multiplier(H3, 3.0, _heat_profile(H3, 0.5), lam_radius=10.0)


@pytest.mark.parametrize("model", [H3, H3xH3], ids=["h3", "h3xh3"])
def test_lp_norms_of_heat_kernel(model):
    t = 0.5
    f = lambda x: heat_kernel(model, t, x)
    assert lp_norm(model, f, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert lp_norm(model, f, 2.0) == pytest.approx(heat_l2_norm(model, t), rel=1e-9)


def test_lp_norm_rejects_p_below_one():
    with pytest.raises(ValueError):
        lp_norm(H3, lambda x: np.ones(len(x)), 0.5)


@pytest.mark.parametrize("p,c", [(1.0, 1.0), (2.0, 0.0), (4.0, 0.5), (4 / 3, 0.5), (math.inf, 1.0)])
def test_rho_p_coefficient(p, c):
    assert rho_p_coefficient(p) == pytest.approx(c)


@given(st.floats(0.0, 30.0))
def test_spherical_weight_closed_forms(r):
    x = np.array([[r]])
    assert spherical_weight(H3, 1.0, x)[0] == pytest.approx(1.0, rel=1e-13)
    rs = r / math.sinh(r) if r > 0 else 1.0
    assert spherical_weight(H3, 0.0, x)[0] == pytest.approx(rs, rel=1e-13, abs=1e-300)
    # c = 1/2 on H3: sinh(r/2) / (sinh(r)/2) = 1/cosh(r/2)
    assert spherical_weight(H3, 0.5, x)[0] == pytest.approx(1.0 / math.cosh(r / 2), rel=1e-12)


def test_spherical_weight_product_factorizes():
    pts = np.array([[0.3, 2.0], [5.0, 1.0]])
    w = spherical_weight(H3xH3, 0.5, pts)
    ref = spherical_weight(H3, 0.5, pts[:, :1]) * spherical_weight(H3, 0.5, pts[:, 1:])
    assert np.allclose(w, ref, rtol=1e-14)


def test_spherical_weight_rejects_c_out_of_range():
    with pytest.raises(ValueError):
        spherical_weight(H3, 1.5, np.array([[1.0]]))


def test_global_kernel_matches_frozen_values(gk_h3):
    R = np.array(list(F_FROZEN))
    ref = np.array(list(F_FROZEN.values()))
    assert np.max(np.abs(gk_h3.F(R) - ref) / np.abs(ref)) <= 1e-8


def test_global_kernel_envelope_decays(gk_h3):
    assert gk_h3.env_b < -0.5
    assert gk_h3.abs_F(np.array([20.0]))[0] < gk_h3.abs_F(np.array([15.0]))[0]
    with pytest.raises(ValueError):
        gk_h3.F(np.array([20.0]))


def test_global_kernel_vanishes_near_origin(gk_h3):
    assert np.all(gk_h3(np.array([[0.1], [0.4]])) == 0)


@pytest.mark.parametrize("p", [2.0, 4.0])
def test_ks_certificate_passes(gk_h3, p):
    rep = ks_certificate(H3, gk_h3, p)
    assert rep.passed, rep.summary()
    assert rep.extrapolated and rep.tail_ratio < 0.9
    assert rep.rho_p == pytest.approx(rho_p_coefficient(p))


def test_ks_synthetic_exponential_kernel():
    # |k| = e^{-2r}, p = 2: 4 pi int_{1/2}^inf r e^{-2r} sinh r dr
    k = lambda pts: np.exp(-2.0 * np.asarray(pts)[:, 0])
    rep = ks_certificate(H3, k, 2.0)
    ref = 4 * mp.pi * mp.quad(lambda r: r * mp.exp(-2 * r) * mp.sinh(r), [0.5, mp.inf])
    assert rep.integral_value + rep.tail_bound == pytest.approx(float(ref), rel=1e-7)
    # I_{j+1}/I_j ~ e^{-1} (j + 3/2)/(j + 1/2), largest at j0 = 5
    assert math.exp(-1) < rep.tail_ratio < math.exp(-1) * 6.5 / 5.5 * 1.01


def test_ks_zero_kernel():
    rep = ks_certificate(H3, lambda pts: np.zeros(len(pts)), 4.0)
    assert rep.integral_value == 0.0 and rep.tail_bound == 0.0 and rep.passed


def test_ks_gamma_trivial_profile_matches_plain(gk_h3):
    # eta = rho_p with s = 1 reproduces the untwisted certificate
    plain = ks_certificate(H3, gk_h3, 4.0)
    tw = ks_certificate_gamma(H3, gk_h3, 4.0, GammaProfile(eta_norm=0.5 * H3.rho_norm, s_exponent=1.0))
    assert tw.integral_value == pytest.approx(plain.integral_value, rel=1e-12)


def test_ks_gamma_rejects_large_eta(gk_h3):
    with pytest.raises(ValueError):
        ks_certificate_gamma(H3, gk_h3, 2.0, GammaProfile(eta_norm=2.0 * H3.rho_norm))


def test_ij_certificate_power_law():
    cls = SymbolClassParams.from_params(P, N=5)
    r = ij_certificate(H3, P, cls, 3) / ij_certificate(H3, P, cls, 2)
    assert r == pytest.approx(1.5**-5, rel=1e-12)


def test_ij_certificate_rejects_small_N():
    with pytest.raises(ValueError):
        ij_certificate(H3, P, SymbolClassParams.from_params(P, N=4), 2)


def test_ij_summability_passes():
    rep = ij_summability(H3, P, SymbolClassParams.from_params(P, N=5))
    assert rep.passed
    tails = [r["tail_bound"] for r in rep.rows]
    assert all(b < a for a, b in zip(tails, tails[1:]))
