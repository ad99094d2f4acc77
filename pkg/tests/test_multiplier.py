import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oscikernel import H3, H3xH3, SpectralPoint
from oscikernel.multiplier import (
    DEFAULT_PARTITION, DyadicSymbol, GammaProfile, MultiplierParams, SymbolClassParams, cutoff, eval_hj, eval_m,
    eval_mj, exponent_context, finite_difference, hj_ck_norm, hj_sup, mj_sup, smoothstep, telescoping_symbol_sum,
    tube_derivative, verify_partition, verify_symbol_class, eval_m_radial,
)

P = MultiplierParams(0.5, 2.0)


def test_params_validation():
    with pytest.raises(ValueError, match=r"alpha must lie in \(0,1\)"):
        MultiplierParams(1.5, 2.0)
    with pytest.raises(ValueError):
        MultiplierParams(0.5, -1.0)
    with pytest.raises(ValueError):
        SymbolClassParams(v=1.0)
    assert SymbolClassParams.from_params(P).theta == 0.5
    assert SymbolClassParams(N=5, theta=0.5).admissible(H3)
    assert not SymbolClassParams(N=4, theta=0.5).admissible(H3)


def test_m_at_origin_h3():
    assert abs(eval_m(P, H3, np.array([[0.0]]))[0] - cmath.exp(1j)) <= 1e-15


def test_m_at_sqrt3_h3():
    val = eval_m(P, H3, np.array([[math.sqrt(3.0)]]))[0]
    assert abs(abs(val) - 0.25) <= 1e-15
    assert abs(cmath.phase(val) - math.sqrt(2.0)) <= 1e-14


def test_m_blows_up_at_pole():
    vals = [abs(eval_m(P, H3, SpectralPoint((0.0,), v))) for v in (0.9, 0.99, 0.999)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 100
    with pytest.raises(ValueError):
        eval_m(P, H3, np.array([[0.0]]), 1.0)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_smoothstep_monotone_and_bounded(a, b):
    lo, hi = sorted((a, b))
    assert 0.0 <= smoothstep(lo) <= smoothstep(hi) <= 1.0


def test_smoothstep_symmetry():
    u = np.linspace(0, 1, 101)
    assert np.allclose(smoothstep(u) + smoothstep(1 - u), 1.0, atol=1e-15)
    assert cutoff(0.5, 1.0, 2.0) == 1.0 and cutoff(2.5, 1.0, 2.0) == 0.0


def test_partition_of_unity():
    rep = verify_partition(J=20, lam_max=2.0**10)
    assert rep.passed, rep.notes


@given(st.floats(0.0, 2.0**8))
def test_telescoping_identity(lam):
    x = np.array([lam])
    assert abs(telescoping_symbol_sum(P, H3, x, 16)[0] - eval_m_radial(P, H3, x)[0]) <= 1e-12


def test_mj_support_discipline():
    sym = DyadicSymbol(4, P, H3)
    assert eval_mj(sym, np.array([[8.0]]))[0] == 0.0  # 8 > 2^{5/2}
    a, b = sym.support
    outside = np.concatenate([np.linspace(0, a, 50), np.linspace(b, 3 * b, 50)])
    assert np.all(sym.radial(outside) == 0.0)
    ua, ub = sym.u_support
    shift = 2.0 ** -sym.j * H3.rho_norm_sq
    assert ua == pytest.approx(math.exp(-2 - shift)) and ub == pytest.approx(math.exp(-0.5 - shift))
    u = np.concatenate([np.linspace(1e-3, ua, 50), np.linspace(ub, 1.0, 50)])
    assert np.all(eval_hj(sym, u) == 0.0)


def test_m0_bound_at_one():
    val = eval_mj(DyadicSymbol(0, P, H3), np.array([[1.0]]))[0]
    assert 0 < abs(val) <= 0.5


def test_hj_zero_outside_support_and_domain():
    sym = DyadicSymbol(6, P, H3)
    assert eval_hj(sym, np.array([math.exp(-3)]))[0] == 0.0
    with pytest.raises(ValueError):
        eval_hj(sym, np.array([0.0]))


@pytest.mark.parametrize("j", [0, 4, 9, 14])
def test_hj_defining_identity(model, j):
    sym = DyadicSymbol(j, P, model)
    a, b = sym.support
    s = np.linspace(a * a, b * b, 500) + model.rho_norm_sq
    u = np.exp(-(2.0 ** -j) * s)
    assert np.max(np.abs(eval_hj(sym, u) * u - sym.of_s(s))) <= 1e-14


def test_hj_sup_scaled_is_bounded():
    vals = [hj_sup(DyadicSymbol(j, P, H3)) * 2.0 ** (P.beta * j / 2) for j in range(4, 15)]
    assert max(vals) / min(vals) <= 10.0


def test_hj_ck_norm_order_zero_is_sup():
    sym = DyadicSymbol(6, P, H3)
    assert hj_ck_norm(sym, 0).value == pytest.approx(hj_sup(sym), rel=1e-3)


def _order_ratio(j):
    c = hj_ck_norm(DyadicSymbol(j, P, H3), 2).sup_by_order
    return c[2] / c[1], 2.0 ** (P.alpha * j / 2)


def test_hj_ck_consecutive_order_ratio():
    ratio, target = _order_ratio(14)
    assert target / 4 <= ratio <= 4 * target


@pytest.mark.xfail(strict=True, reason="below j ~ 12 the ratio is set by the cutoff transition (about 32) "
                                       "rather than by the oscillation 2^{alpha j/2}; see the decisions ledger")
def test_hj_ck_consecutive_order_ratio_low_j():
    ratio, target = _order_ratio(8)
    assert target / 4 <= ratio <= 4 * target


@pytest.mark.xfail(strict=True, reason="C^1 norm of h_j times 2^{beta j/2} stays flat near 28-30 "
                                       "instead of growing like 2^{alpha j/2}; see the decisions ledger")
def test_hj_ck_slope_alpha():
    js = list(range(6, 15, 2))
    y = [math.log2(hj_ck_norm(DyadicSymbol(j, P, H3), 1).value * 2.0 ** (P.beta * j / 2)) / (j / 2) for j in js]
    assert all(abs(v - P.alpha) <= 0.1 for v in y)


def test_mj_sup_slope():
    from oscikernel.reports import fit_exponent
    fit = fit_exponent([(j, mj_sup(DyadicSymbol(j, P, H3))) for j in range(4, 15)])
    assert abs(fit.slope + P.beta / 2) <= 0.02


def test_finite_difference_exact_on_sin():
    x = np.linspace(0, 3, 7)
    assert np.allclose(finite_difference(np.sin, x, 1, 1e-2), np.cos(x), atol=1e-12)
    assert np.allclose(finite_difference(np.sin, x, 2, 1e-2), -np.sin(x), atol=1e-10)


def test_tube_derivative_order_zero_is_modulus():
    lam = np.array([50.0, 400.0])
    assert np.allclose(tube_derivative(P, H3, lam, 0.0, 0), (lam**2 + 1) ** -1.0, rtol=1e-14)


def test_tube_derivative_first_order_against_complex_step():
    # d/dlam of m at lam + 0.5 i rho via a complex-analytic central difference
    params = MultiplierParams(0.5, 0.0)
    lam, v, h = 20.0, 0.5, 1e-5
    f = lambda x: eval_m(params, H3, np.array([[x]]), tube_v=v)[0]  # noqa: E731
    fd = (f(lam + h) - f(lam - h)) / (2 * h)
    assert abs(tube_derivative(params, H3, np.array([lam]), v, 1)[0] - abs(fd)) <= 1e-7 * abs(fd)


@pytest.mark.parametrize("model", [H3, H3xH3], ids=["h3", "h3xh3"])
@pytest.mark.parametrize("v", [0.0, 0.9])
def test_symbol_class_slope(model, v):
    rep = verify_symbol_class(MultiplierParams(0.5, 0.0), model, v, 1)
    assert rep.passed, rep.notes


def test_symbol_class_slope_tight_for_real_parameters():
    rep = verify_symbol_class(MultiplierParams(0.5, 0.0), H3, 0.0, 1, tol=0.05)
    assert rep.passed


@pytest.mark.parametrize("k", [1, 2, 3])
def test_class_membership_envelope(k):
    params = MultiplierParams(0.5, 0.0)
    lam = np.geomspace(1.0, 1e3, 40)
    for v in (0.0, 0.9):
        scaled = tube_derivative(params, H3, lam, v, k) * (1 + lam**2) ** (k * 0.5 / 2)
        assert np.max(scaled[20:]) <= 2.0 * np.max(scaled[:20])


def test_exponent_context_examples():
    ctx = exponent_context(H3, 2.0, GammaProfile(eta_norm=0.3))
    assert ctx.rho_p_coeff == 0.0 and ctx.v_gamma == pytest.approx(0.3)
    ctx4 = exponent_context(H3, 4.0)
    assert ctx4.rho_p_coeff == 0.5 and ctx4.v_gamma == 0.5
    ctx43 = exponent_context(H3, 4.0 / 3.0)
    assert ctx43.v_gamma == pytest.approx(ctx4.v_gamma)
    with pytest.raises(ValueError):
        exponent_context(H3, 1.0)


@given(st.floats(1.01, 50.0), st.floats(0.0, 1.0))
def test_exponent_context_duality(p, eta):
    a = exponent_context(H3xH3, p, GammaProfile(eta * H3xH3.rho_norm))
    b = exponent_context(H3xH3, a.p_prime, GammaProfile(eta * H3xH3.rho_norm))
    assert a.v_gamma == pytest.approx(b.v_gamma, rel=1e-12, abs=1e-15)
