import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oscikernel import H3, H3xH3, RegionSpec
from oscikernel.heat_semigroup import (
    SeriesSpec, SeriesTruncationError, heat_l2_norm, lemma3_cell, oscillated_heat_series, spectral_oscillated_heat,
    sup_heat_after, verify_crude_bound, verify_heat_checks, verify_pointwise_decay,
)
from oscikernel.quadrature import integrate_radial
from oscikernel.reports import fit_exponent
from oscikernel.space_models import FOUR_PI, heat_kernel

from conftest import grid_points


def test_series_spec_validation():
    with pytest.raises(ValueError):
        SeriesSpec(delta=0.125)
    with pytest.raises(ValueError):
        SeriesSpec(tol=0.0)


def test_tau_zero_is_heat_kernel(model):
    pts = grid_points(model, [0.0, 0.5, 2.0])
    sv = oscillated_heat_series(model, 5, SeriesSpec(tau=0.0), pts)
    assert np.array_equal(sv.value.real, heat_kernel(model, 2.0**-5, pts))
    assert np.all(sv.value.imag == 0)


@pytest.mark.parametrize("tau", [1.0, -2.5, 6.0])
def test_series_matches_spectral_calculus(tau):
    r = np.array([0.5, 1.0, 2.0, 3.0])
    sv = oscillated_heat_series(H3, 4, SeriesSpec(tau=tau), r)
    ref = spectral_oscillated_heat(H3, 4, tau, r)
    assert np.max(np.abs(sv.value / ref - 1)) <= 1e-8


@given(st.floats(-8.0, 8.0), st.floats(0.0, 3.0), st.integers(0, 10))
def test_series_envelope(tau, r, j):
    sv = oscillated_heat_series(H3, j, SeriesSpec(tau=tau), np.array([r]))
    assert np.all(np.abs(sv.value) <= sv.envelope * (1 + 1e-12) + sv.remainder_bound)
    assert np.all(sv.envelope <= math.exp(abs(tau)) * sup_heat_after(H3, 2.0**-j, np.array([r])) * (1 + 1e-12))


def test_series_truncation_error():
    with pytest.raises(SeriesTruncationError):
        oscillated_heat_series(H3, 2, SeriesSpec(tau=50.0, M_max=10), np.array([1.0]))


def test_lemma3_rejects_q_below_minus_j():
    with pytest.raises(ValueError):
        lemma3_cell(H3, 4, -5, SeriesSpec())


def test_lemma3_tau0_row_under_gaussian_bound():
    for q in (-2, -1, 0):
        cell = lemma3_cell(H3, 6, q, SeriesSpec())
        assert cell["tau0_ok"]


def test_lemma3_single_j_passes():
    rep = verify_pointwise_decay(H3, [6], {6: [-3, -2, -1, 0]})
    assert rep.passed
    assert rep.fits["minus_log_S_vs_X"].slope >= 0.05


@pytest.mark.parametrize("model", [H3, H3xH3], ids=["h3", "h3xh3"])
def test_crude_bound(model):
    rep = verify_crude_bound(model, 2.0 ** -np.arange(0, 15), np.linspace(0.0, 10.0, 41))
    assert rep.passed


def test_crude_bound_closed_form_at_origin():
    rep = verify_crude_bound(H3, [0.3], [0.0])
    assert rep.rows[0]["sup_ratio"] == pytest.approx(FOUR_PI**-1.5 * math.exp(-0.3), rel=1e-14)


def test_heat_l2_norm_value():
    ref = math.sqrt(FOUR_PI**-1.5 * math.exp(-1.0))
    assert heat_l2_norm(H3, 0.5) == pytest.approx(ref, rel=1e-15)
    assert ref == pytest.approx(0.0908752, rel=1e-6)


def test_heat_l2_norm_against_quadrature(model):
    t = 0.3
    res = integrate_radial(model, lambda x: heat_kernel(model, t, x) ** 2, RegionSpec.all())
    assert math.sqrt(res.value) == pytest.approx(heat_l2_norm(model, t), rel=1e-6)


def test_heat_l2_norm_scaling(model):
    fit = fit_exponent([(j, heat_l2_norm(model, 2.0**-j)) for j in range(4, 15)])
    assert abs(fit.slope - model.n / 4) <= 0.02


def test_heat_checks_report(model):
    rep = verify_heat_checks(model)
    assert rep.passed
    assert {r["check"] for r in rep.rows} == {"mass", "normalization", "crude_bound"}
