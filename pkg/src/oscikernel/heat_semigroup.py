"""Heat-kernel side: the oscillated semigroup series and pointwise bounds.

For h = 2^-j the operator exp(i tau e^{-h Delta}) e^{-h Delta} acting on the
Dirac mass expands as

    sum_{m >= 0} (i tau)^m / m!  p_{(m+1) h}(x),

a convergent series of exact heat kernels.  Truncation after M terms is
controlled by the rigorous envelope

    sup_{t >= T} p_t(x) <= G(max(T, t*)),   G(t) = (4 pi t)^{-n/2} e^{-|H|^2/4t},
    t* = |H|^2 / (2n),

so the remainder is at most  sum_{m > M} |tau|^m/m! * G(max((M+2)h, t*)).

The pointwise decay check regresses -log S(j,q) against X = 2^{(q+j)/2},
where S is the sup of |series| / 2^{nj/2} over the annulus
2^{q/2} <= |H| <= 2^{(q+1)/2} and |tau| <= delta X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .reports import NormReport, fit_line
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_radial
from .space_models import FOUR_PI, RegionSpec, SpaceModel, as_coords, heat_kernel, log_heat_kernel, spectral_value
from .transforms import forward, radial_symbol_kernel, radial_prefactor


@dataclass(frozen=True)
class SeriesSpec:
    tau: float = 0.0
    delta: float = 0.1
    tol: float = 1e-14
    M_max: int = 400

    def __post_init__(self):
        if not 0.0 < self.delta < 0.125:
            raise ValueError("delta must lie in (0, 1/8)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.M_max < 1:
            raise ValueError("M_max must be >= 1")


class SeriesTruncationError(RuntimeError):
    pass


def _gaussian_envelope(model: SpaceModel, t, R2):
    t = np.asarray(t, dtype=float)
    return (FOUR_PI * t) ** (-model.n / 2) * np.exp(-R2 / (4.0 * t))


def sup_heat_after(model: SpaceModel, T: float, x) -> np.ndarray:
    """Upper bound for sup_{t >= T} p_t(x) from the crude Gaussian bound."""
    R2 = np.sum(np.asarray(as_coords(model, x), dtype=float) ** 2, axis=-1)
    t_star = R2 / (2.0 * model.n)
    return _gaussian_envelope(model, np.maximum(T, t_star), R2)


@dataclass
class SeriesValue:
    value: np.ndarray
    terms: int
    remainder_bound: np.ndarray
    envelope: np.ndarray


def oscillated_heat_series(model: SpaceModel, j: int, spec: SeriesSpec, x, tau=None) -> SeriesValue:
    """sum_{m<=M} (i tau)^m/m! p_{(m+1)2^-j}(x) with a certified remainder.

    ``x`` is an array of radial points (..., d).  M is the first index past
    2 e |tau| whose remainder bound is below ``tol`` times the envelope
    sum_{m<=M} |tau|^m/m! p_{(m+1)2^-j}(x).
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    tau = spec.tau if tau is None else tau
    pts = np.asarray(as_coords(model, x), dtype=float)
    h = 2.0 ** (-j)
    a = abs(tau)
    value = np.zeros(pts.shape[:-1], dtype=complex)
    env = np.zeros(pts.shape[:-1])
    M_min = math.ceil(2 * math.e * a)
    for m in range(spec.M_max + 1):
        coef_log = (m * math.log(a) if a > 0 else (0.0 if m == 0 else -math.inf)) - gammaln(m + 1)
        if coef_log == -math.inf:
            rem = np.zeros_like(env)
            return SeriesValue(value, m, rem, env)
        coef = math.exp(coef_log)
        p = heat_kernel(model, (m + 1) * h, pts)
        value = value + (1j ** (m % 4)) * coef * p * (1.0 if tau >= 0 or m % 2 == 0 else -1.0)
        env = env + coef * p
        if m >= M_min and m + 2 > a:
            # Poisson tail sum_{k > m} a^k/k! <= a^{m+1}/(m+1)! / (1 - a/(m+2))
            tail = math.exp((m + 1) * math.log(a) - gammaln(m + 2)) / (1.0 - a / (m + 2)) if a > 0 else 0.0
            rem = tail * sup_heat_after(model, (m + 2) * h, pts)
            if np.all(rem <= spec.tol * env):
                return SeriesValue(value, m + 1, rem, env)
    raise SeriesTruncationError(f"series did not reach tol={spec.tol} within M_max={spec.M_max} terms")


def spectral_oscillated_heat(model: SpaceModel, j: int, tau: float, r_norm) -> np.ndarray:
    """Same quantity via inversion of exp(i tau e^{-h s}) e^{-h s} (rank one)."""
    h = 2.0 ** (-j)
    rho2 = model.rho_norm_sq

    def M(k):
        e = np.exp(-h * (k * k + rho2))
        return np.exp(1j * tau * e) * e

    cut = math.sqrt(40.0 / h)
    r_norm = np.atleast_1d(np.asarray(r_norm, dtype=float))
    F, _ = radial_symbol_kernel(model, M, r_norm, 0.0, cut)
    if model.d == 1:
        return radial_prefactor(model, r_norm[:, None]) * F
    raise ValueError("spectral cross-check is provided for rank one; use radial points via kernels")


def _annulus_points(model: SpaceModel, q: float, n_interior: int = 8, n_dir: int = 5) -> np.ndarray:
    r_in = 2.0 ** (q / 2)
    r_out = 2.0 ** ((q + 1) / 2)
    radii = np.concatenate([[r_in], np.linspace(r_in, r_out, n_interior + 2)[1:-1]])
    if model.d == 1:
        return radii[:, None]
    theta = np.linspace(0.0, math.pi / 2, n_dir)
    pts = [np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1) for r in radii]
    return np.concatenate(pts, axis=0)


def lemma3_cell(model: SpaceModel, j: int, q: float, spec: SeriesSpec) -> dict:
    """S(j, q) over the tau set {0, +-dX/2, +-dX} and the annulus sample."""
    if q < -j:
        raise ValueError(f"Lemma 3 needs q >= -j (got j={j}, q={q})")
    if q > 2:
        raise ValueError("q must be <= 2 at desk scale")
    X = 2.0 ** ((q + j) / 2)
    pts = _annulus_points(model, q)
    scale = 2.0 ** (model.n * j / 2)
    taus = [0.0, spec.delta * X / 2, -spec.delta * X / 2, spec.delta * X, -spec.delta * X]
    per_tau = {}
    for tau in taus:
        sv = oscillated_heat_series(model, j, spec, pts, tau=tau)
        per_tau[tau] = float(np.max(np.abs(sv.value))) / scale
    S = max(per_tau.values())
    bound0 = (FOUR_PI) ** (-model.n / 2) * math.exp(-(2.0 ** (q + j)) / 4.0)
    return {"j": j, "q": q, "X": X, "S": S, "S_tau0": per_tau[0.0], "tau0_bound": bound0,
            "tau0_ok": per_tau[0.0] <= bound0 * (1 + 1e-12)}


def verify_pointwise_decay(model: SpaceModel, j_list, q_lists=None, spec: SeriesSpec = SeriesSpec(),
                           resid_frac: float = 0.2) -> NormReport:
    """Lemma 3: -log S(j,q) grows at least linearly in X = 2^{(q+j)/2}.

    ``q_lists`` maps j to its q values (default -j/2..0).  Pass requires a
    positive fitted coefficient, a maximal residual below ``resid_frac`` of
    the range of the fitted trend, and the tau = 0 row under the closed-form
    Gaussian bound.
    """
    rows = []
    for j in j_list:
        qs = q_lists[j] if q_lists is not None else list(range(-(j // 2), 1))
        for q in qs:
            rows.append(lemma3_cell(model, j, q, spec))
    X = np.array([r["X"] for r in rows])
    y = -np.log(np.array([r["S"] for r in rows]))
    fit = fit_line(X, y)
    trend = fit.slope * X + fit.intercept
    trend_range = float(trend.max() - trend.min())
    resid_ok = fit.max_abs_residual < resid_frac * trend_range
    tau0_ok = all(r["tau0_ok"] for r in rows)
    monotone = True
    for j in j_list:
        s = [r["S"] for r in rows if r["j"] == j]
        monotone &= all(b <= a * (1 + 1e-12) for a, b in zip(s, s[1:]))
    for r in rows:
        r["c_hat"] = fit.slope
    rep = NormReport("lemma3_pointwise_decay", rows, {"minus_log_S_vs_X": fit},
                     passed=bool(fit.slope > 0 and resid_ok and tau0_ok),
                     tolerances={"delta": spec.delta, "resid_frac": resid_frac})
    rep.notes.append(f"c_hat={fit.slope:.4g}, max_resid={fit.max_abs_residual:.3g}, trend_range={trend_range:.3g}")
    rep.notes.append(f"tau0 rows bounded: {tau0_ok}; S monotone in q: {monotone}")
    return rep


def verify_crude_bound(model: SpaceModel, t_grid, r_grid) -> NormReport:
    """sup of p_t(x) t^{n/2} e^{|H|^2/4t} against (4 pi)^{-n/2}."""
    t_grid = np.asarray(t_grid, dtype=float)
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(r_grid < 0):
        raise ValueError("grids must be positive")
    if model.d == 1:
        pts = r_grid[:, None] if r_grid.ndim == 1 else r_grid
    else:
        if r_grid.ndim == 1:
            A, B = np.meshgrid(r_grid, r_grid, indexing="ij")
            pts = np.stack([A.ravel(), B.ravel()], axis=-1)
        else:
            pts = r_grid
    R2 = np.sum(pts * pts, axis=-1)
    bound = FOUR_PI ** (-model.n / 2)
    rows = []
    worst = 0.0
    for t in t_grid:
        # log domain: p_t underflows long before the ratio leaves [0, 1]
        ratio = np.exp(log_heat_kernel(model, t, pts) + 0.5 * model.n * math.log(t) + R2 / (4.0 * t))
        sup = float(np.max(ratio))
        worst = max(worst, sup)
        rows.append({"t": float(t), "sup_ratio": sup, "bound": bound})
    passed = worst <= bound * (1 + 1e-12)
    return NormReport("crude_heat_bound", rows, passed=passed, tolerances={"rel": 1e-12},
                      notes=[f"worst ratio / bound = {worst / bound:.15f}"])


def heat_l2_norm(model: SpaceModel, t: float) -> float:
    """||p_t||_{L^2(X)} = sqrt(p_{2t}(0)) by the semigroup property."""
    if not t > 0:
        raise ValueError("t must be positive")
    return math.sqrt(float(heat_kernel(model, 2.0 * t, np.zeros(model.d))))


def verify_heat_checks(model: SpaceModel, t_list=(0.1, 1.0), lam_max: float = 8.0, n_lam: int = 33,
                       tol: float = 1e-8, spec: QuadratureSpec = DEFAULT_SPEC) -> NormReport:
    """Mass one, spectral normalization e^{-t s(lam)} and the crude Gaussian bound.

    One row per (check, t).  The normalization row records the sup over a
    grid of |lam| <= lam_max (a square grid in rank two, clipped to the disc).
    """
    rows = []
    ok = True
    lam = np.linspace(0.0, lam_max, n_lam)
    for t in t_list:
        res = integrate_radial(model, lambda x, t=t: heat_kernel(model, t, x), RegionSpec.all(), spec)
        mass_err = abs(float(np.real(res.value)) - 1.0)
        ok &= bool(res.converged) and mass_err <= tol
        rows.append({"check": "mass", "t": t, "error": mass_err, "tol": tol})

        prof = forward(model, lambda x, t=t: heat_kernel(model, t, x), (lam,) * model.d, spec)
        grid = np.stack(np.meshgrid(*prof.grid, indexing="ij"), axis=-1)
        lam_norm = np.sqrt(np.sum(grid ** 2, axis=-1))
        exact = np.exp(-t * spectral_value(model, lam_norm))
        inside = lam_norm <= lam_max * (1 + 1e-12)
        norm_err = float(np.max(np.abs(prof.values - exact)[inside]))
        ok &= norm_err <= tol
        rows.append({"check": "normalization", "t": t, "error": norm_err, "tol": tol})

    crude = verify_crude_bound(model, 2.0 ** -np.arange(0, 15), np.linspace(0.0, 12.0, 121))
    worst = max(r["sup_ratio"] for r in crude.rows) / FOUR_PI ** (-model.n / 2) - 1.0
    rows.append({"check": "crude_bound", "t": float("nan"), "error": max(worst, 0.0), "tol": 1e-12})
    ok &= crude.passed
    return NormReport(f"heat_checks[{model.id}]", rows, passed=bool(ok), tolerances={"abs": tol})
