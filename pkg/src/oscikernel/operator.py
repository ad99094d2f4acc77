"""Applying the multiplier operator and Kunze-Stein certificates for the part at infinity.

T = Delta^{-beta/2} exp(i Delta^{alpha/2}) acts on radial functions through
the spherical transform:  T f = H^{-1}( m * H f ).

For the kernel part at infinity, kappa^inf = (1 - zeta) kappa, the convolution
norm on L^p is controlled by

    int_{|H| >= 1/2} |kappa^inf(H)| phi_{-i nu}(H) delta(H) dH,   nu = |2/p - 1| rho,

and on a locally symmetric quotient by the same integral with weight
phi_{-i eta}^{s(p)}.  On the models

    phi_{-i nu}(r) = prod_i sinh(nu_i r_i) / (nu_i sinh r_i),

which is r/sinh r per factor at nu = 0 and identically 1 at nu = rho.

The full kernel is not absolutely convergent as an inverse transform, so its
oscillatory factor is assembled as a dyadic sum

    F = F_low + sum_j F_j,   F_low <- m chi(sqrt2 |lam|),   F_j <- m_j,

truncated once every radius has seen an increment below 1e-8 of the partial
sum.  Beyond r_env (15 by default) |F| is continued by an exponential
envelope fitted on [r_env - 5, r_env]; reports flag this.

The annular quantities I_j are integrals over unit annuli j <= |H| <= j+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .kernels import DEFAULT_ZETA, CutoffSpec
from .multiplier import (
    DEFAULT_PARTITION,
    SQRT2,
    DyadicSymbol,
    FDAccuracyError,
    GammaProfile,
    MultiplierParams,
    PartitionSpec,
    SymbolClassParams,
    eval_m,
    eval_m_radial,
    tube_derivative,
)
from .quadrature import DEFAULT_SPEC, QuadratureError, QuadratureSpec, integrate_radial
from .reports import NormReport, fit_line
from .space_models import RegionSpec, SpaceModel, log_r_over_sinh, phi1
from .transforms import (
    RadialProfile,
    SpectralProfile,
    TransformError,
    _axes,
    _symbol_mass,
    _tensor_points,
    forward,
    inverse,
    radial_prefactor,
    radial_symbol_kernel,
    spectral_rule,
)

__all__ = [
    "apply_multiplier",
    "lp_norm",
    "spherical_weight",
    "rho_p_coefficient",
    "GlobalKernel",
    "global_kernel",
    "KSReport",
    "ks_certificate",
    "ks_certificate_gamma",
    "ij_spectral_sum",
    "ij_certificate",
    "ij_summability",
]

KERNEL_SPEC = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-300)
KS_SPEC = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-300)


# ---------------------------------------------------------------------------
# the operator on radial test functions
# ---------------------------------------------------------------------------

def _symbol_callable(model: SpaceModel, symbol) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(symbol, MultiplierParams):
        return lambda pts: eval_m(symbol, model, pts)
    if isinstance(symbol, SpectralProfile):
        return lambda pts: symbol(pts)
    if callable(symbol):
        return lambda pts: np.asarray(symbol(pts), dtype=complex)
    raise TypeError("symbol must be a SpectralProfile, MultiplierParams or a callable on (N, d) points")


def _spectral_radius(model: SpaceModel, f: RadialProfile, spec: QuadratureSpec, tol: float = 1e-16) -> float:
    """Smallest |lam| on a doubling scan beyond which |Hf| < tol * |Hf(0)|."""
    origin = np.zeros(1) if model.d == 1 else (np.zeros(1), np.zeros(1))
    f0 = abs(complex(forward(model, f, origin, spec).values.ravel()[0]))
    if f0 == 0.0:
        raise TransformError("test function has vanishing mean; give lam_radius explicitly")
    lam = 2.0
    while lam < 512.0:
        probe = np.array([lam])
        v = forward(model, f, probe if model.d == 1 else (probe, np.zeros(1)), spec).values
        if np.max(np.abs(v)) < tol * f0:
            return lam
        lam *= 1.5
    raise TransformError("spherical transform of the test function does not decay by |lam| = 512")


def apply_multiplier(model: SpaceModel, symbol, f: RadialProfile, r_grid=None, lam_radius: float | None = None,
                     r_max: float = 40.0, spec: QuadratureSpec = DEFAULT_SPEC) -> RadialProfile:
    """T f = H^-1(m * H f) for a radial test function f.

    H f is sampled on a composite GK rule on [0, lam_radius]^d, multiplied
    by the symbol and inverted with the same weights.  The rule is doubled
    until the embedded Gauss estimate agrees to 1e-10; the result carries an
    exact evaluator valid for |H| <= r_max.
    """
    if r_grid is None:
        r_grid = np.linspace(0.0, 8.0, 81)
    msym = _symbol_callable(model, symbol)
    if lam_radius is None:
        lam_radius = _spectral_radius(model, f, spec)
    if model.d == 2 and not isinstance(r_grid, tuple) and np.ndim(r_grid) == 1:
        r_grid = (np.asarray(r_grid, dtype=float),) * 2
    axes_out = _axes(model, r_grid)
    n = max(32, math.ceil(lam_radius * (r_max + 1.0) / (2 * math.pi) * spec.osc_panels_per_period / 4))
    last_err = None
    while n <= 4096:
        rule = spectral_rule(model, lam_radius, n)
        Hf = forward(model, f, rule, spec)
        vals = Hf.values * msym(_tensor_points(rule.axes)).reshape(Hf.values.shape)
        radius = lam_radius * (SQRT2 if model.d == 2 else 1.0)
        prof = SpectralProfile(model, rule, vals, radius)
        try:
            out = inverse(model, prof, axes_out, spec, sample_tol=1e-10)
        except TransformError as exc:
            last_err = exc
            n *= 2
            continue
        out.func = _rule_evaluator(model, rule, vals)
        return out
    raise TransformError(f"apply_multiplier: spectral rule did not resolve the product ({last_err})")


def _rule_evaluator(model: SpaceModel, rule, vals):
    dens = [a * a / (2.0 * math.pi**2) for a in rule.axes]

    def func(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, model.d)
        if model.d == 1:
            P = phi1(rule.axes[0][:, None], pts[None, :, 0])
            return (rule.wk[0] * dens[0] * vals) @ P
        Pa = phi1(rule.axes[0][:, None], pts[None, :, 0])
        Pb = phi1(rule.axes[1][:, None], pts[None, :, 1])
        C = (rule.wk[0] * dens[0])[:, None] * vals * (rule.wk[1] * dens[1])[None, :]
        return np.sum(Pa * (C @ Pb), axis=0)

    return func


def lp_norm(model: SpaceModel, f: RadialProfile | Callable, p: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(int_X |f|^p)^{1/p} by radial quadrature over the whole space."""
    if not 1.0 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    res = integrate_radial(model, lambda x: np.abs(f(x)) ** p, RegionSpec.all(), spec)
    if not res.converged:
        raise QuadratureError(f"L^{p} norm: radial tail did not converge (tail bound {res.tail_bound:.3g})")
    return float(np.real(res.value)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# spherical weights
# ---------------------------------------------------------------------------

def rho_p_coefficient(p: float) -> float:
    """c with rho_p = c rho, c = |2/p - 1|."""
    if not 1.0 <= p <= math.inf:
        raise ValueError("p must lie in [1, inf]")
    return abs(2.0 / p - 1.0) if p != math.inf else 1.0


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    xs = np.where(x > 0, x, 1.0)
    return np.where(x > 0, xs + np.log1p(-np.exp(-2.0 * xs)) - math.log(2.0), -np.inf)


def spherical_weight(model: SpaceModel, c: float, pts, power: float = 1.0) -> np.ndarray:
    """phi_{-i c rho}(H)^power = prod_i [sinh(c rho_i r_i) / (c rho_i sinh r_i)]^power.

    ``c`` lies in [0, 1]: c = 0 gives prod r_i/sinh r_i, c = 1 gives 1.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError("weight coefficient must lie in [0, 1] (eta_norm <= |rho|)")
    pts = np.asarray(pts, dtype=float).reshape(-1, model.d)
    logw = np.zeros(len(pts))
    for i, rho_i in enumerate(model.rho):
        r = pts[:, i]
        nu = c * rho_i
        if nu == 0.0:
            logw += log_r_over_sinh(r)
            continue
        # sinh(nu r)/(nu sinh r) -> 1/1 at r = 0
        small = r < 1e-8
        rs = np.where(small, 1.0, r)
        val = _log_sinh(nu * rs) - math.log(nu) - _log_sinh(rs)
        logw += np.where(small, 0.0, val)
    return np.exp(power * logw)


# ---------------------------------------------------------------------------
# the kernel at infinity
# ---------------------------------------------------------------------------

@dataclass
class GlobalKernel:
    """kappa^inf = (1 - zeta) kappa through its oscillatory factor F(|H|).

    ``R`` and ``F_values`` tabulate F on [zeta.inner, r_env]; beyond r_env
    only |F| is available, continued by exp(env_a + env_b R).
    """

    model: SpaceModel
    params: MultiplierParams | None
    R: np.ndarray
    F_values: np.ndarray
    zeta: CutoffSpec
    r_env: float
    env_a: float
    env_b: float
    env_resid: float
    j_used: int
    notes: list[str] = field(default_factory=list)

    def _interp(self):
        from scipy.interpolate import CubicSpline

        if not hasattr(self, "_spl"):
            self._spl = (CubicSpline(self.R, self.F_values.real), CubicSpline(self.R, self.F_values.imag))
        return self._spl

    def F(self, R) -> np.ndarray:
        """Tabulated F for |H| <= r_env (complex)."""
        R = np.asarray(R, dtype=float)
        if np.any(R > self.r_env * (1 + 1e-12)):
            raise ValueError("F is tabulated up to r_env only; use abs_F beyond")
        sr, si = self._interp()
        return sr(R) + 1j * si(R)

    def abs_F(self, R) -> np.ndarray:
        R = np.asarray(R, dtype=float)
        out = np.empty(R.shape)
        inside = R <= self.r_env
        sr, si = self._interp()
        Ri = np.maximum(R[inside], self.R[0])
        out[inside] = np.abs(sr(Ri) + 1j * si(Ri))
        out[~inside] = np.exp(self.env_a + self.env_b * R[~inside])
        return out

    def abs_kernel(self, pts) -> np.ndarray:
        """|kappa^inf| at points (N, d), envelope-continued beyond r_env."""
        pts = np.asarray(pts, dtype=float).reshape(-1, self.model.d)
        n = np.linalg.norm(pts, axis=-1)
        return (1.0 - self.zeta(n)) * self.abs_F(n) * radial_prefactor(self.model, pts)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.model.d)
        n = np.linalg.norm(pts, axis=-1)
        return (1.0 - self.zeta(n)) * self.F(np.maximum(n, self.R[0])) * radial_prefactor(self.model, pts)


def _fit_envelope(R, F, lo, hi):
    sel = (R >= lo) & (R <= hi)
    y = np.log(np.maximum(np.abs(F[sel]), 1e-300))
    fit = fit_line(R[sel], y)
    return fit.intercept, fit.slope, fit.max_abs_residual


def global_kernel(model: SpaceModel, params: MultiplierParams, r_env: float = 15.0, points_per_unit: int = 40,
                  zeta: CutoffSpec = DEFAULT_ZETA, rel_stop: float = 1e-8, j_cap: int = 40,
                  partition: PartitionSpec = DEFAULT_PARTITION, spec: QuadratureSpec = KERNEL_SPEC) -> GlobalKernel:
    """Dyadic-sum kernel factor of the full multiplier on zeta.inner <= |H| <= r_env.

    Terms are added until two consecutive dyadic increments of kappa^inf
    are below ``rel_stop`` times the partial sum at every tabulated radius
    (radii where 1 - zeta < rel_stop carry no weight) or below the roundoff
    floor 1e-15 max |F| of the sum.
    """
    R = np.linspace(zeta.inner, r_env, int(round((r_env - zeta.inner) * points_per_unit)) + 1)

    def low(k):
        return eval_m_radial(params, model, k) * partition.chi(SQRT2 * k)

    F, _ = radial_symbol_kernel(model, low, R, 0.0, partition.outer / SQRT2, spec)
    outer = 1.0 - zeta(R)
    quiet = 0
    j_used = -1
    for j in range(j_cap + 1):
        sym = DyadicSymbol(j, params, model, partition)
        a, b = sym.support
        Fj, _ = radial_symbol_kernel(model, sym.radial, R, a, b, spec)
        F = F + Fj
        j_used = j
        # increments of kappa^inf itself: the (1 - zeta) factor is common
        # increments under the roundoff floor of the sum count as settled
        floor = 1e-15 * float(np.max(np.abs(F)))
        quiet = quiet + 1 if np.all(outer * np.abs(Fj) <= rel_stop * np.abs(F) + floor) else 0
        if quiet >= 2:
            break
    else:
        raise TransformError(f"dyadic kernel sum did not settle by j = {j_cap}")
    a_env, b_env, resid = _fit_envelope(R, F, r_env - 5.0, r_env)
    gk = GlobalKernel(model, params, R, F, zeta, r_env, a_env, b_env, resid, j_used)
    gk.notes.append(f"dyadic sum truncated after j={j_used}; envelope log|F| = {a_env:.4g} + ({b_env:.4g}) R "
                    f"fitted on [{r_env - 5:g}, {r_env:g}], max residual {resid:.3g}")
    if b_env >= 0:
        raise TransformError("kernel envelope is not decaying; extrapolation refused")
    return gk


# ---------------------------------------------------------------------------
# Kunze-Stein certificates
# ---------------------------------------------------------------------------

@dataclass
class KSReport:
    p: float
    rho_p: float
    eta_norm: float
    s_p: float
    integral_value: float
    tail_bound: float
    j_values: list[int]
    I_j: list[float]
    certificate: list[float]
    tail_ratio: float
    passed: bool
    extrapolated: bool = False
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] ks_certificate p={self.p:g} eta={self.eta_norm:g} s={self.s_p:g}: "
                f"integral={self.integral_value:.6g} tail_ratio={self.tail_ratio:.4g}")

    def to_csv(self, path):
        import csv
        from pathlib import Path

        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "eta_norm", "s_p", "integral", "j", "I_j", "certificate_j", "tail_ratio", "pass"])
            for i, (j, v) in enumerate(zip(self.j_values, self.I_j)):
                cert = self.certificate[i] if i < len(self.certificate) else ""
                w.writerow([repr(self.p), repr(self.eta_norm), repr(self.s_p), repr(self.integral_value), j,
                            repr(v), cert if cert == "" else repr(cert), repr(self.tail_ratio), int(self.passed)])
        return path


def _abs_kernel_fn(kernel):
    if isinstance(kernel, GlobalKernel):
        return kernel.abs_kernel, kernel.r_env, True
    if isinstance(kernel, RadialProfile):
        if kernel.func is not None:
            return (lambda pts: np.abs(kernel.func(np.asarray(pts).reshape(-1, kernel.model.d)))), math.inf, False
        top = float(min(np.max(a) for a in kernel.grid))
        return (lambda pts: np.abs(kernel(pts))), top, False
    if callable(kernel):
        return (lambda pts: np.abs(kernel(pts))), math.inf, False
    raise TypeError("global_kernel must be a GlobalKernel, RadialProfile or callable")


def _ks_integrals(model: SpaceModel, kernel, c: float, power: float, p: float, eta_norm: float,
                  j0: int = 5, ratio_max: float = 0.9, r_top: float = 40.0,
                  spec: QuadratureSpec = KS_SPEC) -> KSReport:
    absk, r_valid, env = _abs_kernel_fn(kernel)
    if not math.isfinite(r_valid) or env:
        r_cap = r_top
    else:
        r_cap = min(r_top, r_valid)

    def g(pts):
        return absk(pts) * spherical_weight(model, c, pts, power)

    def shell(lo, hi):
        res = integrate_radial(model, g, RegionSpec.shell(lo, hi), spec)
        if not res.converged:
            raise QuadratureError(f"KS integral did not converge on [{lo}, {hi}]")
        return float(np.real(res.value))

    inner = shell(0.5, 1.0)
    js = list(range(1, int(math.floor(r_cap))))
    Ij = [shell(j, j + 1) for j in js]
    ratios = [b / a if a > 0 else (0.0 if b == 0 else math.inf) for a, b in zip(Ij, Ij[1:])]
    late = [r for j, r in zip(js, ratios) if j >= j0]
    tail_ratio = max(late) if late else 0.0
    total = inner + sum(Ij)
    if Ij and Ij[-1] > 0 and tail_ratio < 1:
        tail = Ij[-1] * tail_ratio / (1.0 - tail_ratio)
    elif Ij and Ij[-1] == 0:
        tail = 0.0
    else:
        tail = math.inf
    passed = bool(tail_ratio < ratio_max and math.isfinite(total + tail) and total >= 0)
    rep = KSReport(p, c * model.rho_norm, eta_norm, power, total, tail, js, Ij, [], tail_ratio, passed,
                   extrapolated=env)
    if env:
        rep.notes.append(f"|kernel| beyond r = {kernel.r_env:g} is an exponential envelope extrapolation")
        rep.notes.extend(kernel.notes)
    if r_cap < r_top:
        rep.notes.append(f"kernel tabulated only up to |H| = {r_cap:g}; tail beyond it is the geometric bound")
    rep.notes.append(f"geometric tail bound beyond |H| = {js[-1] + 1 if js else 1}: {tail:.3g}")
    return rep


def ks_certificate(model: SpaceModel, global_kernel, p: float, j0: int = 5, ratio_max: float = 0.9,
                   spec: QuadratureSpec = KS_SPEC) -> KSReport:
    """int_{|H| >= 1/2} |kappa^inf| phi_{-i rho_p} over the space, with unit-annulus pieces I_j.

    Passes iff max_{j >= j0} I_{j+1}/I_j < ratio_max and the total is finite.
    """
    c = rho_p_coefficient(p)
    return _ks_integrals(model, global_kernel, c, 1.0, p, c * model.rho_norm, j0, ratio_max, spec=spec)


def ks_certificate_gamma(model: SpaceModel, global_kernel, p: float, profile: GammaProfile, j0: int = 5,
                         ratio_max: float = 0.9, spec: QuadratureSpec = KS_SPEC) -> KSReport:
    """Same integral with weight phi_{-i eta}^{s(p)}, eta aligned with rho."""
    if profile.eta_norm > model.rho_norm * (1 + 1e-12):
        raise ValueError("eta_norm must not exceed |rho|")
    c = min(1.0, profile.eta_norm / model.rho_norm)
    rep = _ks_integrals(model, global_kernel, c, profile.s(p), p, profile.eta_norm, j0, ratio_max, spec=spec)
    rep.notes.append("eta is aligned with rho (directional convention)")
    return rep


# ---------------------------------------------------------------------------
# annular certificate from the symbol class
# ---------------------------------------------------------------------------

def _bracket(lam):
    return np.sqrt(1.0 + lam * lam)


def _radial_measure(model: SpaceModel, lam):
    """Lebesgue measure on a* = R^d in polar form: |S^{d-1}| lam^{d-1}."""
    return 2.0 * np.ones_like(lam) if model.d == 1 else 2.0 * math.pi * lam


@dataclass
class IjSpectralSum:
    value: float
    terms: list[float]
    computed_orders: int
    envelope_c: list[float]
    notes: list[str] = field(default_factory=list)


_IJ_CACHE: dict = {}


def ij_spectral_sum(model: SpaceModel, params: MultiplierParams, cls: SymbolClassParams,
                    lam_max: float = 1e4, n_log: int = 600) -> IjSpectralSum:
    """sum_{k<=N} ( int_{a*} (<lam>^{b'-N+k} |d^k m(lam + i v rho)|)^2 dlam )^{1/2}.

    Orders k <= 4 use tube_derivative; higher orders use the envelope
    c_k (1 + |lam|)^{-beta - k(1 - alpha)} with log(c_k / k!) extrapolated
    linearly from k = 1..4.  Beyond lam_max the integrand is continued by
    its (in2) power law.
    """
    key = (model.id, params, cls, lam_max, n_log)
    if key in _IJ_CACHE:
        return _IJ_CACHE[key]
    N = cls.N
    bp = model.b_prime
    lam = np.concatenate([np.linspace(0.0, 1.0, 201)[:-1], np.geomspace(1.0, lam_max, n_log)])
    theta = 1.0 - params.alpha
    env_exp = lambda k: -params.beta - k * theta
    terms = []
    cks = []
    notes = []
    for k in range(0, min(N, 4) + 1):
        try:
            dk = tube_derivative(params, model, lam, cls.v, k)
        except FDAccuracyError as exc:
            raise FDAccuracyError(f"order {k}: {exc}") from exc
        cks.append(float(np.max(dk * (1.0 + lam) ** (-env_exp(k)))))
        integrand = (_bracket(lam) ** (bp - N + k) * dk) ** 2 * _radial_measure(model, lam)
        terms.append(_integrate_profile(lam, integrand, 2 * (bp - N + k + env_exp(k)) + model.d - 1))
    if N > 4:
        ks = np.arange(1, 5)
        y = np.log(np.array(cks[1:5])) - np.array([math.lgamma(k + 1) for k in ks])
        fit = fit_line(ks, y)
        if not np.isfinite(fit.slope) or fit.max_abs_residual > 2.0:
            raise ValueError(f"envelope fit for c_k failed (residual {fit.max_abs_residual:.3g})")
        notes.append(f"log(c_k/k!) = {fit.intercept:.4g} + {fit.slope:.4g} k fitted on k=1..4")
        for k in range(5, N + 1):
            ck = math.exp(fit.intercept + fit.slope * k + math.lgamma(k + 1))
            cks.append(ck)
            dk = ck * (1.0 + lam) ** env_exp(k)
            integrand = (_bracket(lam) ** (bp - N + k) * dk) ** 2 * _radial_measure(model, lam)
            terms.append(_integrate_profile(lam, integrand, 2 * (bp - N + k + env_exp(k)) + model.d - 1))
    sq = [math.sqrt(t) for t in terms]
    out = IjSpectralSum(float(sum(sq)), sq, min(N, 4), cks, notes)
    _IJ_CACHE[key] = out
    return out


def _integrate_profile(lam, vals, tail_exponent):
    """Trapezoid in lam on [0, 1] and in log lam beyond, plus a power-law tail."""
    lin = lam <= 1.0
    head = float(trapezoid(vals[lin], lam[lin]))
    lg = lam >= 1.0
    x = np.log(lam[lg])
    body = float(trapezoid(vals[lg] * lam[lg], x))
    if tail_exponent >= -1.0:
        raise ValueError(f"spectral integrand is not integrable at infinity (exponent {tail_exponent:g})")
    L = lam[-1]
    tail = float(vals[-1]) * L / (-tail_exponent - 1.0)
    return head + body + tail


def ij_certificate(model: SpaceModel, params: MultiplierParams, cls: SymbolClassParams, j: int) -> float:
    """j^{-N} j^{(d-1)/2} times the spectral sum (constant c dropped)."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if not cls.admissible(model):
        raise ValueError(f"N={cls.N} is below the threshold (n+1)/(2 theta) = {(model.n + 1) / (2 * cls.theta):g}")
    S = ij_spectral_sum(model, params, cls).value
    return j ** (-cls.N) * j ** ((model.d - 1) / 2) * S


def ij_summability(model: SpaceModel, params: MultiplierParams, cls: SymbolClassParams,
                   cauchy_tol: float = 1e-6, J_max: int = 4096) -> NormReport:
    """Partial sums of ij_certificate over j >= 1 with an integral-test tail bound.

    Passes iff some J <= J_max has tail bound below cauchy_tol times the
    partial sum (partial sums Cauchy at that level).
    """
    a = cls.N - (model.d - 1) / 2
    rows = []
    if a <= 1:
        rep = NormReport("ij_summability", rows, passed=False)
        rep.notes.append(f"exponent N - (d-1)/2 = {a:g} <= 1: series diverges")
        return rep
    S = ij_spectral_sum(model, params, cls).value
    partial = 0.0
    J = 0
    passed = False
    target = 1
    while J < J_max:
        J += 1
        partial += ij_certificate(model, params, cls, J)
        if J == target:
            tail = S * J ** (1.0 - a) / (a - 1.0)
            rows.append({"J": J, "partial_sum": partial, "tail_bound": tail, "rel_tail": tail / partial})
            if tail <= cauchy_tol * partial:
                passed = True
                break
            target *= 2
    rep = NormReport("ij_summability", rows, passed=passed, tolerances={"cauchy": cauchy_tol})
    rep.notes.append(f"sum_j j^-{a:g}: tail after J bounded by S J^(1-a)/(a-1)")
    return rep
