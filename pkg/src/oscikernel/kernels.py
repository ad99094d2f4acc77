"""Dyadic kernel pieces kappa_j and their norms.

kappa_j is the inverse transform of m_j.  Every piece is stored through its
oscillatory factor F_j(|H|) (see :func:`transforms.radial_symbol_kernel`):

    rank one: kappa_j(r)      = (r / sinh r) F_j(r)
    rank two: kappa_j(r1, r2) = (r1/sinh r1)(r2/sinh r2) F_j(|H|)

so norms over radial regions reduce to one oscillatory integral in |H| with
an explicit angular weight.

Two independent routes give kappa_j:

* inverse transform of m_j over lam in its dyadic annulus;
* heat calculus: kappa_j = h_j(e^{-2^-j Delta}) p_{2^-j}, integrated in the
  semigroup variable u = e^{-2^-j s} with h_j evaluated directly.

L^2(X) norms are also available by Plancherel,
    ||kappa_j||_2^2 = int |m_j|^2 density,
which in rank two collapses to int |M(k)|^2 k^5 dk / (64 pi^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .heat_semigroup import heat_l2_norm
from .multiplier import (
    DEFAULT_PARTITION,
    DyadicSymbol,
    MultiplierParams,
    PartitionSpec,
    cutoff,
    eval_hj,
    mj_sup,
)
from .quadrature import (
    DEFAULT_SPEC,
    IntegralResult,
    QuadratureSpec,
    gk_rule,
    integrate_1d,
    integrate_marching,
    integrate_radial_separable,
    panels_for,
)
from .reports import ExponentFit, NormReport, fit_exponent, fit_line
from .space_models import FOUR_PI, TWO_PI_SQ, RegionSpec, SpaceModel, r_over_sinh
from .transforms import (
    J2_over_x2,
    RadialProfile,
    TransformError,
    _symbol_mass,
    radial_prefactor,
    radial_symbol_kernel,
)
from .space_models import sinc

__all__ = [
    "CutoffSpec",
    "KernelPiece",
    "ExponentFit",
    "NormReport",
    "fit_exponent",
    "compute_kappa_j",
    "dual_route_discrepancy",
    "kappa_j_heat_route",
    "split_local_global",
    "norm",
    "plancherel_l2",
    "verify_lemma6_global",
    "verify_lemma6_annulus",
    "verify_lemma7",
    "verify_lemma8",
    "zeta_transform",
    "zeta_l1",
]

NORM_SPEC = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-300)


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth radial cutoff: 1 on |H| <= inner, 0 on |H| >= outer."""

    inner: float = 0.5
    outer: float = 1.0

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("cutoff needs 0 < inner < outer")

    def __call__(self, norm):
        return cutoff(norm, self.inner, self.outer)


DEFAULT_ZETA = CutoffSpec()


def _kern(model: SpaceModel):
    if model.d == 1:
        return lambda k, r: (k * k / TWO_PI_SQ) * sinc(k * r)
    return lambda k, r: (k**5 / (8.0 * math.pi**3)) * J2_over_x2(k * r)


@dataclass
class KernelPiece:
    """kappa_j sampled on a radial grid, with an exact evaluator behind it."""

    j: int
    model: SpaceModel
    params: MultiplierParams
    profile: RadialProfile
    support: tuple[float, float]
    spec: QuadratureSpec
    scale: float
    partition: PartitionSpec = DEFAULT_PARTITION
    meta: dict = field(default_factory=dict)

    @property
    def symbol(self) -> DyadicSymbol:
        return DyadicSymbol(self.j, self.params, self.model, self.partition)

    def F(self, r_norm) -> np.ndarray:
        """Oscillatory factor F_j(|H|)."""
        a, b = self.support
        out, _ = radial_symbol_kernel(self.model, self.symbol.radial, r_norm, a, b, self.spec, self.scale)
        return out

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.model.d)
        n = np.linalg.norm(pts, axis=-1)
        u, inv = np.unique(n, return_inverse=True)
        return radial_prefactor(self.model, pts) * self.F(u)[inv]


def compute_kappa_j(model: SpaceModel, params: MultiplierParams, j: int, r_grid,
                    spec: QuadratureSpec = DEFAULT_SPEC, partition: PartitionSpec = DEFAULT_PARTITION) -> KernelPiece:
    """kappa_j = H^-1(m_j) on a radial grid (axes pair for rank two)."""
    if j < 0:
        raise ValueError("j must be >= 0")
    sym = DyadicSymbol(j, params, model, partition)
    a, b = sym.support
    scale = _symbol_mass(model, sym.radial, a, b)
    from .transforms import _axes, _tensor_points

    axes = _axes(model, r_grid)
    pts = _tensor_points(axes)
    norms = np.linalg.norm(pts, axis=-1)
    u, inv = np.unique(norms, return_inverse=True)
    F, err = radial_symbol_kernel(model, sym.radial, u, a, b, spec, scale)
    vals = radial_prefactor(model, pts) * F[inv]
    piece = KernelPiece(j, model, params, RadialProfile(model, axes, vals.reshape(tuple(len(x) for x in axes))),
                        (a, b), spec, scale, partition,
                        meta={"rel_tol": spec.rel_tol, "support_radius": b, "l1_symbol_mass": scale,
                              "err_estimate": float(np.max(err)) if len(err) else 0.0})
    piece.profile.func = piece
    return piece


def kappa_j_heat_route(model: SpaceModel, params: MultiplierParams, j: int, r_norm,
                       spec: QuadratureSpec = DEFAULT_SPEC, partition: PartitionSpec = DEFAULT_PARTITION) -> np.ndarray:
    """F_j(|H|) computed as h_j(e^{-2^-j Delta}) p_{2^-j} in the variable u.

    With s = k^2 + |rho|^2 and u = e^{-2^-j s}:  k(u) = sqrt(-2^j ln u - |rho|^2),
    dk = -2^j / (2 k u) du, and h_j(u) u = m_j(k), so

        F_j(R) = int h_j(u) * kern(k(u), R) * 2^j / (2 k(u)) du.

    Returns the oscillatory factor (multiply by the radial prefactor).
    """
    sym = DyadicSymbol(j, params, model, partition)
    ua, ub = sym.u_support
    a, b = sym.support
    scale = _symbol_mass(model, sym.radial, a, b)
    kern = _kern(model)
    rho2 = model.rho_norm_sq
    two_j = 2.0**j
    r_norm = np.atleast_1d(np.asarray(r_norm, dtype=float))
    sub = replace(spec, abs_tol=max(spec.abs_tol, spec.rel_tol * scale))
    out = np.zeros(len(r_norm), dtype=complex)
    order = np.argsort(r_norm, kind="stable")
    rs = r_norm[order]
    chunk = 256
    for s0 in range(0, len(rs), chunk):
        rc = rs[s0:s0 + chunk]

        def g(u, rc=rc):
            k = np.sqrt(np.maximum(-two_j * np.log(u) - rho2, 0.0))
            w = eval_hj(sym, u) * two_j / (2.0 * np.maximum(k, 1e-300))
            return w[:, None] * kern(k[:, None], rc[None, :])

        # phase k(u) R changes at rate R 2^j / (2 k u) per unit u
        hint = float(rc[-1]) * two_j / (2.0 * a * ua) if rc[-1] > 0 else None
        res = integrate_1d(g, ua, ub, hint, sub)
        if not res.converged:
            raise TransformError("heat-route kernel did not converge", where=float(rc[-1]))
        out[order[s0:s0 + chunk]] = res.value
    return out


def dual_route_discrepancy(piece: KernelPiece, r_norm=None) -> float:
    """max |F_inverse - F_heat| / max |F_inverse| on a radial sample."""
    if r_norm is None:
        r_norm = np.linspace(0.0, 3.0, 61)
    Fi = piece.F(r_norm)
    Fh = kappa_j_heat_route(piece.model, piece.params, piece.j, r_norm, piece.spec, piece.partition)
    pref = radial_prefactor(piece.model, np.asarray(r_norm)[:, None] * np.ones(piece.model.d) / math.sqrt(piece.model.d))
    ki, kh = pref * Fi, pref * Fh
    return float(np.max(np.abs(ki - kh)) / np.max(np.abs(ki)))


def split_local_global(k: KernelPiece | RadialProfile, zeta: CutoffSpec = DEFAULT_ZETA):
    """(zeta kappa, (1 - zeta) kappa) on the same grid."""
    prof = k.profile if isinstance(k, KernelPiece) else k
    pts = prof.points
    z = zeta(np.linalg.norm(pts, axis=-1)).reshape(prof.values.shape)
    local_vals = z * prof.values
    global_vals = prof.values - local_vals
    f = prof.func

    def lf(p):
        return zeta(np.linalg.norm(p, axis=-1)) * f(p)

    def gf(p):
        return (1.0 - zeta(np.linalg.norm(p, axis=-1))) * f(p)

    local = RadialProfile(prof.model, prof.grid, local_vals, lf if f is not None else None)
    glob = RadialProfile(prof.model, prof.grid, global_vals, gf if f is not None else None)
    return local, glob


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def plancherel_l2(piece: KernelPiece) -> float:
    """||kappa_j||_{L^2(X)} from int |m_j|^2 density."""
    a, b = piece.support
    M = piece.symbol.radial
    if piece.model.d == 1:
        g = lambda k: np.abs(M(k)) ** 2 * k * k / TWO_PI_SQ
    else:
        g = lambda k: np.abs(M(k)) ** 2 * k**5 / (64.0 * math.pi**3)
    res = integrate_1d(g, a, b, None, QuadratureSpec(rel_tol=1e-12, abs_tol=1e-300))
    return math.sqrt(float(res.value))


@dataclass
class NormValue:
    value: float
    result: IntegralResult
    plancherel: float | None = None


def norm(piece: KernelPiece, which: str, region: RegionSpec = RegionSpec.all(),
         spec: QuadratureSpec = NORM_SPEC) -> NormValue:
    """||kappa_j||_{L^p(region)} for p in {1, 2} by radial quadrature."""
    which = which.upper()
    if which not in ("L1", "L2"):
        raise ValueError("which must be 'L1' or 'L2'")
    p = 1 if which == "L1" else 2
    lo, hi = region.bounds(spec.r_max)
    if not region.unbounded and hi <= lo:
        return NormValue(0.0, IntegralResult(0.0, 0.0, 0, True))

    def F(R):
        return np.abs(piece.F(R)) ** p

    def w(pts):
        return np.prod(r_over_sinh(pts), axis=-1) ** p

    # kernel scale: F_j varies on |H| ~ 2^{-j/2}
    width = min(1.0, 4.0 * 2.0 ** (-piece.j / 2))
    res = integrate_radial_separable(piece.model, F, region, spec, weight=w,
                                     freq_hint=2.0 * piece.support[1], first_width=width)
    if not res.converged:
        raise TransformError(f"{which} norm quadrature did not converge", where=f"j={piece.j}")
    val = float(res.value) ** (1.0 / p)
    planch = plancherel_l2(piece) if (p == 2 and region.kind.value == "all") else None
    return NormValue(val, res, planch)


def _piece(model, params, j, partition=DEFAULT_PARTITION, spec=DEFAULT_SPEC) -> KernelPiece:
    return compute_kappa_j(model, params, j, np.array([0.0, 0.5, 1.0, 1.5]) if model.d == 1
                           else (np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.5, 1.0])), spec, partition)


def verify_lemma6_global(model: SpaceModel, params: MultiplierParams, j_range, slope_tol: float = 0.05,
                         dual_tol: float = 1e-4) -> NormReport:
    """Two-sided slope of log2 ||kappa_j||_{L^2(X)} against -(beta - n/2)/2."""
    j_range = list(j_range)
    if len(j_range) < 5:
        raise ValueError("j_range needs at least 5 indices")
    target = -(params.beta - model.n / 2) / 2
    rows = []
    worst = 0.0
    for j in j_range:
        pc = _piece(model, params, j)
        nv = norm(pc, "L2")
        rel = abs(nv.value - nv.plancherel) / nv.plancherel
        worst = max(worst, rel)
        rows.append({"j": j, "l2_radial": nv.value, "l2_plancherel": nv.plancherel, "dual_rel": rel,
                     "exponent_target": target})
    fit = fit_exponent([(r["j"], r["l2_radial"]) for r in rows])
    fit_p = fit_exponent([(r["j"], r["l2_plancherel"]) for r in rows])
    passed = abs(fit.slope - target) <= slope_tol and worst <= dual_tol
    for r in rows:
        r["slope"] = fit.slope
    return NormReport("lemma6_global_l2", rows, {"radial": fit, "plancherel": fit_p}, passed,
                      {"slope_tol": slope_tol, "dual_tol": dual_tol},
                      [f"target {target:+.4f}, radial slope {fit.slope:+.4f}, max dual rel {worst:.2e}"])


def verify_lemma6_annulus(model: SpaceModel, params: MultiplierParams, j_range, q_list, k: int,
                          margin: float = 1.0) -> NormReport:
    """No upward trend in log2 ||kappa_j||_{L^2(A_q)} + (beta - n/2 + k(1-alpha)) j/2 + k q/2.

    The lemma asserts one constant for the whole (j, q) range, so the check
    is: max of the compensated quantity over the grid minus its max over the
    smallest-j row must not exceed ``margin``.  Per-q-column rises are
    reported as diagnostics (they can exceed the margin transiently while
    the stationary-phase radius of kappa_j sweeps through an annulus).
    """
    if k > 4 or k < 0:
        raise ValueError("k must lie in [0, 4]")
    for j in j_range:
        for q in q_list:
            if not -j <= q <= 0:
                raise ValueError(f"Lemma 6(ii) needs -j <= q <= 0 (got j={j}, q={q})")
    expo = (params.beta - model.n / 2 + k * (1 - params.alpha)) / 2
    rows = []
    for j in j_range:
        pc = _piece(model, params, j)
        for q in q_list:
            nv = norm(pc, "L2", RegionSpec.annulus(q))
            comp = math.log2(nv.value) + expo * j + k * q / 2 if nv.value > 0 else -math.inf
            rows.append({"j": j, "q": q, "l2_annulus": nv.value, "compensated": comp})
    j0 = min(j_range)
    base = max(r["compensated"] for r in rows if r["j"] == j0)
    top = max(r["compensated"] for r in rows)
    rise = top - base
    column_rise = {}
    for q in q_list:
        col = [r for r in rows if r["q"] == q]
        c0 = next(r["compensated"] for r in col if r["j"] == j0)
        column_rise[q] = max(r["compensated"] for r in col) - c0
    return NormReport("lemma6_annulus_l2", rows, {}, bool(rise <= margin), {"margin": margin, "k": k},
                      [f"grid max minus smallest-j max: {rise:.3f}",
                       "per-column rises: " + ", ".join(f"q={q}: {v:.3f}" for q, v in column_rise.items())])


def verify_lemma7(model: SpaceModel, params: MultiplierParams, j_range, slack: float = 0.1) -> NormReport:
    """One-sided slope of log2 ||kappa_j||_{L^1(B(0,1))} against -(beta - alpha n/2)/2."""
    j_range = list(j_range)
    if len(j_range) < 5:
        raise ValueError("j_range needs at least 5 indices")
    target = -(params.beta - params.alpha * model.n / 2) / 2
    ball_vol = float(integrate_radial_separable(model, lambda R: np.ones_like(R), RegionSpec.ball(1.0),
                                                NORM_SPEC).value)
    rows = []
    cs_ok = True
    for j in j_range:
        pc = _piece(model, params, j)
        l1 = norm(pc, "L1", RegionSpec.ball(1.0)).value
        l2 = plancherel_l2(pc)
        cs_ok &= l1 <= math.sqrt(ball_vol) * l2 * (1 + 1e-8)
        rows.append({"j": j, "l1_ball": l1, "l2_global": l2, "exponent_target": target})
    fit = fit_exponent([(r["j"], r["l1_ball"]) for r in rows])
    partial = np.cumsum([r["l1_ball"] for r in rows])
    passed = fit.slope <= target + slack and cs_ok
    return NormReport("lemma7_l1_ball", rows, {"l1_ball": fit}, bool(passed), {"slack": slack},
                      [f"threshold {target + slack:+.4f}, slope {fit.slope:+.4f}, Cauchy-Schwarz ok: {cs_ok}",
                       f"partial sums of the norms: {partial.tolist()}"])


# ---------------------------------------------------------------------------
# Lemma 8: the local part through ||H(zeta)||_{L^1} sup |m_j|
# ---------------------------------------------------------------------------

def _zeta_samples(model: SpaceModel, zeta: CutoffSpec, n: int):
    """Trapezoid nodes on [0, outer] and zeta * sinh weights.

    The integrand of H(zeta) is smooth, even at r = 0 after pairing with
    sin(lam r) and flat at r = outer, so the trapezoid rule is spectrally
    accurate up to aliasing at frequency ~ 2 pi n / outer.
    """
    r = np.linspace(0.0, zeta.outer, n + 1)
    h = r[1] - r[0]
    w = np.full(n + 1, h)
    w[0] = w[-1] = h / 2
    return r, w


def zeta_transform(model: SpaceModel, zeta: CutoffSpec, lam: np.ndarray, n: int | None = None) -> np.ndarray:
    """H(zeta)(lam) for lam of shape (N, d)."""
    lam = np.asarray(lam, dtype=float).reshape(-1, model.d)
    if n is None:
        n = 4096 if model.d == 1 else 1024
    r, w = _zeta_samples(model, zeta, n)
    if model.d == 1:
        # phi_lam(r) delta(r) = 4 pi sinh(r) r sinc(lam r)
        g = w * zeta(r) * FOUR_PI * np.sinh(r) * r
        out = np.empty(len(lam))
        for s in range(0, len(lam), 2048):
            L = lam[s:s + 2048, 0]
            out[s:s + 2048] = sinc(np.outer(L, r)) @ g
        return out
    A, B = np.meshgrid(r, r, indexing="ij")
    Z = zeta(np.hypot(A, B)) * np.outer(w * FOUR_PI * np.sinh(r) * r, w * FOUR_PI * np.sinh(r) * r)
    out = np.empty(len(lam))
    for s in range(0, len(lam), 4096):
        L = lam[s:s + 4096]
        P1 = sinc(np.outer(L[:, 0], r))
        P2 = sinc(np.outer(L[:, 1], r))
        out[s:s + 4096] = np.einsum("ia,ab,ib->i", P1, Z, P2)
    return out


def zeta_l1(model: SpaceModel, zeta: CutoffSpec = DEFAULT_ZETA, rel_tol: float = 1e-6,
            lam_max: float = 4000.0) -> IntegralResult:
    """C_zeta = int over all of a* of |H(zeta)(lam)| d lam (Lebesgue measure).

    The Weyl symmetry of H(zeta) gives 2^d times the positive-chamber integral.
    Rank one marches outward in |lam|; rank two uses polar coordinates.
    """
    spec = QuadratureSpec(rel_tol=rel_tol, abs_tol=1e-300, r_max=lam_max, max_panels=4096)
    if model.d == 1:
        f = lambda L: np.abs(zeta_transform(model, zeta, L[:, None]))
        res = integrate_marching(f, 0.0, lam_max, 1.0 / zeta.outer, spec, 8.0)
        res.value = 2.0 * float(res.value)
        res.err_estimate = 2.0 * float(res.err_estimate)
        return res

    inner_spec = QuadratureSpec(rel_tol=rel_tol, abs_tol=1e-300, max_panels=256)

    def radial(R):
        def ang(th):
            pts = np.stack([np.outer(np.cos(th), R), np.outer(np.sin(th), R)], axis=-1).reshape(-1, 2)
            return np.abs(zeta_transform(model, zeta, pts)).reshape(len(th), len(R))

        hint = float(R.max()) * zeta.outer or None
        return integrate_1d(ang, 0.0, math.pi / 2, hint, inner_spec).value * R

    res = integrate_marching(radial, 0.0, min(lam_max, 400.0), 1.0 / zeta.outer, spec, 8.0)
    res.value = 4.0 * float(res.value)
    res.err_estimate = 4.0 * float(res.err_estimate)
    return res


def verify_lemma8(model: SpaceModel, params: MultiplierParams, j_range, zeta: CutoffSpec = DEFAULT_ZETA,
                  slope_tol: float = 0.05, sup_tol: float = 0.02) -> NormReport:
    """Certificate C_zeta * sup|m_j| with slope -beta/2."""
    cz = zeta_l1(model, zeta)
    if not cz.converged:
        raise TransformError("||H(zeta)||_{L^1} did not converge before the spectral cutoff")
    rows = []
    for j in j_range:
        s = mj_sup(DyadicSymbol(j, params, model))
        rows.append({"j": j, "sup_mj": s, "C_zeta": float(cz.value), "certificate": float(cz.value) * s})
    fit_sup = fit_exponent([(r["j"], r["sup_mj"]) for r in rows])
    fit_cert = fit_exponent([(r["j"], r["certificate"]) for r in rows])
    target = -params.beta / 2
    passed = abs(fit_sup.slope - target) <= sup_tol and abs(fit_cert.slope - target) <= slope_tol
    return NormReport("lemma8_local_l2_operator", rows, {"sup_mj": fit_sup, "certificate": fit_cert}, bool(passed),
                      {"slope_tol": slope_tol, "sup_tol": sup_tol},
                      [f"C_zeta = {float(cz.value):.8g} (err {float(cz.err_estimate):.2e}, converged {cz.converged})"])


def interpolated_exponents(model: SpaceModel, params: MultiplierParams, p: float, j_range) -> NormReport:
    """Per-j exponent -(beta - alpha n |1/2 - 1/p|) j/2 and its summability."""
    e = -(params.beta - params.alpha * model.n * abs(0.5 - 1.0 / p)) / 2
    rows = [{"j": j, "exponent": e, "bound": 2.0 ** (e * j)} for j in j_range]
    return NormReport("interpolated_exponent", rows, {}, passed=e < 0,
                      notes=[f"sum converges iff beta > alpha n |1/2 - 1/p| (exponent {e:+.4f})"])
