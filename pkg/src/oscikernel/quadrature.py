"""Deterministic adaptive quadrature for radial and spectral integrals.

The core routine is a globally adaptive Gauss-Kronrod (7/15) panel
integrator.  Integrands are vectorised: ``f(x)`` receives a 1-D array of
abscissae and returns an array whose leading axis matches ``x``; any
trailing axes are treated as independent output components sharing one
panel set.  This is how whole kernel profiles (one component per radius)
are integrated in a single pass.

Oscillatory integrands are handled by a frequency hint: with angular
frequency ``nu`` the initial panels are no wider than
``(2 pi / nu) / osc_panels_per_period``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .space_models import (
    SpaceModel,
    RegionSpec,
    volume_density,
    plancherel_density,
)

# Kronrod 15-point abscissae on [-1, 1] (positive half, decreasing) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point layout: -x0..-x6, 0, x6..x0
NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
WK = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
WG = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (x1, x3, x5, 0)
WG[[1, 3, 5]] = _WG[:3]
WG[7] = _WG[3]
WG[[9, 11, 13]] = _WG[2::-1]

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-15
    max_panels: int = 1 << 15
    osc_panels_per_period: int = 4
    r_max: float = 40.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_panels < 64:
            raise ValueError("max_panels must be >= 64")
        if self.osc_panels_per_period < 4:
            raise ValueError("osc_panels_per_period must be >= 4")

    def tightened(self, factor: float = 100.0) -> "QuadratureSpec":
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)


DEFAULT_SPEC = QuadratureSpec()


@dataclass
class IntegralResult:
    """Value with error estimate.

    For vector-valued integrands ``value`` and ``err_estimate`` are arrays.
    ``tail_bound`` is the estimated magnitude of the truncated remainder for
    unbounded regions (zero otherwise).  ``roundoff_limited`` is set when the
    requested tolerance lies below the floating-point floor
    ``50 eps * integral of |f|``; the result is then accepted at that floor.
    """

    value: complex | float | np.ndarray
    err_estimate: float | np.ndarray
    panels_used: int
    converged: bool
    tail_bound: float = 0.0
    roundoff_limited: bool = False


class QuadratureError(RuntimeError):
    pass


def compensated_sum(terms: np.ndarray) -> np.ndarray:
    """Neumaier summation along axis 0, in the given order."""
    terms = np.asarray(terms)
    if np.iscomplexobj(terms):
        return compensated_sum(terms.real) + 1j * compensated_sum(terms.imag)
    s = np.zeros(terms.shape[1:])
    c = np.zeros(terms.shape[1:])
    for x in terms:
        t = s + x
        c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        s = t
    return s + c


def _eval_panels(f, lo, hi):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = (centre[:, None] + half[:, None] * NODES[None, :]).ravel()
    vals = np.asarray(f(x))
    if vals.ndim == 0:
        vals = np.broadcast_to(vals, x.shape)
    vals = vals.reshape((len(lo), 15) + vals.shape[1:])
    extra = (None,) * (vals.ndim - 2)
    wk = WK[(None, slice(None)) + extra]
    wg = WG[(None, slice(None)) + extra]
    h = half[(slice(None),) + extra]
    resk = np.sum(wk * vals, axis=1)
    resg = np.sum(wg * vals, axis=1)
    mean = 0.5 * resk
    resasc = np.sum(wk * np.abs(vals - mean[:, None]), axis=1) * h
    resabs = np.sum(wk * np.abs(vals), axis=1) * h
    diff = np.abs(resk - resg) * h
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5)
    err = np.where((resasc > 0) & (diff > 0), scaled, diff)
    return resk * h, err, resabs


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    freq_hint: float | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> IntegralResult:
    """Adaptive GK15 integral of a vectorised ``f`` over [a, b].

    Non-convergence within ``spec.max_panels`` is reported through
    ``converged=False``; the caller decides whether that is fatal.
    """
    if not a < b:
        if a == b:
            probe = np.asarray(f(np.array([a])))
            return IntegralResult(np.zeros(probe.shape[1:], dtype=probe.dtype)[()], 0.0, 0, True)
        raise ValueError(f"integrate_1d needs a < b, got [{a}, {b}]")
    length = b - a
    n0 = 1
    if freq_hint:
        width = (2.0 * math.pi / freq_hint) / spec.osc_panels_per_period
        n0 = max(1, math.ceil(length / width))
    n0 = min(n0, spec.max_panels)
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    val, err, resabs = _eval_panels(f, lo, hi)

    converged = False
    while True:
        total = np.sum(val, axis=0)
        err_tot = np.sum(err, axis=0)
        floor = 50.0 * EPS * np.sum(resabs, axis=0)
        tol = np.maximum(np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total)), floor)
        if np.all(err_tot <= tol):
            converged = True
            break
        n = len(lo)
        if n >= spec.max_panels:
            break
        allowance = tol[None, ...] * ((hi - lo) / length).reshape((-1,) + (1,) * (err.ndim - 1))
        bad = err > allowance
        if bad.ndim > 1:
            bad = bad.reshape(n, -1).any(axis=1)
        idx = np.flatnonzero(bad)
        budget = spec.max_panels - n
        if len(idx) > budget:
            score = err.reshape(n, -1).max(axis=1) if err.ndim > 1 else err
            idx = np.sort(idx[np.argsort(-score[idx], kind="stable")[:budget]])
        keep = np.ones(n, dtype=bool)
        keep[idx] = False
        mid = 0.5 * (lo[idx] + hi[idx])
        new_lo = np.concatenate([lo[idx], mid])
        new_hi = np.concatenate([mid, hi[idx]])
        nv, ne, nr = _eval_panels(f, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
        resabs = np.concatenate([resabs[keep], nr])

    order = np.argsort(lo, kind="stable")
    value = compensated_sum(val[order])
    err_tot = np.sum(err, axis=0)
    floor = 50.0 * EPS * np.sum(resabs, axis=0)
    err_est = np.maximum(err_tot, floor)
    requested = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(value))
    limited = bool(converged and np.any(err_est > requested))
    if np.ndim(value) == 0:
        value = value[()]
        err_est = float(err_est)
    return IntegralResult(value, err_est, len(lo), converged, roundoff_limited=limited)


def integrate_marching(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    r_max: float,
    freq_hint: float | None,
    spec: QuadratureSpec,
    first_width: float,
) -> IntegralResult:
    """March outward over doubling shells from ``lo`` up to ``r_max``.

    Stops early once two consecutive shells contribute less than the
    requested tolerance and are decreasing; the remainder is bounded by the
    geometric series of the last shell ratio.
    """
    if lo >= r_max:
        probe = np.asarray(f(np.array([lo])))
        return IntegralResult(np.zeros(probe.shape[1:], dtype=probe.dtype)[()], 0.0, 0, True)
    parts = []
    errs = []
    panels = 0
    converged = True
    limited = False
    a = lo
    width = first_width
    tail_bound = 0.0
    last = []
    while a < r_max:
        b = min(a + width, r_max)
        res = integrate_1d(f, a, b, freq_hint, spec)
        parts.append(res.value)
        errs.append(res.err_estimate)
        panels += res.panels_used
        converged &= res.converged
        limited |= res.roundoff_limited
        mag = float(np.max(np.abs(res.value)))
        last.append(mag)
        total = float(np.max(np.abs(np.sum(parts, axis=0))))
        scale = max(spec.abs_tol, spec.rel_tol * total)
        if len(last) >= 2 and last[-1] <= scale and last[-1] <= last[-2]:
            ratio = last[-1] / last[-2] if last[-2] > 0 else 0.0
            tail_bound = last[-1] * ratio / (1.0 - ratio) if ratio < 1 else last[-1]
            break
        a = b
        width *= 2.0
    else:
        # reached r_max without the stopping rule firing
        if len(last) >= 2 and last[-1] > max(spec.abs_tol, spec.rel_tol * total):
            ratio = last[-1] / last[-2] if last[-2] > 0 else math.inf
            if ratio >= 1.0:
                converged = False
                tail_bound = math.inf
            else:
                tail_bound = last[-1] * ratio / (1.0 - ratio)
    value = compensated_sum(np.array(parts))
    err = np.sum(errs, axis=0)
    if np.ndim(value) == 0:
        value = value[()]
        err = float(err)
    return IntegralResult(value, err, panels, converged, tail_bound, limited)


def _polar_quadrant(g2, R_lo, R_hi, freq_hint, spec, unbounded, first_width):
    """Integrate g2(x) over the quarter annulus R_lo <= |x| <= R_hi, x >= 0.

    ``g2`` takes points of shape (N, 2).  The angular integral is done
    vectorised over all radial nodes of a batch.
    """
    inner_spec = spec

    def radial(R):
        R = np.asarray(R, dtype=float)
        inner_hint = freq_hint * float(R.max()) if freq_hint else None

        def angular(theta):
            c, s = np.cos(theta), np.sin(theta)
            pts = np.stack([np.outer(c, R), np.outer(s, R)], axis=-1)
            vals = np.asarray(g2(pts.reshape(-1, 2)))
            return vals.reshape((len(theta), len(R)) + vals.shape[1:])

        inner = integrate_1d(angular, 0.0, math.pi / 2, inner_hint, inner_spec)
        if not inner.converged:
            radial.failed = True
        out = np.asarray(inner.value)
        return out * R.reshape((-1,) + (1,) * (out.ndim - 1))

    radial.failed = False
    if unbounded:
        res = integrate_marching(radial, R_lo, R_hi, freq_hint, spec, first_width)
    elif R_hi > R_lo:
        res = integrate_1d(radial, R_lo, R_hi, freq_hint, spec)
    else:
        res = IntegralResult(0.0, 0.0, 0, True)
    if radial.failed:
        res.converged = False
    return res


def integrate_radial(
    model: SpaceModel,
    g: Callable[[np.ndarray], np.ndarray],
    region: RegionSpec = RegionSpec.all(),
    spec: QuadratureSpec = DEFAULT_SPEC,
    freq_hint: float | None = None,
    first_width: float = 1.0,
) -> IntegralResult:
    """Integral of a radial function against the volume density over a region.

    ``g`` receives Cartan coordinates of shape (N, d) and returns (N, ...).
    Region geometry is expressed through |H|; for rank two the integral is
    done in polar coordinates of the positive quadrant of a.
    """
    lo, hi = region.bounds(spec.r_max)
    unbounded = region.unbounded
    if model.d == 1:
        def f(r):
            vals = np.asarray(g(r[:, None]))
            w = volume_density(model, r[:, None])
            return vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))

        if unbounded:
            return integrate_marching(f, lo, hi, freq_hint, spec, first_width)
        if hi <= lo:
            return IntegralResult(0.0, 0.0, 0, True)
        return integrate_1d(f, lo, hi, freq_hint, spec)

    def g2(pts):
        vals = np.asarray(g(pts))
        w = volume_density(model, pts)
        return vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))

    return _polar_quadrant(g2, lo, hi, freq_hint, spec, unbounded, first_width)


def integrate_radial_separable(
    model: SpaceModel,
    F: Callable[[np.ndarray], np.ndarray],
    region: RegionSpec = RegionSpec.all(),
    spec: QuadratureSpec = DEFAULT_SPEC,
    weight: Callable[[np.ndarray], np.ndarray] | None = None,
    freq_hint: float | None = None,
    first_width: float = 1.0,
) -> IntegralResult:
    """Integral of F(|H|) * weight(H) * delta(H) over a region.

    ``F`` is called once per radial node with an array of norms; only the
    real, positive angular factor ``weight * delta`` is integrated over the
    quarter circle (rank two).  This is the cheap path for kernels that are a
    function of |H| times an explicit angular prefactor.
    """
    lo, hi = region.bounds(spec.r_max)
    unbounded = region.unbounded

    if model.d == 1:
        def f(r):
            vals = np.asarray(F(r))
            w = volume_density(model, r[:, None])
            if weight is not None:
                w = w * weight(r[:, None])
            return vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))
    else:
        angular_spec = replace(spec, rel_tol=min(spec.rel_tol, 1e-12), abs_tol=1e-300)

        def f(R):
            R = np.asarray(R, dtype=float)

            def angular(theta):
                pts = np.stack([np.outer(np.cos(theta), R), np.outer(np.sin(theta), R)], axis=-1)
                w = volume_density(model, pts)
                if weight is not None:
                    w = w * weight(pts.reshape(-1, 2)).reshape(w.shape)
                return w

            A = integrate_1d(angular, 0.0, math.pi / 2, None, angular_spec).value
            vals = np.asarray(F(R))
            return vals * (np.asarray(A) * R).reshape((-1,) + (1,) * (vals.ndim - 1))

    if unbounded:
        return integrate_marching(f, lo, hi, freq_hint, spec, first_width)
    if hi <= lo:
        return IntegralResult(0.0, 0.0, 0, True)
    return integrate_1d(f, lo, hi, freq_hint, spec)


def integrate_spectral(
    model: SpaceModel,
    g: Callable[[np.ndarray], np.ndarray],
    support_radius: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    freq_hint: float | None = None,
    inner_radius: float = 0.0,
) -> IntegralResult:
    """Integral of g against the Plancherel density over the positive cone.

    ``g`` receives spectral points of shape (N, d).  The integrand must vanish
    (or be negligible) outside inner_radius <= |lam| <= support_radius.
    """
    if not math.isfinite(support_radius):
        raise ValueError("integrate_spectral needs a finite support radius (declare a cutoff)")
    if model.d == 1:
        def f(lam):
            pts = lam[:, None]
            vals = np.asarray(g(pts))
            w = plancherel_density(model, pts)
            return vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))

        if support_radius <= inner_radius:
            return IntegralResult(0.0, 0.0, 0, True)
        return integrate_1d(f, inner_radius, support_radius, freq_hint, spec)

    def g2(pts):
        vals = np.asarray(g(pts))
        w = plancherel_density(model, pts)
        return vals * w.reshape((-1,) + (1,) * (vals.ndim - 1))

    return _polar_quadrant(g2, inner_radius, support_radius, freq_hint, spec, False, 1.0)


def gk_rule(a: float, b: float, n_panels: int):
    """Composite GK15 nodes with Kronrod and embedded Gauss weights."""
    edges = np.linspace(a, b, n_panels + 1)
    centre = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (centre[:, None] + half[:, None] * NODES[None, :]).ravel()
    wk = (half[:, None] * WK[None, :]).ravel()
    wg = (half[:, None] * WG[None, :]).ravel()
    return x, wk, wg


def panels_for(length: float, freq: float | None, spec: QuadratureSpec, minimum: int = 1) -> int:
    if not freq:
        return minimum
    width = (2.0 * math.pi / freq) / spec.osc_panels_per_period
    return max(minimum, math.ceil(length / width))
