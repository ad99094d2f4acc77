"""Spherical Fourier transform pair for radial functions on the model spaces.

    Hf(lam)  = int_X f(H) phi_lam(H) delta(H) dH
    H^-1m(H) = int_{lam >= 0} m(lam) phi_lam(H) density(lam) dlam

(phi_{-lam} = phi_lam on the models, and both integrals run over the positive
chamber with the normalisations of :mod:`space_models`.)

Rank two has two evaluation paths.  A generic radial function is integrated
on a tensor Gauss-Kronrod grid as a pair of matrix products
``Phi_1^T (W F W) Phi_2``.  A symbol depending on |lam| only is inverted
through the Bessel reduction

    H^-1 M (r1, r2) = (8 pi^3)^-1 (r1/sinh r1)(r2/sinh r2)
                      int_0^inf M(k) k^5 J_2(k R)/(k R)^2 dk,   R = |H|,

which follows from writing the product of two sinc factors as a plane wave
averaged over the quarter circle.  The heat kernel is the test case:
M = exp(-t(k^2 + 2)) reproduces p_t(r1) p_t(r2) exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    QuadratureError,
    gk_rule,
    integrate_1d,
    integrate_radial,
    panels_for,
)
from .space_models import (
    SpaceModel,
    RegionSpec,
    phi1,
    r_over_sinh,
    sinc,
    volume_density,
    plancherel_density,
    TWO_PI_SQ,
)

# keep (quadrature nodes) x (output points) blocks below this many entries
BLOCK_ENTRIES = 2_000_000


class TransformError(RuntimeError):
    """Quadrature failure inside a transform; ``where`` names the offending point."""

    def __init__(self, message: str, where=None):
        super().__init__(message if where is None else f"{message} (at {where})")
        self.where = where


def _axes(model: SpaceModel, grid) -> tuple[np.ndarray, ...]:
    if isinstance(grid, SpectralRule):
        return grid.axes
    if model.d == 1:
        if isinstance(grid, tuple):
            grid = grid[0]
        return (np.atleast_1d(np.asarray(grid, dtype=float)),)
    if not (isinstance(grid, (tuple, list)) and len(grid) == 2):
        raise ValueError("rank-two grids are given as a pair of axes")
    return tuple(np.atleast_1d(np.asarray(a, dtype=float)) for a in grid)


def _tensor_points(axes: tuple[np.ndarray, ...]) -> np.ndarray:
    if len(axes) == 1:
        return axes[0][:, None]
    A, B = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.stack([A.ravel(), B.ravel()], axis=-1)


def _check_axes(axes, name):
    for a in axes:
        if a.ndim != 1 or len(a) == 0:
            raise ValueError(f"{name} axes must be non-empty 1-D arrays")
        if len(a) > 1 and not np.all(np.diff(a) > 0):
            raise ValueError(f"{name} axes must be strictly increasing")


def _interpolator(axes, values):
    """Cubic interpolant of complex tensor data; returns f(points (N, d))."""
    if len(axes) == 1:
        if len(axes[0]) < 4:
            raise ValueError("cubic interpolation needs at least 4 grid points")
        re = CubicSpline(axes[0], values.real)
        im = CubicSpline(axes[0], values.imag)
        return lambda pts: re(pts[:, 0]) + 1j * im(pts[:, 0])
    re = RegularGridInterpolator(axes, values.real, method="cubic", bounds_error=False, fill_value=None)
    im = RegularGridInterpolator(axes, values.imag, method="cubic", bounds_error=False, fill_value=None)
    return lambda pts: re(pts) + 1j * im(pts)


def _write_csv(path, axes, values, coord_names):
    pts = _tensor_points(axes)
    vals = np.asarray(values).ravel()
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(coord_names[: len(axes)]) + ["re", "im"])
        for p, v in zip(pts, vals):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])


def _read_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    d = len(header) - 2
    axes = tuple(np.unique(body[:, i]) for i in range(d))
    vals = body[:, d] + 1j * body[:, d + 1]
    return axes, vals.reshape(tuple(len(a) for a in axes))


@dataclass
class RadialProfile:
    """Sampled radial function on a (tensor) grid of Cartan coordinates.

    When ``func`` is set, evaluation away from the grid uses it exactly;
    otherwise a cubic interpolant of the samples is used.
    """

    model: SpaceModel
    grid: tuple[np.ndarray, ...]
    values: np.ndarray
    func: Callable[[np.ndarray], np.ndarray] | None = None
    err_estimate: float = 0.0

    def __post_init__(self):
        self.grid = _axes(self.model, self.grid)
        _check_axes(self.grid, "radial")
        if any(np.any(a < 0) for a in self.grid):
            raise ValueError("radial grid coordinates must be >= 0")
        self.values = np.asarray(self.values, dtype=complex).reshape(tuple(len(a) for a in self.grid))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("radial profile values must be finite")
        self._interp = None

    @classmethod
    def from_function(cls, model: SpaceModel, func, grid) -> "RadialProfile":
        axes = _axes(model, grid)
        vals = np.asarray(func(_tensor_points(axes)), dtype=complex)
        return cls(model, axes, vals, func)

    @property
    def points(self) -> np.ndarray:
        return _tensor_points(self.grid)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, self.model.d)
        if self.func is not None:
            out = np.asarray(self.func(pts), dtype=complex)
        else:
            if self._interp is None:
                self._interp = _interpolator(self.grid, self.values)
            out = self._interp(pts)
        return out.reshape(x.shape[:-1]) if self.model.d > 1 or x.ndim > 1 else out

    def scaled(self, c: complex) -> "RadialProfile":
        f = self.func
        return RadialProfile(self.model, self.grid, c * self.values,
                             None if f is None else (lambda p: c * f(p)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path):
        _write_csv(path, self.grid, self.values, ("r1", "r2") if self.model.d == 2 else ("r",))

    @classmethod
    def from_csv(cls, model: SpaceModel, path) -> "RadialProfile":
        axes, vals = _read_csv(path)
        return cls(model, axes, vals)


@dataclass
class SpectralRule:
    """Composite GK15 rule on [0, radius]^d used as a spectral sampling grid."""

    axes: tuple[np.ndarray, ...]
    wk: tuple[np.ndarray, ...]
    wg: tuple[np.ndarray, ...]
    radius: float


def spectral_rule(model: SpaceModel, radius: float, n_panels: int) -> SpectralRule:
    x, wk, wg = gk_rule(0.0, radius, n_panels)
    return SpectralRule(tuple(x for _ in range(model.d)), tuple(wk for _ in range(model.d)),
                        tuple(wg for _ in range(model.d)), float(radius))


@dataclass
class SpectralProfile:
    """Symbol sampled on the positive chamber.

    ``func`` evaluates on points (N, d); ``radial_func`` (optional) evaluates
    on norms |lam| and marks the symbol as a function of |lam| only.  When
    the grid is a :class:`SpectralRule`, ``rule`` keeps its weights so the
    samples can be integrated directly.
    """

    model: SpaceModel
    grid: tuple[np.ndarray, ...]
    values: np.ndarray
    declared_support_radius: float
    func: Callable[[np.ndarray], np.ndarray] | None = None
    radial_func: Callable[[np.ndarray], np.ndarray] | None = None
    rule: SpectralRule | None = None
    inner_radius: float = 0.0

    def __post_init__(self):
        if isinstance(self.grid, SpectralRule):
            self.rule = self.grid
        self.grid = _axes(self.model, self.grid)
        _check_axes(self.grid, "spectral")
        self.values = np.asarray(self.values, dtype=complex).reshape(tuple(len(a) for a in self.grid))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectral profile values must be finite")
        if not self.declared_support_radius > 0:
            raise ValueError("declared_support_radius must be positive")
        norms = np.linalg.norm(_tensor_points(self.grid), axis=-1).reshape(self.values.shape)
        outside = norms > self.declared_support_radius * (1 + 1e-12)
        vmax = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if np.any(outside) and np.max(np.abs(self.values[outside])) > 1e-14 * vmax:
            raise ValueError("spectral profile has mass outside its declared support radius")

    @classmethod
    def from_function(cls, model, func, grid, support_radius, radial_func=None, inner_radius=0.0):
        rule = grid if isinstance(grid, SpectralRule) else None
        axes = _axes(model, grid)
        vals = np.asarray(func(_tensor_points(axes)), dtype=complex)
        return cls(model, axes, vals, support_radius, func, radial_func, rule, inner_radius)

    @classmethod
    def radial(cls, model, radial_func, grid, support_radius, inner_radius=0.0):
        """Symbol M(|lam|) supported in inner_radius <= |lam| <= support_radius."""
        def func(pts):
            return radial_func(np.linalg.norm(pts, axis=-1))
        return cls.from_function(model, func, grid, support_radius, radial_func, inner_radius)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        pts = lam.reshape(-1, self.model.d)
        if self.func is not None:
            return np.asarray(self.func(pts), dtype=complex)
        return _interpolator(self.grid, self.values)(pts)

    def to_csv(self, path):
        _write_csv(path, self.grid, self.values, ("lam1", "lam2") if self.model.d == 2 else ("lam",))

    @classmethod
    def from_csv(cls, model: SpaceModel, path, support_radius: float | None = None) -> "SpectralProfile":
        axes, vals = _read_csv(path)
        radius = support_radius or float(np.linalg.norm([a[-1] for a in axes]))
        return cls(model, axes, vals, radius)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def J2_over_x2(x):
    """J_2(x)/x^2 with its Taylor series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    out = special.jv(2, xs) / (xs * xs)
    x2 = x * x
    series = 1.0 / 8.0 - x2 / 96.0 + x2 * x2 / 3072.0 - x2 * x2 * x2 / 184320.0
    return np.where(small, series, out)


def _tensor_cutoff(h, r_max: float, thresh: float = 1e-17) -> float:
    """Smallest box [0, R]^2 outside of which |h| is negligible."""
    r = np.linspace(0.0, r_max, 161)
    A, B = np.meshgrid(r, r, indexing="ij")
    H = np.abs(h(np.stack([A.ravel(), B.ravel()], axis=-1))).reshape(A.shape)
    total = H.sum() * (r[1] - r[0]) ** 2
    if total == 0:
        return 1.0
    M = np.maximum(A, B)
    for R in np.arange(2.0, r_max + 1e-9, 1.0):
        mask = M > R
        if not mask.any() or H[mask].max() * r_max * r_max <= thresh * total:
            return float(R)
    return float(r_max)


def _tensor_apply(Pa, Wa, F, Wb, Pb):
    """Pa^T diag(Wa) F diag(Wb) Pb."""
    return (Pa * Wa[:, None]).T @ F @ (Pb * Wb[:, None])


# ---------------------------------------------------------------------------
# forward transform
# ---------------------------------------------------------------------------

def forward(model: SpaceModel, f: RadialProfile | Callable, lam_grid, spec: QuadratureSpec = DEFAULT_SPEC) -> SpectralProfile:
    """Spherical transform of a radial profile on a spectral grid."""
    if not isinstance(f, RadialProfile):
        probe = np.arange(4.0)
        f = RadialProfile.from_function(model, f, (probe,) * model.d)
    rule = lam_grid if isinstance(lam_grid, SpectralRule) else None
    axes = _axes(model, lam_grid)
    lam_max = float(max(np.max(np.abs(a)) for a in axes))
    if model.d == 1:
        lam = axes[0]
        scale = _abs_mass(model, f, spec)
        sub = replace(spec, abs_tol=max(spec.abs_tol, spec.rel_tol * scale))
        vals = np.empty(len(lam), dtype=complex)
        chunk = max(1, BLOCK_ENTRIES // max(1, 15 * panels_for(spec.r_max, lam_max, spec)))
        for s in range(0, len(lam), chunk):
            lc = lam[s:s + chunk]

            def g(x, lc=lc):
                return f(x)[:, None] * phi1(lc[None, :], x[:, 0][:, None])

            res = integrate_radial(model, g, RegionSpec.all(), sub, freq_hint=float(np.max(np.abs(lc))) or None)
            if not res.converged:
                raise TransformError("forward transform did not converge", where=lc.tolist())
            vals[s:s + chunk] = res.value
        radius = lam_max if rule is None else rule.radius
        return SpectralProfile(model, axes, vals, max(radius, 1e-300), rule=rule)

    def h(pts):
        return f(pts) * volume_density(model, pts)

    Rc = _tensor_cutoff(h, spec.r_max)
    n = panels_for(Rc, lam_max, spec, minimum=8)
    prev = None
    while True:
        x, wk, wg = gk_rule(0.0, Rc, n)
        F = h(_tensor_points((x, x))).reshape(len(x), len(x))
        Pa = phi1(axes[0][None, :], x[:, None])
        Pb = phi1(axes[1][None, :], x[:, None])
        K = _tensor_apply(Pa, wk, F, wk, Pb)
        G = _tensor_apply(Pa, wg, F, wg, Pb)
        err = float(np.max(np.abs(K - G)))
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(K))))
        if err <= tol or (prev is not None and float(np.max(np.abs(K - prev))) <= tol):
            break
        if len(x) * 2 > 8000:
            raise TransformError("forward tensor quadrature did not converge", where=f"R={Rc}")
        prev = K
        n *= 2
    radius = lam_max * math.sqrt(2) if rule is None else rule.radius * math.sqrt(2)
    return SpectralProfile(model, axes, K, max(radius, 1e-300), rule=rule)


def _abs_mass(model, f: RadialProfile, spec) -> float:
    res = integrate_radial(model, lambda x: np.abs(f(x)), RegionSpec.all(),
                           replace(spec, rel_tol=1e-6))
    return float(res.value)


# ---------------------------------------------------------------------------
# inverse transform
# ---------------------------------------------------------------------------

def _symbol_mass(model, M, a, b) -> float:
    """Upper bound int |M| density over the support (sets absolute tolerances)."""
    if model.d == 1:
        g = lambda k: np.abs(M(k)) * k * k / TWO_PI_SQ
    else:
        g = lambda k: np.abs(M(k)) * k**5 / (64.0 * math.pi**3)
    return float(integrate_1d(g, a, b, None, QuadratureSpec(rel_tol=1e-6)).value)


def radial_symbol_kernel(model: SpaceModel, M: Callable, r_norm, a: float, b: float,
                         spec: QuadratureSpec = DEFAULT_SPEC, scale: float | None = None,
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Kernel factor of a symbol M(|lam|) supported in [a, b], as a function of |H|.

    Returns (F, err) with
        rank one:  kappa(r)      = (r/sinh r) * F(r)
        rank two:  kappa(r1, r2) = (r1/sinh r1)(r2/sinh r2) * F(|H|),
    so that F carries all the oscillation and the prefactor is explicit.
    """
    r_norm = np.atleast_1d(np.asarray(r_norm, dtype=float))
    if scale is None:
        scale = _symbol_mass(model, M, a, b)
    sub = replace(spec, abs_tol=max(spec.abs_tol, spec.rel_tol * scale))
    out = np.zeros(len(r_norm), dtype=complex)
    err = np.zeros(len(r_norm))
    if scale == 0.0:
        return out, err
    if model.d == 1:
        def kern(k, r):
            return (k * k / TWO_PI_SQ) * sinc(k * r)
    else:
        def kern(k, r):
            return (k**5 / (8.0 * math.pi**3)) * J2_over_x2(k * r)

    order = np.argsort(r_norm, kind="stable")
    rs = r_norm[order]
    n_nodes = 15 * panels_for(b - a, float(rs[-1]) if len(rs) else 0.0, spec)
    chunk = max(8, BLOCK_ENTRIES // max(1, n_nodes))
    for s in range(0, len(rs), chunk):
        rc = rs[s:s + chunk]

        def g(k, rc=rc):
            return M(k)[:, None] * kern(k[:, None], rc[None, :])

        hint = float(rc[-1]) if rc[-1] > 0 else None
        res = integrate_1d(g, a, b, hint, sub)
        if not res.converged:
            raise TransformError("inverse transform did not converge", where=float(rc[-1]))
        out[order[s:s + chunk]] = res.value
        err[order[s:s + chunk]] = res.err_estimate
    return out, err


def radial_prefactor(model: SpaceModel, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    return np.prod(r_over_sinh(pts), axis=-1)


def inverse(model: SpaceModel, m: SpectralProfile, r_grid, spec: QuadratureSpec = DEFAULT_SPEC,
            sample_tol: float = 1e-8) -> RadialProfile:
    """Inverse spherical transform of a symbol, evaluated on a radial grid."""
    axes = _axes(model, r_grid)
    pts = _tensor_points(axes)
    shape = tuple(len(a) for a in axes)

    if m.rule is not None and m.func is None:
        # integrate the samples with the rule weights
        rule = m.rule
        dens = [a * a / TWO_PI_SQ for a in rule.axes]
        if model.d == 1:
            P = phi1(rule.axes[0][:, None], axes[0][None, :])
            K = (rule.wk[0] * dens[0] * m.values) @ P
            G = (rule.wg[0] * dens[0] * m.values) @ P
        else:
            Pa = phi1(rule.axes[0][:, None], axes[0][None, :])
            Pb = phi1(rule.axes[1][:, None], axes[1][None, :])
            K = _tensor_apply(Pa, rule.wk[0] * dens[0], m.values, rule.wk[1] * dens[1], Pb)
            G = _tensor_apply(Pa, rule.wg[0] * dens[0], m.values, rule.wg[1] * dens[1], Pb)
        err = float(np.max(np.abs(K - G))) if K.size else 0.0
        if err > sample_tol * max(float(np.max(np.abs(K))), 1e-300):
            raise TransformError(f"sampled inverse under-resolved (G/K gap {err:.2e})")
        return RadialProfile(model, axes, K, err_estimate=err)

    if m.radial_func is not None:
        norms = np.linalg.norm(pts, axis=-1)
        uniq, inv = np.unique(norms, return_inverse=True)
        F, err = radial_symbol_kernel(model, m.radial_func, uniq, m.inner_radius, m.declared_support_radius, spec)
        vals = radial_prefactor(model, pts) * F[inv]
        M, a, b = m.radial_func, m.inner_radius, m.declared_support_radius

        def func(p, M=M, a=a, b=b):
            p = np.asarray(p, dtype=float).reshape(-1, model.d)
            n = np.linalg.norm(p, axis=-1)
            u, iv = np.unique(n, return_inverse=True)
            Fu, _ = radial_symbol_kernel(model, M, u, a, b, spec)
            return radial_prefactor(model, p) * Fu[iv]

        return RadialProfile(model, axes, vals.reshape(shape), func, float(np.max(err)) if len(err) else 0.0)

    sym = m if m.func is not None else None
    if sym is None:
        interp = _interpolator(m.grid, m.values)
        evalm = interp
    else:
        evalm = m.func
    R = m.declared_support_radius
    if model.d == 1:
        M = lambda k: np.asarray(evalm(k[:, None]), dtype=complex)
        F, err = radial_symbol_kernel(model, M, axes[0], m.inner_radius, R, spec)
        vals = r_over_sinh(axes[0]) * F
        return RadialProfile(model, axes, vals, err_estimate=float(np.max(err)))

    # generic rank-two symbol: tensor rule with panel doubling
    rmax = float(max(a[-1] for a in axes))
    n = panels_for(R, rmax, spec, minimum=8)
    prev = None
    while True:
        x, wk, wg = gk_rule(0.0, R, n)
        Mv = np.asarray(evalm(_tensor_points((x, x))), dtype=complex).reshape(len(x), len(x))
        d = x * x / TWO_PI_SQ
        Pa = phi1(x[:, None], axes[0][None, :])
        Pb = phi1(x[:, None], axes[1][None, :])
        K = _tensor_apply(Pa, wk * d, Mv, wk * d, Pb)
        G = _tensor_apply(Pa, wg * d, Mv, wg * d, Pb)
        err = float(np.max(np.abs(K - G)))
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(K))))
        if err <= tol or (prev is not None and float(np.max(np.abs(K - prev))) <= tol):
            break
        if 2 * len(x) > 8000:
            raise TransformError("inverse tensor quadrature did not converge", where=f"r<={rmax}")
        prev = K
        n *= 2
    return RadialProfile(model, axes, K, err_estimate=err)
