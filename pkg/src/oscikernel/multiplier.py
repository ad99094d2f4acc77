"""The oscillating multiplier and its dyadic decomposition.

    m(lam)   = s^(-beta/2) exp(i s^(alpha/2)),   s = sum_k (lam_k + i v rho_k)^2 + |rho|^2
    chi      : 1 on [0, 1], 0 on [sqrt 2, inf), smooth decreasing in between
    omega(x) = chi(x) - chi(sqrt(2) x)          supported in [1/sqrt 2, sqrt 2]
    m_j(lam) = m(lam) omega(2^(-j/2) |lam|)
    h_j(u)   = m~_j(-2^j ln u) / u,   u in (0, 1]

where m~_j is m_j read as a function of the spectral value s (rays of the
radial symbol).  The defining identity h_j(e^(-2^-j s)) e^(-2^-j s) = m~_j(s)
means h_j(e^(-2^-j Delta)) p_{2^-j} has symbol m_j.

The transition of chi uses the C-infinity smoothstep

    g(u) = B(u) / (B(u) + B(1-u)),   B(u) = exp(-1/u) for u > 0,

written as expit(1/(1-u) - 1/u) for stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .space_models import SpaceModel, SpectralPoint, as_coords

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# smooth cutoffs
# ---------------------------------------------------------------------------

def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    uc = np.where(inside, u, 0.5)
    with np.errstate(over="ignore", divide="ignore"):
        val = expit(1.0 / (1.0 - uc) - 1.0 / uc)
    return np.where(inside, val, np.where(u >= 1, 1.0, 0.0))


def cutoff(x, inner: float, outer: float):
    """1 for x <= inner, 0 for x >= outer, smooth decreasing in between."""
    return 1.0 - smoothstep((np.asarray(x, dtype=float) - inner) / (outer - inner))


@dataclass(frozen=True)
class PartitionSpec:
    """Dyadic partition built from chi with transition band (inner, outer)."""

    inner: float = 1.0
    outer: float = SQRT2

    def chi(self, x):
        return cutoff(x, self.inner, self.outer)

    def omega(self, x):
        x = np.asarray(x, dtype=float)
        return self.chi(x) - self.chi(SQRT2 * x)

    def partial_sum(self, lam_norm, J: int):
        """chi(sqrt2 |lam|) + sum_{j=0}^J omega(2^{-j/2} |lam|)."""
        lam_norm = np.asarray(lam_norm, dtype=float)
        total = self.chi(SQRT2 * lam_norm)
        for j in range(J + 1):
            total = total + self.omega(2.0 ** (-j / 2) * lam_norm)
        return total


DEFAULT_PARTITION = PartitionSpec()


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierParams:
    alpha: float = 0.5
    beta: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if not self.beta >= 0.0:
            raise ValueError("beta must be >= 0")


@dataclass(frozen=True)
class SymbolClassParams:
    v: float = 0.9
    N: int = 5
    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.v < 1.0:
            raise ValueError("v must lie in (0,1)")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0,1)")

    @classmethod
    def from_params(cls, params: MultiplierParams, v: float = 0.9, N: int = 5) -> "SymbolClassParams":
        return cls(v=v, N=N, theta=1.0 - params.alpha)

    def admissible(self, model: SpaceModel) -> bool:
        """N > (n+1)/(2 theta), the threshold used for the annular series."""
        return self.N > (model.n + 1) / (2.0 * self.theta)


@dataclass(frozen=True)
class GammaProfile:
    """Locally symmetric data: |eta_Gamma| and the exponent s(p)."""

    eta_norm: float = 0.0
    s_exponent: float | Callable[[float], float] = 1.0

    def __post_init__(self):
        if self.eta_norm < 0:
            raise ValueError("eta_norm must be >= 0")

    def s(self, p: float) -> float:
        val = self.s_exponent(p) if callable(self.s_exponent) else float(self.s_exponent)
        if val < 0:
            raise ValueError("s(p) must be >= 0")
        return val


@dataclass(frozen=True)
class ExponentContext:
    p: float
    p_prime: float
    rho_p_coeff: float
    v_gamma: float


def exponent_context(model: SpaceModel, p: float, profile: GammaProfile | None = None) -> ExponentContext:
    if not (1.0 < p < math.inf):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    p_prime = p / (p - 1.0)
    rho_p = abs(2.0 / p - 1.0)
    eta = 0.0 if profile is None else profile.eta_norm
    v_gamma = 2.0 * min(1.0 / p, 1.0 / p_prime) * eta / model.rho_norm + rho_p
    return ExponentContext(p, p_prime, rho_p, v_gamma)


# ---------------------------------------------------------------------------
# the symbol
# ---------------------------------------------------------------------------

def _spectral_s(model: SpaceModel, lam, tube_v: float):
    lam = as_coords(model, lam)
    rho = np.asarray(model.rho)
    z = lam + 1j * tube_v * rho if tube_v else lam
    return np.sum(z * z, axis=-1) + model.rho_norm_sq


def m_of_s(params: MultiplierParams, s):
    """m as a function of the spectral value s (principal branches)."""
    s = np.asarray(s)
    log_s = np.log(s.astype(complex) if np.iscomplexobj(s) or np.any(s <= 0) else s)
    return np.exp(-0.5 * params.beta * log_s + 1j * np.exp(0.5 * params.alpha * log_s))


def eval_m(params: MultiplierParams, model: SpaceModel, p, tube_v: float = 0.0):
    """m at lam + i v rho; lam may be a SpectralPoint or an array of points."""
    if isinstance(p, SpectralPoint):
        tube_v = p.tube_v
        p = p.lam
    if tube_v >= 1.0:
        raise ValueError("tube_v must be < 1: m has poles on the line lam = +- i rho")
    if tube_v < 0:
        raise ValueError("tube_v must be >= 0")
    return m_of_s(params, _spectral_s(model, p, tube_v))


def eval_m_radial(params: MultiplierParams, model: SpaceModel, lam_norm):
    """m for real lam as a function of |lam|."""
    lam_norm = np.asarray(lam_norm, dtype=float)
    return m_of_s(params, lam_norm * lam_norm + model.rho_norm_sq)


@dataclass(frozen=True)
class DyadicSymbol:
    j: int
    params: MultiplierParams
    model: SpaceModel
    partition: PartitionSpec = DEFAULT_PARTITION

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("dyadic index j must be >= 0")

    @property
    def support(self) -> tuple[float, float]:
        """Open |lam| interval carrying m_j."""
        return (self.partition.inner / SQRT2 * 2.0 ** (self.j / 2),
                self.partition.outer * 2.0 ** (self.j / 2))

    @property
    def u_support(self) -> tuple[float, float]:
        """Open u interval carrying h_j (exact, includes the |rho|^2 shift)."""
        a, b = self.support
        c = 2.0 ** (-self.j)
        return math.exp(-c * (b * b + self.model.rho_norm_sq)), math.exp(-c * (a * a + self.model.rho_norm_sq))

    def radial(self, lam_norm):
        """m_j as a function of |lam| (real spectral parameters)."""
        lam_norm = np.asarray(lam_norm, dtype=float)
        w = self.partition.omega(2.0 ** (-self.j / 2) * lam_norm)
        out = np.zeros(lam_norm.shape, dtype=complex)
        nz = w != 0
        out[nz] = eval_m_radial(self.params, self.model, lam_norm[nz]) * w[nz]
        return out

    def of_s(self, s):
        """m~_j(s): m_j on the spectral axis s = |lam|^2 + |rho|^2."""
        s = np.asarray(s, dtype=float)
        lam2 = s - self.model.rho_norm_sq
        out = np.zeros(s.shape, dtype=complex)
        ok = lam2 > 0
        out[ok] = self.radial(np.sqrt(lam2[ok]))
        return out


def eval_mj(sym: DyadicSymbol, p, tube_v: float = 0.0):
    if isinstance(p, SpectralPoint):
        tube_v = p.tube_v
        p = p.lam
    if tube_v != 0:
        raise ValueError("m_j is evaluated on real spectral parameters only")
    lam = as_coords(sym.model, p)
    return sym.radial(np.linalg.norm(np.asarray(lam, dtype=float), axis=-1))


def eval_hj(sym: DyadicSymbol, u):
    """h_j(u) = m~_j(-2^j ln u) / u on (0, 1]."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("h_j is defined for u in (0, 1]")
    if np.any(u > 1):
        raise ValueError("h_j is defined for u in (0, 1]")
    s = -(2.0 ** sym.j) * np.log(u)
    return sym.of_s(s) / u


def _central_weights(k: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Central finite-difference stencil for the k-th derivative."""
    half = (k + order - 1) // 2
    offs = np.arange(-half, half + 1, dtype=float)
    A = np.vander(offs, increasing=True).T
    rhs = np.zeros(len(offs))
    rhs[k] = math.factorial(k)
    return offs, np.linalg.solve(A, rhs)


def finite_difference(f: Callable, x, k: int, h: float, order: int = 8):
    offs, w = _central_weights(k, order)
    x = np.asarray(x, dtype=float)
    acc = 0.0
    for o, c in zip(offs, w):
        acc = acc + c * f(x + o * h)
    return acc / h**k


class FDAccuracyError(RuntimeError):
    pass


@dataclass
class CkNorm:
    value: float
    err_estimate: float
    sup_by_order: list[float]


def hj_ck_norm(sym: DyadicSymbol, k: int, n_grid: int | None = None) -> CkNorm:
    """||h_j||_{C^k} = sum_{i<=k} sup |h_j^(i)| by 8th-order central differences.

    The step resolves the 2^{alpha j/2} oscillation of h_j; the error estimate
    compares steps h and h/2.
    """
    if not 0 <= k <= 6:
        raise ValueError("k must lie in [0, 6]")
    a, b = sym.u_support
    freq = (0.5 * sym.params.alpha * 2.0 ** (sym.params.alpha * sym.j / 2) + 1.0) / a
    if n_grid is None:
        n_grid = int(min(200_000, max(4000, 60 * freq * (b - a))))
    u = np.linspace(a, b, n_grid)

    def h(x):
        x = np.clip(x, 1e-300, 1.0)
        return eval_hj(sym, x)

    sups = []
    errs = []
    base = (b - a) / 2000.0 / max(1.0, freq * (b - a) / 50.0)
    for i in range(k + 1):
        if i == 0:
            sups.append(float(np.max(np.abs(h(u)))))
            errs.append(0.0)
            continue
        step = base * (1.0 + 0.5 * i)
        d1 = np.abs(finite_difference(h, u, i, step))
        d2 = np.abs(finite_difference(h, u, i, step / 2))
        sups.append(float(np.max(d2)))
        errs.append(abs(float(np.max(d2)) - float(np.max(d1))))
    value = float(sum(sups))
    err = float(sum(errs))
    if err > 0.01 * value:
        raise FDAccuracyError(f"finite-difference error {err:.3g} exceeds 1% of {value:.3g}")
    return CkNorm(value, err, sups)


def hj_sup(sym: DyadicSymbol, n_grid: int = 20001) -> float:
    a, b = sym.u_support
    return float(np.max(np.abs(eval_hj(sym, np.linspace(a, b, n_grid)))))


def mj_sup(sym: DyadicSymbol) -> float:
    """sup |m_j| located by a grid scan refined with a bounded scalar search."""
    from scipy.optimize import minimize_scalar

    a, b = sym.support
    x = np.linspace(a, b, 4001)
    vals = np.abs(sym.radial(x))
    i = int(np.argmax(vals))
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
    res = minimize_scalar(lambda t: -abs(sym.radial(np.array([t]))[0]), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12 * b})
    return max(float(vals[i]), -float(res.fun))


# ---------------------------------------------------------------------------
# derivatives in the tube
# ---------------------------------------------------------------------------

def _analytic_derivatives(params: MultiplierParams, model: SpaceModel, lam_vec, tube_v: float, k: int,
                          direction: int = 0):
    """d^k/dlam_dir^k of m(lam + i v rho) for k <= 2 (chain rule in s)."""
    lam = np.asarray(lam_vec, dtype=float)
    rho = np.asarray(model.rho)
    z = lam + 1j * tube_v * rho
    s = np.sum(z * z, axis=-1) + model.rho_norm_sq
    m = m_of_s(params, s)
    if k == 0:
        return m
    a2, b2 = 0.5 * params.alpha, 0.5 * params.beta
    sp = 2.0 * z[..., direction]
    spp = 2.0
    s_a = np.exp(a2 * np.log(s))
    # L = log m = -b2 log s + i s^{a2}
    dL_ds = -b2 / s + 1j * a2 * s_a / s
    d2L_ds2 = b2 / s**2 + 1j * a2 * (a2 - 1.0) * s_a / s**2
    L1 = dL_ds * sp
    if k == 1:
        return m * L1
    L2 = d2L_ds2 * sp * sp + dL_ds * spp
    return m * (L1 * L1 + L2)


def tube_derivative(params: MultiplierParams, model: SpaceModel, lam_norm, tube_v: float, k: int,
                    h_rel: float = 1e-2):
    """|d^k m(lam + i v rho)| along a coordinate direction, at |lam| = lam_norm.

    Rank one uses the line; rank two evaluates on the diagonal ray
    lam = |lam| (1,1)/sqrt 2 and differentiates in lam_1.  Orders 3 and 4
    difference the analytic second derivative (Richardson over three steps).
    """
    if tube_v >= 1.0:
        raise ValueError("tube_v must be < 1")
    if not 0 <= k <= 4:
        raise ValueError("k must lie in [0, 4]")
    lam_norm = np.atleast_1d(np.asarray(lam_norm, dtype=float))
    dirv = np.ones(model.d) / math.sqrt(model.d)
    base = lam_norm[:, None] * dirv[None, :]
    if k <= 2:
        return np.abs(_analytic_derivatives(params, model, base, tube_v, k))

    e = np.zeros(model.d)
    e[0] = 1.0
    order = k - 2

    def d2(t):
        return _analytic_derivatives(params, model, base + t[:, None] * e[None, :], tube_v, 2)

    h0 = h_rel * np.maximum(1.0, lam_norm)
    ests = []
    for h in (h0, h0 / 2, h0 / 4):
        offs, w = _central_weights(order, 4)
        acc = sum(c * d2(o * h) for o, c in zip(offs, w))
        ests.append(acc / h**order)
    # fourth-order stencil: error ~ h^4, Richardson with ratio 16
    r1 = (16 * ests[1] - ests[0]) / 15
    r2 = (16 * ests[2] - ests[1]) / 15
    diff_a = np.abs(ests[1] - ests[0])
    diff_b = np.abs(ests[2] - ests[1])
    scale = np.maximum(np.abs(r2), 1e-300)
    unstable = (diff_b > diff_a * 1.5) & (diff_b > 1e-9 * scale)
    if np.any(unstable):
        raise FDAccuracyError("Richardson sequence is not contracting (finite-difference instability)")
    return np.abs(r2)


def tube_derivative_profile(params: MultiplierParams, model: SpaceModel, cls: SymbolClassParams | float,
                            k: int, lam_grid) -> list[tuple[float, float]]:
    v = cls.v if isinstance(cls, SymbolClassParams) else float(cls)
    lam_grid = np.asarray(lam_grid, dtype=float)
    vals = tube_derivative(params, model, lam_grid, v, k)
    return list(zip(lam_grid.tolist(), vals.tolist()))


def telescoping_symbol_sum(params: MultiplierParams, model: SpaceModel, lam_norm, J: int,
                           partition: PartitionSpec = DEFAULT_PARTITION):
    """sum_{j<=J} m_j + m chi(sqrt2 |lam|); equals m for |lam| <= 2^{J/2}."""
    lam_norm = np.asarray(lam_norm, dtype=float)
    total = eval_m_radial(params, model, lam_norm) * partition.chi(SQRT2 * lam_norm)
    for j in range(J + 1):
        total = total + DyadicSymbol(j, params, model, partition).radial(lam_norm)
    return total


# ---------------------------------------------------------------------------
# verifications
# ---------------------------------------------------------------------------

def verify_partition(partition: PartitionSpec = DEFAULT_PARTITION, J: int = 20, lam_max: float = 2.0**10,
                     n: int = 200_001, tol: float = 1e-12):
    """max |chi(sqrt2 |lam|) + sum_{j<=J} omega(2^{-j/2} lam) - 1| on [0, lam_max]."""
    from .reports import NormReport

    if lam_max > partition.inner * 2.0 ** (J / 2):
        raise ValueError("lam_max exceeds the range 2^{J/2} covered by the partial sum")
    lam = np.concatenate([np.linspace(0.0, lam_max, n), np.geomspace(1e-6, lam_max, 20_001)])
    err = float(np.max(np.abs(partition.partial_sum(lam, J) - 1.0)))
    rep = NormReport("partition_of_unity", [{"J": J, "lam_max": lam_max, "max_abs_error": err}],
                     passed=err <= tol, tolerances={"abs": tol})
    rep.notes.append(f"max |sum - 1| = {err:.3g}")
    return rep


def verify_symbol_class(params: MultiplierParams, model: SpaceModel, v: float, k: int,
                        lam_range: tuple[float, float] = (10.0, 1e3), n: int = 61, tol: float = 0.1):
    """Slope of log |d^k m(lam + i v rho)| against log(1 + |lam|).

    The class envelope (1 + |lam|)^{-beta - k(1 - alpha)} predicts the slope
    -beta - k(1 - alpha); pass iff the fit is within ``tol`` of it.
    """
    from .reports import NormReport, fit_line

    lam = np.geomspace(lam_range[0], lam_range[1], n)
    vals = tube_derivative(params, model, lam, v, k)
    if np.any(~(vals > 0)):
        raise FDAccuracyError("derivative vanished or was not finite on the sweep")
    fit = fit_line(np.log1p(lam), np.log(vals))
    target = -params.beta - k * (1.0 - params.alpha)
    rows = [{"lam": float(x), "abs_derivative": float(y), "v": v, "k": k} for x, y in zip(lam, vals)]
    rep = NormReport(f"symbol_class[{model.id},v={v:g},k={k}]", rows, {"log_deriv_vs_log_1p_lam": fit},
                     passed=abs(fit.slope - target) <= tol, tolerances={"slope": tol})
    rep.notes.append(f"slope={fit.slope:.4f}, target={target:.4f}")
    return rep
