"""Model symmetric spaces with closed-form spectral data.

Two models are provided: real hyperbolic 3-space H^3 (curvature -1, rho = 1)
and the reducible rank-two product H^3 x H^3.  Everything factorises over
the rank-one factors:

    phi_mu(r)   = sin(mu r) / (mu sinh r)
    density(l)  = l^2 / (2 pi^2)                    (Plancherel, l >= 0)
    delta(r)    = 4 pi sinh(r)^2                    (radial volume density)
    p_t(r)      = (4 pi t)^(-3/2) exp(-t - r^2/4t) r / sinh r

The normalisations are chosen jointly so that the spherical transform of
p_t is exactly exp(-t (|l|^2 + |rho|^2)).

All array functions broadcast over leading axes; the last axis carries the
d radial (or spectral) coordinates.  For rank one a bare scalar or 1-D array
is accepted and read as a list of points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

SMALL_ARG = 1e-4
FOUR_PI = 4.0 * math.pi
TWO_PI_SQ = 2.0 * math.pi**2


class ModelKind(str, enum.Enum):
    H3 = "h3"
    H3xH3 = "h3xh3"


@dataclass(frozen=True)
class SpaceModel:
    kind: ModelKind
    n: int
    d: int
    rho: tuple[float, ...]
    weyl_order: int

    @property
    def rho_norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.rho))

    @property
    def rho_norm_sq(self) -> float:
        return sum(x * x for x in self.rho)

    @property
    def b(self) -> int:
        return self.n - self.d

    @property
    def b_prime(self) -> int:
        return -(-self.b // 2)

    @property
    def id(self) -> str:
        return self.kind.value


H3 = SpaceModel(ModelKind.H3, n=3, d=1, rho=(1.0,), weyl_order=2)
# Weyl group of the product: sign flips in each factor (no factor swap is
# needed for the estimates, but the symmetric group of order 8 includes it).
H3xH3 = SpaceModel(ModelKind.H3xH3, n=6, d=2, rho=(1.0, 1.0), weyl_order=4)

MODELS = {"h3": H3, "h3xh3": H3xH3}


def get_model(model_id: str | SpaceModel) -> SpaceModel:
    if isinstance(model_id, SpaceModel):
        return model_id
    try:
        return MODELS[str(model_id).lower()]
    except KeyError:
        raise ValueError(f"unknown model {model_id!r}; expected one of {sorted(MODELS)}") from None


@dataclass(frozen=True)
class RadialPoint:
    """Cartan radial coordinates H = (r_1, ..., r_d) with all r_i >= 0."""

    r: tuple[float, ...]

    def __post_init__(self):
        if any(not math.isfinite(x) or x < 0 for x in self.r):
            raise ValueError(f"radial coordinates must be finite and >= 0, got {self.r}")

    @property
    def norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.r))


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter lam, evaluated at lam + i v rho."""

    lam: tuple[float, ...]
    tube_v: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tube_v <= 1.0:
            raise ValueError(f"tube_v must lie in [0, 1], got {self.tube_v}")


class RegionKind(str, enum.Enum):
    ALL = "all"
    BALL = "ball"
    ANNULUS = "annulus"
    TAIL = "tail"
    SHELL = "shell"


@dataclass(frozen=True)
class RegionSpec:
    """Radial region described through |H|.

    ``Annulus(q)`` is the dyadic annulus 2^(q/2) <= |H| <= 2^((q+1)/2).
    ``Shell(a, b)`` is a plain radial shell a <= |H| <= b (used for the
    unit annuli of the Kunze-Stein sums).
    """

    kind: RegionKind
    radius: float | None = None
    q: float | None = None
    inner: float | None = None
    outer: float | None = None

    @classmethod
    def all(cls) -> "RegionSpec":
        return cls(RegionKind.ALL)

    @classmethod
    def ball(cls, radius: float) -> "RegionSpec":
        if not radius >= 0:
            raise ValueError("ball radius must be >= 0")
        return cls(RegionKind.BALL, radius=float(radius))

    @classmethod
    def annulus(cls, q: float) -> "RegionSpec":
        return cls(RegionKind.ANNULUS, q=float(q))

    @classmethod
    def tail(cls, radius: float) -> "RegionSpec":
        if not radius > 0:
            raise ValueError("tail radius must be > 0")
        return cls(RegionKind.TAIL, radius=float(radius))

    @classmethod
    def shell(cls, inner: float, outer: float) -> "RegionSpec":
        if not 0 <= inner < outer:
            raise ValueError("shell needs 0 <= inner < outer")
        return cls(RegionKind.SHELL, inner=float(inner), outer=float(outer))

    def bounds(self, r_max: float) -> tuple[float, float]:
        """Radial interval [lo, hi] in |H|, with unbounded regions cut at r_max."""
        if self.kind is RegionKind.ALL:
            return 0.0, r_max
        if self.kind is RegionKind.BALL:
            return 0.0, self.radius
        if self.kind is RegionKind.ANNULUS:
            return 2.0 ** (self.q / 2), 2.0 ** ((self.q + 1) / 2)
        if self.kind is RegionKind.TAIL:
            return self.radius, max(r_max, self.radius)
        return self.inner, self.outer

    @property
    def unbounded(self) -> bool:
        return self.kind in (RegionKind.ALL, RegionKind.TAIL)


# ---------------------------------------------------------------------------
# coercion helpers
# ---------------------------------------------------------------------------

def as_coords(model: SpaceModel, x) -> np.ndarray:
    """Return an array of shape (..., d) from points, tuples or arrays."""
    if isinstance(x, RadialPoint):
        x = x.r
    elif isinstance(x, SpectralPoint):
        x = x.lam
    arr = np.asarray(x)
    if model.d == 1:
        if arr.ndim == 0 or arr.shape[-1] != 1:
            arr = arr[..., None]
        return arr
    if arr.shape[-1] != model.d:
        raise ValueError(f"expected trailing axis of length {model.d}, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# rank-one building blocks
# ---------------------------------------------------------------------------

def sinc(z):
    """sin(z)/z for real or complex z, with a 4-term Taylor expansion near 0."""
    z = np.asarray(z)
    small = np.abs(z) < SMALL_ARG
    zs = np.where(small, 1.0, z)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.sin(zs) / zs
    z2 = z * z
    series = 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0
    return np.where(small, series, out)


def r_over_sinh(r):
    """r/sinh(r), exact at r = 0 and underflow-safe for large r."""
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < SMALL_ARG
    rs = np.where(small, 1.0, r)
    with np.errstate(over="ignore"):
        out = rs / np.sinh(rs)
    r2 = r * r
    series = 1.0 - r2 / 6.0 + 7.0 * r2 * r2 / 360.0 - 31.0 * r2 * r2 * r2 / 15120.0
    return np.where(small, series, out)


def phi1(mu, r):
    """Rank-one spherical function sin(mu r)/(mu sinh r)."""
    return sinc(np.asarray(mu) * r) * r_over_sinh(r)


def heat1(t, r):
    """Rank-one heat kernel on H^3."""
    r = np.asarray(r, dtype=float)
    return (FOUR_PI * t) ** -1.5 * np.exp(-t - r * r / (4.0 * t)) * r_over_sinh(r)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def spherical_function(model: SpaceModel, lam, x, tube_v: float = 0.0):
    """phi at spectral point lam + i tube_v rho, radial point x.

    The rank-one factor is even in mu, so the sign of the imaginary shift
    is immaterial.  Returns a real array when tube_v == 0.
    """
    if isinstance(lam, SpectralPoint):
        tube_v = lam.tube_v
    lam = as_coords(model, lam)
    r = as_coords(model, x)
    if tube_v:
        mu = lam - 1j * tube_v * np.asarray(model.rho)
    else:
        mu = lam
    return np.prod(phi1(mu, r), axis=-1)


def plancherel_density(model: SpaceModel, lam, tube_v: float = 0.0):
    if isinstance(lam, SpectralPoint):
        tube_v = lam.tube_v
    if tube_v != 0:
        raise ValueError("the Plancherel density is only defined for real spectral parameters")
    lam = as_coords(model, lam).astype(float)
    return np.prod(lam * lam / TWO_PI_SQ, axis=-1)


def volume_density(model: SpaceModel, x):
    r = as_coords(model, x).astype(float)
    return np.prod(FOUR_PI * np.sinh(r) ** 2, axis=-1)


def heat_kernel(model: SpaceModel, t: float, x):
    if not t > 0:
        raise ValueError(f"heat time must be positive, got {t}")
    r = as_coords(model, x).astype(float)
    return np.prod(heat1(t, r), axis=-1)


def log_r_over_sinh(r):
    """log(r/sinh r), stable for all r >= 0."""
    r = np.asarray(r, dtype=float)
    big = r > 20.0
    rb = np.where(big, r, 1.0)
    large = np.log(2.0 * rb) - rb - np.log1p(-np.exp(-2.0 * rb))
    return np.where(big, large, np.log(r_over_sinh(np.where(big, 1.0, r))))


def log_heat_kernel(model: SpaceModel, t: float, x):
    """log p_t(x); finite where p_t itself underflows."""
    if not t > 0:
        raise ValueError(f"heat time must be positive, got {t}")
    r = as_coords(model, x).astype(float)
    per = -1.5 * np.log(FOUR_PI * t) - t - r * r / (4.0 * t) + log_r_over_sinh(r)
    return np.sum(per, axis=-1)


def spectral_value(model: SpaceModel, lam_norm):
    """s = |lam|^2 + |rho|^2 as a function of |lam|."""
    lam_norm = np.asarray(lam_norm)
    return lam_norm * lam_norm + model.rho_norm_sq


def weyl_images(model: SpaceModel, lam) -> list[np.ndarray]:
    """All images of lam under the model Weyl group.

    For the reducible product the Weyl group is W(H^3) x W(H^3), the four
    sign flips.  The factor swap is an automorphism of the product, not a
    Weyl element: it preserves phi only when applied to lam and x together.
    """
    lam = np.asarray(as_coords(model, lam), dtype=float)
    if model.d == 1:
        return [lam, -lam]
    out = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            out.append(lam * np.array([s1, s2]))
    return out
