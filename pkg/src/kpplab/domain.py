"""Habitats, population fields, growth laws and dispersal kernels.

Models live on a truncated box [-L, L]^dim, discretized either as a
continuum grid with spacing h or as the integer lattice (h = 1).  The
growth law is an affine KPP nonlinearity f(x, u) = f0(u) + A*bump(x)
whose spatial perturbation is a compactly supported mollifier bump, so
f(x, u) agrees with the homogeneous f0(u) *exactly* outside the
perturbation radius.  Everything here is an immutable value object;
arrays are frozen after construction so instances can be shared freely
between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

CONTINUUM = "continuum"
LATTICE = "lattice"
CLAMP = "clamp"
PERIODIC = "periodic"

_HYPOTHESIS_U_STEP = 1e-2  # sample step in u for the growth-law checks


class NoEquilibriumError(ValueError):
    """f0 has no root in (0, beta0]: no positive equilibrium."""


class DomainSizeError(ValueError):
    """Requested structure does not fit inside the truncated habitat."""


def _frozen(values, dtype=float):
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


def unit_direction(xi, dim):
    """Normalize xi to a unit vector of length dim (scalars allowed in 1-D)."""
    v = np.atleast_1d(np.asarray(xi, dtype=float))
    if v.shape != (dim,):
        raise ValueError(f"direction has shape {v.shape}, expected ({dim},)")
    n = float(np.linalg.norm(v))
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("direction must be a nonzero finite vector")
    return _frozen(v / n)


@dataclass(frozen=True)
class Habitat:
    """Truncated computational domain standing in for R^N or Z^N.

    kind        "continuum" or "lattice"
    dim         1 or 2
    half_extent L, the box is [-L, L] per axis
    spacing     grid step h (forced to 1 on the lattice)
    boundary    "clamp" (ghost cells copy the nearest interior value,
                kernel rows renormalized over in-domain points) or
                "periodic"
    """

    kind: str
    dim: int
    half_extent: float
    spacing: float = 1.0
    boundary: str = CLAMP

    def __post_init__(self):
        if self.kind not in (CONTINUUM, LATTICE):
            raise ValueError(f"unknown habitat kind {self.kind!r}")
        if self.boundary not in (CLAMP, PERIODIC):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if not (self.half_extent > 0 and self.spacing > 0):
            raise ValueError("half_extent and spacing must be positive")
        if self.kind == LATTICE:
            if self.spacing != 1.0:
                raise ValueError("lattice habitats have spacing 1")
            if abs(self.half_extent - round(self.half_extent)) > 1e-12:
                raise ValueError("lattice half_extent must be an integer")
        ratio = self.half_extent / self.spacing
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("half_extent must be an integer multiple of spacing")
        if self.n_per_axis < 3:
            raise ValueError("need at least 3 grid points per axis")

    @property
    def half_points(self) -> int:
        return int(round(self.half_extent / self.spacing))

    @property
    def n_per_axis(self) -> int:
        return 2 * self.half_points + 1

    @property
    def shape(self):
        return (self.n_per_axis,) * self.dim

    @property
    def n_points(self) -> int:
        return self.n_per_axis ** self.dim

    def axis_coords(self):
        m = self.half_points
        return np.arange(-m, m + 1, dtype=float) * self.spacing

    def grid(self):
        """Coordinate arrays, one dense array of self.shape per axis."""
        c = self.axis_coords()
        if self.dim == 1:
            return (c,)
        return tuple(np.meshgrid(c, c, indexing="ij"))

    def radius(self):
        g = self.grid()
        if self.dim == 1:
            return np.abs(g[0])
        return np.sqrt(g[0] ** 2 + g[1] ** 2)

    def projection(self, xi):
        """x . xi over the grid, for a unit direction xi."""
        v = unit_direction(xi, self.dim)
        g = self.grid()
        out = v[0] * g[0]
        for d in range(1, self.dim):
            out = out + v[d] * g[d]
        return out

    def field(self, values) -> "Field":
        return Field(self, values)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape))

    def full(self, value: float) -> "Field":
        return Field(self, np.full(self.shape, float(value)))


@dataclass(eq=False)
class Field:
    """Real values on a habitat grid, frozen after construction."""

    habitat: Habitat
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.habitat.shape:
            raise ValueError(f"values shape {v.shape} != habitat shape {self.habitat.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def is_nonnegative(self) -> bool:
        return bool(self.values.min() >= 0.0)

    def is_strictly_positive(self) -> bool:
        """Membership test for the positive cone interior (min value > 0)."""
        return bool(self.values.min() > 0.0)


def mollifier_bump(s):
    """Smooth compactly supported bump: exp(1 - 1/(1 - s^2)) for |s| < 1, else 0.

    Exactly zero (not merely small) outside the unit ball, which is what
    makes the localized-inhomogeneity hypothesis checkable in exact
    arithmetic.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    t = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t * t))
    return out


@dataclass(frozen=True)
class Reaction:
    """Growth law f(x, u) = r0 + A*bump(|x|/L0) - slope*u.

    Both documented base families are affine in u and share this single
    canonical form: the linear family r0 - b*u has slope = b, the
    logistic family r0*(1 - u/K) has slope = r0/K.  The perturbation is
    u-independent, so d_u f = -slope < 0 everywhere and the homogeneous
    law is recovered exactly for |x| >= L0.
    """

    r0: float
    slope: float
    amplitude: float = 0.0
    radius: float = 1.0
    family: str = "linear"

    def __post_init__(self):
        if not (self.r0 > 0):
            raise ValueError("r0 = f0(0) must be positive")
        if not (self.slope > 0):
            raise ValueError("slope must be positive (f must be decreasing in u)")
        if not (self.radius > 0):
            raise ValueError("perturbation radius must be positive")
        for x in (self.r0, self.slope, self.amplitude, self.radius):
            if not math.isfinite(x):
                raise ValueError("reaction parameters must be finite")

    @classmethod
    def linear(cls, r0, b, amplitude=0.0, radius=1.0):
        return cls(float(r0), float(b), float(amplitude), float(radius), "linear")

    @classmethod
    def logistic(cls, r0, carrying_capacity, amplitude=0.0, radius=1.0):
        r0 = float(r0)
        return cls(r0, r0 / float(carrying_capacity), float(amplitude), float(radius), "logistic")

    def f0(self, u):
        """Homogeneous base growth rate f0(u)."""
        return self.r0 - self.slope * np.asarray(u, dtype=float)

    def df0(self, u):
        u = np.asarray(u, dtype=float)
        return np.full_like(u, -self.slope)

    @property
    def beta0(self) -> float:
        """A level above which f(x, u) < 0 strictly, for every x."""
        return (self.r0 + max(self.amplitude, 0.0)) / self.slope + 1e-6

    def perturbation(self, habitat: Habitat):
        """A * bump(|x|/L0) sampled on the habitat grid (exact zeros outside L0)."""
        if self.amplitude == 0.0:
            return np.zeros(habitat.shape)
        return self.amplitude * mollifier_bump(habitat.radius() / self.radius)

    def bind(self, habitat: Habitat):
        """Vectorized u -> f(x, u) on the habitat grid."""
        base = self.r0 + self.perturbation(habitat)
        slope = self.slope

        def growth(u):
            return base - slope * u

        return growth

    def evaluate(self, habitat: Habitat, u):
        return self.bind(habitat)(np.asarray(u, dtype=float))


def bisect_root(fn, lo, hi, tol=1e-12):
    """Plain bisection for a sign change of fn on [lo, hi]."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("no sign change on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class HypothesesReport:
    h1_ok: bool
    h2_ok: bool
    beta0: float
    u0_star: float


def check_kpp_hypotheses(reaction: Reaction, habitat: Habitat) -> HypothesesReport:
    """Check the KPP structure of a reaction on a documented sample grid.

    h2_ok is exact: the perturbation must vanish identically at grid
    points with |x| >= L0.  h1_ok samples u in [0, 2*beta0] at step 1e-2
    for the monotonicity check and evaluates f(x, beta0) on the full
    grid.  u0_star is the positive root of f0 on [0, beta0], found by
    bisection to 1e-12.
    """
    pert = reaction.perturbation(habitat)
    r = habitat.radius()
    h2_ok = bool(np.all(pert[r >= reaction.radius] == 0.0))

    beta0 = reaction.beta0
    u_grid = np.arange(0.0, 2.0 * beta0 + _HYPOTHESIS_U_STEP, _HYPOTHESIS_U_STEP)
    decreasing = bool(np.all(reaction.df0(u_grid) < 0.0))
    f_at_beta0 = reaction.r0 + pert - reaction.slope * beta0
    h1_ok = decreasing and bool(np.all(f_at_beta0 < 0.0))

    f0 = reaction.f0
    if f0(0.0) <= 0.0 or f0(beta0) >= 0.0:
        raise NoEquilibriumError("no positive equilibrium: f0 has no sign change on [0, beta0]")
    u0_star = bisect_root(f0, 0.0, beta0, tol=1e-12)

    return HypothesesReport(h1_ok=h1_ok, h2_ok=h2_ok, beta0=beta0, u0_star=u0_star)


def make_front_initial(habitat: Habitat, xi, sigma0: float) -> Field:
    """Front-like initial data: sigma0 behind the origin (x.xi <= 0),
    linear ramp to zero on 0 <= x.xi <= 1, zero ahead."""
    if not (sigma0 > 0):
        raise ValueError("sigma0 must be positive")
    proj = habitat.projection(xi)
    return Field(habitat, sigma0 * np.clip(1.0 - proj, 0.0, 1.0))


def make_compact_initial(habitat: Habitat, r: float, sigma: float) -> Field:
    """Radial plateau: sigma on |x| <= r, continuous ramp to zero at r + 1."""
    if not (r > 0 and sigma > 0):
        raise ValueError("r and sigma must be positive")
    if r + 1.0 >= habitat.half_extent:
        raise DomainSizeError(
            f"domain too small: need r + 1 < half_extent, got r={r}, L={habitat.half_extent}"
        )
    return Field(habitat, sigma * np.clip(r + 1.0 - habitat.radius(), 0.0, 1.0))


def _profile_uniform(rho, d0):
    return np.where(rho < d0, 1.0, 0.0)


def _profile_triangle(rho, d0):
    return np.maximum(0.0, 1.0 - rho / d0)


def _profile_mollifier(rho, d0):
    return mollifier_bump(rho / d0)


_PROFILES = {
    "uniform": _profile_uniform,
    "triangle": _profile_triangle,
    "mollifier": _profile_mollifier,
}


@dataclass(eq=False)
class Kernel:
    """Compactly supported convolution kernel, discretized on a grid.

    offsets are integer index offsets (m, dim); weights are the sampled
    profile values renormalized so that sum(weights) * spacing^dim == 1
    exactly (up to roundoff), which in turn makes constants exactly
    dispersal-neutral.
    """

    delta0: float
    dim: int
    spacing: float
    offsets: np.ndarray
    weights: np.ndarray
    profile_name: str = "custom"
    _profile: object = dc_field(default=None, repr=False)

    @classmethod
    def from_profile(cls, profile, delta0, spacing, dim):
        if isinstance(profile, str):
            name = profile
            try:
                fn = _PROFILES[profile]
            except KeyError:
                raise ValueError(f"unknown kernel profile {profile!r}") from None
        else:
            name, fn = "custom", profile
        if not (delta0 > 0 and spacing > 0):
            raise ValueError("delta0 and spacing must be positive")
        half = int(math.ceil(delta0 / spacing))
        axes = [np.arange(-half, half + 1)] * dim
        mesh = np.meshgrid(*axes, indexing="ij")
        offsets = np.stack([m.ravel() for m in mesh], axis=-1)
        z = offsets * spacing
        rho = np.sqrt(np.sum(z * z, axis=-1))
        vals = np.asarray(fn(rho, delta0), dtype=float)
        vals = np.where(rho >= delta0, 0.0, vals)
        if np.any(vals < 0):
            raise ValueError("kernel profile must be nonnegative")
        keep = vals > 0.0
        offsets, vals = offsets[keep], vals[keep]
        if len(vals) < 2:
            raise ValueError("kernel support contains no grid neighbor; decrease spacing")
        vals = vals / (vals.sum() * spacing ** dim)
        k = cls(
            delta0=float(delta0),
            dim=dim,
            spacing=float(spacing),
            offsets=_frozen(offsets, dtype=int),
            weights=_frozen(vals),
            profile_name=name,
            _profile=fn,
        )
        assert abs(k.mass - 1.0) <= 1e-15 * len(vals)
        return k

    @property
    def mass(self) -> float:
        return float(self.weights.sum() * self.spacing ** self.dim)

    @property
    def half_width(self) -> int:
        return int(np.max(np.abs(self.offsets)))

    def displacements(self):
        return self.offsets * self.spacing

    def resample(self, spacing) -> "Kernel":
        if self._profile is None:
            raise ValueError("kernel has no stored profile to resample")
        return Kernel.from_profile(self._profile, self.delta0, spacing, self.dim)

    def twisted_moment(self, mu, xi):
        """Quadrature of exp(-mu z.xi) kappa(z) dz; vectorized over mu."""
        v = unit_direction(xi, self.dim)
        zdot = self.displacements() @ v
        mu = np.asarray(mu, dtype=float)
        w = self.weights * self.spacing ** self.dim
        return np.exp(-np.multiply.outer(mu, zdot)) @ w

    def halfspace_mass(self, xi) -> float:
        """Quadrature of kappa over {z . xi <= 0}; the dividing plane
        counts with half weight so symmetric kernels give exactly 1/2."""
        v = unit_direction(xi, self.dim)
        zdot = self.displacements() @ v
        w = self.weights * self.spacing ** self.dim
        side = np.where(zdot < 0, 1.0, np.where(zdot == 0.0, 0.5, 0.0))
        return float(np.sum(w * side))


@dataclass(eq=False)
class LatticeWeights:
    """Positive exchange rates a_k on the 2*dim unit offsets of Z^dim."""

    dim: int
    offsets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=int)
        values = np.array(self.values, dtype=float)
        expected = {tuple(v) for v in _unit_offsets(self.dim)}
        got = {tuple(o) for o in offsets}
        if got != expected:
            raise ValueError(f"offsets must be exactly the {2 * self.dim} unit vectors")
        if len(offsets) != 2 * self.dim:
            raise ValueError("duplicate offsets")
        if not np.all(values > 0):
            raise ValueError("all rates a_k must be positive")
        object.__setattr__(self, "offsets", _frozen(offsets, dtype=int))
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def symmetric(cls, dim, a=1.0):
        offs = _unit_offsets(dim)
        return cls(dim, offs, np.full(len(offs), float(a)))

    @classmethod
    def from_rates(cls, rates: dict):
        offs = sorted(rates.keys())
        dim = len(offs[0])
        return cls(dim, np.array(offs), np.array([rates[o] for o in offs]))

    @property
    def rate_sum(self) -> float:
        return float(self.values.sum())

    def twisted_sum(self, mu, xi):
        """sum_k a_k (exp(-mu k.xi) - 1); vectorized over mu."""
        v = unit_direction(xi, self.dim)
        kdot = self.offsets @ v
        mu = np.asarray(mu, dtype=float)
        return (np.exp(-np.multiply.outer(mu, kdot)) - 1.0) @ self.values


def _unit_offsets(dim):
    offs = []
    for d in range(dim):
        for s in (1, -1):
            e = [0] * dim
            e[d] = s
            offs.append(tuple(e))
    return np.array(offs, dtype=int)
