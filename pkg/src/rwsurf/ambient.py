"""Ambient geometry backends for Lorentzian warped products.

Two backends cover the classified cases:

* ``warped-flat``  -- L^n_1(f, 0) in comoving coordinates (t, x_1..x_{n-1})
  with metric diag(-1, f(t)^2, ..., f(t)^2) and hard-coded Christoffel
  symbols.
* ``product-space-form`` -- E^1_1 x S^{n-1} (c = +1) or E^1_1 x H^{n-1}
  (c = -1) realized inside flat (n+1)-space with metric
  diag(-1, c, 1, ..., 1); all derivatives are flat partials followed by an
  algebraic projection along the product normal.

The curvature tensor is evaluated algebraically from the comoving split and
the scalars f''/f and (f'^2 + c)/f^2, so it also covers warped metrics with
c != 0 that have no coordinate backend here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (ChartDomainError, DimensionMismatchError,
                     SingularWarpError)
from .linalg import inner

__all__ = [
    "WarpingFunction",
    "AmbientSpace",
    "comoving_split",
    "christoffel_at",
    "ambient_covariant_derivative",
    "curvature_rw",
    "curvature_rw_values",
    "is_constant_curvature",
]

_INTERVAL_SLACK = 1e-9


@dataclass(frozen=True)
class WarpingFunction:
    """Pointwise access to (f, f', f'') on a validity interval.

    ``source`` tags where the jet comes from: 'closed-form' or
    'ode-dense-output'.  f must not vanish on the interval; evaluation raises
    SingularWarpError if it does.
    """

    fn: Callable[[float], tuple[float, float, float]]
    interval: tuple[float, float] = (-np.inf, np.inf)
    source: str = "closed-form"
    label: str = ""

    def __call__(self, t: float) -> tuple[float, float, float]:
        lo, hi = self.interval
        slack = _INTERVAL_SLACK * max(1.0, abs(lo) if np.isfinite(lo) else 1.0,
                                      abs(hi) if np.isfinite(hi) else 1.0)
        if not (lo - slack <= t <= hi + slack):
            raise ChartDomainError(
                f"warp evaluated at t={t} outside interval [{lo}, {hi}]")
        f, fp, fpp = self.fn(t)
        if abs(f) < 1e-14:
            raise SingularWarpError(f"warping function vanishes at t={t}")
        return float(f), float(fp), float(fpp)

    # -- common closed forms ------------------------------------------------

    @staticmethod
    def constant(value: float = 1.0, interval=(-np.inf, np.inf)) -> "WarpingFunction":
        if value == 0.0:
            raise SingularWarpError("constant warp must be non-zero")
        return WarpingFunction(lambda t: (value, 0.0, 0.0), interval,
                               label=f"const({value})")

    @staticmethod
    def exponential(rate: float = 1.0, interval=(-np.inf, np.inf)) -> "WarpingFunction":
        def fn(t):
            e = np.exp(rate * t)
            return e, rate * e, rate * rate * e
        return WarpingFunction(fn, interval, label=f"exp({rate})")

    @staticmethod
    def hyperbolic_cosine(interval=(-np.inf, np.inf)) -> "WarpingFunction":
        return WarpingFunction(
            lambda t: (np.cosh(t), np.sinh(t), np.cosh(t)), interval,
            label="cosh")

    @staticmethod
    def polynomial(coeffs, interval) -> "WarpingFunction":
        """Polynomial warp from ascending coefficients; interval required
        because positivity is the caller's responsibility."""
        c = np.asarray(coeffs, dtype=float)
        c1 = np.polyder(c[::-1])
        c2 = np.polyder(c1)

        def fn(t):
            return (float(np.polyval(c[::-1], t)), float(np.polyval(c1, t)),
                    float(np.polyval(c2, t)))

        return WarpingFunction(fn, tuple(interval), label="poly")

    @staticmethod
    def from_callables(f, fp, fpp, interval=(-np.inf, np.inf),
                       source="closed-form", label="") -> "WarpingFunction":
        return WarpingFunction(lambda t: (f(t), fp(t), fpp(t)),
                               tuple(interval), source, label)


@dataclass(frozen=True)
class AmbientSpace:
    """One of the two ambient backends.

    n is the manifold dimension of L^n_1; for the embedded product backend
    the coordinate (ambient) dimension is n + 1.
    """

    kind: str  # 'warped-flat' | 'product-space-form'
    n: int
    c: int
    warp: WarpingFunction = field(default_factory=WarpingFunction.constant)

    def __post_init__(self):
        if self.kind == "warped-flat":
            if self.c != 0:
                raise DimensionMismatchError("warped-flat backend requires c = 0")
        elif self.kind == "product-space-form":
            if self.c not in (-1, 1):
                raise DimensionMismatchError(
                    "product-space-form backend requires c in {-1, +1}")
            f, fp, fpp = self.warp.fn(0.0)
            if not (f == 1.0 and fp == 0.0 and fpp == 0.0):
                raise DimensionMismatchError(
                    "product-space-form backend requires f == 1")
        else:
            raise DimensionMismatchError(f"unknown backend kind {self.kind!r}")
        if self.n < 3:
            raise DimensionMismatchError("need n >= 3")

    @staticmethod
    def warped_flat(n: int, warp: WarpingFunction) -> "AmbientSpace":
        return AmbientSpace("warped-flat", n, 0, warp)

    @staticmethod
    def product_space_form(n: int, c: int) -> "AmbientSpace":
        return AmbientSpace("product-space-form", n, c,
                            WarpingFunction.constant(1.0))

    # -- coordinate layout ---------------------------------------------------

    @property
    def ambient_dim(self) -> int:
        return self.n if self.kind == "warped-flat" else self.n + 1

    @property
    def is_embedded(self) -> bool:
        return self.kind == "product-space-form"

    def dt_vector(self) -> np.ndarray:
        """The comoving observer direction as a coordinate vector."""
        v = np.zeros(self.ambient_dim)
        v[0] = 1.0
        return v

    def check_vector(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != (self.ambient_dim,):
            raise DimensionMismatchError(
                f"vector has shape {X.shape}, backend expects ({self.ambient_dim},)")
        return X

    def warp_state(self, p) -> tuple[float, float, float]:
        """(f, f', f'') at the time coordinate of p (identically (1,0,0) on
        the product backend)."""
        if self.is_embedded:
            return (1.0, 0.0, 0.0)
        return self.warp(float(p[0]))

    def product_normal(self, p) -> np.ndarray:
        """Unit normal of the product inside flat space: fiber position."""
        if not self.is_embedded:
            raise DimensionMismatchError("product normal exists only on the "
                                         "product-space-form backend")
        nu = np.array(p, dtype=float)
        nu[0] = 0.0
        return nu

    # -- metric ---------------------------------------------------------------

    def metric_at(self, p) -> np.ndarray:
        """Metric matrix at p.

        Warped backend: diag(-1, f^2, ..., f^2).  Product backend: the
        constant flat metric diag(-1, c, 1, ..., 1); p must satisfy the
        space-form locus constraint <pbar,pbar>_c = c within 1e-10.
        """
        p = np.asarray(p, dtype=float)
        if p.shape != (self.ambient_dim,):
            raise DimensionMismatchError(
                f"point has shape {p.shape}, backend expects ({self.ambient_dim},)")
        if self.kind == "warped-flat":
            f, _, _ = self.warp(float(p[0]))
            d = np.full(self.n, f * f)
            d[0] = -1.0
            return np.diag(d)
        G = self._flat_metric()
        fiber = p.copy()
        fiber[0] = 0.0
        locus = float(fiber @ G @ fiber) - self.c
        if abs(locus) > 1e-10:
            raise ChartDomainError(
                f"point off the embedded space-form locus (residual {locus:.3e})")
        return G

    def _flat_metric(self) -> np.ndarray:
        d = np.ones(self.ambient_dim)
        d[0] = -1.0
        d[1] = float(self.c)
        return np.diag(d)


def comoving_split(X, space: AmbientSpace, p=None):
    """Decompose X = X0 * dt + Xbar with X0 = -<dt, X> and fiber part Xbar."""
    X = space.check_vector(X)
    X0 = float(X[0])
    Xbar = X.copy()
    Xbar[0] = 0.0
    return X0, Xbar


def christoffel_at(space: AmbientSpace, p) -> np.ndarray:
    """Christoffel symbols Gamma[k, i, j] of the warped-flat backend at p.

    Gamma^t_ij = f f' delta_ij and Gamma^i_tj = (f'/f) delta_ij; everything
    else vanishes.
    """
    if space.kind != "warped-flat":
        raise DimensionMismatchError(
            "christoffel_at applies to the warped-flat backend only")
    f, fp, _ = space.warp(float(np.asarray(p, dtype=float)[0]))
    n = space.n
    gamma = np.zeros((n, n, n))
    for i in range(1, n):
        gamma[0, i, i] = f * fp
        gamma[i, 0, i] = fp / f
        gamma[i, i, 0] = fp / f
    return gamma


def _gamma_apply(space: AmbientSpace, p, x, y) -> np.ndarray:
    """Gamma(x, y) contraction for the warped-flat backend, done inline."""
    f, fp, _ = space.warp(float(p[0]))
    out = np.empty(space.n)
    out[0] = f * fp * float(np.dot(x[1:], y[1:]))
    out[1:] = (fp / f) * (x[0] * y[1:] + y[0] * x[1:])
    return out


def ambient_covariant_derivative(space: AmbientSpace, p, x_vec, y_vec,
                                 dy_dx) -> np.ndarray:
    """Covariant derivative of a field Y along X at p.

    ``dy_dx`` is the caller-supplied coordinate directional derivative of Y
    along X (from jets or finite differences).  The warped backend adds the
    Christoffel correction; the product backend projects the flat derivative
    back onto the product's tangent space.
    """
    x_vec = space.check_vector(x_vec)
    dy_dx = space.check_vector(dy_dx)
    if space.kind == "warped-flat":
        return dy_dx + _gamma_apply(space, np.asarray(p, dtype=float), x_vec,
                                    space.check_vector(y_vec))
    nu = space.product_normal(p)
    G = space._flat_metric()
    return dy_dx - space.c * inner(dy_dx, nu, G) * nu


def curvature_rw_values(X, Y, Z, G, f: float, fp: float, fpp: float,
                        c: float) -> np.ndarray:
    """R(X, Y)Z from the comoving split, valid for any (f, c).

    Purely algebraic in the scalars k1 = f''/f and k2 = (f'^2 + c)/f^2 and in
    fiber inner products taken with the supplied metric G.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    k1 = fpp / f
    k2 = (fp * fp + c) / (f * f)
    X0, Y0, Z0 = X[0], Y[0], Z[0]
    Xb = X.copy(); Xb[0] = 0.0
    Yb = Y.copy(); Yb[0] = 0.0
    Zb = Z.copy(); Zb[0] = 0.0
    ip_yz = float(Yb @ G @ Zb)
    ip_xz = float(Xb @ G @ Zb)
    dt = np.zeros_like(X)
    dt[0] = 1.0
    return (k1 * (X0 * Z0 * Yb - Y0 * Z0 * Xb + (X0 * ip_yz - Y0 * ip_xz) * dt)
            + k2 * (ip_yz * Xb - ip_xz * Yb))


def curvature_rw(space: AmbientSpace, X, Y, Z, p) -> np.ndarray:
    """Backend-aware curvature evaluation at p.

    On the product backend the inputs must be tangent to the product at p.
    """
    G = space.metric_at(p)
    f, fp, fpp = space.warp_state(p)
    return curvature_rw_values(space.check_vector(X), space.check_vector(Y),
                               space.check_vector(Z), G, f, fp, fpp,
                               float(space.c))


def is_constant_curvature(warp: WarpingFunction, c: float, interval,
                          tol: float = 1e-9, samples: int = 257):
    """Test f''/f == (f'^2 + c)/f^2 on ``interval``.

    Returns (flag, max_deviation) where the flag is True when the supremum of
    the defect over uniformly sampled points stays below tol.
    """
    lo, hi = interval
    ts = np.linspace(lo, hi, samples)
    dev = 0.0
    for t in ts:
        f, fp, fpp = warp(float(t))
        dev = max(dev, abs(fpp / f - (fp * fp + c) / (f * f)))
    return dev < tol, dev
