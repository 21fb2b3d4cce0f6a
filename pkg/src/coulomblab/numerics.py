"""Shared numerical substrate.

Radial grids and grid functions, discrete Legendre transforms, radial Fourier
transforms with analytic power-law tails, PSD matrix functions and the Euler
gamma function.  Everything here is a pure function of its inputs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline

from .errors import (
    ConvexityError,
    NotPsdError,
    SlopeRangeError,
    TailError,
)

__all__ = [
    "RadialGridFunction",
    "PsdMatrix",
    "KineticProfile",
    "geometric_radial_grid",
    "legendre_transform",
    "radial_fourier_transform",
    "psd_sqrt",
    "gamma_fn",
]


def geometric_radial_grid(r_min: float, r_max: float, n: int) -> np.ndarray:
    """Geometrically spaced radii, the default for radial sampling.

    Geometric spacing resolves both the Coulomb-singular region near the
    origin and the decay range with one grid.
    """
    if not (0 < r_min < r_max) or n < 2:
        raise ValueError("need 0 < r_min < r_max and n >= 2")
    return np.geomspace(r_min, r_max, n)


@dataclass
class RadialGridFunction:
    """Scalar function sampled on a strictly increasing radial grid.

    ``tail_exponent`` declares the extrapolation model beyond the last node:
    ``None`` means extension by zero, a float ``s`` means the power law
    ``f(r) = f(r_last) * (r / r_last)**s``.
    """

    nodes: np.ndarray
    values: np.ndarray
    tail_exponent: float | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("need at least two radial nodes")
        if self.nodes.shape != self.values.shape:
            raise ValueError("nodes and values must have equal length")
        if self.nodes[0] < 0:
            raise ValueError("first node must be >= 0")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.nodes, self.values, extrapolate=True)

    def __call__(self, r):
        """Cubic interpolant inside the grid, declared tail beyond it."""
        r = np.asarray(r, dtype=float)
        out = self._spline(r)
        last = self.nodes[-1]
        beyond = r > last
        if np.any(beyond):
            if self.tail_exponent is None:
                out = np.where(beyond, 0.0, out)
            else:
                tail = self.values[-1] * (r / last) ** self.tail_exponent
                out = np.where(beyond, tail, out)
        return out if out.ndim else float(out)


@dataclass
class PsdMatrix:
    """Real symmetric positive semidefinite matrix.

    ``min_eig_tolerance`` is the absolute amount of negative spectrum that is
    forgiven (and clamped to zero by matrix functions); candidates from
    numerical minimization routinely carry eigenvalues at -1e-14 * norm.
    The default is 1e-10 times the spectral scale.
    """

    entries: np.ndarray
    min_eig_tolerance: float | None = None

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("entries must be a square matrix")
        scale = float(np.abs(m).max()) if m.size else 0.0
        if not np.allclose(m, m.T, atol=64 * np.finfo(float).eps * max(scale, 1.0)):
            raise ValueError("matrix is not symmetric to machine precision")
        self.entries = 0.5 * (m + m.T)
        if self.min_eig_tolerance is None:
            self.min_eig_tolerance = 1e-10 * max(scale, 1.0)
        w = np.linalg.eigvalsh(self.entries)
        if w.size and w.min() < -self.min_eig_tolerance:
            raise NotPsdError(
                f"eigenvalue {w.min():.3e} below -{self.min_eig_tolerance:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass
class KineticProfile:
    """Kinetic energy function T(p) of a single particle.

    kind "nonrelativistic": T(p) = p^2 / (2 m)
    kind "relativistic":    T(p) = sqrt(p^2 + m^2) - m
    """

    kind: str
    m: float

    def __post_init__(self):
        if self.kind not in ("nonrelativistic", "relativistic"):
            raise ValueError(f"unknown kinetic profile kind {self.kind!r}")
        if not self.m > 0:
            raise ValueError("mass must be positive")

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "nonrelativistic":
            return p * p / (2.0 * self.m)
        # sqrt(p^2+m^2)-m evaluated without cancellation for p << m
        return p * p / (np.sqrt(p * p + self.m**2) + self.m)


def legendre_transform(
    p: np.ndarray,
    t: np.ndarray,
    v: float,
    convexity_tol: float = 1e-9,
) -> float:
    """sup_p (v*p - T(p)) of a convex function sampled on a grid.

    The grid maximum is refined with the vertex of the parabola through the
    three samples around the argmax, which is exact for quadratic T.  The
    dual variable v must lie inside the range of attained chord slopes,
    otherwise the supremum is not localized on the grid.
    """
    p = np.asarray(p, dtype=float)
    t = np.asarray(t, dtype=float)
    if p.ndim != 1 or p.size < 3 or p.shape != t.shape:
        raise ValueError("need matching 1-d arrays with at least 3 samples")
    if not np.all(np.diff(p) > 0):
        raise ValueError("momentum grid must be strictly increasing")

    scale = max(1.0, float(np.abs(t).max()))
    slopes = np.diff(t) / np.diff(p)
    if np.any(np.diff(slopes) < -convexity_tol * scale):
        raise ConvexityError("second differences violate convexity")
    if not (slopes[0] - convexity_tol <= v <= slopes[-1] + convexity_tol):
        raise SlopeRangeError(
            f"v={v} outside attained slope range [{slopes[0]}, {slopes[-1]}]"
        )

    g = v * p - t
    i = int(np.argmax(g))
    if i in (0, p.size - 1):
        return float(g[i])
    # parabola through (p[i-1], g[i-1]), (p[i], g[i]), (p[i+1], g[i+1])
    x0, x1, x2 = p[i - 1 : i + 2]
    y0, y1, y2 = g[i - 1 : i + 2]
    d1 = (y1 - y0) / (x1 - x0)
    d2 = (y2 - y1) / (x2 - x1)
    curv = (d2 - d1) / (x2 - x0)
    if curv >= 0:
        return float(g[i])
    xv = 0.5 * (x0 + x1 - d1 / curv)
    yv = y0 + d1 * (xv - x0) + curv * (xv - x0) * (xv - x1)
    return float(max(yv, g[i]))


def _power_tail_sin_integral(a: float, k: float, r0: float) -> float:
    """Abel-regularized integral of r^a * sin(k r) over [r0, inf), a <= 0.

    Rotating the contour to the negative imaginary axis expresses it through
    the upper incomplete gamma function at complex argument:
    Im[ (-i k)^(-(a+1)) * Gamma(a+1, -i k r0) ].
    """
    if a > 0:
        raise TailError("oscillatory power tail needs exponent a <= 0")
    z = mpmath.mpc(0.0, -k * r0)
    val = mpmath.power(mpmath.mpc(0.0, -k), -(a + 1)) * mpmath.gammainc(a + 1, z)
    return float(mpmath.im(val))


def radial_fourier_transform(f: RadialGridFunction, k: float) -> float:
    """3-d Fourier transform of a radial profile at radial frequency k.

    Computes (4 pi / k) * int_0^inf r sin(k r) f(r) dr with adaptive
    quadrature on the sampled range and the declared power-law tail
    integrated analytically.  A power tail r^s is accepted for s <= -1
    (the s = -1 boundary case in the Abel-regularized sense).
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if f.tail_exponent is not None and f.tail_exponent > -1:
        raise TailError("tail exponent must be <= -1 for the radial transform")

    r_last = float(f.nodes[-1])
    spline = f._spline

    # many oscillation periods at large k push QUADPACK to its roundoff
    # floor; the warning is informational there and accuracy is checked
    # against closed forms in the tests
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        core, _ = quad(
            lambda r: r * spline(r),
            0.0,
            r_last,
            weight="sin",
            wvar=k,
            limit=400,
            epsabs=1e-11,
            epsrel=1e-10,
        )

    tail = 0.0
    if f.tail_exponent is not None:
        s = f.tail_exponent
        c = f.values[-1] / r_last**s
        tail = c * _power_tail_sin_integral(1.0 + s, k, r_last)

    return 4.0 * math.pi / k * (core + tail)


def psd_sqrt(m: PsdMatrix) -> PsdMatrix:
    """Symmetric square root via eigendecomposition.

    Eigenvalues in [-min_eig_tolerance, 0) are clamped to zero; anything
    lower raises NotPsdError (PsdMatrix construction enforces this already).
    """
    w, u = np.linalg.eigh(m.entries)
    w = np.where(w < 0.0, 0.0, w)
    root = (u * np.sqrt(w)) @ u.T
    return PsdMatrix(0.5 * (root + root.T), min_eig_tolerance=m.min_eig_tolerance)


def gamma_fn(x: float) -> float:
    """Euler gamma for x > 0.

    Delegates to the C library Lanczos evaluation, which is well below the
    1e-12 relative error budget on the domain used here.
    """
    if not x > 0:
        raise ValueError("gamma_fn requires x > 0")
    return math.gamma(x)
