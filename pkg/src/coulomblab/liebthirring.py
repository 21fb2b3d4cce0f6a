"""Lieb-Thirring style bounds and the grand canonical stability constant.

The kinetic-vs-potential inequality used here is

    sum_j ( (1/2m)(-i grad_j + A)^2 - V(r_j) ) >= -C m^(3/2) nu int V^(5/2)

on the fermionic subspace.  The constant C is a configuration input; its
default is the phase-space (semiclassical) coefficient divided by (2 pi)^3,
which makes the derived box bound coincide with the Berezin-Li-Yau value, so
Dirichlet eigenvalue sums dominate it at every particle number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar

from .errors import InternalConsistencyError

__all__ = [
    "LtParameters",
    "SpeciesSpec",
    "lt_rhs",
    "semiclassical_phase_space_energy",
    "classical_lt_constant",
    "box_kinetic_lower_bound",
    "opposite_charge_potential_bound",
    "stability_constant",
    "dirichlet_cube_kinetic_sum",
    "lowest_cube_mode_energies",
    "cube_mode_energies_below",
]


@lru_cache(maxsize=1)
def _raw_phase_space_coefficient() -> float:
    """kappa with int int_{p^2/2m <= V} (p^2/2m - V) dr dp = -kappa m^(3/2) int V^(5/2).

    Extracted numerically from the quadrature on a constant potential; the
    closed form is (8 pi / 15) * 2^(3/2).
    """
    value, kappa = semiclassical_phase_space_energy(np.array([1.0]), 1.0, 1.0)
    return kappa


def classical_lt_constant() -> float:
    """Phase-space coefficient per unit cell (2 pi)^3 of phase space.

    With this constant the optimized box bound equals the Berezin-Li-Yau
    semiclassical kinetic energy, the sharp lower bound on Dirichlet
    eigenvalue sums.
    """
    return _raw_phase_space_coefficient() / (2.0 * math.pi) ** 3


@dataclass
class LtParameters:
    """Constant, mass and internal degeneracy entering the kinetic bound."""

    m: float
    nu: int = 1
    C_lt: float = field(default_factory=classical_lt_constant)

    def __post_init__(self):
        if not (self.m > 0 and self.nu >= 1 and self.C_lt > 0):
            raise ValueError("LtParameters entries must be positive")


@dataclass
class SpeciesSpec:
    """Two fermion species with opposite charges and a chemical potential."""

    m_plus: float
    m_minus: float
    Q_plus: float
    Q_minus: float
    mu: float

    def __post_init__(self):
        if min(self.m_plus, self.m_minus, self.Q_plus, self.Q_minus) <= 0:
            raise ValueError("masses and charge magnitudes must be positive")


def lt_rhs(v: np.ndarray, cell_volume: float, p: LtParameters) -> float:
    """-C m^(3/2) nu int V^(5/2) by grid quadrature over 3-d samples."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("potential samples must be nonnegative")
    if cell_volume <= 0:
        raise ValueError("cell volume must be positive")
    return -p.C_lt * p.m**1.5 * p.nu * float(np.sum(v**2.5)) * cell_volume


_PGAUSS_NODES, _PGAUSS_WEIGHTS = leggauss(8)


def semiclassical_phase_space_energy(
    v: np.ndarray, cell_volume: float, m: float
) -> tuple[float, float]:
    """Classical energy of filled negative phase space, and its coefficient.

    Computes int dr int_{p^2/2m - V(r) <= 0} (p^2/2m - V(r)) dp by a radial
    momentum quadrature nested inside the grid sum over r, then extracts
    kappa from value = -kappa m^(3/2) int V^(5/2).  The momentum integrand is
    a quartic polynomial, so the fixed Gauss rule is exact.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("potential samples must be nonnegative")
    norm52 = float(np.sum(v**2.5)) * cell_volume
    if not np.isfinite(norm52):
        raise ValueError("int V^(5/2) diverges on this grid")

    p_max = np.sqrt(2.0 * m * v)
    half = 0.5 * p_max
    # nodes shape (n_samples, n_gauss)
    pg = half[:, None] * (_PGAUSS_NODES[None, :] + 1.0)
    inner = 4.0 * math.pi * pg**2 * (pg**2 / (2.0 * m) - v[:, None])
    per_r = half * np.dot(inner, _PGAUSS_WEIGHTS)
    value = float(per_r.sum()) * cell_volume
    kappa = -value / (m**1.5 * norm52) if norm52 > 0 else 0.0
    return value, kappa


def box_kinetic_lower_bound(n: int, volume: float, p: LtParameters) -> float:
    """Kinetic lower bound for n fermions in a region of given volume.

    max over v >= 0 of (n v - C m^(3/2) nu v^(5/2) volume); the stationary
    point is v* = (2 n / (5 C m^(3/2) nu volume))^(2/3) and the maximum is
    (3/5) n v*, of the form const * m^-1 nu^(-2/3) n^(5/3) volume^(-2/3).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if volume <= 0:
        raise ValueError("volume must be positive")
    v_star = (2.0 * n / (5.0 * p.C_lt * p.m**1.5 * p.nu * volume)) ** (2.0 / 3.0)
    return 0.6 * n * v_star


def opposite_charge_potential_bound(
    n_opposite: int, volume: float, q: float, p: LtParameters
) -> tuple[float, float]:
    """Optimized split of the smeared-attraction potential energy.

    Minimizes n R^(1/2) + volume R^(-5/2) over R > 0 (stationary point
    R* = (5 volume / n)^(1/3)) and returns (R*, bound) with

        bound = -C (2m)^(3/2) nu (12/5)^(5/2) 8 pi q^5 * minimum.

    The factor (2m)^(3/2) reflects that only half of the kinetic energy is
    spent against the attraction wells; 8 pi is the inside-ball integral
    int_{|r|<R} |r|^(-5/2) dr = 8 pi sqrt(R), applied to both terms, which
    only weakens (never invalidates) the bound since 8 pi > 1.
    """
    if n_opposite < 1 or volume <= 0 or q <= 0:
        raise ValueError("inputs must be positive")
    r_star = (5.0 * volume / n_opposite) ** (1.0 / 3.0)
    minimum = n_opposite * math.sqrt(r_star) + volume * r_star ** (-2.5)
    const = p.C_lt * (2.0 * p.m) ** 1.5 * p.nu * (12.0 / 5.0) ** 2.5 * 8.0 * math.pi
    return r_star, -const * q**5 * minimum


def _density_objective(s: SpeciesSpec, p_plus: LtParameters, p_minus: LtParameters):
    """Per-volume energy bound as a function of species densities.

    c1 n^(5/3) comes from the half-kinetic box bound at effective mass 2m,
    c2 n_op^(5/6) from the optimized attraction term, mu (n+ + n-) from the
    chemical potential.  The objective is separable in (n+, n-).
    """
    if not math.isclose(p_plus.m, s.m_plus) or not math.isclose(p_minus.m, s.m_minus):
        raise ValueError("LtParameters masses must match the species spec")

    def c1(p: LtParameters) -> float:
        return 0.6 * 0.4 ** (2.0 / 3.0) * (p.C_lt * p.nu) ** (-2.0 / 3.0) / (2.0 * p.m)

    def c2(p: LtParameters, q: float) -> float:
        sixth = 6.0 * 5.0 ** (-5.0 / 6.0)
        return (
            p.C_lt
            * (2.0 * p.m) ** 1.5
            * p.nu
            * (12.0 / 5.0) ** 2.5
            * 8.0
            * math.pi
            * q**5
            * sixth
        )

    c1p, c1m = c1(p_plus), c1(p_minus)
    c2p, c2m = c2(p_plus, s.Q_plus), c2(p_minus, s.Q_minus)

    def objective(n_plus: float, n_minus: float) -> float:
        return (
            c1p * n_plus ** (5.0 / 3.0)
            + c1m * n_minus ** (5.0 / 3.0)
            - c2p * n_minus ** (5.0 / 6.0)
            - c2m * n_plus ** (5.0 / 6.0)
            + s.mu * (n_plus + n_minus)
        )

    return objective


def stability_constant(
    s: SpeciesSpec,
    p_plus: LtParameters,
    p_minus: LtParameters,
    grid_points: int = 121,
) -> float:
    """Minimum over densities n+/- >= 0 of the per-volume bound.

    A logarithmic 2-d grid scan locates the basin, then a bounded
    minimization polishes each coordinate around the scan optimum.  The 5/3
    growth beats the 5/6 attraction so the minimum is finite; a scan that
    ends on the outer grid boundary raises InternalConsistencyError.  The
    returned value is the (typically negative) constant bounding
    E(mu, Omega)/|Omega| from below.
    """
    f = _density_objective(s, p_plus, p_minus)
    grid = np.concatenate([[0.0], np.geomspace(1e-8, 1e8, grid_points)])
    xg, yg = np.meshgrid(grid, grid, indexing="ij")
    values = f(xg, yg)
    ip, im = np.unravel_index(int(np.argmin(values)), values.shape)
    if ip == len(grid) - 1 or im == len(grid) - 1:
        raise InternalConsistencyError("density minimization ran to the scan edge")

    def polish(idx: int, other: float, axis: int) -> float:
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, len(grid) - 1)]
        if hi <= lo:
            return grid[idx]
        fun = (lambda x: f(x, other)) if axis == 0 else (lambda y: f(other, y))
        res = minimize_scalar(
            fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14}
        )
        return float(res.x) if res.fun <= fun(grid[idx]) else grid[idx]

    n_plus, n_minus = grid[ip], grid[im]
    for _ in range(4):
        n_plus = polish(ip, n_minus, 0)
        n_minus = polish(im, n_plus, 1)
    return float(f(n_plus, n_minus))


def lowest_cube_mode_energies(
    count: int, side: float, mass: float, ndim: int = 3
) -> np.ndarray:
    """The `count` lowest Dirichlet eigenvalues pi^2 |n|^2 / (2 m side^2).

    Modes n run over positive integer vectors; ties are broken by the
    lexicographic order of the index vector.  The enumeration cap grows until
    the count-th value is certainly below anything outside the cap.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cap = max(2, int(math.ceil((3.0 * count) ** (1.0 / ndim))) + 1)
    while True:
        axes = [np.arange(1, cap + 1)] * ndim
        mesh = np.meshgrid(*axes, indexing="ij")
        n2 = sum(m_**2 for m_ in mesh).reshape(-1)
        if n2.size >= count:
            idx = np.lexsort(tuple(m_.reshape(-1) for m_ in reversed(mesh)) + (n2,))
            n2_sorted = n2[idx]
            # anything outside the cap has |n|^2 >= (cap+1)^2 + (ndim-1)
            if n2_sorted[count - 1] < (cap + 1) ** 2 + (ndim - 1):
                return (
                    math.pi**2 / (2.0 * mass * side**2) * n2_sorted[:count].astype(float)
                )
        cap = int(cap * 1.5) + 1


def cube_mode_energies_below(threshold: float, side: float, mass: float) -> np.ndarray:
    """All Dirichlet cube mode energies strictly below `threshold` (3-d)."""
    if threshold <= 0:
        return np.empty(0)
    n2_max = threshold * 2.0 * mass * side**2 / math.pi**2
    cap = int(math.floor(math.sqrt(n2_max)))
    if cap < 1:
        return np.empty(0)
    ax = np.arange(1, cap + 1)
    mesh = np.meshgrid(ax, ax, ax, indexing="ij")
    n2 = (mesh[0] ** 2 + mesh[1] ** 2 + mesh[2] ** 2).reshape(-1)
    energies = math.pi**2 / (2.0 * mass * side**2) * n2
    return np.sort(energies[energies < threshold])


def dirichlet_cube_kinetic_sum(n: int, side: float, mass: float) -> float:
    """Sum of the n lowest Dirichlet cube eigenvalues."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if side <= 0 or mass <= 0:
        raise ValueError("side and mass must be positive")
    return float(lowest_cube_mode_energies(n, side, mass).sum())
