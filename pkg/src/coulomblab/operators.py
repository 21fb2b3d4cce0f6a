"""Spectral-grid checks of magnetic kinetic forms and operator identities.

Periodic grids with FFT differentiation stand in for R^3; instead of decay
hypotheses, fields entering whole-space inequalities must be concentrated
well inside the box (boundary values below 1e-8 of the max).  Products of
band-limited fields are spectrally resolved, so identities like the Pauli
square formula

    (sigma . (-i grad + Q A))^2 = (-i grad + Q A)^2 + Q sigma . B,  B = curl A,

hold to rounding on band-limited inputs.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import (
    BoundViolationError,
    GridMismatchError,
    ResolutionError,
    SupportError,
)

__all__ = [
    "PeriodicField",
    "wavevectors",
    "magnetic_kinetic_quadratic_form",
    "diamagnetic_sobolev_check",
    "coulomb_split",
    "schroedinger_lower_bound_eval",
    "lichnerowicz_check",
    "sobolev_test_constant",
    "schrodinger_bound_constant",
    "write_field",
    "read_field",
    "random_band_limited_field",
    "envelope_window",
    "stability_first_kind_demo",
]


@dataclass
class PeriodicField:
    """Complex samples on a uniform periodic cube grid.

    ``data`` has shape (components, n, n, n) with components 1 (scalar),
    3 (vector) or 2 (spinor).  Vector potentials must be real valued.
    """

    box_len: float
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 4:
            raise ValueError("data must have shape (components, n, n, n)")
        c, n1, n2, n3 = self.data.shape
        if c not in (1, 2, 3):
            raise ValueError("components must be 1, 2 or 3")
        if not (n1 == n2 == n3):
            raise ValueError("grid must be cubic")
        if n1 < 16 or n1 % 2 != 0:
            raise ValueError("grid_n must be even and at least 16")
        if self.box_len <= 0:
            raise ValueError("box length must be positive")

    @property
    def grid_n(self) -> int:
        return self.data.shape[1]

    @property
    def components(self) -> int:
        return self.data.shape[0]

    @property
    def cell_volume(self) -> float:
        return (self.box_len / self.grid_n) ** 3


def _same_grid(*fields: PeriodicField):
    n = fields[0].grid_n
    box = fields[0].box_len
    for f in fields[1:]:
        if f.grid_n != n or not math.isclose(f.box_len, box):
            raise GridMismatchError("fields live on different grids")


def wavevectors(n: int, box_len: float) -> list[np.ndarray]:
    """Broadcastable k_x, k_y, k_z arrays for FFT differentiation."""
    k = 2.0 * math.pi * np.fft.fftfreq(n, d=box_len / n)
    return [
        k.reshape(n, 1, 1),
        k.reshape(1, n, 1),
        k.reshape(1, 1, n),
    ]


def _momentum_apply(scalar: np.ndarray, k_axis: np.ndarray) -> np.ndarray:
    """(-i d/dx_j) f via the spectral multiplier k_j."""
    return np.fft.ifftn(k_axis * np.fft.fftn(scalar))


def covariant_derivative(
    f: PeriodicField, a: PeriodicField | None, q: float
) -> np.ndarray:
    """components (-i grad + q A) f for a scalar f, shape (3, n, n, n)."""
    if f.components != 1:
        raise ValueError("covariant derivative acts on scalar fields")
    if a is not None:
        _same_grid(f, a)
        if a.components != 3:
            raise ValueError("vector potential needs 3 components")
        if np.abs(a.data.imag).max() > 1e-12 * max(np.abs(a.data.real).max(), 1e-300):
            raise ValueError("vector potential must be real valued")
    ks = wavevectors(f.grid_n, f.box_len)
    out = np.empty((3,) + f.data.shape[1:], dtype=complex)
    for j in range(3):
        out[j] = _momentum_apply(f.data[0], ks[j])
        if a is not None:
            out[j] += q * a.data[j].real * f.data[0]
    return out


def grid_integral(values: np.ndarray, field: PeriodicField) -> float:
    return float(np.sum(values).real) * field.cell_volume


def magnetic_kinetic_quadratic_form(
    f: PeriodicField, a: PeriodicField | None, q: float, m: float
) -> float:
    """(2m)^-1 int |(-i grad + q A) f|^2 by spectral differentiation."""
    if m <= 0:
        raise ValueError("mass must be positive")
    df = covariant_derivative(f, a, q)
    return grid_integral((np.abs(df) ** 2).sum(axis=0), f) / (2.0 * m)


@lru_cache(maxsize=1)
def sobolev_test_constant() -> float:
    """Sharp-regime constant from the optimizing profile (1 + r^2)^(-1/2).

    High-resolution radial quadratures of int |grad u|^2 and int u^6 give
    the optimal ratio (3 pi^2/4) / (pi^2/4)^(1/3); a 0.5% margin absorbs
    grid discretization of test fields.  Stored in run configs, never
    hard-coded as ground truth.
    """
    num, _ = quad(lambda r: r**4 * (1.0 + r * r) ** -3, 0.0, np.inf)
    den, _ = quad(lambda r: r**2 * (1.0 + r * r) ** -3, 0.0, np.inf)
    sharp = (4.0 * math.pi * num) / (4.0 * math.pi * den) ** (1.0 / 3.0)
    return 0.995 * sharp


def schrodinger_bound_constant(sobolev_c: float | None = None) -> float:
    """Constant C for the one-body lower bound -C (int V1^(5/2) + ||V2||)."""
    if sobolev_c is None:
        sobolev_c = sobolev_test_constant()
    from_v1 = 0.4 * 0.6**1.5 * sobolev_c**-1.5
    return max(1.0, from_v1)


def _check_boundary_support(f: PeriodicField):
    mags = np.abs(f.data)
    peak = mags.max()
    boundary = max(
        mags[:, 0, :, :].max(),
        mags[:, :, 0, :].max(),
        mags[:, :, :, 0].max(),
    )
    if boundary > 1e-8 * peak:
        raise SupportError("field is not concentrated away from the boundary")


def diamagnetic_sobolev_check(
    f: PeriodicField,
    a: PeriodicField | None,
    q: float,
    c_test: float | None = None,
) -> tuple[float, float, float]:
    """Ordered triple (lhs, mid, sobolev_term) of the diamagnetic chain.

    lhs = int |(-i grad + qA) f|^2, mid = int |grad |f||^2 and
    sobolev_term = (int |f|^6)^(1/3); raises BoundViolationError unless
    lhs >= mid >= c_test * sobolev_term (up to grid-epsilon slack).
    |f| is regularized as sqrt(|f|^2 + eps^2) with eps = 1e-10 max|f|
    before spectral differentiation, smoothing the kink at zeros of f.
    """
    if c_test is None:
        c_test = sobolev_test_constant()
    _check_boundary_support(f)
    lhs = grid_integral(
        (np.abs(covariant_derivative(f, a, q)) ** 2).sum(axis=0), f
    )
    eps = 1e-10 * float(np.abs(f.data).max())
    absf = np.sqrt(np.abs(f.data[0]) ** 2 + eps**2)
    ks = wavevectors(f.grid_n, f.box_len)
    mid = 0.0
    for j in range(3):
        mid += grid_integral(np.abs(_momentum_apply(absf, ks[j])) ** 2, f)
    sob = grid_integral(np.abs(f.data[0]) ** 6, f) ** (1.0 / 3.0)

    slack = 1e-9 * max(lhs, 1e-300)
    if lhs < mid - slack:
        raise BoundViolationError(f"diamagnetic ordering failed: {lhs} < {mid}")
    if mid < c_test * sob - slack:
        raise BoundViolationError(
            f"Sobolev bound failed: {mid} < {c_test} * {sob}"
        )
    return lhs, mid, sob


def coulomb_split(a: float) -> tuple[float, float]:
    """L^(5/2) + L^infinity split of the Coulomb potential at radius a.

    V1 = 1/r on r < a gives int V1^(5/2) = 8 pi sqrt(a); V2 = 1/r on r >= a
    gives sup V2 = 1/a.  The product (int V1^(5/2))^2 sup V2 = 64 pi^2 is
    scale free.
    """
    if a <= 0:
        raise ValueError("cutoff must be positive")
    return 8.0 * math.pi * math.sqrt(a), 1.0 / a


def schroedinger_lower_bound_eval(
    f: PeriodicField,
    a: PeriodicField | None,
    v1: PeriodicField,
    v2: PeriodicField,
    c: float | None = None,
) -> tuple[float, float]:
    """Quadratic form of (-i grad + A)^2 - V1 - V2 against its lower bound.

    Returns (quad_form, bound) with
    bound = -C (int V1^(5/2) + sup V2) ||f||^2 and raises
    BoundViolationError if the form dips below the bound.
    """
    if c is None:
        c = schrodinger_bound_constant()
    _same_grid(f, v1, v2)
    for v in (v1, v2):
        if np.any(v.data.real < -1e-12) or np.abs(v.data.imag).max() > 1e-12:
            raise ValueError("potentials must be nonnegative real fields")
    quad_form = grid_integral(
        (np.abs(covariant_derivative(f, a, 1.0)) ** 2).sum(axis=0), f
    )
    dens = np.abs(f.data[0]) ** 2
    quad_form -= grid_integral((v1.data[0].real + v2.data[0].real) * dens, f)
    norm2 = grid_integral(dens, f)
    int_v1 = grid_integral(v1.data[0].real ** 2.5, f)
    sup_v2 = float(v2.data[0].real.max())
    bound = -c * (int_v1 + sup_v2) * norm2
    if quad_form < bound - 1e-9 * (abs(bound) + 1.0):
        raise BoundViolationError(f"form {quad_form} below bound {bound}")
    return quad_form, bound


_PAULI = [
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
]


def _band_energy_fraction(field: PeriodicField) -> float:
    """Energy fraction carried by shells with any |k index| above n/3."""
    n = field.grid_n
    idx = np.fft.fftfreq(n, d=1.0 / n)
    high = np.abs(idx) > n / 3.0
    mask = (
        high.reshape(n, 1, 1) | high.reshape(1, n, 1) | high.reshape(1, 1, n)
    )
    total = 0.0
    high_part = 0.0
    for comp in field.data:
        spec = np.abs(np.fft.fftn(comp)) ** 2
        total += float(spec.sum())
        high_part += float(spec[mask].sum())
    return high_part / max(total, 1e-300)


def _spinor_covariant(psi: PeriodicField, a: PeriodicField, q: float) -> np.ndarray:
    """D_j psi for both spinor components, shape (3, 2, n, n, n)."""
    ks = wavevectors(psi.grid_n, psi.box_len)
    out = np.empty((3, 2) + psi.data.shape[1:], dtype=complex)
    for j in range(3):
        for s in range(2):
            out[j, s] = _momentum_apply(psi.data[s], ks[j])
            out[j, s] += q * a.data[j].real * psi.data[s]
    return out


def curl(a: PeriodicField) -> np.ndarray:
    """B = curl A computed spectrally, shape (3, n, n, n), real."""
    if a.components != 3:
        raise ValueError("curl needs a vector field")
    ks = wavevectors(a.grid_n, a.box_len)

    def d(j, comp):
        return np.fft.ifftn(1.0j * ks[j] * np.fft.fftn(a.data[comp].real))

    b = np.empty((3,) + a.data.shape[1:], dtype=complex)
    b[0] = d(1, 2) - d(2, 1)
    b[1] = d(2, 0) - d(0, 2)
    b[2] = d(0, 1) - d(1, 0)
    return b.real


@dataclass
class LichnerowiczResult:
    max_residual: float
    scale: float

    @property
    def relative(self) -> float:
        return self.max_residual / max(self.scale, 1e-300)


def lichnerowicz_check(
    psi: PeriodicField, a: PeriodicField, q: float,
    enforce_resolution: bool = True,
) -> LichnerowiczResult:
    """Pointwise residual of the Pauli square identity.

    Applies (sigma.D)^2 and D^2 + q sigma.B to the spinor with spectral
    derivatives and returns the maximal pointwise spinor norm of the
    difference together with the scale of either side.  The vector potential
    must be spectrally resolved: shells above n/3 have to carry less than
    1e-10 of its energy.  Grid-refinement studies measuring how aliasing
    decays on fixed smooth inputs disable the precondition.
    """
    if psi.components != 2:
        raise ValueError("psi must be a 2-component spinor field")
    _same_grid(psi, a)
    if enforce_resolution and _band_energy_fraction(a) > 1e-10:
        raise ResolutionError("vector potential is not band limited on this grid")

    dpsi = _spinor_covariant(psi, a, q)  # (3, 2, n, n, n)

    # sigma.D psi
    sd = np.zeros((2,) + psi.data.shape[1:], dtype=complex)
    for j in range(3):
        sd += np.einsum("st,txyz->sxyz", _PAULI[j], dpsi[j])
    sd_field = PeriodicField(psi.box_len, sd)
    d_sd = _spinor_covariant(sd_field, a, q)
    lhs = np.zeros_like(sd)
    for j in range(3):
        lhs += np.einsum("st,txyz->sxyz", _PAULI[j], d_sd[j])

    # D^2 psi + q sigma.B psi
    rhs = np.zeros_like(sd)
    for j in range(3):
        comp_field = PeriodicField(psi.box_len, dpsi[j])
        d2 = _spinor_covariant(comp_field, a, q)
        rhs += d2[j]
    b = curl(a)
    sigma_b = np.zeros_like(sd)
    for j in range(3):
        sigma_b += np.einsum("st,txyz->sxyz", _PAULI[j], b[j] * psi.data)
    rhs += q * sigma_b

    diff = lhs - rhs
    res = float(np.sqrt((np.abs(diff) ** 2).sum(axis=0)).max())
    scale = float(np.sqrt((np.abs(lhs) ** 2).sum(axis=0)).max())
    return LichnerowiczResult(max_residual=res, scale=scale)


_HEADER = struct.Struct("<IdI")


def write_field(field: PeriodicField, path: str):
    """Flat little-endian layout: header (grid_n, box_len, components) then
    row-major complex128 samples (pairs of 64-bit floats)."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(field.grid_n, field.box_len, field.components))
        fh.write(np.ascontiguousarray(field.data.astype("<c16")).tobytes())


def read_field(path: str) -> PeriodicField:
    with open(path, "rb") as fh:
        n, box_len, comps = _HEADER.unpack(fh.read(_HEADER.size))
        raw = np.frombuffer(fh.read(), dtype="<c16")
    return PeriodicField(box_len, raw.reshape(comps, n, n, n).astype(complex))


def envelope_window(n: int, box_len: float, width_frac: float = 0.18) -> np.ndarray:
    """Super-Gaussian centered bump, below 1e-8 on the box boundary."""
    x = (np.arange(n) + 0.5) / n - 0.5
    r2 = (
        x.reshape(n, 1, 1) ** 2 + x.reshape(1, n, 1) ** 2 + x.reshape(1, 1, n) ** 2
    )
    return np.exp(-((r2 / width_frac**2) ** 2))


def random_band_limited_field(
    rng: np.random.Generator,
    n: int,
    box_len: float,
    components: int = 1,
    k_shells: int = 3,
    real: bool = False,
    windowed: bool = False,
) -> PeriodicField:
    """Random smooth field from a handful of low Fourier shells."""
    spec = np.zeros((components, n, n, n), dtype=complex)
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    sel = np.abs(idx) <= k_shells
    mask = (
        sel.reshape(n, 1, 1) & sel.reshape(1, n, 1) & sel.reshape(1, 1, n)
    )
    m = int(mask.sum())
    for c in range(components):
        coeff = rng.standard_normal(m) + 1.0j * rng.standard_normal(m)
        spec[c][mask] = coeff
    data = np.fft.ifftn(spec, axes=(1, 2, 3)) * n**1.5
    if real:
        data = data.real.astype(complex)
    if windowed:
        data *= envelope_window(n, box_len)
    return PeriodicField(box_len, data)


def _pair_split_bound(mass: float, z: float, n_particles: int, c: float) -> float:
    """Lower bound for (-Lap_rel)/(m (N-1)) - z/r via the Coulomb split.

    Scaling to the unit-coefficient form and optimizing the split radius a
    in alpha sqrt(a) + beta / a, with alpha = (m (N-1) z)^(5/2) 8 pi and
    beta = m (N-1) z, gives the closed minimum alpha^(2/3) beta^(1/3)
    3 / 2^(2/3).
    """
    eff = mass * (n_particles - 1) * z
    alpha = eff**2.5 * 8.0 * math.pi
    beta = eff
    minimum = alpha ** (2.0 / 3.0) * beta ** (1.0 / 3.0) * 3.0 * 2.0 ** (-2.0 / 3.0)
    return -c * minimum / (mass * (n_particles - 1))


def stability_first_kind_demo(
    charges: tuple[float, ...],
    mass: float = 1.0,
    widths: np.ndarray | None = None,
) -> dict:
    """Few-body demonstration that trial energies respect the N-body bound.

    For N <= 3 nonrelativistic particles the pairwise Coulomb split plus the
    per-pair kinetic distribution T_i + T_j >= -Lap_rel / m yields

        H >= - sum_{i<j} C * opt_split(m (N-1) |Q_i Q_j|) / (m (N-1)).

    Product Gaussian trial states scan widths; the minimum stays above the
    bound.  Returns the scanned minimum, the bound and the margin.
    """
    n = len(charges)
    if n not in (2, 3):
        raise ValueError("demonstration covers N = 2 or 3 particles")
    if widths is None:
        widths = np.geomspace(0.05, 50.0, 200)
    c = schrodinger_bound_constant()
    bound = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            z = abs(charges[i] * charges[j])
            if z > 0:
                bound += _pair_split_bound(mass, z, n, c)

    # product Gaussian of width w: each kinetic term 3/(4 m w^2), each pair
    # expectation of 1/r equals sqrt(2/pi)/w
    sum_qq = sum(
        charges[i] * charges[j] for i in range(n) for j in range(i + 1, n)
    )
    energies = n * 3.0 / (4.0 * mass * widths**2) + sum_qq * math.sqrt(
        2.0 / math.pi
    ) / widths
    e_min = float(energies.min())
    return {
        "trial_minimum": e_min,
        "lower_bound": bound,
        "margin": e_min - bound,
        "holds": bool(e_min >= bound),
    }
