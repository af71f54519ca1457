"""
Parity-constrained Fourier fields on the extended domain Ω = (0, L) × (-1, 1).

Stress-free plates at x2 = 0 and x2 = 1 are handled by doubling the domain
in x2 and imposing a parity on every field: u1 (and pressure) are even in x2,
u2 and θ are odd. Everything is then fully periodic, so one double Fourier
basis carries all fields.

Conventions
-----------
* Physical arrays have shape ``(n1, n2)`` with ``x1[i] = i·L/n1`` and
  ``x2[j] = -1 + 2j/n2``.
* Coefficients are the normalized expansion ``f(x) = Σ ĉ_k exp(i k·x)``
  stored in FFT index order, so ``coeffs[0, 0]`` is the spatial mean.
* ``|f|² = |Ω| Σ |ĉ_k|²`` with ``|Ω| = 2L``.
* Nyquist rows/columns are always zero.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Union

import numpy as np
import scipy.fft as sfft


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def sign(self) -> int:
        return 1 if self is Parity.EVEN else -1

    def flipped(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN

    def __mul__(self, other: "Parity") -> "Parity":
        return Parity.EVEN if self is other else Parity.ODD


EVEN = Parity.EVEN
ODD = Parity.ODD


@dataclass(frozen=True)
class GridSpec:
    """Collocation grid and wavenumber tables for the extended domain."""

    L: float
    n1: int
    n2: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L!r}")
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n!r}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction!r}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def omega_vol(self) -> float:
        return 2.0 * self.L

    @property
    def dx1(self) -> float:
        return self.L / self.n1

    @property
    def dx2(self) -> float:
        return 2.0 / self.n2

    @cached_property
    def x1(self) -> np.ndarray:
        return np.arange(self.n1) * self.dx1

    @cached_property
    def x2(self) -> np.ndarray:
        return -1.0 + np.arange(self.n2) * self.dx2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @cached_property
    def index1(self) -> np.ndarray:
        """Integer mode numbers in FFT order, Nyquist reported as -n1/2."""
        return np.fft.fftfreq(self.n1, 1.0 / self.n1).astype(int)

    @cached_property
    def index2(self) -> np.ndarray:
        return np.fft.fftfreq(self.n2, 1.0 / self.n2).astype(int)

    @cached_property
    def k1(self) -> np.ndarray:
        """Horizontal wavenumbers, column vector of shape (n1, 1)."""
        return (2.0 * np.pi / self.L * self.index1)[:, None]

    @cached_property
    def k2(self) -> np.ndarray:
        """Vertical wavenumbers (period 2), row vector of shape (1, n2)."""
        return (np.pi * self.index2)[None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def inv_ksq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        nz = self.ksq > 0
        out[nz] = 1.0 / self.ksq[nz]
        return out

    @cached_property
    def ik1(self) -> np.ndarray:
        return 1j * self.k1 * self.nyquist_mask

    @cached_property
    def ik2(self) -> np.ndarray:
        return 1j * self.k2 * self.nyquist_mask

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        m = np.ones(self.shape)
        m[self.n1 // 2, :] = 0.0
        m[:, self.n2 // 2] = 0.0
        return m

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # strict: an index at exactly n/3 would alias back into the kept band
        keep1 = np.abs(self.index1) < self.dealias_fraction * self.n1 / 2
        keep2 = np.abs(self.index2) < self.dealias_fraction * self.n2 / 2
        return (keep1[:, None] & keep2[None, :]) * self.nyquist_mask

    @cached_property
    def _phase(self) -> np.ndarray:
        # the physical x2 grid starts at -1, which shifts the DFT by (-1)^k2
        return np.where(np.arange(self.n2 // 2 + 1) % 2, -1.0, 1.0)[None, :]

    @cached_property
    def _neg1(self) -> np.ndarray:
        return (-np.arange(self.n1)) % self.n1

    @cached_property
    def _neg2(self) -> np.ndarray:
        return (-np.arange(self.n2)) % self.n2

    # Raw array transforms. These are the hot path of the time stepper; the
    # SpectralScalar wrappers below add type checking on top.

    def forward(self, values: np.ndarray, sign: int) -> np.ndarray:
        """Physical -> full coefficient array with parity ``sign`` enforced."""
        half = sfft.rfft2(values, norm="forward")
        half *= self._phase
        half[self.n1 // 2, :] = 0.0
        half[:, -1] = 0.0
        # c(k1, -k2) = conj(c(-k1, k2)) turns the parity condition into a
        # relation inside the stored half-spectrum
        half = 0.5 * (half + sign * np.conj(half[self._neg1, :]))
        if sign < 0:
            # odd fields vanish on k2 = 0; the relation above only removes the
            # Hermitian part there
            half[:, 0] = 0.0
        return self._expand(half, sign)

    def _expand(self, half: np.ndarray, sign: int) -> np.ndarray:
        n2h = self.n2 // 2
        full = np.empty(self.shape, dtype=complex)
        full[:, : n2h + 1] = half
        full[:, n2h + 1 :] = half[:, n2h - 1 : 0 : -1]
        if sign < 0:
            np.negative(full[:, n2h + 1 :], out=full[:, n2h + 1 :])
        return full

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Full coefficient array (Hermitian) -> real physical array."""
        half = coeffs[:, : self.n2 // 2 + 1] * self._phase
        return sfft.irfft2(half, s=self.shape, norm="forward")


def make_grid(L: float, n1: int, n2: int, dealias_fraction: float = 2.0 / 3.0) -> GridSpec:
    return GridSpec(float(L), int(n1), int(n2), float(dealias_fraction))


@dataclass(frozen=True, eq=False)
class SpectralScalar:
    """A real scalar field held as parity-constrained Fourier coefficients."""

    grid: GridSpec
    parity: Parity
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def _check(self, other: "SpectralScalar"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        if other.parity is not self.parity:
            raise ValueError(f"parity mismatch: {self.parity.value} vs {other.parity.value}")

    def __add__(self, other):
        self._check(other)
        return SpectralScalar(self.grid, self.parity, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralScalar(self.grid, self.parity, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralScalar(self.grid, self.parity, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralScalar):
            return NotImplemented
        return SpectralScalar(self.grid, self.parity, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def physical(self) -> np.ndarray:
        return to_physical(self)

    @classmethod
    def zeros(cls, grid: GridSpec, parity: Parity) -> "SpectralScalar":
        return cls(grid, parity, np.zeros(grid.shape, dtype=complex))


@dataclass(frozen=True, eq=False)
class VectorField:
    u1: SpectralScalar
    u2: SpectralScalar

    def __post_init__(self):
        if self.u1.parity is not EVEN or self.u2.parity is not ODD:
            raise ValueError("velocity needs u1 even and u2 odd in x2")
        if self.u1.grid != self.u2.grid:
            raise ValueError("velocity components live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    def __add__(self, other):
        return VectorField(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other):
        return VectorField(self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, scalar):
        return VectorField(self.u1 * scalar, self.u2 * scalar)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(SpectralScalar.zeros(grid, EVEN), SpectralScalar.zeros(grid, ODD))


Field = Union[SpectralScalar, VectorField]


def to_spectral(values: np.ndarray, parity: Parity, grid: GridSpec) -> SpectralScalar:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"array shape {values.shape} does not match grid {grid.shape}")
    return SpectralScalar(grid, parity, grid.forward(values, parity.sign))


def to_physical(field: SpectralScalar) -> np.ndarray:
    return field.grid.inverse(field.coeffs)


def parity_project(field: SpectralScalar) -> SpectralScalar:
    c = field.coeffs
    g = field.grid
    out = 0.5 * (c + field.parity.sign * c[:, g._neg2])
    return SpectralScalar(g, field.parity, out)


def ddx1(field: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(field.grid, field.parity, field.coeffs * field.grid.ik1)


def ddx2(field: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(field.grid, field.parity.flipped(), field.coeffs * field.grid.ik2)


def laplacian(field: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(field.grid, field.parity, -field.grid.ksq * field.coeffs)


def divergence(u: VectorField) -> SpectralScalar:
    return ddx1(u.u1) + ddx2(u.u2)


def leray_project_arrays(c1: np.ndarray, c2: np.ndarray, grid: GridSpec):
    """Remove the component along k from each mode; the k = 0 mode passes through."""
    kdotu = (grid.k1 * c1 + grid.k2 * c2) * grid.inv_ksq
    return c1 - grid.k1 * kdotu, c2 - grid.k2 * kdotu


def leray_project(f1: SpectralScalar, f2: SpectralScalar) -> VectorField:
    if f1.grid != f2.grid:
        raise ValueError("fields live on different grids")
    if f1.parity is not EVEN or f2.parity is not ODD:
        raise ValueError(
            f"Leray projection needs (even, odd) components, got "
            f"({f1.parity.value}, {f2.parity.value})"
        )
    c1, c2 = leray_project_arrays(f1.coeffs, f2.coeffs, f1.grid)
    return VectorField(SpectralScalar(f1.grid, EVEN, c1), SpectralScalar(f1.grid, ODD, c2))


def dealias(field: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(field.grid, field.parity, field.coeffs * field.grid.dealias_mask)


def multiply(a: SpectralScalar, b: SpectralScalar) -> SpectralScalar:
    """Pseudospectral product with 2/3-rule truncation before and after."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    g = a.grid
    pa = g.inverse(a.coeffs * g.dealias_mask)
    pb = g.inverse(b.coeffs * g.dealias_mask)
    parity = a.parity * b.parity
    return SpectralScalar(g, parity, g.forward(pa * pb, parity.sign) * g.dealias_mask)


# norms -------------------------------------------------------------------


def _components(field: Field):
    if isinstance(field, VectorField):
        return (field.u1, field.u2)
    return (field,)


def _weighted_sq(field: Field, power: int) -> float:
    total = 0.0
    for comp in _components(field):
        w = np.abs(comp.coeffs) ** 2
        if power:
            w = w * comp.grid.ksq**power
        total += float(w.sum())
    return comp.grid.omega_vol * total


def norm_l2(field: Field) -> float:
    return math.sqrt(_weighted_sq(field, 0))


def seminorm_h1(field: Field) -> float:
    return math.sqrt(_weighted_sq(field, 1))


def norm_A(field: Field) -> float:
    """|A f| = |Δf| in L²."""
    return math.sqrt(_weighted_sq(field, 2))


def norm_A32(field: Field) -> float:
    return math.sqrt(_weighted_sq(field, 3))


def norm_v0(u: VectorField) -> float:
    """Norm of the velocity space: (|u|²/|Ω| + ‖u‖²)^(1/2)."""
    return math.sqrt(_weighted_sq(u, 0) / u.grid.omega_vol + _weighted_sq(u, 1))


def mean(field: SpectralScalar) -> float:
    return float(field.coeffs[0, 0].real)


def max_abs_physical(field: SpectralScalar) -> float:
    return float(np.max(np.abs(to_physical(field))))


def inner(a: SpectralScalar, b: SpectralScalar) -> float:
    """L² inner product over Ω by Parseval."""
    return a.grid.omega_vol * float(np.real(np.sum(a.coeffs * np.conj(b.coeffs))))


# random fields used by initial conditions and the verify battery ------------


def random_scalar(
    grid: GridSpec,
    parity: Parity,
    rng: np.random.Generator,
    kmax: float | None = None,
    zero_mean: bool = True,
) -> SpectralScalar:
    """Random band-limited field; modes beyond ``kmax`` (index units) and the dealiasing cutoff are zero."""
    values = rng.standard_normal(grid.shape)
    f = dealias(to_spectral(values, parity, grid))
    if kmax is not None:
        keep = (np.abs(grid.index1)[:, None] <= kmax) & (np.abs(grid.index2)[None, :] <= kmax)
        f = SpectralScalar(grid, parity, f.coeffs * keep)
    if zero_mean:
        c = f.coeffs.copy()
        c[0, 0] = 0.0
        f = SpectralScalar(grid, parity, c)
    return f


def random_solenoidal(
    grid: GridSpec, rng: np.random.Generator, kmax: float | None = None
) -> VectorField:
    u = leray_project(
        random_scalar(grid, EVEN, rng, kmax), random_scalar(grid, ODD, rng, kmax)
    )
    return VectorField(dealias(u.u1), dealias(u.u2))


# debug dump ------------------------------------------------------------------


def dump_field(field: SpectralScalar, fh: IO[str]) -> None:
    """Write a text header line followed by ``k1,k2,re,im`` rows (integer mode numbers)."""
    g = field.grid
    header = {
        "L": g.L,
        "n1": g.n1,
        "n2": g.n2,
        "dealias_fraction": g.dealias_fraction,
        "parity": field.parity.value,
    }
    fh.write("# " + json.dumps(header) + "\n")
    fh.write("k1,k2,re,im\n")
    for i, k1 in enumerate(g.index1):
        for j, k2 in enumerate(g.index2):
            c = field.coeffs[i, j]
            fh.write(f"{k1},{k2},{float(c.real)!r},{float(c.imag)!r}\n")


def load_field(fh: IO[str]) -> SpectralScalar:
    first = fh.readline()
    if not first.startswith("# "):
        raise ValueError("missing field dump header")
    header = json.loads(first[2:])
    g = make_grid(header["L"], header["n1"], header["n2"], header["dealias_fraction"])
    if fh.readline().strip() != "k1,k2,re,im":
        raise ValueError("missing column header k1,k2,re,im")
    coeffs = np.zeros(g.shape, dtype=complex)
    for line in fh:
        k1, k2, re, im = line.strip().split(",")
        coeffs[int(k1) % g.n1, int(k2) % g.n2] = complex(float(re), float(im))
    return SpectralScalar(g, Parity(header["parity"]), coeffs)
