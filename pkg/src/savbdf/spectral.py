"""Spectral grids, transforms, diagonal operator algebra and Sobolev norms.

Two bases are supported:

* ``FOURIER2D`` -- doubly periodic rectangle, real-to-complex FFT storage
  (``scipy.fft.rfft2`` layout, Hermitian symmetry enforced on the
  self-conjugate columns).  Wavenumbers k = 2*pi*n/L per direction.
* ``SINE1D`` -- Dirichlet interval, DST-I basis phi_j(x) = sin(j*pi*(x-a)/L)
  sampled at the N interior points of a uniform grid with spacing
  h = L/(N+1).  Wavenumbers k_j = j*pi/L.

Spectral coefficients are stored normalized so that a coefficient is the
amplitude of its basis function: a constant field has Fourier coefficient
(0,0) equal to that constant, and sin(j*pi*(x-a)/L) has sine coefficient 1
at mode j.  With the uniform-grid quadrature

    (f, g) = cell_volume * sum_i f_i * g_i

discrete Parseval holds exactly for both bases, so physical and spectral
inner products agree to rounding.

Grids precompute wavenumber tables, quadrature weights and dealiasing masks
at construction and are immutable afterwards, hence safe for concurrent use.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import fft as _fft

__all__ = [
    "Basis",
    "Grid",
    "Field",
    "GridMismatchError",
    "IndefiniteOperatorError",
    "transform_forward",
    "transform_inverse",
    "laplacian_symbol",
    "apply_symbol",
    "solve_shifted",
    "apply_shifted",
    "sobolev_norm",
    "quadratic_form",
    "dealias",
    "pointwise_map",
    "inner",
    "integrate",
    "sine_derivative_values",
]


class GridMismatchError(ValueError):
    """Raised when an operation mixes fields living on different grids."""


class IndefiniteOperatorError(ValueError):
    """Raised when a shifted diagonal solve has a non-positive denominator."""


class Basis(enum.Enum):
    FOURIER2D = "fourier2d"
    SINE1D = "sine1d"


class Grid:
    """Immutable description of a discretization: basis, extents, domain.

    Use the :meth:`fourier2d` / :meth:`sine1d` constructors.  All derived
    arrays (wavenumbers, multiplicities, dealias mask) are computed once
    here and must be treated as read-only.
    """

    __slots__ = (
        "basis", "extents", "domain", "cell_volume", "volume",
        "k2", "dealias_mask", "_mult", "_points", "_mode_norm_sq",
    )

    def __init__(self, basis: Basis, extents: tuple[int, ...], domain: tuple[tuple[float, float], ...]):
        if len(extents) != len(domain):
            raise ValueError("extents and domain must have the same dimensionality")
        if any(n <= 0 for n in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        self.basis = basis
        self.extents = tuple(int(n) for n in extents)
        self.domain = tuple((float(a), float(b)) for a, b in domain)
        if any(b <= a for a, b in self.domain):
            raise ValueError(f"degenerate domain {self.domain}")

        if basis is Basis.FOURIER2D:
            if len(extents) != 2:
                raise ValueError("FOURIER2D grids are two-dimensional")
            if any(n % 2 for n in self.extents):
                raise ValueError("FOURIER2D extents must be even for real transforms")
            nx, ny = self.extents
            (x0, x1), (y0, y1) = self.domain
            lx, ly = x1 - x0, y1 - y0
            hx, hy = lx / nx, ly / ny
            kx = 2.0 * np.pi * _fft.fftfreq(nx, d=hx)
            ky = 2.0 * np.pi * _fft.rfftfreq(ny, d=hy)
            self.k2 = kx[:, None] ** 2 + ky[None, :] ** 2
            # conjugate-pair multiplicity of the rfft2 layout
            mult = np.ones((nx, ny // 2 + 1))
            mult[:, 1:-1] = 2.0
            self._mult = mult
            ix = np.abs(np.rint(_fft.fftfreq(nx) * nx)).astype(int)
            iy = np.arange(ny // 2 + 1)
            cut_x = 2.0 * (nx // 2) / 3.0
            cut_y = 2.0 * (ny // 2) / 3.0
            self.dealias_mask = (ix[:, None] <= cut_x) & (iy[None, :] <= cut_y)
            self.cell_volume = hx * hy
            self.volume = lx * ly
            x = x0 + hx * np.arange(nx)
            y = y0 + hy * np.arange(ny)
            self._points = np.meshgrid(x, y, indexing="ij")
            self._mode_norm_sq = None
        elif basis is Basis.SINE1D:
            if len(extents) != 1:
                raise ValueError("SINE1D grids are one-dimensional")
            (n,) = self.extents
            ((a, b),) = self.domain
            length = b - a
            h = length / (n + 1)
            j = np.arange(1, n + 1)
            kj = j * np.pi / length
            self.k2 = kj ** 2
            self._mult = None
            cut = 2.0 * n / 3.0
            self.dealias_mask = j <= cut
            self.cell_volume = h
            self.volume = length
            self._points = (a + h * np.arange(1, n + 1),)
            # L2 norm of each basis function: integral of sin^2 over (a, b)
            self._mode_norm_sq = length / 2.0
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown basis {basis}")
        for arr in (self.k2, self.dealias_mask):
            arr.setflags(write=False)

    @classmethod
    def fourier2d(cls, nx: int, ny: int | None = None,
                  domain: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 2.0), (0.0, 2.0))) -> "Grid":
        return cls(Basis.FOURIER2D, (nx, ny if ny is not None else nx), domain)

    @classmethod
    def sine1d(cls, n: int, interval: tuple[float, float] = (-1.0, 1.0)) -> "Grid":
        return cls(Basis.SINE1D, (n,), (interval,))

    @property
    def points(self):
        """Physical coordinates: (X, Y) meshgrids for Fourier, (x,) for sine."""
        return self._points

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        if self.basis is Basis.FOURIER2D:
            nx, ny = self.extents
            return (nx, ny // 2 + 1)
        return self.extents

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.basis, self.extents, self.domain) == (other.basis, other.extents, other.domain)

    def __hash__(self) -> int:
        return hash((self.basis, self.extents, self.domain))

    def __repr__(self) -> str:
        return f"Grid({self.basis.value}, extents={self.extents}, domain={self.domain})"


def _hermitianize(coeffs: np.ndarray, nx: int) -> np.ndarray:
    """Enforce the row symmetry of the self-conjugate rfft2 columns."""
    out = np.array(coeffs, dtype=complex, copy=True)
    idx = (-np.arange(nx)) % nx
    for col in (0, out.shape[1] - 1):
        out[:, col] = 0.5 * (out[:, col] + np.conj(out[idx, col]))
    return out


class Field:
    """A real grid function with lazily synchronized physical and spectral data.

    At least one representation is valid at all times; the other is computed
    on demand and cached.  Fields are value types: arithmetic returns new
    fields and stored arrays must not be mutated.
    """

    __slots__ = ("grid", "_phys", "_spec")

    def __init__(self, grid: Grid, physical: np.ndarray | None = None, spectral: np.ndarray | None = None):
        if physical is None and spectral is None:
            raise ValueError("a Field needs a physical or a spectral array")
        self.grid = grid
        self._phys = physical
        self._spec = spectral

    @classmethod
    def from_physical(cls, grid: Grid, values) -> "Field":
        arr = np.asarray(values, dtype=float)
        if arr.shape != grid.extents:
            raise ValueError(f"physical shape {arr.shape} does not match grid extents {grid.extents}")
        return cls(grid, physical=arr)

    @classmethod
    def from_spectral(cls, grid: Grid, coeffs) -> "Field":
        if grid.basis is Basis.FOURIER2D:
            arr = np.asarray(coeffs, dtype=complex)
            if arr.shape != grid.spectral_shape:
                raise ValueError(f"spectral shape {arr.shape} does not match grid {grid.spectral_shape}")
            arr = _hermitianize(arr, grid.extents[0])
        else:
            arr = np.asarray(coeffs, dtype=float)
            if arr.shape != grid.spectral_shape:
                raise ValueError(f"spectral shape {arr.shape} does not match grid {grid.spectral_shape}")
        return cls(grid, spectral=arr)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, physical=np.zeros(grid.extents))

    # -- representation access -------------------------------------------------

    @property
    def values(self) -> np.ndarray:
        if self._phys is None:
            g = self.grid
            if g.basis is Basis.FOURIER2D:
                nx, ny = g.extents
                self._phys = _fft.irfft2(self._spec * (nx * ny), s=(nx, ny))
            else:
                self._phys = _fft.dst(self._spec, type=1) / 2.0
        return self._phys

    @property
    def coeffs(self) -> np.ndarray:
        if self._spec is None:
            g = self.grid
            if g.basis is Basis.FOURIER2D:
                nx, ny = g.extents
                self._spec = _fft.rfft2(self._phys) / (nx * ny)
            else:
                n = g.extents[0]
                self._spec = _fft.dst(self._phys, type=1) / (n + 1)
        return self._spec

    def mean(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume / self.grid.volume)

    def all_finite(self) -> bool:
        arr = self._phys if self._phys is not None else self._spec
        return bool(np.all(np.isfinite(arr))) if np.isrealobj(arr) else bool(
            np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag)))

    # -- arithmetic -------------------------------------------------------------

    def _check_grid(self, other: "Field"):
        if self.grid != other.grid:
            raise GridMismatchError(f"fields live on different grids: {self.grid} vs {other.grid}")

    def _binary(self, other: "Field", op) -> "Field":
        self._check_grid(other)
        if self._phys is not None and other._phys is not None:
            return Field(self.grid, physical=op(self._phys, other._phys))
        if self._spec is not None and other._spec is not None:
            return Field(self.grid, spectral=op(self._spec, other._spec))
        return Field(self.grid, physical=op(self.values, other.values))

    def __add__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self._binary(other, np.add)

    def __sub__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self._binary(other, np.subtract)

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, np.floating)):
            return NotImplemented
        s = float(scalar)
        phys = None if self._phys is None else s * self._phys
        spec = None if self._spec is None else s * self._spec
        return Field(self.grid, physical=phys, spectral=spec)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __repr__(self) -> str:
        reps = "".join(r for r, v in (("P", self._phys), ("S", self._spec)) if v is not None)
        return f"Field({self.grid!r}, reps={reps})"


# -- transforms -----------------------------------------------------------------


def transform_forward(f: Field) -> Field:
    """Populate the spectral representation (no-op if already valid)."""
    f.coeffs
    return f


def transform_inverse(f: Field) -> Field:
    """Populate the physical representation (no-op if already valid)."""
    f.values
    return f


# -- diagonal operator algebra ----------------------------------------------------


def laplacian_symbol(grid: Grid) -> np.ndarray:
    """Per-mode symbol of the Laplacian: -|k|^2 (Fourier), -k_j^2 (sine)."""
    return -grid.k2


def apply_symbol(symbol, f: Field) -> Field:
    """Apply a diagonal (Fourier/sine multiplier) operator to a field."""
    return Field.from_spectral(f.grid, symbol * f.coeffs)


def solve_shifted(shift: float, op_symbol, rhs: Field) -> Field:
    """Solve (shift + A) x = rhs for a diagonal operator A given by its symbol.

    Every mode denominator shift + symbol must be strictly positive.
    """
    denom = shift + np.asarray(op_symbol)
    if np.min(denom) <= 0.0:
        raise IndefiniteOperatorError(
            f"indefinite operator: min(shift + symbol) = {np.min(denom):g} <= 0"
        )
    return Field.from_spectral(rhs.grid, rhs.coeffs / denom)


def apply_shifted(shift: float, op_symbol, f: Field) -> Field:
    """Apply (shift + A); the exact inverse of :func:`solve_shifted`."""
    return Field.from_spectral(f.grid, (shift + np.asarray(op_symbol)) * f.coeffs)


# -- norms and inner products ------------------------------------------------------


def _spectral_weights(grid: Grid) -> tuple[np.ndarray, float]:
    """Per-mode |coeff|^2 weights and their common factor for L2-type sums."""
    if grid.basis is Basis.FOURIER2D:
        return grid._mult, grid.volume
    return np.ones(grid.extents[0]), grid._mode_norm_sq


def sobolev_norm(f: Field, s: float = 0.0) -> float:
    """Spectral H^s norm: sqrt(sum (1 + |k|^2)^s |f_hat|^2), L2 at s = 0."""
    mult, factor = _spectral_weights(f.grid)
    c = f.coeffs
    mag2 = (c * np.conj(c)).real if np.iscomplexobj(c) else c * c
    if s == 0.0:
        return float(np.sqrt(factor * np.sum(mult * mag2)))
    return float(np.sqrt(factor * np.sum(mult * (1.0 + f.grid.k2) ** s * mag2)))


def quadratic_form(symbol, f: Field) -> float:
    """(S f, f) for a diagonal operator S given by its (real) symbol."""
    mult, factor = _spectral_weights(f.grid)
    c = f.coeffs
    mag2 = (c * np.conj(c)).real if np.iscomplexobj(c) else c * c
    return float(factor * np.sum(mult * np.asarray(symbol) * mag2))


def inner(f: Field, g: Field) -> float:
    """L2 inner product by uniform-grid quadrature (matches Parseval exactly)."""
    if f.grid != g.grid:
        raise GridMismatchError("inner product of fields on different grids")
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def integrate(f: Field) -> float:
    """Quadrature of the field over the domain: cell_volume * sum of values."""
    return float(np.sum(f.values) * f.grid.cell_volume)


# -- dealiasing and pointwise operations ------------------------------------------


def dealias(f: Field) -> Field:
    """Zero all modes above 2/3 of the Nyquist index (idempotent)."""
    return Field.from_spectral(f.grid, f.coeffs * f.grid.dealias_mask)


def pointwise_map(f: Field, fn) -> Field:
    """Apply a scalar function to the physical values of a field."""
    return Field.from_physical(f.grid, fn(f.values))


def sine_derivative_values(f: Field) -> np.ndarray:
    """Physical values of d/dx of a sine-basis field.

    The derivative of a sine series is a cosine series; it is returned as
    point values on the interior grid (a DCT-I evaluation), not as a Field,
    because it does not satisfy the Dirichlet conditions of the basis.
    """
    g = f.grid
    if g.basis is not Basis.SINE1D:
        raise ValueError("sine_derivative_values requires a SINE1D grid")
    n = g.extents[0]
    kj = np.sqrt(g.k2)
    padded = np.zeros(n + 2)
    padded[1:-1] = f.coeffs * kj / 2.0
    return _fft.dct(padded, type=1)[1:-1]
