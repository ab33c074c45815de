"""Torus grids, real fields and diagonal Fourier actions.

Conventions
-----------
* The torus has side ``2*pi`` and ``n = 2**m`` points per axis, ``dim`` in {1, 2}.
* The forward transform divides by ``n**dim`` so that the zero coefficient is
  the mean of the field.
* Every pointwise product or nonlinear evaluation is done on a grid padded by a
  factor two and truncated back ("dealiased").
"""

import struct
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

__all__ = [
    "TorusGrid", "Field", "TimeField", "Multiplier", "InvalidFieldError",
    "GridMismatchError", "transform_roundtrip", "apply_multiplier",
    "heat_propagate", "laplacian", "inverse_laplacian", "derivative",
    "product", "apply_pointwise", "duhamel", "save_field", "load_field",
    "PCF1_MAGIC",
]

PCF1_MAGIC = b"PARACF01"


class InvalidFieldError(ValueError):
    """Raised for non-finite or badly shaped field data."""


class GridMismatchError(ValueError):
    """Raised when fields living on different grids are combined."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the flat torus (2*pi)^dim.

    ``partition`` selects the Littlewood-Paley partition attached to the grid
    ("smooth" or "sharp"); all dyadic operations on fields of this grid use it.
    """

    dim: int
    n: int
    partition: str = "smooth"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if self.partition not in ("smooth", "sharp"):
            raise ValueError(f"unknown partition {self.partition!r}")

    @property
    def length(self):
        return 2.0 * np.pi

    @property
    def m(self):
        return self.n.bit_length() - 1

    @property
    def J(self):
        """Index of the top dyadic block."""
        return self.m - 1

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n ** self.dim

    @property
    def spacing(self):
        return self.length / self.n

    @cached_property
    def wavenumbers(self):
        """Tuple of integer wavenumber arrays (one per axis), broadcast to ``shape``."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        if self.dim == 1:
            return (k,)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        return (k1, k2)

    @cached_property
    def k2(self):
        """|k|^2 on the grid."""
        return sum(k * k for k in self.wavenumbers)

    @cached_property
    def kabs(self):
        return np.sqrt(self.k2)

    def coordinates(self):
        x = np.arange(self.n) * self.spacing
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def with_partition(self, partition):
        return TorusGrid(self.dim, self.n, partition)

    # -- spectral plumbing ----------------------------------------------
    def forward(self, values):
        return np.fft.fftn(values) / self.size

    def inverse(self, spectrum):
        return np.fft.ifftn(spectrum).real * self.size

    def to_fine(self, spectrum):
        """Values on the 2x padded grid of the trigonometric interpolant."""
        spec = spectrum
        for ax in range(self.dim):
            spec = _pad_axis(spec, ax, self.n)
        return np.fft.ifftn(spec).real * (2 * self.n) ** self.dim

    def from_fine(self, fine_values):
        """Truncate values on the padded grid back to a spectrum on this grid."""
        spec = np.fft.fftn(fine_values) / (2 * self.n) ** self.dim
        for ax in range(self.dim):
            spec = _truncate_axis(spec, ax, self.n)
        return spec


def _pad_axis(spec, axis, n):
    h = n // 2
    spec = np.moveaxis(spec, axis, 0)
    out = np.zeros((2 * n,) + spec.shape[1:], dtype=complex)
    out[:h] = spec[:h]
    out[h] = 0.5 * spec[h]
    out[2 * n - h] = 0.5 * spec[h]
    out[2 * n - h + 1:] = spec[h + 1:]
    return np.moveaxis(out, 0, axis)


def _truncate_axis(spec, axis, n):
    h = n // 2
    spec = np.moveaxis(spec, axis, 0)
    out = np.empty((n,) + spec.shape[1:], dtype=complex)
    out[:h] = spec[:h]
    out[h] = spec[h] + spec[2 * n - h]
    out[h + 1:] = spec[2 * n - h + 1:]
    return np.moveaxis(out, 0, axis)


class Field:
    """Real scalar field on a :class:`TorusGrid`.

    Fields are immutable values; the spectrum is computed eagerly so instances
    can be shared between threads.
    """

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid, values, spectrum=None):
        values = np.asarray(values, dtype=float)
        if values.size != grid.size:
            raise InvalidFieldError(
                f"expected {grid.size} values for grid {grid.shape}, got {values.size}")
        values = values.reshape(grid.shape)
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("field values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self._values = values
        if spectrum is None:
            spectrum = grid.forward(values)
        spectrum.setflags(write=False)
        self._spectrum = spectrum

    @classmethod
    def from_spectrum(cls, grid, spectrum):
        spectrum = np.asarray(spectrum, dtype=complex).reshape(grid.shape)
        values = grid.inverse(spectrum)
        # re-project so that the cached spectrum is exactly that of a real field
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(*grid.coordinates()))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def zeros(cls, grid):
        return cls.constant(grid, 0.0)

    @property
    def values(self):
        return self._values

    @property
    def spectrum(self):
        return self._spectrum

    def mean(self):
        return float(self._spectrum.flat[0].real)

    def sup(self):
        return float(np.max(np.abs(self._values)))

    def centered(self):
        return Field(self.grid, self._values - self.mean())

    def check_grid(self, *others):
        for o in others:
            if o.grid != self.grid:
                raise GridMismatchError(f"grid mismatch: {self.grid} vs {o.grid}")

    def _coerce(self, other):
        if isinstance(other, Field):
            self.check_grid(other)
            return other._values
        return float(other)

    def __add__(self, other):
        return Field(self.grid, self._values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self._values - self._coerce(other))

    def __rsub__(self, other):
        return Field(self.grid, self._coerce(other) - self._values)

    def __neg__(self):
        return Field(self.grid, -self._values)

    def __mul__(self, c):
        """Scalar multiplication only; use :func:`product` for field products."""
        if isinstance(c, Field):
            return product(self, c)
        return Field(self.grid, float(c) * self._values)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Field(self.grid, self._values / float(c))

    def __repr__(self):
        return f"Field(dim={self.grid.dim}, n={self.grid.n}, sup={self.sup():.3g})"


@dataclass
class TimeField:
    """Sequence of fields on an increasing time grid."""

    grid: TorusGrid
    times: np.ndarray
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("time grid must be a non-empty 1-D array")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        self.values = np.asarray(self.values, dtype=float).reshape(
            (self.times.size,) + self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise InvalidFieldError("time field values must be finite")

    @classmethod
    def from_fields(cls, times, fields):
        fields = list(fields)
        grid = fields[0].grid
        for f in fields:
            fields[0].check_grid(f)
        return cls(grid, times, np.stack([f.values for f in fields]))

    @classmethod
    def constant_in_time(cls, times, f):
        times = np.asarray(times, dtype=float)
        return cls(f.grid, times, np.broadcast_to(f.values, (times.size,) + f.grid.shape).copy())

    @classmethod
    def zeros(cls, grid, times):
        times = np.asarray(times, dtype=float)
        return cls(grid, times, np.zeros((times.size,) + grid.shape))

    def __len__(self):
        return self.times.size

    def slice(self, i):
        return Field(self.grid, self.values[i])

    def slices(self):
        return [self.slice(i) for i in range(len(self))]

    def map(self, func):
        """Apply a Field -> Field function slice by slice."""
        return TimeField.from_fields(self.times, [func(s) for s in self.slices()])

    def _check(self, other):
        if other.grid != self.grid or other.times.shape != self.times.shape or \
                not np.allclose(other.times, self.times, rtol=0, atol=1e-14):
            raise GridMismatchError("time fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return TimeField(self.grid, self.times, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return TimeField(self.grid, self.times, self.values - other.values)

    def __mul__(self, c):
        return TimeField(self.grid, self.times, float(c) * self.values)

    __rmul__ = __mul__

    def sup(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class Multiplier:
    """Diagonal Fourier action ``f_hat(k) -> symbol(k) * f_hat(k)``.

    ``symbol`` receives the tuple of wavenumber arrays of the grid and returns
    an array broadcastable to the grid shape.
    """

    symbol: object
    label: str = "multiplier"

    def on(self, grid):
        s = np.asarray(self.symbol(*grid.wavenumbers))
        s = np.broadcast_to(s, grid.shape)
        if not np.all(np.isfinite(s)):
            raise ValueError(f"symbol {self.label!r} is not finite on the grid")
        return s

    @staticmethod
    def heat(t):
        if t < 0:
            raise ValueError("heat time must be nonnegative")
        return Multiplier(lambda *k: np.exp(-t * sum(kk * kk for kk in k)), f"heat({t})")

    @staticmethod
    def laplacian():
        return Multiplier(lambda *k: sum(kk * kk for kk in k), "L")

    @staticmethod
    def inverse_laplacian():
        def sym(*k):
            k2 = sum(kk * kk for kk in k)
            out = np.zeros_like(k2, dtype=float)
            nz = k2 != 0
            out[nz] = 1.0 / k2[nz]
            return out
        return Multiplier(sym, "L^-1")

    @staticmethod
    def derivative(axis=0):
        return Multiplier(lambda *k: 1j * k[axis], f"d/dx{axis}")


def _nyquist_mask(grid):
    """Boolean mask of wavenumbers with some coordinate equal to -n/2."""
    mask = np.zeros(grid.shape, dtype=bool)
    for k in grid.wavenumbers:
        mask |= k == -grid.n // 2
    return mask


def transform_roundtrip(f):
    """Inverse transform of the forward transform (self-test)."""
    if not np.all(np.isfinite(f.values)):
        raise InvalidFieldError("field values must be finite")
    return Field(f.grid, f.grid.inverse(f.grid.forward(f.values)))


def apply_multiplier(f, m):
    """Multiply the spectrum of ``f`` elementwise by the symbol of ``m``.

    For odd symbols (derivatives) the unpaired Nyquist mode is dropped so the
    result stays real.
    """
    sym = m.on(f.grid) if isinstance(m, Multiplier) else np.asarray(m)
    spec = f.spectrum * sym
    if np.iscomplexobj(sym) and np.any(sym.imag != 0):
        spec = np.where(_nyquist_mask(f.grid), 0.0, spec)
    return Field.from_spectrum(f.grid, spec)


def heat_propagate(f, t):
    if t < 0:
        raise ValueError("heat time must be nonnegative")
    if t == 0:
        return f
    return Field.from_spectrum(f.grid, f.spectrum * np.exp(-t * f.grid.k2))


def laplacian(f):
    """L f = -Delta f (symbol |k|^2)."""
    return Field.from_spectrum(f.grid, f.spectrum * f.grid.k2)


def inverse_laplacian(f):
    """L^{-1} on the mean-zero part; the zero mode of the output is 0."""
    k2 = f.grid.k2
    inv = np.zeros_like(k2)
    inv[k2 != 0] = 1.0 / k2[k2 != 0]
    return Field.from_spectrum(f.grid, f.spectrum * inv)


def derivative(f, axis=0):
    return apply_multiplier(f, Multiplier.derivative(axis))


def product(*fields):
    """Dealiased pointwise product of one or more fields."""
    return apply_pointwise(lambda *v: np.prod(np.stack(v), axis=0), *fields)


def apply_pointwise(func, *fields):
    """Evaluate ``func`` pointwise on the padded grid and truncate back."""
    grid = fields[0].grid
    fields[0].check_grid(*fields[1:])
    fine = [grid.to_fine(f.spectrum) for f in fields]
    out = np.asarray(func(*fine), dtype=float)
    if not np.all(np.isfinite(out)):
        raise InvalidFieldError("pointwise evaluation produced non-finite values")
    return Field.from_spectrum(grid, grid.from_fine(out))


def _phi_weights(z):
    """Weights of the linear-interpolant heat quadrature on one step.

    Returns (w_old, w_new) such that
    int_0^h e^{-(h-s)lam} F(s) ds ~= h*(w_old*F(0) + w_new*F(h)), z = h*lam.
    """
    z = np.asarray(z, dtype=float)
    small = z < 1e-4
    zs = np.where(small, 1.0, z)
    e = np.exp(-zs)
    phi1 = np.where(small, 1 - z / 2 + z * z / 6, -np.expm1(-zs) / zs)
    w_old = np.where(small, 0.5 - z / 3 + z * z / 8, (1 - e - zs * e) / zs ** 2)
    return w_old, phi1 - w_old


def duhamel(source, initial=None):
    """Mild solution of (d/dt + L) v = source with v(t_0) = initial.

    The source is interpolated linearly in time between nodes and integrated
    exactly against the heat kernel (product trapezoidal rule); between nodes
    the free evolution is exact.  Exact for sources affine in time.
    """
    grid, times = source.grid, source.times
    k2 = grid.k2
    specs = np.fft.fftn(source.values, axes=tuple(range(1, grid.dim + 1))) / grid.size
    out = np.empty_like(specs)
    out[0] = 0.0 if initial is None else initial.spectrum
    cache = {}
    for i in range(len(times) - 1):
        h = times[i + 1] - times[i]
        key = round(h, 15)
        if key not in cache:
            w_old, w_new = _phi_weights(h * k2)
            cache[key] = (np.exp(-h * k2), h * w_old, h * w_new)
        e, a, b = cache[key]
        out[i + 1] = e * out[i] + a * specs[i] + b * specs[i + 1]
    vals = np.fft.ifftn(out, axes=tuple(range(1, grid.dim + 1))).real * grid.size
    return TimeField(grid, times, vals)


def save_field(path, f):
    """Write ``f`` in the PCF1 binary format."""
    with open(path, "wb") as fh:
        fh.write(PCF1_MAGIC)
        fh.write(struct.pack("<II", f.grid.dim, f.grid.n))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C"))


def load_field(path, partition="smooth"):
    """Read a PCF1 file written by :func:`save_field`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != PCF1_MAGIC:
        raise InvalidFieldError("not a PCF1 file (bad magic)")
    dim, n = struct.unpack("<II", data[8:16])
    grid = TorusGrid(dim, n, partition)
    payload = data[16:]
    if len(payload) != 8 * grid.size:
        raise InvalidFieldError("PCF1 payload has wrong length")
    return Field(grid, np.frombuffer(payload, dtype="<f8").reshape(grid.shape))
