"""Periodic box discretization: spectral transforms, quadrature, exact lattice shifts."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

FIELD_MAGIC = b"CGSF"
_FIELD_HEADER = struct.Struct("<4sB3xIf")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the box [-L, L)^N, periodically extended, n points per axis."""

    N: int
    L: float
    n: int

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.N}")
        if not self.L > 0:
            raise ValueError("box half-period L must be positive")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError("points per axis must be even and >= 8")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.N

    @property
    def size(self) -> int:
        return self.n**self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.N

    @property
    def box_volume(self) -> float:
        return (2.0 * self.L) ** self.N

    def axis_coords(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    def coords(self) -> list[np.ndarray]:
        """Node coordinates as N sparse broadcastable arrays."""
        x = self.axis_coords()
        if self.N == 1:
            return [x]
        return list(np.meshgrid(*([x] * self.N), indexing="ij", sparse=True))

    def axis_freqs(self) -> np.ndarray:
        """Angular frequencies xi_k = pi*k/L in FFT index order."""
        return (np.pi / self.L) * np.fft.fftfreq(self.n, d=1.0 / self.n)

    def freq2(self) -> np.ndarray:
        """|xi|^2 on the frequency grid, FFT index order."""
        xi2 = self.axis_freqs() ** 2
        out = np.zeros(self.shape)
        for axis in range(self.N):
            shape = [1] * self.N
            shape[axis] = self.n
            out = out + xi2.reshape(shape)
        return out

    def cells_per_unit(self) -> int:
        """Grid cells per unit length; integral so unit-lattice shifts are exact."""
        cpu = self.n / (2.0 * self.L)
        if abs(cpu - round(cpu)) > 1e-9 * cpu or round(cpu) < 1:
            raise ValueError(
                f"one length unit is not an integer number of cells (n={self.n}, L={self.L})"
            )
        return int(round(cpu))


@dataclass(eq=False)
class Field:
    """Real grid function, values in row-major order over the box nodes."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"value shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")

    def copy(self) -> Field:
        return Field(self.grid, self.values.copy())


@dataclass(eq=False)
class SpectralField:
    """DFT coefficients of a Field; coefficient at xi=0 equals the field mean."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError("coefficient shape does not match grid")


def _check_same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def forward(f: Field) -> SpectralField:
    """Transform to Fourier coefficients, phase referenced to x = 0.

    Normalized so the coefficient at xi = 0 is the mean of f; a pure mode
    c*cos(xi_k . x) produces coefficients c/2 at +-k.
    """
    g = f.grid
    shifted = np.roll(f.values, (-(g.n // 2),) * g.N, axis=tuple(range(g.N)))
    return SpectralField(g, np.fft.fftn(shifted) / g.size)


def inverse(F: SpectralField) -> Field:
    g = F.grid
    vals = np.fft.ifftn(F.coeffs * g.size).real
    return Field(g, np.roll(vals, (g.n // 2,) * g.N, axis=tuple(range(g.N))))


def is_hermitian(F: SpectralField, tol: float = 1e-12) -> bool:
    """Whether coefficients at xi and -xi are conjugate (real underlying field)."""
    c = F.coeffs
    flipped = c
    for axis in range(F.grid.N):
        flipped = np.roll(np.flip(flipped, axis=axis), 1, axis=axis)
    scale = np.max(np.abs(c)) or 1.0
    return bool(np.max(np.abs(c - np.conj(flipped))) <= tol * scale)


def l2_inner(f: Field, g: Field) -> float:
    """Box inner product, Riemann sum with weight h^N."""
    _check_same_grid(f, g)
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


def l2_norm2(f: Field) -> float:
    return float(f.grid.cell_volume * np.sum(f.values * f.values))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(l2_norm2(f)))


def shift(f: Field, z) -> Field:
    """Translate by z: returns g with g(x) = f(x - z), exact circular shift.

    Each component of z must be an integer multiple of the grid spacing;
    no interpolation is ever performed.
    """
    g = f.grid
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (g.N,):
        raise ValueError(f"shift vector must have {g.N} components")
    cells = z / g.h
    rounded = np.round(cells)
    if np.any(np.abs(cells - rounded) > 1e-9):
        raise ValueError(f"shift {z} is not an integer number of cells (h={g.h})")
    return Field(g, np.roll(f.values, tuple(int(c) for c in rounded), axis=tuple(range(g.N))))


def min_image(grid: Grid, x: np.ndarray) -> np.ndarray:
    """Wrap coordinates (last axis) to the fundamental box [-L, L)."""
    return (np.asarray(x) + grid.L) % (2.0 * grid.L) - grid.L


def gaussian_field(grid: Grid, center=None, width: float = 1.0, amplitude: float = 1.0) -> Field:
    """Gaussian bump, periodized through minimal-image distance so it is smooth on the torus."""
    if center is None:
        center = np.zeros(grid.N)
    center = np.atleast_1d(np.asarray(center, dtype=float))
    r2 = np.zeros(grid.shape)
    for axis, c in enumerate(grid.coords()):
        d = min_image(grid, c - center[axis])
        r2 = r2 + d * d
    return Field(grid, amplitude * np.exp(-r2 / width**2))


def random_smooth_field(grid: Grid, rng: np.random.Generator, n_bumps: int = 3) -> Field:
    """Random superposition of signed Gaussian bumps; generic smooth test field."""
    vals = np.zeros(grid.shape)
    for _ in range(n_bumps):
        center = rng.uniform(-grid.L, grid.L, size=grid.N)
        width = rng.uniform(0.5, max(1.0, grid.L / 4))
        amp = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        vals += gaussian_field(grid, center, width, amp).values
    return Field(grid, vals)


def save_field(f: Field, path, metadata: dict | None = None) -> None:
    """Write binary field file plus a JSON sidecar with grid parameters and provenance.

    Layout: 16-byte header (magic, u8 N, u32 n, f32 L) then n^N little-endian
    float64 values, row-major.
    """
    path = str(path)
    header = _FIELD_HEADER.pack(FIELD_MAGIC, f.grid.N, f.grid.n, f.grid.L)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    meta = {
        "N": f.grid.N,
        "n": f.grid.n,
        "L": f.grid.L,
        "h": f.grid.h,
        "format": "CGSF/1 float64 row-major",
    }
    if metadata:
        meta.update(metadata)
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_field(path) -> Field:
    with open(str(path), "rb") as fh:
        header = fh.read(_FIELD_HEADER.size)
        magic, N, n, L = _FIELD_HEADER.unpack(header)
        if magic != FIELD_MAGIC:
            raise ValueError(f"not a field file (magic {magic!r})")
        grid = Grid(int(N), float(L), int(n))
        data = np.frombuffer(fh.read(8 * grid.size), dtype="<f8")
    if data.size != grid.size:
        raise ValueError("field file truncated")
    return Field(grid, data.reshape(grid.shape).copy())
