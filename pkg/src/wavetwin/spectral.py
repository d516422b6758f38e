"""Periodic 1D grid and Fourier-space operations used by the wave solver.

Fields may carry arbitrary leading (batch) axes; every transform acts on the
last axis, so a whole ensemble ``(N, L)`` is handled in one call.

Mode convention: ``modes[..., j]`` is the complex amplitude of wavenumber
``j * k0`` with the forward transform divided by ``L``, so ``cos(k0 x)`` has
``modes[1] == 0.5`` (the conjugate mode at ``-k0`` is implied).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_field, check_in_interval
from .exceptions import InvalidInputError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``L`` points on ``[0, domain_length)``."""

    L: int = 256
    domain_length: float = 2 * np.pi

    def __post_init__(self):
        if self.L < 4 or self.L & (self.L - 1):
            raise InvalidInputError(f"L must be a power of two >= 4, got {self.L}")
        if not self.domain_length > 0:
            raise InvalidInputError("domain_length must be positive")

    @property
    def dx(self):
        return self.domain_length / self.L

    @property
    def k0(self):
        return 2 * np.pi / self.domain_length

    @property
    def n_modes(self):
        return self.L // 2 + 1

    @property
    def k_max(self):
        """Largest retained wavenumber; the Nyquist mode is never evolved."""
        return (self.L // 2 - 1) * self.k0

    @property
    def x(self):
        return np.arange(self.L) * self.dx

    @property
    def k(self):
        """Non-negative wavenumbers matching the last axis of ``modes``."""
        return np.arange(self.n_modes) * self.k0

    def index_of(self, x, atol=1e-9):
        """Grid index of the node at position ``x``; off-node positions are rejected."""
        pos = float(x) / self.dx
        idx = int(round(pos))
        if abs(pos - idx) > atol or not 0 <= idx < self.L:
            raise InvalidInputError(f"x={x} does not coincide with a grid node")
        return idx


@dataclass(frozen=True)
class SpectralField:
    modes: np.ndarray
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        if self.modes.shape[-1] != self.grid.n_modes:
            raise InvalidInputError(
                f"expected {self.grid.n_modes} modes, got {self.modes.shape[-1]}")

    def _new(self, modes):
        return SpectralField(modes, self.grid)

    def __add__(self, other):
        _check_same_grid(self, other)
        return self._new(self.modes + other.modes)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return self._new(self.modes - other.modes)

    def __mul__(self, scalar):
        return self._new(self.modes * scalar)

    __rmul__ = __mul__

    def full(self):
        """Two-sided coefficients in ``np.fft.fftfreq`` order."""
        L = self.grid.L
        out = np.zeros(self.modes.shape[:-1] + (L,), dtype=complex)
        out[..., : L // 2 + 1] = self.modes
        out[..., L // 2 + 1:] = np.conj(self.modes[..., 1: L // 2][..., ::-1])
        return out


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise InvalidInputError("spectral fields live on different grids")


def to_spectral(values, grid):
    values = check_field(values, grid.L)
    return SpectralField(np.fft.rfft(values, axis=-1) / grid.L, grid)


def to_physical(sf):
    L = sf.grid.L
    return np.fft.irfft(sf.modes * L, n=L, axis=-1)


def spectral_derivative(sf, order=1):
    """Multiply each mode by ``(i k)**order``; the Nyquist mode is dropped."""
    order = int(order)
    if order < 1:
        raise InvalidInputError("derivative order must be >= 1")
    factor = (1j * sf.grid.k) ** order
    factor[-1] = 0.0
    return sf._new(sf.modes * factor)


def lowpass_mask(grid, cutoff_fraction):
    cutoff_fraction = check_in_interval(cutoff_fraction, "cutoff_fraction", 0.0, 1.0)
    mask = grid.k <= cutoff_fraction * grid.k_max * (1 + 1e-12)
    mask[-1] = False
    return mask


def apply_lowpass(sf, cutoff_fraction):
    """Zero every mode above ``cutoff_fraction * k_max``. The mean mode is kept."""
    return sf._new(sf.modes * lowpass_mask(sf.grid, cutoff_fraction))


def pad_factor(order):
    """Padding multiple that makes ``order + 1``-fold products alias free."""
    return math.ceil((int(order) + 1) / 2)


def padded_physical(modes, grid, factor):
    """Evaluate band-limited ``modes`` on a grid ``factor`` times finer."""
    return _pad_eval(modes, grid, factor * grid.L)


def truncated_modes(values, grid):
    """Inverse of :func:`padded_physical`: keep the ``L`` grid's modes, zero Nyquist."""
    n = values.shape[-1]
    modes = np.fft.rfft(values, axis=-1)[..., : grid.n_modes] / n
    modes[..., -1] = 0.0
    return modes


def dealiased_product(a, b, factor=2):
    """Alias-free spectral coefficients of the pointwise product ``a * b``.

    Both factors are evaluated on a zero-padded grid of ``factor * L`` points;
    ``factor >= 3/2`` is exact for a single quadratic product.
    """
    _check_same_grid(a, b)
    if factor * 2 < 3:
        raise InvalidInputError("padding factor must be at least 3/2")
    grid = a.grid
    n = int(round(factor * grid.L))
    pa = _pad_eval(a.modes, grid, n)
    pb = _pad_eval(b.modes, grid, n)
    modes = np.fft.rfft(pa * pb, axis=-1)[..., : grid.n_modes] / n
    modes[..., -1] = 0.0
    return a._new(modes)


def _pad_eval(modes, grid, n):
    padded = np.zeros(modes.shape[:-1] + (n // 2 + 1,), dtype=complex)
    padded[..., : grid.n_modes] = modes
    padded[..., grid.n_modes - 1] = 0.0
    return np.fft.irfft(padded * n, n=n, axis=-1)
