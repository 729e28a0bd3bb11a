"""Fourier conventions, spectral multipliers and the dealiased cubic nonlinearity.

Coefficient vectors are complex arrays of length M in FFT storage order, so
index q holds mode n = q for q <= M/2 and n = q - M above. The forward
transform carries the 1/M factor, which makes the discrete coefficients
approximate the continuum Fourier integrals on the torus [0, 1):

    c(n) = (1/M) sum_q u(q/M) exp(-2 pi i n q / M)

The Nyquist mode n = M/2 is kept in storage but zeroed wherever a cube is
formed.
"""

import functools
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

CoeffVector = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

# Hermitian tolerance when going back to physical space.
INVERSE_HERMITIAN_RTOL = 1e-10


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid of M collocation points on [0, 1)."""

    M: int

    def __post_init__(self) -> None:
        if not isinstance(self.M, (int, np.integer)) or not _is_power_of_two(int(self.M)):
            raise ValueError(f"M must be a power of two, got {self.M!r}")
        if self.M < 8:
            raise ValueError(f"M must be at least 8, got {self.M}")

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def nyquist(self) -> int:
        return self.M // 2

    def points(self) -> RealVector:
        return np.arange(self.M) * self.h

    def modes(self) -> npt.NDArray[np.int64]:
        """Integer mode of every storage slot, covering (-M/2, M/2]."""
        return _modes(self.M)

    def wavenumbers(self) -> RealVector:
        """|2 pi n| per storage slot."""
        return 2.0 * np.pi * np.abs(_modes(self.M)).astype(np.float64)

    def bracket(self) -> RealVector:
        """<n> = sqrt((2 pi n)^2 + 1) per storage slot."""
        return _bracket(self.M)

    @classmethod
    def of(cls, c: np.ndarray) -> "Grid":
        if c.ndim != 1:
            raise ValueError(f"expected a 1-D coefficient vector, got shape {c.shape}")
        return cls(int(c.shape[0]))


@functools.lru_cache(maxsize=64)
def _modes(M: int) -> npt.NDArray[np.int64]:
    modes = np.fft.fftfreq(M, d=1.0 / M).round().astype(np.int64)
    modes[M // 2] = M // 2
    modes.flags.writeable = False
    return modes


@functools.lru_cache(maxsize=64)
def _bracket(M: int) -> RealVector:
    k = 2.0 * np.pi * _modes(M).astype(np.float64)
    bracket = np.sqrt(k * k + 1.0)
    bracket.flags.writeable = False
    return bracket


@functools.lru_cache(maxsize=64)
def omega(M: int, beta: float) -> RealVector:
    """Dispersion symbol |2 pi n|^beta, zero at n = 0."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    symbol = Grid(M).wavenumbers() ** beta
    symbol.flags.writeable = False
    return symbol


def mirrored(c: CoeffVector) -> CoeffVector:
    """Return the vector whose slot n holds c(-n)."""
    return np.roll(c[::-1], 1)


def hermitian_defect(c: CoeffVector) -> float:
    """max_n |c(-n) - conj(c(n))|; also catches imaginary zero/Nyquist modes."""
    if c.size == 0:
        return 0.0
    return float(np.max(np.abs(mirrored(c) - np.conj(c))))


def is_hermitian(c: CoeffVector, rtol: float = 1e-12) -> bool:
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    return hermitian_defect(c) <= rtol * scale


def _to_physical(c: CoeffVector) -> RealVector:
    # Only n >= 0 is read; negative modes are taken as the conjugates.
    M = c.shape[0]
    return np.fft.irfft(c[: M // 2 + 1], n=M) * M


def _to_spectral(samples: RealVector) -> CoeffVector:
    M = samples.shape[0]
    half = np.fft.rfft(samples) / M
    c = np.empty(M, dtype=np.complex128)
    c[: M // 2 + 1] = half
    c[M // 2 + 1 :] = np.conj(half[1 : M // 2][::-1])
    return c


def forward_transform(samples: npt.ArrayLike) -> CoeffVector:
    """Coefficients c(n) = (1/M) sum_q samples[q] exp(-2 pi i n q / M)."""
    samples = np.asarray(samples, dtype=np.float64)
    Grid.of(samples)
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")
    return _to_spectral(samples)


def inverse_transform(c: CoeffVector) -> RealVector:
    """Samples u(q/M) = sum_n c(n) exp(2 pi i n q / M) of a real field.

    The imaginary residue of the sum is bounded by the hermitian defect, which
    must stay within 1e-10 max|c|; the residue itself is discarded.
    """
    c = np.asarray(c, dtype=np.complex128)
    Grid.of(c)
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return np.zeros(c.shape[0])
    defect = hermitian_defect(c)
    if defect > INVERSE_HERMITIAN_RTOL * scale:
        raise ValueError(f"coefficients are not hermitian-symmetric (defect {defect:.3e}, scale {scale:.3e})")
    return _to_physical(c)


def resample(c: CoeffVector, M_new: int) -> CoeffVector:
    """Move coefficients to a grid of size M_new, aligned by mode index.

    Modes absent from the source are zero; modes outside the target band are
    dropped. A Nyquist mode is split evenly between +-M/2 when padding and
    summed back when truncating, so real fields stay real and a pad followed
    by a truncation is the identity.
    """

    M = c.shape[0]
    Grid(M_new)
    out = np.zeros(M_new, dtype=np.complex128)
    if M_new == M:
        out[:] = c
        return out

    K = min(M, M_new) // 2
    out[:K] = c[:K]
    out[M_new - K + 1 :] = c[M - K + 1 :]
    if M_new > M:
        out[K] = 0.5 * c[K]
        out[M_new - K] = 0.5 * c[K]
    else:
        out[K] = c[K] + c[M - K]
    return out


def fractional_multiplier(c: CoeffVector, beta: float, power: float) -> CoeffVector:
    """Apply |2 pi n|^(beta * power); the zero mode is annihilated for positive exponents."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    c = np.asarray(c, dtype=np.complex128)
    grid = Grid.of(c)
    if power == 0:
        return c.copy()

    exponent = beta * power
    k = grid.wavenumbers()
    weights = np.zeros_like(k)
    if exponent < 0 and c[0] != 0:
        raise ValueError("negative power is undefined at the zero mode (c(0) != 0)")
    weights[1:] = k[1:] ** exponent
    return weights * c


def sinc_multiplier(M: int, tau: float, beta: float) -> RealVector:
    """sinc(tau |2 pi n|^beta) with sinc(x) = sin(x)/x and sinc(0) = 1."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    # numpy's sinc is the normalized one: sin(pi x) / (pi x).
    return np.sinc(tau * omega(M, beta) / np.pi)


def sinc_filter(c: CoeffVector, tau: float, beta: float) -> CoeffVector:
    c = np.asarray(c, dtype=np.complex128)
    grid = Grid.of(c)
    return sinc_multiplier(grid.M, tau, beta) * c


def dealiased_cube(c: CoeffVector) -> CoeffVector:
    """Coefficients of u^3 on the retained band, exact for band-limited u.

    The product is formed on a 2M grid: the input band |n| < M/2 cubes into
    |n| < 3M/2, and nothing from there aliases back onto |n| < M/2.
    """

    c = np.asarray(c, dtype=np.complex128)
    grid = Grid.of(c)
    band = c.copy()
    band[grid.nyquist] = 0.0
    u = _to_physical(resample(band, 2 * grid.M))
    cube = resample(_to_spectral(u * u * u), grid.M)
    cube[grid.nyquist] = 0.0
    return cube


def sobolev_norm(c: CoeffVector, s: float) -> float:
    """sqrt(sum_n <n>^(2s) |c(n)|^2)."""
    c = np.asarray(c, dtype=np.complex128)
    grid = Grid.of(c)
    weights = grid.bracket() ** (2.0 * s)
    return float(np.sqrt(np.sum(weights * (c.real**2 + c.imag**2))))
